//! Monte Carlo experiment runner.
//!
//! A [`ScenarioConfig`] expands into one scenario per sweep point; each
//! scenario is simulated at every SNR in its list. Trial `t` draws its
//! channel, payload and noise from streams `t` of the run seed, so results do
//! not depend on the number of workers or the order trials finish in.

pub mod config;
pub mod output;

use std::time::Instant;

use log::{debug, info};
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, simulate_block, system_step, NoiseSpec, Quantizer};
use crate::design::{closure, exhaustive_design, greedy_closed_design, greedy_design, Design, DEFAULT_SEARCH_CAP};
use crate::detect::{mcd_detect_block, semisupervised_decode, supervised_decode, SemiSupervisedConfig};
use crate::error::{Error, Result};
use crate::framing::{frame_segments, SegmentPlan};
use crate::labels::{Constellation, LabelSet, Symmetry};
use crate::rng::{stream, Purpose};
use crate::stats::{wilson_interval, Z_95};
use crate::training::{estimate_representatives, exact_representatives, SampleSets, TrainingMode, TrainingPlan};

pub use config::{DesignMethod, Detector, RepresentativeSource, ScenarioConfig};

/// Upper limit on sweep points times SNR values.
pub const MAX_SWEEP_ROWS: usize = 10_000;

/// How a transmit subset was chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetInfo {
    /// Indices into the full label set.
    pub indices: Vec<usize>,
    pub d_min: usize,
    pub symmetry: Symmetry,
    /// True when a negation-closed design replaced the unconstrained one.
    pub closed_substitute: bool,
}

/// A single sweep point, ready to simulate.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub labels: LabelSet,
    pub plan: TrainingPlan,
    pub segments: Option<SegmentPlan>,
    pub td: usize,
    pub subset: Option<SubsetInfo>,
}

fn pick_design(full: &LabelSet, ktilde: usize, cfg: &ScenarioConfig) -> Result<SubsetInfo> {
    let unconstrained: Design = match cfg.design {
        DesignMethod::Greedy => greedy_design(full, ktilde, cfg.restarts, cfg.seed)?.best,
        DesignMethod::Exhaustive => exhaustive_design(full, ktilde, DEFAULT_SEARCH_CAP)?,
    };
    let symmetry = closure(full, &unconstrained.indices)?;
    if symmetry != Symmetry::None || full.symmetry() == Symmetry::None || !ktilde.is_multiple_of(2) {
        return Ok(SubsetInfo {
            indices: unconstrained.indices,
            d_min: unconstrained.d_min,
            symmetry,
            closed_substitute: false,
        });
    }
    // a closed subset with the same minimum distance allows subspace training
    let closed = greedy_closed_design(full, ktilde, cfg.restarts, cfg.seed)?.best;
    if closed.d_min >= unconstrained.d_min {
        let symmetry = closure(full, &closed.indices)?;
        Ok(SubsetInfo {
            indices: closed.indices,
            d_min: closed.d_min,
            symmetry,
            closed_substitute: true,
        })
    } else {
        Ok(SubsetInfo {
            indices: unconstrained.indices,
            d_min: unconstrained.d_min,
            symmetry,
            closed_substitute: false,
        })
    }
}

impl Scenario {
    /// Builds the label set, training plan and framing for a config without
    /// sweep lists.
    pub fn prepare(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let constellation = Constellation::new(cfg.modulation);
        let full = LabelSet::enumerate(&constellation, cfg.nt)?;
        let (labels, subset) = match (&cfg.subset, cfg.ktilde) {
            (Some(list), _) => {
                let labels = full.subset(list)?;
                let info = SubsetInfo {
                    indices: labels.parent_indices().map(<[usize]>::to_vec).unwrap_or_default(),
                    d_min: crate::design::d_min(&full, list)?,
                    symmetry: labels.symmetry(),
                    closed_substitute: false,
                };
                (labels, Some(info))
            }
            (None, Some(kt)) if kt < full.len() => {
                let info = pick_design(&full, kt, cfg)?;
                let labels = full.subset(&info.indices)?;
                (labels, Some(info))
            }
            (None, Some(kt)) if kt > full.len() => {
                return Err(Error::Config(format!("ktilde {kt} exceeds the {} labels", full.len())));
            }
            _ => (full, None),
        };

        let mode = cfg.mode.unwrap_or(if labels.symmetry() == Symmetry::None {
            TrainingMode::Full
        } else {
            TrainingMode::Subspace
        });
        let plan = TrainingPlan::new(&labels, cfg.lt, mode).map_err(|e| match e {
            Error::SubspaceUnsupported => Error::Config("subspace training needs a negation-closed label set".into()),
            other => other,
        })?;
        let td = match cfg.tb {
            Some(tb) => tb.checked_sub(plan.slots()).filter(|&td| td > 0).ok_or_else(|| {
                Error::Config(format!("tb = {tb} leaves no data slots after {} pilots", plan.slots()))
            })?,
            None => cfg.td,
        };
        if td == 0 {
            return Err(Error::Config("td must be positive".into()));
        }
        let segments = if cfg.crc {
            Some(
                SegmentPlan::new(td, labels.bits_per_label(), cfg.l_data, cfg.l_crc)
                    .map_err(|e| Error::Config(e.to_string()))?,
            )
        } else {
            None
        };
        if cfg.detector == Detector::Semi && labels.symmetry() == Symmetry::None && !cfg.kmeans_fallback {
            return Err(Error::Config(
                "semi-supervised decoding of a label set without symmetry needs kmeans_fallback = true".into(),
            ));
        }
        Ok(Scenario {
            config: cfg.clone(),
            labels,
            plan,
            segments,
            td,
            subset,
        })
    }

    /// `T_b = T_t + T_d`.
    pub fn block_len(&self) -> usize {
        self.plan.slots() + self.td
    }

    pub fn spectral_efficiency(&self, ber: f64) -> f64 {
        let crc = self.segments.map(|s| (s.data_bits, s.crc_bits));
        spectral_efficiency(ber, self.td, self.block_len(), self.labels.bits_per_label(), crc)
    }

    fn data_labels<R: Rng>(&self, rng: &mut R) -> Result<Vec<usize>> {
        match &self.segments {
            Some(seg) => {
                let payload: Vec<u8> = (0..seg.segments * seg.data_bits)
                    .map(|_| rng.random_range(0..2u8))
                    .collect();
                Ok(frame_segments(&payload, seg, &self.labels)?.concat())
            }
            None => Ok((0..self.td).map(|_| rng.random_range(0..self.labels.len())).collect()),
        }
    }

    fn run_trial(&self, noise: &NoiseSpec, quantizer: &Quantizer, trial: u64) -> Result<Tally> {
        let cfg = &self.config;
        let h = draw_channel(cfg.nr, cfg.nt, &mut stream(cfg.seed, trial, Purpose::Channel));
        let mut indices = self.plan.slot_labels().to_vec();
        indices.extend(self.data_labels(&mut stream(cfg.seed, trial, Purpose::Data))?);
        let mut noise_rng = stream(cfg.seed, trial, Purpose::Noise);
        let obs = simulate_block(
            &h,
            &self.labels,
            &indices,
            self.plan.slots(),
            quantizer,
            noise,
            &mut noise_rng,
        )?;
        let truth = obs.data_truth();

        let mut tally = Tally::default();
        let reps = || match cfg.representatives {
            RepresentativeSource::Trained => estimate_representatives(&obs, &self.plan, &self.labels),
            RepresentativeSource::Exact => exact_representatives(&h, &self.labels, noise, quantizer),
        };
        let decoded = match cfg.detector {
            Detector::Mcd => mcd_detect_block(&obs, &reps()?)?,
            Detector::Semi => {
                let semi_cfg = SemiSupervisedConfig {
                    iter_max: cfg.iter_max,
                    unconstrained_fallback: cfg.kmeans_fallback,
                };
                let out = semisupervised_decode(&obs, &self.plan, &self.labels, &reps()?, semi_cfg)?;
                tally.iteration_bit_errors = (1..=cfg.iter_max)
                    .map(|i| self.bit_errors(truth, out.decisions_at(i)))
                    .collect();
                if out.objective.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-12) {
                    tally.objective_violations = 1;
                }
                out.decoded
            }
            Detector::Supervised => {
                let seg = self.segments.as_ref().expect("validated");
                let sets = SampleSets::from_training(&obs, &self.plan, &self.labels)?;
                let out = supervised_decode(&obs, seg, &self.labels, sets)?;
                for (s, &passed) in out.segment_passed.iter().enumerate() {
                    if passed {
                        tally.crc_passes += 1;
                        let r = seg.slot_range(s);
                        if out.decoded[r.clone()] != truth[r] {
                            tally.crc_false_passes += 1;
                        }
                    }
                }
                tally.segments = seg.segments as u64;
                out.decoded
            }
        };
        tally.bit_errors = self.bit_errors(truth, &decoded);
        tally.bits = (truth.len() * self.labels.bits_per_label()) as u64;
        tally.vec_errors = truth.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64;
        tally.vectors = truth.len() as u64;
        Ok(tally)
    }

    fn bit_errors(&self, truth: &[usize], decoded: &[usize]) -> u64 {
        truth
            .iter()
            .zip(decoded)
            .map(|(&t, &d)| self.labels.bit_errors(t, d) as u64)
            .sum()
    }

    /// Simulates all trials at one SNR.
    pub fn run_point(&self, snr_db: f64) -> Result<PointResult> {
        let cfg = &self.config;
        let start = Instant::now();
        let noise = NoiseSpec::from_snr_db(cfg.nt, snr_db);
        let quantizer = Quantizer::new(cfg.bits, system_step(cfg.bits, cfg.nt, noise.n0)?)?;
        let tallies: Vec<Tally> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| self.run_trial(&noise, &quantizer, t))
            .collect::<Result<_>>()?;
        let mut total = Tally::default();
        for t in &tallies {
            total.merge(t);
        }
        let ber = total.bit_errors as f64 / total.bits as f64;
        let ver = total.vec_errors as f64 / total.vectors as f64;
        let (ci_low, ci_high) = wilson_interval(total.bit_errors, total.bits, Z_95);
        let result = PointResult {
            scenario_id: cfg.scenario_id.clone(),
            detector: cfg.detector,
            modulation: cfg.modulation.name().to_string(),
            nt: cfg.nt,
            nr: cfg.nr,
            bits: cfg.bits,
            lt: cfg.lt,
            mode: self.plan.mode(),
            td: self.td,
            tb: self.block_len(),
            crc: cfg.crc,
            snr_db,
            trials: cfg.trials,
            bit_errors: total.bit_errors,
            bits_total: total.bits,
            ber,
            vec_errors: total.vec_errors,
            vectors: total.vectors,
            ver,
            eta: self.spectral_efficiency(ber),
            ci_low,
            ci_high,
            seed: cfg.seed,
            elapsed_ms: start.elapsed().as_millis(),
            ktilde: self.subset.as_ref().map(|_| self.labels.len()),
            d_min: self.subset.as_ref().map(|s| s.d_min),
            crc_passes: total.crc_passes,
            crc_false_passes: total.crc_false_passes,
            segments: total.segments,
            iteration_bit_errors: total.iteration_bit_errors,
            objective_violations: total.objective_violations,
        };
        debug!(
            "{} {} snr={} BER={:.3e} VER={:.3e}",
            result.scenario_id, result.detector, snr_db, result.ber, result.ver
        );
        Ok(result)
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    bit_errors: u64,
    bits: u64,
    vec_errors: u64,
    vectors: u64,
    crc_passes: u64,
    crc_false_passes: u64,
    segments: u64,
    iteration_bit_errors: Vec<u64>,
    objective_violations: u64,
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.vec_errors += o.vec_errors;
        self.vectors += o.vectors;
        self.crc_passes += o.crc_passes;
        self.crc_false_passes += o.crc_false_passes;
        self.segments += o.segments;
        self.objective_violations += o.objective_violations;
        if self.iteration_bit_errors.len() < o.iteration_bit_errors.len() {
            self.iteration_bit_errors.resize(o.iteration_bit_errors.len(), 0);
        }
        for (a, b) in self.iteration_bit_errors.iter_mut().zip(&o.iteration_bit_errors) {
            *a += b;
        }
    }
}

/// Aggregates for one (sweep point, SNR) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub scenario_id: String,
    pub detector: Detector,
    pub modulation: String,
    pub nt: usize,
    pub nr: usize,
    pub bits: u32,
    pub lt: usize,
    pub mode: TrainingMode,
    pub td: usize,
    pub tb: usize,
    pub crc: bool,
    pub snr_db: f64,
    pub trials: usize,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub vec_errors: u64,
    pub vectors: u64,
    pub ver: f64,
    pub eta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub elapsed_ms: u128,
    pub ktilde: Option<usize>,
    pub d_min: Option<usize>,
    pub crc_passes: u64,
    pub crc_false_passes: u64,
    pub segments: u64,
    /// Semi-supervised only: bit errors of the decisions after each iteration.
    pub iteration_bit_errors: Vec<u64>,
    /// Semi-supervised only: blocks on which `J` ever increased.
    pub objective_violations: u64,
}

impl PointResult {
    /// BER and 95% interval of the decisions after iteration `iter` (1-based).
    pub fn iteration_ber(&self, iter: usize) -> Option<(f64, f64, f64)> {
        let e = *self.iteration_bit_errors.get(iter.checked_sub(1)?)?;
        let (lo, hi) = wilson_interval(e, self.bits_total, Z_95);
        Some((e as f64 / self.bits_total as f64, lo, hi))
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioResult {
    pub points: Vec<PointResult>,
}

/// `η = (T_d/T_b)·(1 - BER)·bits_per_vector`, scaled by
/// `L_data/(L_data + L_CRC)` when CRC framing is used.
pub fn spectral_efficiency(ber: f64, td: usize, tb: usize, bits_per_vector: usize, crc: Option<(usize, usize)>) -> f64 {
    let coded = td as f64 / tb as f64 * (1.0 - ber) * bits_per_vector as f64;
    match crc {
        Some((data, parity)) => coded * data as f64 / (data + parity) as f64,
        None => coded,
    }
}

/// Cartesian product of the sweep lists; a config without sweeps yields
/// itself.
pub fn expand(cfg: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
    let lts = if cfg.sweep_lt.is_empty() {
        vec![cfg.lt]
    } else {
        cfg.sweep_lt.clone()
    };
    let kts: Vec<Option<usize>> = if cfg.sweep_ktilde.is_empty() {
        vec![cfg.ktilde]
    } else {
        cfg.sweep_ktilde.iter().map(|&k| Some(k)).collect()
    };
    let nrb = if cfg.sweep_nr_bits.is_empty() {
        vec![(cfg.nr, cfg.bits)]
    } else {
        cfg.sweep_nr_bits.clone()
    };
    let rows = lts.len() * kts.len() * nrb.len() * cfg.snr_db.len().max(1);
    if rows > MAX_SWEEP_ROWS {
        return Err(Error::Config(format!("sweep has {rows} rows, limit {MAX_SWEEP_ROWS}")));
    }
    let mut out = Vec::new();
    for &lt in &lts {
        for &kt in &kts {
            for &(nr, bits) in &nrb {
                out.push(ScenarioConfig {
                    lt,
                    ktilde: kt,
                    nr,
                    bits,
                    sweep_lt: Vec::new(),
                    sweep_ktilde: Vec::new(),
                    sweep_nr_bits: Vec::new(),
                    ..cfg.clone()
                });
            }
        }
    }
    Ok(out)
}

/// Runs every sweep point at every SNR, on `config.workers` threads.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let points = expand(cfg)?;
    let scenarios: Vec<Scenario> = points.iter().map(Scenario::prepare).collect::<Result<_>>()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut result = ScenarioResult::default();
    for scn in &scenarios {
        if let Some(s) = &scn.subset {
            info!(
                "{}: {} labels, d_min {}, {:?}{}",
                scn.config.scenario_id,
                scn.labels.len(),
                s.d_min,
                s.symmetry,
                if s.closed_substitute { " (closed design)" } else { "" }
            );
        }
        for &snr in &cfg.snr_db {
            result.points.push(pool.install(|| scn.run_point(snr))?);
        }
    }
    Ok(result)
}
