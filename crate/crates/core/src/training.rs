//! Pilot-sequence construction and representative-vector estimation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::{noiseless_receive, BlockObservation, NoiseSpec, Quantizer};
use crate::error::{Error, Result};
use crate::labels::{LabelSet, Symmetry};
use crate::stats::std_normal_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TrainingMode {
    /// Every label is sent `L_t` times.
    Full,
    /// Only the generator labels are sent; the rest follow by symmetry.
    Subspace,
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingMode::Full => "full",
            TrainingMode::Subspace => "subspace",
        })
    }
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(TrainingMode::Full),
            "subspace" | "sub" => Ok(TrainingMode::Subspace),
            other => Err(Error::InvalidParameter(format!("unknown training mode `{other}`"))),
        }
    }
}

/// Block-repetition pilot order: `L_t` copies of label 0, then label 1, ...
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPlan {
    mode: TrainingMode,
    repetitions: usize,
    slot_labels: Vec<usize>,
}

impl TrainingPlan {
    pub fn new(labels: &LabelSet, repetitions: usize, mode: TrainingMode) -> Result<Self> {
        if repetitions == 0 {
            return Err(Error::InvalidParameter("L_t must be at least 1".into()));
        }
        let trained = match mode {
            TrainingMode::Full => labels.len(),
            TrainingMode::Subspace => {
                if labels.symmetry() == Symmetry::None {
                    return Err(Error::SubspaceUnsupported);
                }
                labels.generator_count()
            }
        };
        let slot_labels = (0..trained).flat_map(|k| std::iter::repeat_n(k, repetitions)).collect();
        Ok(TrainingPlan {
            mode,
            repetitions,
            slot_labels,
        })
    }

    pub fn mode(&self) -> TrainingMode {
        self.mode
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    /// `T_t`.
    pub fn slots(&self) -> usize {
        self.slot_labels.len()
    }

    /// Label sent in training slot `n` (zero-based): `⌊n / L_t⌋`.
    pub fn label_at(&self, n: usize) -> usize {
        self.slot_labels[n]
    }

    pub fn slot_labels(&self) -> &[usize] {
        &self.slot_labels
    }

    pub fn trained_count(&self) -> usize {
        self.slot_labels.len() / self.repetitions
    }
}

/// One centroid per label, stored as the columns of an `Nr × K` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentativeSet {
    centroids: DMatrix<Complex64>,
    counts: Vec<usize>,
}

impl RepresentativeSet {
    pub fn new(centroids: DMatrix<Complex64>, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != centroids.ncols() {
            return Err(Error::LengthMismatch {
                expected: centroids.ncols(),
                actual: counts.len(),
            });
        }
        Ok(RepresentativeSet { centroids, counts })
    }

    pub fn len(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.ncols() == 0
    }

    pub fn nr(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn centroid(&self, k: usize) -> &[Complex64] {
        let nr = self.centroids.nrows();
        &self.centroids.as_slice()[k * nr..(k + 1) * nr]
    }

    pub fn centroids(&self) -> &DMatrix<Complex64> {
        &self.centroids
    }

    /// Number of receive vectors behind each centroid (`L_k`).
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        RepresentativeSet {
            centroids: self.centroids.map(|c| c * factor),
            counts: self.counts.clone(),
        }
    }
}

/// Member of a sample set: receive slot `slot`, multiplied by `factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub slot: usize,
    pub factor: Complex64,
}

/// Per-label collections `𝒴_k` of receive vectors with running sums.
#[derive(Clone, Debug)]
pub struct SampleSets {
    members: Vec<Vec<Sample>>,
    sums: DMatrix<Complex64>,
}

impl SampleSets {
    pub fn empty(nr: usize, k: usize) -> Self {
        SampleSets {
            members: vec![Vec::new(); k],
            sums: DMatrix::zeros(nr, k),
        }
    }

    /// Initial sets from the pilot slots. In subspace mode each pilot vector
    /// also seeds the rest of its orbit, rotated accordingly.
    pub fn from_training(obs: &BlockObservation, plan: &TrainingPlan, labels: &LabelSet) -> Result<Self> {
        if obs.training_slots != plan.slots() {
            return Err(Error::Dimension(format!(
                "observation has {} training slots, plan expects {}",
                obs.training_slots,
                plan.slots()
            )));
        }
        let mut sets = SampleSets::empty(obs.nr(), labels.len());
        for n in 0..plan.slots() {
            let k = plan.label_at(n);
            if obs.transmitted[n] != k {
                return Err(Error::Dimension(format!(
                    "training slot {n} carries label {} but the plan expects {k}",
                    obs.transmitted[n]
                )));
            }
            match plan.mode() {
                TrainingMode::Full => sets.add(k, n, Complex64::new(1.0, 0.0), obs.slot(n)),
                TrainingMode::Subspace => sets.add_orbit(labels, k, n, obs.slot(n)),
            }
        }
        Ok(sets)
    }

    pub fn add(&mut self, k: usize, slot: usize, factor: Complex64, y: &[Complex64]) {
        self.members[k].push(Sample { slot, factor });
        let mut col = self.sums.column_mut(k);
        for (s, v) in col.iter_mut().zip(y) {
            *s += factor * v;
        }
    }

    /// Adds `y`, received under label `k`, to `𝒴_k` and its rotated copies to
    /// the other members of the orbit of `k`.
    pub fn add_orbit(&mut self, labels: &LabelSet, k: usize, slot: usize, y: &[Complex64]) {
        let (gen, own) = labels.orbit_position(k);
        let members: Vec<(usize, Complex64)> = labels.orbit(gen).collect();
        for (target, factor) in members {
            self.add(target, slot, factor * own.conj(), y);
        }
    }

    pub fn members(&self, k: usize) -> &[Sample] {
        &self.members[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.members[k].len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Sample means; an empty set yields a zero centroid.
    pub fn representatives(&self) -> RepresentativeSet {
        let mut centroids = self.sums.clone();
        let counts: Vec<usize> = self.members.iter().map(Vec::len).collect();
        for (k, &c) in counts.iter().enumerate() {
            if c > 0 {
                let inv = 1.0 / c as f64;
                centroids.column_mut(k).iter_mut().for_each(|v| *v *= inv);
            }
        }
        RepresentativeSet { centroids, counts }
    }
}

/// Empirical centroids from the pilot part of `obs`.
pub fn estimate_representatives(
    obs: &BlockObservation,
    plan: &TrainingPlan,
    labels: &LabelSet,
) -> Result<RepresentativeSet> {
    Ok(SampleSets::from_training(obs, plan, labels)?.representatives())
}

/// True conditional means `E[y | x = x_k]` of a 1-bit receiver given `H`:
/// `(Δ/2)·(2Φ(sqrt(2/N0)·g_k) - (1 + j))` per real dimension with
/// `g_k = H·x_k`; `sign(g_k)·Δ/2` when noiseless.
pub fn exact_representatives(
    h: &DMatrix<Complex64>,
    labels: &LabelSet,
    noise: &NoiseSpec,
    quantizer: &Quantizer,
) -> Result<RepresentativeSet> {
    if quantizer.bits() != 1 {
        return Err(Error::InvalidParameter(
            "exact representatives are only available for 1-bit quantizers".into(),
        ));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let g = noiseless_receive(h, labels, &all)?;
    let half = quantizer.step() / 2.0;
    let map = |v: f64| -> f64 {
        if noise.n0 == 0.0 {
            if v >= 0.0 {
                half
            } else {
                -half
            }
        } else {
            half * (2.0 * std_normal_cdf((2.0 / noise.n0).sqrt() * v) - 1.0)
        }
    };
    let centroids = g.map(|c| Complex64::new(map(c.re), map(c.im)));
    Ok(RepresentativeSet {
        centroids,
        counts: vec![0; labels.len()],
    })
}
