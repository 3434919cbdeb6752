//! Blind detectors: nearest-centroid (MCD), CRC-assisted supervised
//! decoding, and symmetry-constrained K-means (semi-supervised) decoding.

use num_complex::Complex64;

use crate::channel::BlockObservation;
use crate::error::{Error, Result};
use crate::framing::{verify_segment, SegmentPlan};
use crate::labels::{LabelSet, Symmetry};
use crate::training::{RepresentativeSet, SampleSets, TrainingPlan};

fn squared_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Index and squared distance of the closest centroid; ties go to the
/// smallest index.
fn nearest(y: &[Complex64], reps: &RepresentativeSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for k in 0..reps.len() {
        let d = squared_distance(y, reps.centroid(k));
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// `argmin_k ‖y - y̌_k‖`.
pub fn mcd_detect(y: &[Complex64], reps: &RepresentativeSet) -> Result<usize> {
    if reps.is_empty() {
        return Err(Error::EmptyRepresentatives);
    }
    if y.len() != reps.nr() {
        return Err(Error::LengthMismatch {
            expected: reps.nr(),
            actual: y.len(),
        });
    }
    Ok(nearest(y, reps).0)
}

/// MCD decisions for every data slot of `obs`.
pub fn mcd_detect_block(obs: &BlockObservation, reps: &RepresentativeSet) -> Result<Vec<usize>> {
    (obs.training_slots..obs.block_len())
        .map(|n| mcd_detect(obs.slot(n), reps))
        .collect()
}

/// One-hot cluster assignment `β`, stored as the selected label per slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    labels: Vec<usize>,
    clusters: usize,
}

impl Assignment {
    pub fn label(&self, n: usize) -> usize {
        self.labels[n]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn beta(&self, n: usize, k: usize) -> bool {
        self.labels[n] == k
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Nearest-centroid assignment of every slot, with pilot slots forced to
/// their known labels.
pub fn assign_clusters(obs: &BlockObservation, reps: &RepresentativeSet, plan: &TrainingPlan) -> Assignment {
    let labels = (0..obs.block_len())
        .map(|n| {
            if n < plan.slots() {
                plan.label_at(n)
            } else {
                nearest(obs.slot(n), reps).0
            }
        })
        .collect();
    Assignment {
        labels,
        clusters: reps.len(),
    }
}

/// Constrained centroid update. For each generator `g` with orbit factors
/// `α_q`, `y̌_g = Σ_n Σ_q β_(n, g+qG)·conj(α_q)·y[n] / Σ_n Σ_q β_(n, g+qG)`
/// and `y̌_(g+qG) = α_q·y̌_g`. With no symmetry this is the plain cluster
/// mean. An orbit with no members keeps its previous centroids.
pub fn update_centroids(
    obs: &BlockObservation,
    assignment: &Assignment,
    labels: &LabelSet,
    previous: &RepresentativeSet,
) -> Result<RepresentativeSet> {
    if assignment.len() != obs.block_len() || previous.len() != labels.len() {
        return Err(Error::Dimension("assignment, labels and centroids disagree".into()));
    }
    let nr = obs.nr();
    let g = labels.generator_count();
    let mut sums = vec![Complex64::new(0.0, 0.0); nr * g];
    let mut counts = vec![0usize; g];
    for n in 0..obs.block_len() {
        let (gen, factor) = labels.orbit_position(assignment.label(n));
        let w = factor.conj();
        counts[gen] += 1;
        for (s, v) in sums[gen * nr..(gen + 1) * nr].iter_mut().zip(obs.slot(n)) {
            *s += w * v;
        }
    }
    let mut centroids = previous.centroids().clone();
    let mut out_counts = previous.counts().to_vec();
    for gen in 0..g {
        if counts[gen] == 0 {
            continue;
        }
        let inv = 1.0 / counts[gen] as f64;
        for (k, factor) in labels.orbit(gen) {
            let mut col = centroids.column_mut(k);
            for (c, s) in col.iter_mut().zip(&sums[gen * nr..(gen + 1) * nr]) {
                *c = factor * s * inv;
            }
            out_counts[k] = counts[gen];
        }
    }
    RepresentativeSet::new(centroids, out_counts)
}

/// Distortion measure `J = Σ_n ‖y[n] - y̌_(β(n))‖²` over the whole block.
pub fn distortion(obs: &BlockObservation, assignment: &Assignment, reps: &RepresentativeSet) -> f64 {
    (0..obs.block_len())
        .map(|n| squared_distance(obs.slot(n), reps.centroid(assignment.label(n))))
        .sum()
}

#[derive(Clone, Debug)]
pub struct DecodeResult {
    /// Final decision for every data slot.
    pub decoded: Vec<usize>,
    /// CRC outcome per segment (supervised decoding only).
    pub segment_passed: Vec<bool>,
    pub iterations: usize,
    pub representatives: RepresentativeSet,
    /// `J` after each iteration (semi-supervised decoding only).
    pub objective: Vec<f64>,
    /// Data-slot decisions at the end of each iteration.
    pub history: Vec<Vec<usize>>,
}

impl DecodeResult {
    /// Decisions as of iteration `iter` (1-based); iterations past
    /// convergence repeat the final decisions.
    pub fn decisions_at(&self, iter: usize) -> &[usize] {
        let i = iter.clamp(1, self.history.len());
        &self.history[i - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemiSupervisedConfig {
    pub iter_max: usize,
    /// Run unconstrained K-means when the label set has no symmetry.
    pub unconstrained_fallback: bool,
}

impl Default for SemiSupervisedConfig {
    fn default() -> Self {
        SemiSupervisedConfig {
            iter_max: 3,
            unconstrained_fallback: false,
        }
    }
}

/// Alternates cluster assignment and constrained centroid updates until the
/// assignment repeats or `iter_max` iterations have run. The first
/// iteration's decisions are plain MCD on `initial`.
pub fn semisupervised_decode(
    obs: &BlockObservation,
    plan: &TrainingPlan,
    labels: &LabelSet,
    initial: &RepresentativeSet,
    config: SemiSupervisedConfig,
) -> Result<DecodeResult> {
    if labels.symmetry() == Symmetry::None && !config.unconstrained_fallback {
        return Err(Error::InvalidParameter(
            "semi-supervised decoding needs a label set closed under negation".into(),
        ));
    }
    if config.iter_max == 0 {
        return Err(Error::InvalidParameter("iter_max must be at least 1".into()));
    }
    if initial.is_empty() {
        return Err(Error::EmptyRepresentatives);
    }
    if obs.training_slots != plan.slots() {
        return Err(Error::Dimension("observation does not follow the training plan".into()));
    }

    let mut reps = initial.clone();
    let mut previous: Option<Assignment> = None;
    let mut objective = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < config.iter_max {
        iterations += 1;
        let beta = assign_clusters(obs, &reps, plan);
        reps = update_centroids(obs, &beta, labels, &reps)?;
        objective.push(distortion(obs, &beta, &reps));
        history.push(beta.labels()[obs.training_slots..].to_vec());
        let converged = previous.as_ref() == Some(&beta);
        previous = Some(beta);
        if converged {
            break;
        }
    }
    Ok(DecodeResult {
        decoded: history.last().cloned().unwrap_or_default(),
        segment_passed: Vec::new(),
        iterations,
        representatives: reps,
        objective,
        history,
    })
}

/// CRC-assisted decoding. Segments are MCD-detected in order; every segment
/// whose CRC verifies feeds its receive vectors (and their symmetric images)
/// into the sample sets, and the centroids are refreshed before the next
/// segment. Failed segments are retried on later passes until a pass
/// produces no new successes.
pub fn supervised_decode(
    obs: &BlockObservation,
    segments: &SegmentPlan,
    labels: &LabelSet,
    initial: SampleSets,
) -> Result<DecodeResult> {
    if segments.data_slots() != obs.data_slots {
        return Err(Error::Dimension(format!(
            "segment plan covers {} data slots, block has {}",
            segments.data_slots(),
            obs.data_slots
        )));
    }
    if initial.len() != labels.len() {
        return Err(Error::Dimension("sample sets do not match the label set".into()));
    }
    let offset = obs.training_slots;
    let mut sets = initial;
    let mut reps = sets.representatives();
    let mut decisions = vec![0usize; obs.data_slots];
    let mut passed = vec![false; segments.segments];
    let mut unresolved: Vec<usize> = (0..segments.segments).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    while !unresolved.is_empty() && iterations <= segments.segments {
        iterations += 1;
        let mut newly = 0;
        for &s in &unresolved {
            let range = segments.slot_range(s);
            for n in range.clone() {
                decisions[n] = nearest(obs.slot(offset + n), &reps).0;
            }
            if verify_segment(&decisions[range.clone()], segments, labels) {
                passed[s] = true;
                newly += 1;
                for n in range {
                    sets.add_orbit(labels, decisions[n], offset + n, obs.slot(offset + n));
                }
                reps = sets.representatives();
            }
        }
        history.push(decisions.clone());
        if newly == 0 {
            break;
        }
        unresolved.retain(|&s| !passed[s]);
    }

    Ok(DecodeResult {
        decoded: decisions,
        segment_passed: passed,
        iterations,
        representatives: reps,
        objective: Vec::new(),
        history,
    })
}
