//! Rayleigh block-fading channel, AWGN, and the b-bit mid-rise ADC model.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::labels::LabelSet;
use crate::stats::{std_normal_cdf, std_normal_pdf};

pub const MAX_BITS: u32 = 16;

/// Element-wise uniform mid-rise quantizer applied to real and imaginary
/// parts separately.
///
/// Thresholds are `τ_l = (l - 2^(b-1))·Δ` for `l = 1..2^b-1`. An input in
/// `(τ_(l-1), τ_l]` maps to `τ_l - Δ/2`, anything above the last threshold to
/// `(2^b - 1)·Δ/2`. An input of exactly zero maps to `+Δ/2` for every `b`, so
/// the 1-bit quantizer coincides with `sign(.)` where `sign(0) = +1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantizer {
    bits: u32,
    step: f64,
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

impl Quantizer {
    pub fn new(bits: u32, step: f64) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::InvalidParameter(format!(
                "quantizer resolution {bits} outside 1..={MAX_BITS}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("step size {step} must be positive")));
        }
        let cells = 1usize << bits;
        let half = (cells / 2) as f64;
        let thresholds: Vec<f64> = (1..cells).map(|l| (l as f64 - half) * step).collect();
        let levels: Vec<f64> = (0..cells)
            .map(|l| (2.0 * l as f64 - cells as f64 + 1.0) * step / 2.0)
            .collect();
        Ok(Quantizer {
            bits,
            step,
            thresholds,
            levels,
        })
    }

    /// The 1-bit quantizer with `Δ = 2`, i.e. `sign(.)` with outputs `±1`.
    pub fn sign() -> Self {
        Quantizer::new(1, 2.0).expect("valid")
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Largest output magnitude, `(2^b - 1)·Δ/2`.
    pub fn max_level(&self) -> f64 {
        *self.levels.last().expect("non-empty")
    }

    pub fn quantize_real(&self, r: f64) -> f64 {
        if r == 0.0 {
            return self.levels[self.levels.len() / 2];
        }
        self.levels[self.thresholds.partition_point(|&t| t < r)]
    }

    pub fn quantize(&self, c: Complex64) -> Complex64 {
        Complex64::new(self.quantize_real(c.re), self.quantize_real(c.im))
    }

    pub fn quantize_in_place(&self, values: &mut [Complex64]) {
        for v in values {
            *v = self.quantize(*v);
        }
    }

    /// Mean squared error `E[(Q(r) - r)^2]` for a standard real Gaussian input.
    pub fn gaussian_distortion(&self) -> f64 {
        gaussian_distortion(self.bits, self.step)
    }
}

/// Exact `E[(Q_b(r) - r)^2]` for `r ~ N(0, 1)`, summed cell by cell using
/// `∫(r - c)^2 φ(r) dr = (1 + c^2)[Φ] - [rφ] + 2c[φ]`.
pub fn gaussian_distortion(bits: u32, step: f64) -> f64 {
    let cells = 1usize << bits;
    let half = (cells / 2) as f64;
    let mut total = 0.0;
    for l in 1..=cells {
        let lo = if l == 1 {
            f64::NEG_INFINITY
        } else {
            (l as f64 - 1.0 - half) * step
        };
        let hi = if l == cells {
            f64::INFINITY
        } else {
            (l as f64 - half) * step
        };
        let c = (l as f64 - half - 0.5) * step;
        let (cdf_lo, pdf_lo, rpdf_lo) = edge(lo);
        let (cdf_hi, pdf_hi, rpdf_hi) = edge(hi);
        total += (1.0 + c * c) * (cdf_hi - cdf_lo) - (rpdf_hi - rpdf_lo) + 2.0 * c * (pdf_hi - pdf_lo);
    }
    total
}

fn edge(x: f64) -> (f64, f64, f64) {
    if x.is_infinite() {
        (if x > 0.0 { 1.0 } else { 0.0 }, 0.0, 0.0)
    } else {
        let p = std_normal_pdf(x);
        (std_normal_cdf(x), p, x * p)
    }
}

/// `dD/dΔ = (2/Δ)·Σ_l c_l·(c_l·[Φ] - [φ]_lo^hi)` over cells, where `c_l` is the
/// cell's output level. Boundary terms cancel because every threshold is the
/// midpoint of its two neighbouring levels.
fn gaussian_distortion_slope(bits: u32, step: f64) -> f64 {
    let cells = 1usize << bits;
    let half = (cells / 2) as f64;
    let mut total = 0.0;
    for l in 1..=cells {
        let lo = if l == 1 {
            f64::NEG_INFINITY
        } else {
            (l as f64 - 1.0 - half) * step
        };
        let hi = if l == cells {
            f64::INFINITY
        } else {
            (l as f64 - half) * step
        };
        let c = (l as f64 - half - 0.5) * step;
        let (cdf_lo, pdf_lo, _) = edge(lo);
        let (cdf_hi, pdf_hi, _) = edge(hi);
        total += c * (c * (cdf_hi - cdf_lo) - (pdf_lo - pdf_hi));
    }
    2.0 * total / step
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const STEP_CACHE_BITS: usize = 8;
static STEP_CACHE: [OnceLock<f64>; STEP_CACHE_BITS] = [const { OnceLock::new() }; STEP_CACHE_BITS];

/// Step size minimising the Gaussian distortion of the `b`-bit quantizer for
/// a unit-variance real input, `1 ≤ b ≤ 8`. Cached per `b`.
pub fn optimal_standard_step(bits: u32) -> Result<f64> {
    if bits == 0 || bits as usize > STEP_CACHE_BITS {
        return Err(Error::InvalidParameter(format!(
            "optimal step available for 1..={STEP_CACHE_BITS} bits, got {bits}"
        )));
    }
    Ok(*STEP_CACHE[bits as usize - 1].get_or_init(|| {
        let upper = 4.0 * (1u32 << (bits - 1)) as f64;
        bisect_root(|d| gaussian_distortion_slope(bits, d), 1e-9, upper)
    }))
}

/// Step size for a receive signal of per-antenna variance `Nt + N0`:
/// `sqrt((Nt + N0)/2)·Δ*`.
pub fn system_step(bits: u32, nt: usize, n0: f64) -> Result<f64> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {n0} must be >= 0")));
    }
    Ok(((nt as f64 + n0) / 2.0).sqrt() * optimal_standard_step(bits)?)
}

/// Per-complex-dimension noise variance with the SNR convention `ρ = Nt/N0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub nt: usize,
    pub n0: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(nt: usize, snr_db: f64) -> Self {
        let rho = 10f64.powf(snr_db / 10.0);
        NoiseSpec {
            nt,
            n0: nt as f64 / rho,
        }
    }

    pub fn noiseless(nt: usize) -> Self {
        NoiseSpec { nt, n0: 0.0 }
    }

    /// Linear SNR `ρ = Nt/N0`; infinite when noiseless.
    pub fn snr(&self) -> f64 {
        self.nt as f64 / self.n0
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `Nr × Nt` channel with i.i.d. `CN(0, 1)` entries.
pub fn draw_channel<R: Rng + ?Sized>(nr: usize, nt: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng, 1.0))
}

/// One block-fading interval as seen after the ADCs.
#[derive(Clone, Debug)]
pub struct BlockObservation {
    /// `Nr × T_b` quantized receive matrix, one column per slot.
    pub y: DMatrix<Complex64>,
    pub training_slots: usize,
    pub data_slots: usize,
    /// Transmitted label per slot; the data part is ground truth for scoring.
    pub transmitted: Vec<usize>,
}

impl BlockObservation {
    pub fn nr(&self) -> usize {
        self.y.nrows()
    }

    pub fn block_len(&self) -> usize {
        self.y.ncols()
    }

    pub fn slot(&self, n: usize) -> &[Complex64] {
        let nr = self.y.nrows();
        &self.y.as_slice()[n * nr..(n + 1) * nr]
    }

    pub fn data_truth(&self) -> &[usize] {
        &self.transmitted[self.training_slots..]
    }
}

/// Noise-free receive columns `H·x[n]` for the given label sequence.
pub fn noiseless_receive(h: &DMatrix<Complex64>, labels: &LabelSet, indices: &[usize]) -> Result<DMatrix<Complex64>> {
    if h.ncols() != labels.nt() {
        return Err(Error::Dimension(format!(
            "channel has {} columns but labels have {} antennas",
            h.ncols(),
            labels.nt()
        )));
    }
    let nr = h.nrows();
    let mut r = DMatrix::zeros(nr, indices.len());
    for (n, &k) in indices.iter().enumerate() {
        if k >= labels.len() {
            return Err(Error::InvalidParameter(format!("label index {k} out of range")));
        }
        let x = labels.label(k);
        for i in 0..nr {
            r[(i, n)] = (0..x.len()).map(|t| h[(i, t)] * x[t]).sum();
        }
    }
    Ok(r)
}

/// `y[n] = Q(H·x[n] + z[n])` with `z ~ CN(0, N0·I)`; noise is drawn column by
/// column from `rng`.
pub fn simulate_block<R: Rng + ?Sized>(
    h: &DMatrix<Complex64>,
    labels: &LabelSet,
    indices: &[usize],
    training_slots: usize,
    quantizer: &Quantizer,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<BlockObservation> {
    if training_slots > indices.len() {
        return Err(Error::Dimension(format!(
            "{training_slots} training slots in a block of {}",
            indices.len()
        )));
    }
    let mut y = noiseless_receive(h, labels, indices)?;
    if noise.n0 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, noise.n0);
        }
    }
    quantizer.quantize_in_place(y.as_mut_slice());
    Ok(BlockObservation {
        y,
        training_slots,
        data_slots: indices.len() - training_slots,
        transmitted: indices.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{Constellation, Modulation};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sign_quantizer() {
        let q = Quantizer::new(1, 2.0).unwrap();
        assert_eq!(q.quantize_real(0.7), 1.0);
        assert_eq!(q.quantize_real(-0.3), -1.0);
        assert_eq!(q.quantize_real(0.0), 1.0);
    }

    #[test]
    fn two_bit_cases() {
        let q = Quantizer::new(2, 1.0).unwrap();
        assert_eq!(q.thresholds(), &[-1.0, 0.0, 1.0]);
        assert_eq!(q.levels(), &[-1.5, -0.5, 0.5, 1.5]);
        assert_eq!(q.quantize_real(0.4), 0.5);
        assert_eq!(q.quantize_real(-1.7), -1.5);
        assert_eq!(q.quantize_real(5.0), 1.5);
        // right-closed cells
        assert_eq!(q.quantize_real(1.0), 0.5);
        assert_eq!(q.quantize_real(-1.0), -1.5);
        assert_eq!(q.quantize(Complex64::new(0.4, -1.7)), Complex64::new(0.5, -1.5));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Quantizer::new(0, 1.0).is_err());
        assert!(Quantizer::new(2, 0.0).is_err());
        assert!(Quantizer::new(2, f64::NAN).is_err());
    }

    #[test]
    fn output_alphabet_size() {
        for b in 1..=4 {
            let q = Quantizer::new(b, 0.7).unwrap();
            assert_eq!(q.levels().len(), 1 << b);
            assert!(q.thresholds().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn one_bit_distortion_closed_form() {
        // D(Δ) = 1 - Δ·sqrt(2/π) + Δ²/4
        for d in [0.5, 1.0, 1.6, 3.0] {
            let expected = 1.0 - d * (2.0 / std::f64::consts::PI).sqrt() + d * d / 4.0;
            assert!((gaussian_distortion(1, d) - expected).abs() < 1e-12);
        }
        let opt = optimal_standard_step(1).unwrap();
        assert!((opt - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn slope_matches_finite_difference() {
        for b in 1..=4 {
            for d in [0.2, 0.9, 1.7] {
                let h = 1e-5;
                let fd = (gaussian_distortion(b, d + h) - gaussian_distortion(b, d - h)) / (2.0 * h);
                assert!((gaussian_distortion_slope(b, d) - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn optimal_steps_match_tabulated() {
        assert!((optimal_standard_step(1).unwrap() - 1.596).abs() < 1e-3);
        assert!((optimal_standard_step(2).unwrap() - 0.996).abs() < 1e-3);
        assert!((optimal_standard_step(3).unwrap() - 0.586).abs() < 1e-3);
        assert!(optimal_standard_step(0).is_err());
        assert!(optimal_standard_step(9).is_err());
    }

    #[test]
    fn step_is_a_local_minimum() {
        for b in 1..=6 {
            let opt = optimal_standard_step(b).unwrap();
            let d = gaussian_distortion(b, opt);
            assert!(d <= gaussian_distortion(b, 0.9 * opt));
            assert!(d <= gaussian_distortion(b, 1.1 * opt));
        }
    }

    #[test]
    fn system_step_scaling() {
        let star = optimal_standard_step(2).unwrap();
        assert!((system_step(2, 2, 2.0).unwrap() - 2f64.sqrt() * star).abs() < 1e-12);
        assert!((system_step(2, 2, 0.0).unwrap() - star).abs() < 1e-12);
        assert!(system_step(2, 2, -1.0).is_err());
    }

    #[test]
    fn snr_convention() {
        let n = NoiseSpec::from_snr_db(2, 10.0);
        assert!((n.snr() * n.n0 - 2.0).abs() < 1e-12);
        assert!((n.n0 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn noiseless_one_bit_is_sign_of_h_x() {
        let labels = LabelSet::enumerate(&Constellation::new(Modulation::Bpsk), 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let h = draw_channel(8, 2, &mut rng);
        let idx = [0, 1, 2, 3, 1];
        let obs = simulate_block(
            &h,
            &labels,
            &idx,
            2,
            &Quantizer::sign(),
            &NoiseSpec::noiseless(2),
            &mut rng,
        )
        .unwrap();
        let r = noiseless_receive(&h, &labels, &idx).unwrap();
        for (y, r) in obs.y.iter().zip(r.iter()) {
            assert_eq!(y.re, if r.re >= 0.0 { 1.0 } else { -1.0 });
            assert_eq!(y.im, if r.im >= 0.0 { 1.0 } else { -1.0 });
        }
        assert_eq!(obs.training_slots + obs.data_slots, 5);
    }

    #[test]
    fn zero_channel_gives_fair_coin() {
        let labels = LabelSet::enumerate(&Constellation::new(Modulation::Bpsk), 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let h = DMatrix::zeros(16, 2);
        let idx = vec![0; 2000];
        let obs = simulate_block(
            &h,
            &labels,
            &idx,
            0,
            &Quantizer::sign(),
            &NoiseSpec { nt: 2, n0: 1.0 },
            &mut rng,
        )
        .unwrap();
        let n = (obs.y.len() * 2) as f64;
        let plus = obs
            .y
            .iter()
            .map(|c| (c.re > 0.0) as usize + (c.im > 0.0) as usize)
            .sum::<usize>() as f64;
        // 64000 fair coins: 5 sigma band
        assert!((plus / n - 0.5).abs() < 5.0 * 0.5 / n.sqrt());
    }

    #[test]
    fn channel_entries_unit_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut power = 0.0;
        let mut re2 = 0.0;
        let count = 200_000;
        for _ in 0..count / 100 {
            let h = draw_channel(10, 10, &mut rng);
            for v in h.iter() {
                acc += v;
                power += v.norm_sqr();
                re2 += v.re * v.re;
            }
        }
        let n = count as f64;
        assert!((acc / n).norm() < 0.01);
        assert!((power / n - 1.0).abs() < 0.01);
        assert!((re2 / n - 0.5).abs() < 0.01);
    }

    #[test]
    fn seeded_blocks_are_identical() {
        let labels = LabelSet::enumerate(&Constellation::new(Modulation::Qpsk), 2).unwrap();
        let run = || {
            let mut rng = ChaCha12Rng::seed_from_u64(9);
            let h = draw_channel(4, 2, &mut rng);
            let idx: Vec<usize> = (0..40).map(|i| i % 16).collect();
            let q = Quantizer::new(2, 0.8).unwrap();
            simulate_block(&h, &labels, &idx, 8, &q, &NoiseSpec::from_snr_db(2, 5.0), &mut rng)
                .unwrap()
                .y
        };
        let a = run();
        let b = run();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn dimension_mismatch() {
        let labels = LabelSet::enumerate(&Constellation::new(Modulation::Bpsk), 2).unwrap();
        let h = DMatrix::zeros(4, 3);
        assert!(noiseless_receive(&h, &labels, &[0]).is_err());
    }

    proptest! {
        #[test]
        fn odd_symmetric_and_rotation(b in 1u32..5, step in 0.1f64..3.0, re in -10.0f64..10.0, im in -10.0f64..10.0) {
            let q = Quantizer::new(b, step).unwrap();
            let on_threshold = |x: f64| q.thresholds().contains(&x);
            prop_assume!(!on_threshold(re) && !on_threshold(im) && !on_threshold(-re) && !on_threshold(-im));
            prop_assert_eq!(q.quantize_real(-re), -q.quantize_real(re));
            let c = Complex64::new(re, im);
            let j = Complex64::i();
            prop_assert_eq!(q.quantize(j * c), j * q.quantize(c));
            prop_assert!(q.quantize_real(re).abs() <= q.max_level());
        }

        #[test]
        fn monotone(b in 1u32..5, step in 0.1f64..3.0, a in -10.0f64..10.0, d in 0.0f64..5.0) {
            let q = Quantizer::new(b, step).unwrap();
            prop_assert!(q.quantize_real(a) <= q.quantize_real(a + d));
        }
    }
}
