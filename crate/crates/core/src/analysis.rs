//! Closed-form VER analysis for 1-bit receivers: the Bussgang linear model,
//! the low-SNR pairwise error approximation and its union bound, and the
//! sign-collision floor at infinite SNR.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::labels::{LabelSet, Modulation};
use crate::stats::std_normal_sf;

/// Label sets larger than this are rejected by the double-sum bound.
pub const MAX_UNION_LABELS: usize = 1 << 12;

/// Linearisation `y = A·x + w` of a 1-bit receiver whose outputs have unit
/// power per antenna (`(±1 ± j)/√2`).
#[derive(Clone, Debug)]
pub struct BussgangModel {
    /// Diagonal of `F = √(2/π)·diag(Σ_r)^(-1/2)`.
    pub f: DVector<f64>,
    pub a: DMatrix<Complex64>,
    pub sigma_r: DMatrix<Complex64>,
    pub sigma_w: DMatrix<Complex64>,
    pub n0: f64,
    h: DMatrix<Complex64>,
}

impl BussgangModel {
    /// `A ≈ √(2/(N0·π))·H`, valid when `Σ_r ≈ N0·I`.
    pub fn a_low_snr(&self) -> DMatrix<Complex64> {
        self.h.map(|v| v * (2.0 / (self.n0 * PI)).sqrt())
    }

    /// `Σ_w ≈ I` under the same approximation.
    pub fn sigma_w_low_snr(&self) -> DMatrix<Complex64> {
        DMatrix::identity(self.h.nrows(), self.h.nrows())
    }
}

fn complex_arcsin_parts(c: Complex64) -> Complex64 {
    Complex64::new(c.re.clamp(-1.0, 1.0).asin(), c.im.clamp(-1.0, 1.0).asin())
}

/// Bussgang model for channel `H` and noise power `N0`, with
/// `Σ_r = H·Hᴴ + N0·I` and
/// `Σ_w = (2/π)[arcsin(C) - C + N0·diag(Σ_r)^(-1)]`, `C` the normalised
/// `Σ_r`. The complex arcsine acts on real and imaginary parts separately.
pub fn bussgang_model(h: &DMatrix<Complex64>, n0: f64) -> Result<BussgangModel> {
    if n0.is_nan() || n0 < 0.0 {
        return Err(Error::InvalidParameter(format!("noise power {n0} must be nonnegative")));
    }
    let nr = h.nrows();
    let sigma_r = h * h.adjoint() + DMatrix::<Complex64>::identity(nr, nr) * Complex64::new(n0, 0.0);
    let eig = sigma_r.clone().symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    if nr == 0 || eig.iter().any(|&l| l <= 1e-12 * top) {
        return Err(Error::SingularCovariance);
    }
    let inv_sqrt: Vec<f64> = (0..nr).map(|i| 1.0 / sigma_r[(i, i)].re.sqrt()).collect();
    let f = DVector::from_iterator(nr, inv_sqrt.iter().map(|s| (2.0 / PI).sqrt() * s));
    let a = DMatrix::from_fn(nr, h.ncols(), |i, j| h[(i, j)] * f[i]);
    let sigma_w = DMatrix::from_fn(nr, nr, |i, j| {
        if i == j {
            // unit normalised variance: (2/π)(π/2 - 1 + N0/σ_r,i²)
            return Complex64::new(1.0 - FRAC_2_PI * (1.0 - n0 * inv_sqrt[i] * inv_sqrt[i]), 0.0);
        }
        let c = sigma_r[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        (complex_arcsin_parts(c) - c) * FRAC_2_PI
    });
    Ok(BussgangModel {
        f,
        a,
        sigma_r,
        sigma_w,
        n0,
        h: h.clone(),
    })
}

/// `σ²_kk' = (2/(N0·π))·‖x̌_k - x̌_k'‖²`.
pub fn pairwise_sigma(xk: &[Complex64], xk2: &[Complex64], n0: f64) -> f64 {
    let dist: f64 = xk.iter().zip(xk2).map(|(a, b)| (a - b).norm_sqr()).sum();
    2.0 / (n0 * PI) * dist
}

/// Low-SNR pairwise error probability `1 - Φ(√(Nr/(1 + 2/σ²)))`; equal
/// hypotheses (`σ² = 0`) give 1/2.
pub fn pairwise_ver_low_snr(sigma2: f64, nr: usize) -> f64 {
    if sigma2 <= 0.0 {
        return 0.5;
    }
    std_normal_sf((nr as f64 / (1.0 + 2.0 / sigma2)).sqrt())
}

/// Union bound `(1/K)·Σ_k Σ_(k'≠k) P_(k→k')`, clamped to 1.
pub fn ver_upper_low_snr(labels: &LabelSet, n0: f64, nr: usize) -> Result<f64> {
    let k = labels.len();
    if k > MAX_UNION_LABELS {
        return Err(Error::TooManyLabels {
            count: k as u128,
            limit: MAX_UNION_LABELS,
        });
    }
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            if a != b {
                total += pairwise_ver_low_snr(pairwise_sigma(labels.label(a), labels.label(b), n0), nr);
            }
        }
    }
    Ok((total / k as f64).min(1.0))
}

/// Single-sum form of the union bound for PSK label sets, where the
/// conditional error probability does not depend on the transmitted label.
pub fn ver_upper_low_snr_psk(labels: &LabelSet, n0: f64, nr: usize) -> f64 {
    let x1 = labels.label(0);
    let total: f64 = (1..labels.len())
        .map(|k| pairwise_ver_low_snr(pairwise_sigma(x1, labels.label(k), n0), nr))
        .sum();
    total.min(1.0)
}

/// `P[sign(a + b) = sign(a - b)] = (2/π)·arctan(σ_a/σ_b)` for independent
/// zero-mean Gaussians.
pub fn sign_agreement_prob(sigma_a: f64, sigma_b: f64) -> f64 {
    if sigma_b == 0.0 {
        return 1.0;
    }
    FRAC_2_PI * (sigma_a / sigma_b).atan()
}

/// Probability that two labels at Hamming distance `d` out of `dims` real
/// dimensions produce identical sign patterns at all `2·Nr` real receive
/// outputs under Rayleigh fading.
pub fn sign_collision_prob(dims: usize, d: usize, nr: usize) -> Result<f64> {
    if d == 0 || d > dims {
        return Err(Error::InvalidParameter(format!(
            "Hamming distance {d} outside 1..={dims}"
        )));
    }
    let common = ((dims - d) as f64 / 2.0).sqrt();
    let differ = (d as f64 / 2.0).sqrt();
    Ok(sign_agreement_prob(common, differ).powi(2 * nr as i32))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Real dimensions of a BPSK or QPSK label: `Nt` or `2·Nt`.
pub fn real_dimensions(modulation: Modulation, nt: usize) -> Result<usize> {
    match modulation {
        Modulation::Bpsk => Ok(nt),
        Modulation::Qpsk => Ok(2 * nt),
        m => Err(Error::InvalidParameter(format!(
            "sign-collision analysis covers bpsk and qpsk, not {m}"
        ))),
    }
}

/// High-SNR VER floor bound `(1/2)·Σ_d C(D,d)·P_collision(D, d, Nr)`.
pub fn asymptotic_ver_bound(modulation: Modulation, nt: usize, nr: usize) -> Result<f64> {
    let dims = real_dimensions(modulation, nt)?;
    let mut total = 0.0;
    for d in 1..=dims {
        total += binomial(dims, d) * sign_collision_prob(dims, d, nr)?;
    }
    Ok((0.5 * total).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, draw_channel};
    use crate::labels::Constellation;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_channel_gives_identity_noise() {
        let h = DMatrix::<Complex64>::zeros(3, 2);
        let m = bussgang_model(&h, 0.5).unwrap();
        assert!((m.sigma_w.clone() - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!(m.a.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn singular_covariance_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let h = draw_channel(4, 2, &mut rng);
        assert_eq!(bussgang_model(&h, 0.0).unwrap_err(), Error::SingularCovariance);
        assert!(bussgang_model(&h, 1e-3).is_ok());
    }

    #[test]
    fn gain_matches_low_snr_limit() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let h = draw_channel(4, 2, &mut rng);
        let n0 = 1e4 * h.norm_squared();
        let m = bussgang_model(&h, n0).unwrap();
        let approx = m.a_low_snr();
        for (x, y) in m.a.iter().zip(approx.iter()) {
            assert!((x - y).norm() <= 0.01 * y.norm() + 1e-300);
        }
        // F's diagonal definition
        for i in 0..4 {
            assert!((m.f[i] - (2.0 / PI).sqrt() / m.sigma_r[(i, i)].re.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn effective_noise_is_hermitian_psd() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for n0 in [0.1, 1.0, 10.0] {
            let h = draw_channel(5, 3, &mut rng);
            let m = bussgang_model(&h, n0).unwrap();
            assert!((m.sigma_w.clone() - m.sigma_w.adjoint()).norm() < 1e-12);
            let eig = m.sigma_w.clone().symmetric_eigen();
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10), "{:?}", eig.eigenvalues);
        }
    }

    /// Sample covariance of `w = y - A·x` with Gaussian `x ~ CN(0, I)` and
    /// unit-power 1-bit outputs.
    #[test]
    fn effective_noise_matches_monte_carlo() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let (nr, nt, n0) = (3, 2, 0.7);
        let h = draw_channel(nr, nt, &mut rng);
        let m = bussgang_model(&h, n0).unwrap();
        let draws = 400_000;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut cov = DMatrix::<Complex64>::zeros(nr, nr);
        for _ in 0..draws {
            let x = DVector::from_fn(nt, |_, _| complex_gaussian(&mut rng, 1.0));
            let z = DVector::from_fn(nr, |_, _| complex_gaussian(&mut rng, n0));
            let r = &h * &x + z;
            let y = r.map(|v| c(s * v.re.signum(), s * v.im.signum()));
            let w = y - &m.a * &x;
            cov += &w * w.adjoint();
        }
        cov /= Complex64::new(draws as f64, 0.0);
        for i in 0..nr {
            for j in 0..nr {
                // entries are O(1); Monte Carlo SE is about 1/sqrt(draws)
                assert!((cov[(i, j)] - m.sigma_w[(i, j)]).norm() < 8e-3, "({i},{j})");
            }
        }
    }

    #[test]
    fn pairwise_sigma_examples() {
        let a = [c(1.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.0, 0.0), c(-1.0, 0.0)];
        assert!((pairwise_sigma(&a, &b, 2.0) - 4.0 / PI).abs() < 1e-15);
        assert_eq!(pairwise_sigma(&a, &a, 2.0), 0.0);
        assert!((pairwise_sigma(&a, &b, 4.0) - 0.5 * pairwise_sigma(&a, &b, 2.0)).abs() < 1e-15);
    }

    #[test]
    fn pairwise_limits() {
        assert_eq!(pairwise_ver_low_snr(0.0, 16), 0.5);
        assert!(pairwise_ver_low_snr(1.0, 100_000) < 1e-300);
        let inf = pairwise_ver_low_snr(1e15, 16);
        assert!((inf - std_normal_sf(4.0)).abs() < 1e-12);
    }

    #[test]
    fn union_bound_forms() {
        let bpsk1 = LabelSet::enumerate(&Constellation::new(Modulation::Bpsk), 1).unwrap();
        let n0 = 3.0;
        let single = pairwise_ver_low_snr(pairwise_sigma(bpsk1.label(0), bpsk1.label(1), n0), 8);
        assert!((ver_upper_low_snr(&bpsk1, n0, 8).unwrap() - single).abs() < 1e-15);
        for (m, nt) in [
            (Modulation::Bpsk, 2),
            (Modulation::Qpsk, 2),
            (Modulation::Psk8, 1),
            (Modulation::Bpsk, 4),
        ] {
            let labels = LabelSet::enumerate(&Constellation::new(m), nt).unwrap();
            for n0 in [5.0, 20.0, 60.0] {
                let full = ver_upper_low_snr(&labels, n0, 16).unwrap();
                let psk = ver_upper_low_snr_psk(&labels, n0, 16);
                assert!((full - psk).abs() < 1e-12, "{m} nt={nt}: {full} vs {psk}");
            }
        }
        // clamped
        let big = LabelSet::enumerate(&Constellation::new(Modulation::Qpsk), 4).unwrap();
        assert_eq!(ver_upper_low_snr(&big, 1e6, 1).unwrap(), 1.0);
    }

    /// `ε = |υ|² + 2·Re(υ*·w)`, `υ ~ CN(0, σ²)`, `w ~ CN(0, 1)`.
    #[test]
    fn epsilon_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 400_000;
        for s2 in [0.1, 0.5, 2.0] {
            let eps: Vec<f64> = (0..n)
                .map(|_| {
                    let u = complex_gaussian(&mut rng, s2);
                    let w = complex_gaussian(&mut rng, 1.0);
                    u.norm_sqr() + 2.0 * (u.conj() * w).re
                })
                .collect();
            let mean = eps.iter().sum::<f64>() / n as f64;
            let var = eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let target_var = s2 * s2 + 2.0 * s2;
            let m4: f64 = eps.iter().map(|e| (e - mean).powi(4)).sum::<f64>() / n as f64;
            assert!((mean - s2).abs() < 3.0 * (target_var / n as f64).sqrt());
            assert!((var - target_var).abs() < 3.0 * ((m4 - var * var) / n as f64).sqrt());
        }
    }

    #[test]
    fn sign_agreement_identity_monte_carlo() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let n = 1_000_000;
        for (sa, sb) in [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)] {
            let hits = (0..n)
                .filter(|_| {
                    let a: f64 = sa * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                    let b: f64 = sb * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                    (a + b).signum() == (a - b).signum()
                })
                .count();
            let p = sign_agreement_prob(sa, sb);
            assert!((hits as f64 / n as f64 / p - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn collision_examples() {
        assert!((sign_collision_prob(2, 1, 8).unwrap() - 0.5f64.powi(16)).abs() < 1e-18);
        assert_eq!(sign_collision_prob(4, 4, 3).unwrap(), 0.0);
        assert!((sign_collision_prob(4, 1, 2).unwrap() - (2.0f64 / 3.0).powi(4)).abs() < 1e-14);
        assert!(sign_collision_prob(4, 0, 2).is_err());
        assert!(sign_collision_prob(4, 5, 2).is_err());
    }

    #[test]
    fn asymptotic_examples() {
        let b8 = asymptotic_ver_bound(Modulation::Bpsk, 2, 8).unwrap();
        assert!((b8 - 2f64.powi(-16)).abs() < 1e-20);
        let b4 = asymptotic_ver_bound(Modulation::Bpsk, 2, 4).unwrap();
        assert!((b4 - 2f64.powi(-8)).abs() < 1e-16);
        let q8 = asymptotic_ver_bound(Modulation::Qpsk, 2, 8).unwrap();
        assert!(q8.is_finite() && q8 > b8);
        assert!(asymptotic_ver_bound(Modulation::Psk8, 2, 8).is_err());
    }

    proptest! {
        #[test]
        fn pairwise_monotone(s2 in 1e-3f64..1e3, nr in 1usize..64) {
            let p = pairwise_ver_low_snr(s2, nr);
            prop_assert!((0.0..=0.5).contains(&p));
            prop_assert!(pairwise_ver_low_snr(s2, nr + 1) < p || p == 0.0);
            prop_assert!(pairwise_ver_low_snr(s2 * 1.5, nr) < p || p == 0.0);
        }

        #[test]
        fn collision_monotone(dims in 2usize..16, d in 1usize..15, nr in 1usize..12) {
            prop_assume!(d < dims);
            let p = sign_collision_prob(dims, d, nr).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(sign_collision_prob(dims, d + 1, nr).unwrap() < p);
            prop_assert!(sign_collision_prob(dims, d, nr + 1).unwrap() < p);
        }

        #[test]
        fn bounds_are_probabilities(nt in 1usize..5, nr in 1usize..32, db in -20.0f64..10.0, qpsk in any::<bool>()) {
            let m = if qpsk { Modulation::Qpsk } else { Modulation::Bpsk };
            let labels = LabelSet::enumerate(&Constellation::new(m), nt).unwrap();
            let n0 = nt as f64 / 10f64.powf(db / 10.0);
            let u = ver_upper_low_snr(&labels, n0, nr).unwrap();
            prop_assert!((0.0..=1.0).contains(&u));
            let a = asymptotic_ver_bound(m, nt, nr).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
