//! Stochastic oracles: rate estimation by direct channel sampling and the
//! empirical distribution of the two-user quadratic form.
//!
//! Estimates are bit-reproducible for a fixed seed no matter how many
//! threads the global pool has: every sample draws from its own
//! counter-indexed ChaCha stream, per-sample values land in index order, and
//! the reduction is a fixed-shape pairwise tree.

use nalgebra::DVector;
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{complex_gaussian_vector, BeamformerSet, CovarianceMatrix};
use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Stream-id domains keep the independent estimators' randomness disjoint
/// even under one seed.
#[derive(Clone, Copy)]
enum StreamDomain {
    DirectRate = 0,
    QuadraticForm = 1,
    FactoredMagnitude = 2,
    FactoredDirection = 3,
}

/// Largest admissible sample count: indices must fit the stream layout.
const MAX_SAMPLES: usize = 1 << 40;

fn stream_rng(seed: u64, domain: StreamDomain, user: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | ((user as u64 & 0xFFFF) << 40) | index as u64);
    rng
}

/// Fixed-shape pairwise reduction; the result depends only on the values
/// and their order, never on the thread count.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn estimate_from_values(values: &[f64]) -> McEstimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = pairwise_sum(&centered) / (n as f64 - 1.0);
    McEstimate { mean, stderr: (variance / n as f64).sqrt(), samples: n }
}

fn check_mc_inputs(
    sigmas: &[CovarianceMatrix],
    ws: &BeamformerSet,
    user: usize,
    rho: f64,
    samples: usize,
) -> Result<()> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be finite and positive, got {rho}")));
    }
    if samples < 1_000 {
        return Err(Error::invalid("samples", format!("need at least 1000 for a meaningful stderr, got {samples}")));
    }
    if samples > MAX_SAMPLES {
        return Err(Error::invalid("samples", format!("at most {MAX_SAMPLES} supported, got {samples}")));
    }
    if sigmas.len() != ws.len() {
        return Err(Error::dim(format!("{} covariances for {} beamformers", sigmas.len(), ws.len())));
    }
    if user >= ws.len() {
        return Err(Error::invalid("user", format!("index {user} out of range for {} users", ws.len())));
    }
    if sigmas.iter().any(|s| s.dim() != ws.dim()) {
        return Err(Error::dim("covariance and beamformer dimensions disagree"));
    }
    Ok(())
}

/// Monte Carlo estimate of user `user`'s ergodic rate
/// `E[ln(1 + (ρ/M)|hᴴw_user|² / (1 + (ρ/M)Σ_{j≠user}|hᴴw_j|²))]`
/// over draws `h = Σ_user^{1/2} g`.
pub fn mc_ergodic_rate(
    sigmas: &[CovarianceMatrix],
    ws: &BeamformerSet,
    user: usize,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_inputs(sigmas, ws, user, rho, samples)?;
    let m = ws.len();
    let root = sigmas[user].sqrt();
    // Fold the square root into the beams once: |hᴴw|² = |gᴴ(Σ^{1/2}w)|².
    let compressed: Vec<DVector<Complex64>> = ws.iter().map(|w| &root * w.as_vector()).collect();
    let scale = rho / m as f64;

    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, StreamDomain::DirectRate, user, idx);
            let g = complex_gaussian_vector(ws.dim(), &mut rng);
            let mut interference = 0.0;
            let mut signal = 0.0;
            for (j, cw) in compressed.iter().enumerate() {
                let gain = g.dotc(cw).norm_sqr();
                if j == user {
                    signal = gain;
                } else {
                    interference += gain;
                }
            }
            (scale * signal / (1.0 + scale * interference)).ln_1p()
        })
        .collect();
    Ok(estimate_from_values(&values))
}

/// Cross-check estimator in the magnitude/direction factored form: `‖g‖²`
/// and the isotropic direction are drawn from independent streams, so this
/// estimator is only consistent with [`mc_ergodic_rate`] if the
/// magnitude/direction independence actually holds.
pub fn mc_ergodic_rate_factored(
    sigmas: &[CovarianceMatrix],
    ws: &BeamformerSet,
    user: usize,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_mc_inputs(sigmas, ws, user, rho, samples)?;
    let m = ws.len();
    let dim = ws.dim();
    let root = sigmas[user].sqrt();
    let compressed: Vec<DVector<Complex64>> = ws.iter().map(|w| &root * w.as_vector()).collect();
    let scale = rho / m as f64;

    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut mag_rng = stream_rng(seed, StreamDomain::FactoredMagnitude, user, idx);
            let mut dir_rng = stream_rng(seed, StreamDomain::FactoredDirection, user, idx);
            // ‖g‖² ~ Gamma(M, 1).
            let magnitude_sq = complex_gaussian_vector(dim, &mut mag_rng).norm_squared();
            let direction = unit_direction(dim, &mut dir_rng);
            let mut interference = 0.0;
            let mut signal = 0.0;
            for (j, cw) in compressed.iter().enumerate() {
                let gain = magnitude_sq * direction.dotc(cw).norm_sqr();
                if j == user {
                    signal = gain;
                } else {
                    interference += gain;
                }
            }
            (scale * signal / (1.0 + scale * interference)).ln_1p()
        })
        .collect();
    Ok(estimate_from_values(&values))
}

fn unit_direction(dim: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    loop {
        let g = complex_gaussian_vector(dim, rng);
        let norm = g.norm();
        if norm > 1e-150 {
            return g / Complex64::new(norm, 0.0);
        }
    }
}

/// Empirical distribution of sampled scalars, held sorted ascending.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Samples in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("non-empty sample set")
    }

    /// Fraction of samples ≤ `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|v| *v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Kolmogorov–Smirnov distance `sup_x |F_n(x) − F(x)|` against a
    /// reference CDF, evaluated at the sample points where the supremum of
    /// a step function is attained.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, reference: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut worst = 0.0f64;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = reference(x);
            worst = worst.max((f - i as f64 / n).abs());
            worst = worst.max(((i + 1) as f64 / n - f).abs());
        }
        worst
    }
}

/// Samples `Y = Σ_j Λ_j |h̃_j|²` for an isotropic unit vector `h̃` and
/// returns the empirical CDF. For a two-point spectrum `(Λ₁, Λ₂)` the law is
/// Uniform[Λ₂, Λ₁].
pub fn mc_quadratic_form_density(spectrum: &[f64], samples: usize, seed: u64) -> Result<EmpiricalCdf> {
    if spectrum.len() < 2 {
        return Err(Error::invalid("spectrum", "need at least two eigenvalues"));
    }
    if spectrum.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid("spectrum", "eigenvalues must be finite and nonnegative"));
    }
    if spectrum.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::invalid("spectrum", "eigenvalues must be sorted descending"));
    }
    if spectrum[0] <= 0.0 {
        return Err(Error::invalid("spectrum", "all-zero spectrum has a degenerate distribution"));
    }
    if samples < 10_000 {
        return Err(Error::invalid("samples", format!("need at least 10000, got {samples}")));
    }
    if samples > MAX_SAMPLES {
        return Err(Error::invalid("samples", format!("at most {MAX_SAMPLES} supported, got {samples}")));
    }
    let dim = spectrum.len();
    let mut values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = stream_rng(seed, StreamDomain::QuadraticForm, 0, idx);
            let direction = unit_direction(dim, &mut rng);
            spectrum.iter().zip(direction.iter()).map(|(l, h)| l * h.norm_sqr()).sum()
        })
        .collect();
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(EmpiricalCdf { sorted: values })
}
