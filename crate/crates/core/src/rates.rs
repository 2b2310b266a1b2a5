//! Closed-form ergodic rates and their low/high-SNR and large-M limits.
//!
//! All rates are in nats. The central object is the expectation
//! `E[ln(1 + (ρ/M) Σ_k Λ_k |g_k|²)]` with i.i.d. unit-variance complex
//! Gaussian `g_k`: both terms of every per-user rate have this shape, with
//! the spectra supplied by [`crate::channel::effective_spectrum_m2`] or
//! [`crate::channel::effective_spectrum_general`].

use crate::channel::{
    effective_spectrum_m2, link_statistics, quadratic_form, Beamformer, BeamformerSet,
    CovarianceMatrix, LinkStatistics,
};
use crate::error::{Error, Result};
use crate::numerics::exp_e1;

/// Relative gap under which eigenvalues are treated as one value with
/// multiplicity.
const CLUSTER_REL_GAP: f64 = 1e-6;

/// Relative floor under which eigenvalues are treated as zero.
const ZERO_REL_FLOOR: f64 = 1e-13;

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= 0.0 {
        return Err(Error::invalid("rho", format!("must be finite and positive, got {rho}")));
    }
    Ok(())
}

/// Per-user rate summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user: Vec<f64>,
    pub sum: f64,
    pub method: RateMethod,
    pub stderr: Option<Vec<f64>>,
}

impl RateReport {
    pub fn new(per_user: Vec<f64>, method: RateMethod, stderr: Option<Vec<f64>>) -> RateReport {
        let sum = per_user.iter().sum();
        RateReport { per_user, sum, method, stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMethod {
    ClosedForm,
    MonteCarlo,
    HighSnrAsymptote,
    LowSnrAsymptote,
    LargeMAsymptote,
}

impl std::fmt::Display for RateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            RateMethod::ClosedForm => "closed-form",
            RateMethod::MonteCarlo => "monte-carlo",
            RateMethod::HighSnrAsymptote => "high-snr-asymptote",
            RateMethod::LowSnrAsymptote => "low-snr-asymptote",
            RateMethod::LargeMAsymptote => "large-M-asymptote",
        };
        f.write_str(tag)
    }
}

/// Signal, interference-plus-noise, and rate of the deterministic SINR in
/// the many-antenna regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal: f64,
    pub interference_plus_noise: f64,
    pub sinr: f64,
    pub rate: f64,
}

/// Two-user ergodic rate of user i under equal power split, treating the
/// other beam's signal as noise:
/// `[Λ₁·φ(2/(ρΛ₁)) − Λ₂·φ(2/(ρΛ₂))]/(Λ₁−Λ₂) − φ(2/(ρB))`
/// with `φ(x) = e^x E1(x)` and `(Λ₁, Λ₂)` the effective spectrum of the
/// link statistics.
///
/// `sigma_i` must be positive definite (smallest eigenvalue at least
/// `1e-10` of the largest); near-singular inputs are rejected rather than
/// silently amplified. See [`ergodic_rate_m2_from_stats`] to evaluate from
/// precomputed statistics.
pub fn ergodic_rate_m2(
    sigma_i: &CovarianceMatrix,
    w_i: &Beamformer,
    w_j: &Beamformer,
    rho: f64,
) -> Result<f64> {
    if sigma_i.dim() != 2 {
        return Err(Error::dim(format!("two-user closed form needs 2x2 covariance, got {}", sigma_i.dim())));
    }
    sigma_i.require_positive_definite()?;
    let stats = link_statistics(sigma_i, w_i, w_j)?;
    ergodic_rate_m2_from_stats(&stats, rho)
}

/// [`ergodic_rate_m2`] evaluated directly from link statistics.
pub fn ergodic_rate_m2_from_stats(stats: &LinkStatistics, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let spectrum = effective_spectrum_m2(stats);
    let l1 = spectrum.signal_plus_interference[0];
    let l2 = spectrum.signal_plus_interference[1];
    let b = stats.b();

    let signal_term = if l1 <= 0.0 {
        0.0
    } else if l2 <= 1e-14 * l1 {
        // Λ·φ(2/(ρΛ)) → 0 as Λ → 0, so the Λ₂ term drops out.
        exp_e1(2.0 / (rho * l1))?
    } else if l1 - l2 <= 1e-7 * l1 {
        // Degenerate spectrum: L'Hôpital limit of the divided difference.
        expected_log_confluent_m2(0.5 * (l1 + l2), rho)?
    } else {
        let p1 = exp_e1(2.0 / (rho * l1))?;
        let p2 = exp_e1(2.0 / (rho * l2))?;
        (l1 * p1 - l2 * p2) / (l1 - l2)
    };
    let interference_term = if b <= 1e-14 * l1.max(1e-300) { 0.0 } else { exp_e1(2.0 / (rho * b))? };
    Ok((signal_term - interference_term).max(0.0))
}

/// Exact two-user expectation for a doubly degenerate spectrum `(λ, λ)`:
/// `(1 − x)·e^x E1(x) + 1` with `x = 2/(ρλ)`.
pub fn expected_log_confluent_m2(lambda: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid("lambda", format!("must be finite and positive, got {lambda}")));
    }
    let x = 2.0 / (rho * lambda);
    Ok((1.0 - x) * exp_e1(x)? + 1.0)
}

/// Ergodic rate of one user for any user count `M`, as the difference of two
/// expectations over the signal-plus-interference and interference-only
/// effective spectra.
pub fn ergodic_rate_general(
    sigma_i: &CovarianceMatrix,
    ws: &BeamformerSet,
    user: usize,
    rho: f64,
) -> Result<f64> {
    check_rho(rho)?;
    let spectrum = crate::channel::effective_spectrum_general(sigma_i, ws, user)?;
    let users = ws.len();
    let total = expected_log_term(&spectrum.signal_plus_interference, rho, users)?;
    let interference = expected_log_term(&spectrum.interference_only, rho, users)?;
    Ok((total - interference).max(0.0))
}

/// `E[ln(1 + (ρ/M) Σ_k Λ_k |g_k|²)]` for i.i.d. standard complex Gaussian
/// `g_k`, i.e. the expected log of one plus a weighted sum of independent
/// unit-mean exponentials.
///
/// Distinct eigenvalues use the partial-fraction form
/// `Σ_k Π_{j≠k} Λ_k/(Λ_k−Λ_j) · e^{x_k} E1(x_k)`, `x_k = M/(ρΛ_k)`. Zero
/// eigenvalues contribute nothing and are dropped. Eigenvalues closer than
/// `1e-6·Λ_max` are collapsed to their mean and treated as one value with
/// multiplicity, for which the expectation is evaluated exactly via the
/// Gamma-mixture recurrences in [`expected_log_gamma`]; the collapse moves
/// the result by at most a few times `1e-6` nats. Multiplicities beyond ~16
/// coinciding with `ρΛ/M` near the reciprocal multiplicity lose accuracy
/// gradually (the recurrence conditioning grows like `(M/ρΛ)^m/m!`).
pub fn expected_log_term(spectrum: &[f64], rho: f64, users: usize) -> Result<f64> {
    check_rho(rho)?;
    if users == 0 {
        return Err(Error::invalid("users", "must be at least 1"));
    }
    if spectrum.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid("spectrum", "eigenvalues must be finite and nonnegative"));
    }
    let lambda_max = spectrum.iter().fold(0.0f64, |acc, &l| acc.max(l));
    if lambda_max <= 0.0 {
        return Ok(0.0);
    }
    let mut positive: Vec<f64> = spectrum.iter().copied().filter(|&l| l > ZERO_REL_FLOOR * lambda_max).collect();
    positive.sort_by(|x, y| y.partial_cmp(x).unwrap());

    // Chain-merge near-equal neighbours into (mean, multiplicity) groups.
    let merge_gap = CLUSTER_REL_GAP * lambda_max;
    let mut groups: Vec<(f64, usize)> = Vec::new();
    let mut start = 0usize;
    for k in 1..=positive.len() {
        if k == positive.len() || positive[k - 1] - positive[k] >= merge_gap {
            let members = &positive[start..k];
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            groups.push((mean, members.len()));
            start = k;
        }
    }

    let scale = rho / users as f64;
    if groups.len() == 1 {
        let (mu, mult) = groups[0];
        return expected_log_gamma(scale * mu, mult);
    }

    // Heaviside expansion of Π_j (1 + μ_j s)^{-m_j} about each pole gives
    // the mixture weights A_{k,l} over Gamma(l, μ_k) components:
    //   E[ln(1+aZ)] = Σ_k Σ_l A_{k,l} · E[ln(1 + aμ_k Y_l)], Y_l ~ Gamma(l).
    let mut acc = 0.0f64;
    for (k, &(mu_k, m_k)) in groups.iter().enumerate() {
        // Taylor coefficients r_t of R(s) = Π_{j≠k}(1+μ_j s)^{-m_j} at the
        // pole s = -1/μ_k, via exp of the log-series: ln R has coefficients
        // c_n = (-1)^n/n · Σ_{j≠k} m_j (μ_j μ_k/(μ_k-μ_j))^n.
        let mut r = vec![0.0f64; m_k];
        let mut log_r0 = 0.0f64;
        for (j, &(mu_j, m_j)) in groups.iter().enumerate() {
            if j != k {
                log_r0 += m_j as f64 * (mu_k / (mu_k - mu_j)).abs().ln();
            }
        }
        let mut sign_r0 = 1.0f64;
        for (j, &(mu_j, m_j)) in groups.iter().enumerate() {
            if j != k && mu_k < mu_j && m_j % 2 == 1 {
                sign_r0 = -sign_r0;
            }
        }
        r[0] = sign_r0 * log_r0.exp();
        if m_k > 1 {
            let mut c = vec![0.0f64; m_k];
            for (n, cn) in c.iter_mut().enumerate().skip(1) {
                let mut s = 0.0f64;
                for (j, &(mu_j, m_j)) in groups.iter().enumerate() {
                    if j != k {
                        s += m_j as f64 * (mu_j * mu_k / (mu_k - mu_j)).powi(n as i32);
                    }
                }
                *cn = if n % 2 == 0 { s / n as f64 } else { -s / n as f64 };
            }
            for t in 1..m_k {
                let mut s = 0.0f64;
                for n in 1..=t {
                    s += n as f64 * c[n] * r[t - n];
                }
                r[t] = s / t as f64;
            }
        }
        for l in 1..=m_k {
            // A_{k,l} = r_{m_k-l} · μ_k^{l-m_k} from matching powers of
            // (s + 1/μ_k) in F = (μ_k u)^{-m_k} R(s).
            let a_kl = r[m_k - l] * mu_k.powi(l as i32 - m_k as i32);
            if a_kl != 0.0 {
                acc += a_kl * expected_log_gamma(scale * mu_k, l)?;
            }
        }
    }
    Ok(acc)
}

/// `E[ln(1 + θY)]` for `Y ~ Gamma(l, 1)`, exact in closed form.
///
/// `l = 1` is `e^x E1(x)` at `x = 1/θ`. Higher orders follow the recurrences
///   `G_{m+1} = G_m + (1 − T_m)/m`, `T_{m+1} = (1 − T_m)/(θ m)`,
/// where `T_m = E[1/(1+θY_m)]` and `T_1 = x·e^x E1(x)`. The forward
/// recurrence loses digits when `θ m < 1`, so a moment series takes over for
/// small `θ` whenever it can reach full precision first.
fn expected_log_gamma(theta: f64, l: usize) -> Result<f64> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::invalid("theta", format!("must be finite and positive, got {theta}")));
    }
    if l == 0 {
        return Err(Error::invalid("multiplicity", "must be at least 1"));
    }
    let x = 1.0 / theta;
    if l == 1 {
        return exp_e1(x);
    }

    // Moment series Σ_n (-1)^{n+1} θ^n Γ(l+n)/(Γ(l)·n); asymptotic, truncated
    // at its smallest term. Only trusted if that term is negligible.
    if theta * l as f64 <= 0.5 {
        let mut acc = 0.0f64;
        let mut power = 1.0f64; // θ^n Γ(l+n)/Γ(l) as the loop advances
        let mut sign = 1.0f64;
        let mut prev_mag = f64::INFINITY;
        let mut trusted = false;
        for n in 1..=400usize {
            power *= theta * (l + n - 1) as f64;
            let mag = power / n as f64;
            if mag >= prev_mag {
                // Terms stopped shrinking; the truncation error is the size
                // of the last kept term.
                trusted = prev_mag <= 1e-13 * acc.abs().max(1.0);
                break;
            }
            acc += sign * mag;
            if mag <= 1e-17 * acc.abs().max(1e-300) {
                trusted = true;
                break;
            }
            prev_mag = mag;
            sign = -sign;
        }
        if trusted {
            return Ok(acc);
        }
    }

    let phi = exp_e1(x)?;
    let mut g = phi;
    let mut t = x * phi;
    for m in 1..l {
        let residue = 1.0 - t;
        g += residue / m as f64;
        t = residue / (theta * m as f64);
    }
    Ok(g)
}

/// Low-SNR asymptote `(ρ/2)·A`: noise-limited, interference negligible.
pub fn low_snr_rate(stats: &LinkStatistics, rho: f64) -> f64 {
    0.5 * rho * stats.a()
}

/// High-SNR limit of the two-user ergodic rate:
/// `[Λ₁ ln Λ₁ − Λ₂ ln Λ₂]/(Λ₁−Λ₂) − ln B`, with the `Λ ln Λ` term continued
/// by 0 at `Λ = 0` and the confluent value `1 + ln Λ` at `Λ₁ = Λ₂`.
pub fn high_snr_rate_m2(stats: &LinkStatistics) -> Result<f64> {
    if stats.b() <= 0.0 {
        return Err(Error::Unbounded(
            "interference-free high-SNR rate diverges (B = 0)".into(),
        ));
    }
    let spectrum = effective_spectrum_m2(stats);
    let l1 = spectrum.signal_plus_interference[0];
    let l2 = spectrum.signal_plus_interference[1];
    if l1 <= 0.0 {
        return Err(Error::invalid("stats", "spectrum collapsed to zero"));
    }
    let divided_difference = if l2 <= 1e-14 * l1 {
        l1.ln()
    } else if l1 - l2 <= 1e-7 * l1 {
        1.0 + (0.5 * (l1 + l2)).ln()
    } else {
        (l1 * l1.ln() - l2 * l2.ln()) / (l1 - l2)
    };
    Ok(divided_difference - stats.b().ln())
}

/// Semi-metric `d = √(4(AB − C²)/(A + B)²) ∈ [0, 1]` measuring how far two
/// beams are from colinear under the user's covariance.
pub fn semi_metric_d(stats: &LinkStatistics) -> Result<f64> {
    let (a, b, c) = (stats.a(), stats.b(), stats.c());
    let discriminant = a * b - c * c;
    if discriminant < -1e-12 * (a * b).max(1.0) {
        return Err(Error::invalid("stats", format!("C² exceeds A·B by {:.3e}", -discriminant)));
    }
    let total = a + b;
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok((4.0 * discriminant.max(0.0)).sqrt().min(total) / total)
}

/// `f(z) = ln((1+s)/(1−s))/s` with `s = √(1−z²)`, continued by 2 at `z = 1`.
pub fn f_func(z: f64) -> Result<f64> {
    Ok(f_and_g(z)?.0)
}

/// `g(z) = f(z) + 2 ln z`, increasing from `2 ln 2` to 2 on `(0, 1]`.
pub fn g_func(z: f64) -> Result<f64> {
    Ok(f_and_g(z)?.1)
}

fn f_and_g(z: f64) -> Result<(f64, f64)> {
    if !z.is_finite() || z <= 0.0 || z > 1.0 {
        return Err(Error::invalid("z", format!("must lie in (0, 1], got {z}")));
    }
    let s_sq = (1.0 - z) * (1.0 + z);
    let s = s_sq.sqrt();
    if s == 0.0 {
        return Ok((2.0, 2.0));
    }
    // ln((1+s)/(1-s)) = 2 ln(1+s) - ln(1-s²) keeps precision as s → 0, and
    // g avoids the f ↔ 2 ln z cancellation as z → 0 via 1 - s = z²/(1+s).
    let f = (2.0 * s.ln_1p() - (-s_sq).ln_1p()) / s;
    let g = 2.0 * s.ln_1p() / s - z.ln() * 2.0 * z * z / (s * (1.0 + s));
    Ok((f, g))
}

/// Deterministic SINR decomposition in the many-user regime:
/// `SINR_i = (ρ/M)·w_iᴴΣ_iw_i / (1 + (ρ/M)·Σ_{j≠i} w_jᴴΣ_iw_j)`.
pub fn asymptotic_sinr(
    sigmas: &[CovarianceMatrix],
    ws: &BeamformerSet,
    user: usize,
    rho: f64,
) -> Result<SinrBreakdown> {
    check_rho(rho)?;
    if sigmas.len() != ws.len() {
        return Err(Error::dim(format!("{} covariances for {} beamformers", sigmas.len(), ws.len())));
    }
    if user >= ws.len() {
        return Err(Error::invalid("user", format!("index {user} out of range for {} users", ws.len())));
    }
    if sigmas.iter().any(|s| s.dim() != ws.dim()) {
        return Err(Error::dim("covariance and beamformer dimensions disagree"));
    }
    let m = ws.len() as f64;
    let sigma = sigmas[user].entries();
    let signal = (rho / m) * quadratic_form(sigma, ws.get(user).as_vector());
    let mut interference = 0.0;
    for (j, w) in ws.iter().enumerate() {
        if j != user {
            interference += quadratic_form(sigma, w.as_vector());
        }
    }
    let interference_plus_noise = 1.0 + (rho / m) * interference;
    let sinr = signal / interference_plus_noise;
    Ok(SinrBreakdown { signal, interference_plus_noise, sinr, rate: sinr.ln_1p() })
}

/// Sum of [`asymptotic_sinr`] rates over all users.
pub fn asymptotic_sum_rate(sigmas: &[CovarianceMatrix], ws: &BeamformerSet, rho: f64) -> Result<f64> {
    let mut sum = 0.0;
    for user in 0..ws.len() {
        sum += asymptotic_sinr(sigmas, ws, user, rho)?.rate;
    }
    Ok(sum)
}

/// `ln κ/(κ − 1)`, continued by 1 at `κ = 1`.
fn kappa_log_ratio(kappa: f64) -> f64 {
    let e = kappa - 1.0;
    if e == 0.0 {
        1.0
    } else {
        e.ln_1p() / e
    }
}

/// Optimal high-SNR sum rate when both covariances share an eigenbasis, in
/// terms of the two condition numbers:
/// `κ₁·t(κ₁) + t(κ₂)` if `κ₁ ≥ κ₂`, else `κ₂·t(κ₂) + t(κ₁)`, with
/// `t(κ) = ln κ/(κ−1)`.
pub fn high_snr_sum_rate_common_basis(kappa1: f64, kappa2: f64) -> Result<f64> {
    if !kappa1.is_finite() || kappa1 <= 1.0 {
        return Err(Error::invalid("kappa1", format!("must exceed 1, got {kappa1}")));
    }
    if !kappa2.is_finite() || kappa2 <= 0.0 {
        return Err(Error::invalid("kappa2", format!("must be positive, got {kappa2}")));
    }
    let value = if kappa1 >= kappa2 {
        kappa1 * kappa_log_ratio(kappa1) + kappa_log_ratio(kappa2)
    } else {
        kappa2 * kappa_log_ratio(kappa2) + kappa_log_ratio(kappa1)
    };
    Ok(value)
}
