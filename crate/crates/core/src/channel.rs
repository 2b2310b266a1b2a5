//! Channel statistics, beamformer containers, and the effective spectra
//! that drive every closed-form rate expression.
//!
//! The downlink model has one transmit covariance per user; a channel draw
//! is `h = Σ^{1/2} g` with `g` standard complex Gaussian. Rates never touch
//! raw channel vectors except through Monte Carlo: the deterministic path
//! reduces a covariance plus a pair of beamformers to three scalars (A, B, C)
//! or, for more users, to the eigenvalues of a compressed quadratic form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, EigenDecomposition, MAX_EIG_DIM};

/// Hermitian positive semidefinite matrix with validated structure.
///
/// Serializes as `{"dim": M, "re": [[..]], "im": [[..]]}` (row-major);
/// deserialization re-runs the full structural validation, so a loaded value
/// carries the same guarantees as a constructed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceJson", into = "CovarianceJson")]
pub struct CovarianceMatrix {
    entries: DMatrix<Complex64>,
}

impl CovarianceMatrix {
    /// Validates Hermitian structure (entrywise asymmetry within `1e-12`
    /// at unit scale) and positive semidefiniteness, then stores the exact
    /// Hermitian average.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let eig = numerics::hermitian_eig(&entries)?;
        let lambda_max = eig.max_eigenvalue().max(0.0);
        if eig.min_eigenvalue() < -1e-12 * lambda_max.max(1.0) {
            return Err(Error::MatrixStructure {
                property: "positive semidefinite",
                detail: format!("minimum eigenvalue {:.3e}", eig.min_eigenvalue()),
            });
        }
        let n = entries.nrows();
        let herm = DMatrix::from_fn(n, n, |i, j| {
            (entries[(i, j)] + entries[(j, i)].conj()) * Complex64::new(0.5, 0.0)
        });
        Ok(CovarianceMatrix { entries: herm })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Eigen decomposition; infallible because the stored matrix already
    /// passed validation.
    pub fn eigendecomposition(&self) -> EigenDecomposition {
        numerics::hermitian_eig(&self.entries).expect("validated covariance decomposes")
    }

    /// Hermitian PSD square root.
    pub fn sqrt(&self) -> DMatrix<Complex64> {
        numerics::matrix_sqrt_psd(&self.entries).expect("validated covariance has a PSD root")
    }

    /// Rejects matrices whose smallest eigenvalue falls below `1e-10` of the
    /// largest; closed forms that divide by interference powers need this.
    pub fn require_positive_definite(&self) -> Result<()> {
        let eig = self.eigendecomposition();
        if eig.max_eigenvalue() <= 0.0 || eig.min_eigenvalue() < 1e-10 * eig.max_eigenvalue() {
            return Err(Error::MatrixStructure {
                property: "positive definite",
                detail: format!(
                    "eigenvalues span [{:.3e}, {:.3e}]",
                    eig.min_eigenvalue(),
                    eig.max_eigenvalue()
                ),
            });
        }
        Ok(())
    }

    /// Frobenius norm of `Σ₁Σ₂ - Σ₂Σ₁`; zero iff the pair shares an
    /// eigenbasis.
    pub fn commutator_norm(&self, other: &CovarianceMatrix) -> f64 {
        (&self.entries * &other.entries - &other.entries * &self.entries).norm()
    }
}

#[derive(Serialize, Deserialize)]
struct CovarianceJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<CovarianceJson> for CovarianceMatrix {
    type Error = Error;

    fn try_from(j: CovarianceJson) -> Result<Self> {
        if j.dim == 0 || j.dim > MAX_EIG_DIM {
            return Err(Error::invalid("dim", format!("must be in 1..={MAX_EIG_DIM}, got {}", j.dim)));
        }
        for (name, rows) in [("re", &j.re), ("im", &j.im)] {
            if rows.len() != j.dim {
                return Err(Error::invalid(
                    if name == "re" { "re" } else { "im" },
                    format!("expected {} rows, got {}", j.dim, rows.len()),
                ));
            }
            for (k, row) in rows.iter().enumerate() {
                if row.len() != j.dim {
                    return Err(Error::invalid(
                        if name == "re" { "re" } else { "im" },
                        format!("row {k} has {} entries, expected {}", row.len(), j.dim),
                    ));
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid(
                        if name == "re" { "re" } else { "im" },
                        format!("row {k} contains a non-finite entry"),
                    ));
                }
            }
        }
        let entries = DMatrix::from_fn(j.dim, j.dim, |r, c| Complex64::new(j.re[r][c], j.im[r][c]));
        CovarianceMatrix::new(entries)
    }
}

impl From<CovarianceMatrix> for CovarianceJson {
    fn from(m: CovarianceMatrix) -> Self {
        let dim = m.dim();
        let re = (0..dim).map(|r| (0..dim).map(|c| m.entries[(r, c)].re).collect()).collect();
        let im = (0..dim).map(|r| (0..dim).map(|c| m.entries[(r, c)].im).collect()).collect();
        CovarianceJson { dim, re, im }
    }
}

/// Unit-norm transmit direction for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    v: DVector<Complex64>,
}

impl Beamformer {
    /// Accepts a vector whose norm is within `1e-12` of one.
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("beamformer", "must have at least one entry"));
        }
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("beamformer", format!("norm {norm} is not 1 within 1e-12")));
        }
        Ok(Beamformer { v })
    }

    /// Scales an arbitrary nonzero vector onto the unit sphere.
    pub fn normalized(v: DVector<Complex64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::invalid("beamformer", "must have at least one entry"));
        }
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-150 {
            return Err(Error::invalid("beamformer", format!("cannot normalize vector of norm {norm}")));
        }
        Ok(Beamformer { v: v / Complex64::new(norm, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.v
    }

    /// Copy with the largest-magnitude entry rotated to be real positive.
    pub fn phase_normalized(&self) -> Beamformer {
        let mut v = self.v.clone();
        numerics::normalize_vector_phase(&mut v);
        Beamformer { v }
    }

    /// Angle in `[0, π/2]` between the lines spanned by the two vectors;
    /// invariant to global phase.
    pub fn principal_angle(&self, other: &Beamformer) -> f64 {
        let overlap = self.v.dotc(&other.v).norm().clamp(0.0, 1.0);
        overlap.acos()
    }
}

/// One beamformer per user; the antenna count equals the user count, so the
/// set is square by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    vectors: Vec<Beamformer>,
}

impl BeamformerSet {
    pub fn new(vectors: Vec<Beamformer>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::invalid("beamformers", "set must be non-empty"));
        }
        let dim = vectors[0].dim();
        if vectors.iter().any(|w| w.dim() != dim) {
            return Err(Error::dim("beamformers in a set must share one dimension"));
        }
        if vectors.len() != dim {
            return Err(Error::dim(format!(
                "expected one beamformer per antenna: {} vectors of dimension {dim}",
                vectors.len()
            )));
        }
        Ok(BeamformerSet { vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn get(&self, user: usize) -> &Beamformer {
        &self.vectors[user]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Beamformer> {
        self.vectors.iter()
    }

    pub fn as_slice(&self) -> &[Beamformer] {
        &self.vectors
    }
}

/// The three scalars a two-user link exposes to the rate formulas:
/// `a = w_iᴴ Σ_i w_i` (own-beam gain), `b = w_jᴴ Σ_i w_j` (interfering-beam
/// gain), `c = |w_iᴴ Σ_i w_j|` (beam coupling through user i's covariance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStatistics {
    a: f64,
    b: f64,
    c: f64,
}

impl LinkStatistics {
    /// Requires `a, b ≥ 0` and the Cauchy–Schwarz relation `c² ≤ a·b` up to
    /// rounding slack.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    match name {
                        "a" => "a",
                        "b" => "b",
                        _ => "c",
                    },
                    format!("must be finite and nonnegative, got {v}"),
                ));
            }
        }
        let slack = 1e-10 * (a * b) + 1e-13 * (a + b + 1.0).powi(2);
        if c * c > a * b + slack {
            return Err(Error::invalid("c", format!("c² = {:.6e} exceeds a·b = {:.6e}", c * c, a * b)));
        }
        Ok(LinkStatistics { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Real part of `xᴴ M x`, clamped to zero when rounding drags a PSD form
/// negative.
pub(crate) fn quadratic_form(m: &DMatrix<Complex64>, x: &DVector<Complex64>) -> f64 {
    let mx = m * x;
    x.dotc(&mx).re.max(0.0)
}

/// `xᴴ M y` for Hermitian `M`.
pub(crate) fn cross_form(m: &DMatrix<Complex64>, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
    let my = m * y;
    x.dotc(&my)
}

/// Link statistics of user i's covariance against its own beam `w_i` and an
/// interfering beam `w_j`.
pub fn link_statistics(sigma_i: &CovarianceMatrix, w_i: &Beamformer, w_j: &Beamformer) -> Result<LinkStatistics> {
    let dim = sigma_i.dim();
    if w_i.dim() != dim || w_j.dim() != dim {
        return Err(Error::dim(format!(
            "covariance is {dim}x{dim} but beamformers have dimensions {} and {}",
            w_i.dim(),
            w_j.dim()
        )));
    }
    let a = quadratic_form(sigma_i.entries(), w_i.as_vector());
    let b = quadratic_form(sigma_i.entries(), w_j.as_vector());
    let c = cross_form(sigma_i.entries(), w_i.as_vector(), w_j.as_vector()).norm();
    LinkStatistics::new(a, b, c)
}

/// Eigenvalues of the compressed forms `Σ_i^{1/2} (Σ_j w_j w_jᴴ) Σ_i^{1/2}`,
/// with and without the served user's own dyad.
///
/// Both lists are sorted descending and nonnegative. `interference_only`
/// drops one dyad from a sum of `M` rank-one terms, so its smallest entry is
/// an exact zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpectrum {
    pub signal_plus_interference: Vec<f64>,
    pub interference_only: Vec<f64>,
}

impl EffectiveSpectrum {
    pub fn dim(&self) -> usize {
        self.signal_plus_interference.len()
    }
}

/// Two-user effective spectrum in closed form:
/// `Λ_{1,2} = ((a+b) ± √((a−b)² + 4c²)) / 2`, interference spectrum `(b, 0)`.
pub fn effective_spectrum_m2(stats: &LinkStatistics) -> EffectiveSpectrum {
    let (a, b, c) = (stats.a(), stats.b(), stats.c());
    let gap = ((a - b) * (a - b) + 4.0 * c * c).sqrt();
    let l1 = 0.5 * (a + b + gap);
    // Λ₂ = (ab - c²)/Λ₁ analytically; the subtraction form only loses digits.
    let l2 = (0.5 * (a + b - gap)).max(0.0);
    EffectiveSpectrum { signal_plus_interference: vec![l1, l2], interference_only: vec![b, 0.0] }
}

/// Effective spectrum for any user count: eigenvalues of
/// `Σ_user^{1/2} (Σ_j w_j w_jᴴ) Σ_user^{1/2}` and of the same form with
/// `w_user`'s dyad removed.
pub fn effective_spectrum_general(
    sigma_user: &CovarianceMatrix,
    ws: &BeamformerSet,
    user: usize,
) -> Result<EffectiveSpectrum> {
    let m = sigma_user.dim();
    if ws.dim() != m {
        return Err(Error::dim(format!("covariance is {m}x{m} but beamformers have dimension {}", ws.dim())));
    }
    if user >= ws.len() {
        return Err(Error::invalid("user", format!("index {user} out of range for {} users", ws.len())));
    }
    let root = sigma_user.sqrt();
    // Work with the compressed dyads (Σ^{1/2} w_j): the quadratic form’s
    // spectrum only needs their Gram structure.
    let mut full = DMatrix::<Complex64>::zeros(m, m);
    let mut interference = DMatrix::<Complex64>::zeros(m, m);
    for (j, w) in ws.iter().enumerate() {
        let rw = &root * w.as_vector();
        let dyad = &rw * rw.adjoint();
        full += &dyad;
        if j != user {
            interference += &dyad;
        }
    }
    Ok(EffectiveSpectrum {
        signal_plus_interference: clamped_psd_eigenvalues(&full)?,
        interference_only: clamped_psd_eigenvalues(&interference)?,
    })
}

/// Eigenvalues of a PSD form with magnitudes below `1e-13` of the largest
/// snapped to exact zero; analytic rank deficiencies come out as true zeros.
fn clamped_psd_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let eig = numerics::hermitian_eig(m)?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let floor = 1e-13 * scale;
    Ok(eig
        .eigenvalues
        .iter()
        .map(|&l| if l.abs() <= floor { 0.0 } else { l.max(0.0) })
        .collect())
}

/// One channel realization.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    h: DVector<Complex64>,
}

impl ChannelSample {
    pub fn vector(&self) -> &DVector<Complex64> {
        &self.h
    }
}

/// Vector of i.i.d. standard complex Gaussian entries (unit variance per
/// entry, split evenly between the real and imaginary parts). Entries are
/// drawn in index order, real part first, so a seeded generator reproduces
/// the draw exactly.
pub fn complex_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Draws `h = Σ^{1/2} g` with `g` standard complex Gaussian, so
/// `E[h hᴴ] = Σ`.
pub fn sample_channel<R: Rng + ?Sized>(sigma: &CovarianceMatrix, rng: &mut R) -> ChannelSample {
    let g = complex_gaussian_vector(sigma.dim(), rng);
    ChannelSample { h: sigma.sqrt() * g }
}

/// Exponential correlation fixture: `[Σ]_{kl} = scale · r^{|k-l|}`.
/// Positive definite for every `r ∈ [0, 1)`.
pub fn exponential_correlation(m: usize, r: f64, scale: f64) -> Result<CovarianceMatrix> {
    if m == 0 || m > MAX_EIG_DIM {
        return Err(Error::invalid("m", format!("must be in 1..={MAX_EIG_DIM}, got {m}")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::invalid("r", format!("must lie in [0, 1), got {r}")));
    }
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
    }
    let entries = DMatrix::from_fn(m, m, |i, j| {
        Complex64::new(scale * r.powi((i as i32 - j as i32).abs()), 0.0)
    });
    CovarianceMatrix::new(entries)
}

/// Covariance with a prescribed spectrum in a pseudorandom eigenbasis:
/// `Σ = Q diag(eigenvalues) Qᴴ` with `Q` Haar-distributed from `seed`.
pub fn random_spectrum_covariance(eigenvalues: &[f64], seed: u64) -> Result<CovarianceMatrix> {
    let m = eigenvalues.len();
    if m == 0 || m > MAX_EIG_DIM {
        return Err(Error::invalid("eigenvalues", format!("need 1..={MAX_EIG_DIM} values, got {m}")));
    }
    if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::invalid("eigenvalues", "all values must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_unitary(m, &mut rng);
    let diag = DMatrix::from_fn(m, m, |i, j| {
        if i == j { Complex64::new(eigenvalues[i], 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    let raw = &q * diag * q.adjoint();
    let herm = DMatrix::from_fn(m, m, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * Complex64::new(0.5, 0.0));
    CovarianceMatrix::new(herm)
}

/// Haar-distributed unitary: Gram–Schmidt applied to a complex Gaussian
/// matrix (the triangular factor's diagonal is positive real, which is what
/// makes the distribution uniform).
pub fn random_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut q = DMatrix::<Complex64>::zeros(m, m);
    for col in 0..m {
        loop {
            let mut v = complex_gaussian_vector(m, rng);
            for prev in 0..col {
                let proj = q.column(prev).dotc(&v);
                let prev_col = q.column(prev).clone_owned();
                v -= prev_col * proj;
            }
            let norm = v.norm();
            // Resample on (measure-zero) near-degeneracy instead of dividing
            // by noise.
            if norm > 1e-8 {
                q.set_column(col, &(v / Complex64::new(norm, 0.0)));
                break;
            }
        }
    }
    q
}

/// Uniformly random unit-norm beamformer.
pub fn random_beamformer<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Beamformer> {
    Beamformer::normalized(complex_gaussian_vector(m, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag2(a: f64, b: f64) -> CovarianceMatrix {
        CovarianceMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(a, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(b, 0.0)],
        ))
        .unwrap()
    }

    fn e(k: usize, dim: usize) -> Beamformer {
        Beamformer::new(DVector::from_fn(dim, |i, _| if i == k { cx(1.0, 0.0) } else { cx(0.0, 0.0) })).unwrap()
    }

    #[test]
    fn covariance_rejects_non_hermitian_and_indefinite() {
        let skew = DMatrix::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(0.5, 0.0), cx(-0.5, 0.0), cx(1.0, 0.0)]);
        assert!(CovarianceMatrix::new(skew).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(2.0, 0.0), cx(2.0, 0.0), cx(1.0, 0.0)]);
        assert!(CovarianceMatrix::new(indefinite).is_err());
    }

    #[test]
    fn covariance_json_round_trip() {
        let sigma = random_spectrum_covariance(&[2.0, 0.7, 0.3], 7).unwrap();
        let text = serde_json::to_string(&sigma).unwrap();
        let back: CovarianceMatrix = serde_json::from_str(&text).unwrap();
        assert!((back.entries() - sigma.entries()).norm() < 1e-12);
    }

    #[test]
    fn covariance_json_shape_matches_schema() {
        let sigma = diag2(3.0, 1.0);
        let value = serde_json::to_value(&sigma).unwrap();
        assert_eq!(value["dim"], 2);
        assert_eq!(value["re"][0][0], 3.0);
        assert_eq!(value["im"][0][1], 0.0);
    }

    #[test]
    fn covariance_json_rejects_bad_payloads() {
        // Row count disagrees with dim.
        let bad_rows = r#"{"dim": 2, "re": [[1.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#;
        assert!(serde_json::from_str::<CovarianceMatrix>(bad_rows).is_err());
        // Hermitian violation.
        let not_herm = r#"{"dim": 2, "re": [[1.0, 0.3], [0.4, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#;
        assert!(serde_json::from_str::<CovarianceMatrix>(not_herm).is_err());
        // Negative definite direction.
        let not_psd = r#"{"dim": 2, "re": [[1.0, 2.0], [2.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}"#;
        assert!(serde_json::from_str::<CovarianceMatrix>(not_psd).is_err());
    }

    #[test]
    fn exponential_correlation_structure() {
        let sigma = exponential_correlation(4, 0.5, 2.0).unwrap();
        assert_relative_eq!(sigma.entries()[(0, 0)].re, 2.0);
        assert_relative_eq!(sigma.entries()[(0, 3)].re, 2.0 * 0.125);
        assert_relative_eq!(sigma.entries()[(2, 1)].re, 1.0);
        sigma.require_positive_definite().unwrap();
        assert!(exponential_correlation(4, 1.0, 1.0).is_err());
        assert!(exponential_correlation(4, -0.1, 1.0).is_err());
        assert!(exponential_correlation(4, 0.5, 0.0).is_err());
    }

    #[test]
    fn random_spectrum_covariance_recovers_spectrum() {
        let spectrum = [3.0, 1.5, 0.4];
        let sigma = random_spectrum_covariance(&spectrum, 42).unwrap();
        let eig = sigma.eigendecomposition();
        for (got, want) in eig.eigenvalues.iter().zip(spectrum.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
        // Same seed, same matrix; different seed, different basis.
        let again = random_spectrum_covariance(&spectrum, 42).unwrap();
        assert_eq!(sigma, again);
        let other = random_spectrum_covariance(&spectrum, 43).unwrap();
        assert!((sigma.entries() - other.entries()).norm() > 1e-6);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_unitary(5, &mut rng);
        let gram = q.adjoint() * &q;
        assert!((gram - DMatrix::<Complex64>::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn beamformer_norm_validation() {
        assert!(Beamformer::new(DVector::from_vec(vec![cx(0.5, 0.0), cx(0.5, 0.0)])).is_err());
        let w = Beamformer::normalized(DVector::from_vec(vec![cx(3.0, 0.0), cx(4.0, 0.0)])).unwrap();
        assert_relative_eq!(w.as_vector().norm(), 1.0, epsilon = 1e-15);
        assert!(Beamformer::normalized(DVector::from_vec(vec![cx(0.0, 0.0)])).is_err());
    }

    #[test]
    fn beamformer_principal_angle_ignores_phase() {
        let w1 = e(0, 2);
        let rotated = Beamformer::new(DVector::from_vec(vec![cx(0.0, 1.0), cx(0.0, 0.0)])).unwrap();
        assert!(w1.principal_angle(&rotated) < 1e-12);
        let w2 = e(1, 2);
        assert_relative_eq!(w1.principal_angle(&w2), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn beamformer_set_must_be_square() {
        let ws = vec![e(0, 3), e(1, 3)];
        assert!(BeamformerSet::new(ws).is_err());
        let ws = vec![e(0, 2), e(1, 2)];
        assert!(BeamformerSet::new(ws).is_ok());
    }

    #[test]
    fn link_statistics_on_diagonal_fixture() {
        let sigma = diag2(3.0, 1.0);
        let stats = link_statistics(&sigma, &e(0, 2), &e(1, 2)).unwrap();
        assert_relative_eq!(stats.a(), 3.0);
        assert_relative_eq!(stats.b(), 1.0);
        assert_relative_eq!(stats.c(), 0.0);
    }

    #[test]
    fn link_statistics_satisfy_cauchy_schwarz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let sigma = random_spectrum_covariance(&[2.5, 0.8], 100 + trial).unwrap();
            let w1 = random_beamformer(2, &mut rng).unwrap();
            let w2 = random_beamformer(2, &mut rng).unwrap();
            let stats = link_statistics(&sigma, &w1, &w2).unwrap();
            assert!(stats.c() * stats.c() <= stats.a() * stats.b() * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn effective_spectrum_m2_identities() {
        let stats = LinkStatistics::new(2.0, 1.0, 0.5).unwrap();
        let spec = effective_spectrum_m2(&stats);
        let [l1, l2] = [spec.signal_plus_interference[0], spec.signal_plus_interference[1]];
        // Trace and determinant identities of the 2x2 compressed form.
        assert_relative_eq!(l1 + l2, 3.0, epsilon = 1e-14);
        assert_relative_eq!(l1 * l2, 2.0 * 1.0 - 0.25, epsilon = 1e-13);
        assert_eq!(spec.interference_only, vec![1.0, 0.0]);
        assert!(l1 >= l2 && l2 >= 0.0);
    }

    #[test]
    fn effective_spectrum_general_matches_m2_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..50 {
            let sigma = random_spectrum_covariance(&[1.9, 0.6], 500 + trial).unwrap();
            let w1 = random_beamformer(2, &mut rng).unwrap();
            let w2 = random_beamformer(2, &mut rng).unwrap();
            let ws = BeamformerSet::new(vec![w1.clone(), w2.clone()]).unwrap();
            let stats = link_statistics(&sigma, &w1, &w2).unwrap();
            let closed = effective_spectrum_m2(&stats);
            let general = effective_spectrum_general(&sigma, &ws, 0).unwrap();
            for k in 0..2 {
                assert_relative_eq!(
                    closed.signal_plus_interference[k],
                    general.signal_plus_interference[k],
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
            }
            // Interference-only spectrum is (b, 0): rank one.
            assert_relative_eq!(general.interference_only[0], stats.b(), epsilon = 1e-12, max_relative = 1e-10);
            assert_eq!(general.interference_only[1], 0.0);
        }
    }

    #[test]
    fn effective_spectrum_general_trace_identity() {
        let sigma = random_spectrum_covariance(&[2.2, 1.1, 0.5, 0.2], 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ws = BeamformerSet::new(
            (0..4).map(|_| random_beamformer(4, &mut rng).unwrap()).collect(),
        )
        .unwrap();
        let spec = effective_spectrum_general(&sigma, &ws, 1).unwrap();
        // trace(Σ^{1/2} W Σ^{1/2}) = Σ_j w_jᴴ Σ w_j.
        let want: f64 = ws.iter().map(|w| quadratic_form(sigma.entries(), w.as_vector())).sum();
        let got: f64 = spec.signal_plus_interference.iter().sum();
        assert_relative_eq!(got, want, max_relative = 1e-10);
        // One dyad removed: at least one exact zero.
        assert_eq!(*spec.interference_only.last().unwrap(), 0.0);
        assert!(spec.signal_plus_interference.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn sample_channel_matches_covariance() {
        let sigma = random_spectrum_covariance(&[2.0, 0.5], 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 40_000usize;
        let mut acc = DMatrix::<Complex64>::zeros(2, 2);
        for _ in 0..n {
            let h = sample_channel(&sigma, &mut rng);
            acc += h.vector() * h.vector().adjoint();
        }
        let empirical = acc / cx(n as f64, 0.0);
        // 1/sqrt(40000) = 0.5% statistical error; 5% tolerance is safe.
        assert!((&empirical - sigma.entries()).norm() < 0.05 * sigma.entries().norm());
    }

    #[test]
    fn complex_gaussian_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += complex_gaussian_vector(1, &mut rng)[0].norm_sqr();
        }
        assert_relative_eq!(acc / n as f64, 1.0, max_relative = 0.02);
    }
}
