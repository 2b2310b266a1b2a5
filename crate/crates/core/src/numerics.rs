//! Scalar special functions and dense Hermitian linear algebra.
//!
//! Everything downstream (closed-form rates, beamformer designs) reduces to
//! two kernels: the scaled exponential integral `e^x E1(x)` and eigen
//! decompositions of small Hermitian matrices. Both are implemented here with
//! deterministic, platform-independent arithmetic; no LAPACK binding is used,
//! so results are bit-stable across builds and thread counts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest admissible matrix side for the dense eigensolver.
pub const MAX_EIG_DIM: usize = 64;

/// Computes `e^x * E1(x)` for `x > 0`, where `E1` is the exponential
/// integral `∫_x^∞ e^{-t}/t dt`.
///
/// The product form stays bounded for large `x` (it behaves like `1/x`),
/// which is the regime the rate formulas probe at low SNR. Uses the
/// alternating series for `x <= 1`, a continued fraction for moderate `x`,
/// and a compensated asymptotic expansion for `x >= 1e4`; every branch
/// delivers close to machine precision, and the last one is faithfully
/// rounded so the bracketing inequalities below survive even where their
/// gaps shrink under one ulp (they scale as x^-3 against a value of x^-1).
pub fn exp_e1(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid("x", format!("exp_e1 requires finite x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(exp_e1_series(x))
    } else if x < ASYMPTOTIC_CUTOFF {
        Ok(exp_e1_continued_fraction(x))
    } else {
        Ok(exp_e1_asymptotic(x))
    }
}

const ASYMPTOTIC_CUTOFF: f64 = 1e4;

/// Series branch: E1(x) = -γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!).
fn exp_e1_series(x: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut power_over_factorial = 1.0f64; // x^k / k! as the loop advances
    let mut sign = 1.0f64;
    for k in 1..=40u32 {
        power_over_factorial *= x / f64::from(k);
        let term = sign * power_over_factorial / f64::from(k);
        sum += term;
        sign = -sign;
        if term.abs() < f64::EPSILON * sum.abs().max(1.0) {
            break;
        }
    }
    x.exp() * (-EULER_GAMMA - x.ln() + sum)
}

/// Continued-fraction branch (modified Lentz):
/// e^x E1(x) = 1 / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...)))).
fn exp_e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=200u64 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= 2.0 * f64::EPSILON {
            break;
        }
    }
    h
}

/// Large-argument branch: e^x E1(x) = u - u² + 2u³ - 6u⁴ + ... with u = 1/x.
///
/// Truncating at the 720u⁷ term leaves a relative error below 1e-27 for
/// x >= 1e4. The evaluation is compensated: u is split into hi + lo parts so
/// the residual of the division survives, the correction polynomial runs in
/// plain f64 (its own rounding is suppressed by a factor u), and the leading
/// product is split exactly with `mul_add` before the single final rounding.
/// The continued fraction wobbles in its last ulp, which is wider than the
/// gap to the ½ln(1+2/x) lower bound once x exceeds ~5e7; this form is not.
fn exp_e1_asymptotic(x: f64) -> f64 {
    let u_hi = 1.0 / x;
    let u_lo = (-u_hi).mul_add(x, 1.0) / x;
    let v = u_hi;
    let s = 1.0 - v * (1.0 - v * (2.0 - v * (6.0 - v * (24.0 - v * (120.0 - v * 720.0)))));
    let p = u_hi * s;
    let e = u_hi.mul_add(s, -p);
    p + (e + u_lo * s)
}

/// Eigen decomposition of a Hermitian matrix.
///
/// `eigenvalues[k]` pairs with `eigenvectors.column(k)`; eigenvalues are real
/// and sorted in descending order. Columns are orthonormal and each is
/// phase-normalized so its largest-magnitude entry is real and positive
/// (lowest index wins ties), making decompositions reproducible.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl EigenDecomposition {
    /// Largest eigenvalue. Decompositions of 0×0 matrices are rejected
    /// upstream, so the list is never empty.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Eigenvector for `eigenvalues[k]`.
    pub fn eigenvector(&self, k: usize) -> DVector<Complex64> {
        DVector::from_column_slice(self.eigenvectors.column(k).as_slice())
    }
}

fn max_abs_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn check_square_hermitian(m: &DMatrix<Complex64>, name: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!("{name} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Err(Error::invalid(name, "matrix must be at least 1x1"));
    }
    if m.nrows() > MAX_EIG_DIM {
        return Err(Error::invalid(name, format!("dimension {} exceeds supported maximum {MAX_EIG_DIM}", m.nrows())));
    }
    let scale = max_abs_entry(m).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let asym = (m[(i, j)] - m[(j, i)].conj()).norm();
            if asym > tol {
                return Err(Error::MatrixStructure {
                    property: "Hermitian",
                    detail: format!("entry ({i},{j}) differs from conjugate transpose by {asym:.3e}"),
                });
            }
        }
    }
    Ok(())
}

/// Eigen decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// The input must be square, at most [`MAX_EIG_DIM`] on a side, and Hermitian
/// up to an entrywise asymmetry of `1e-12` (relative to the largest entry for
/// matrices with entries above unit scale). Accumulated rotations keep the
/// eigenvector basis orthonormal to machine precision.
pub fn hermitian_eig(m: &DMatrix<Complex64>) -> Result<EigenDecomposition> {
    check_square_hermitian(m, "matrix")?;
    let n = m.nrows();

    // Work on the exactly-Hermitian average so rounding in the caller cannot
    // leak into the iteration.
    let mut a = DMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * Complex64::new(0.5, 0.0));
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
    }
    let mut v = DMatrix::<Complex64>::identity(n, n);

    let frobenius = a.norm();
    let off_target = 1e-14 * frobenius;

    const MAX_SWEEPS: usize = 60;
    let mut converged = frobenius == 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut off_sq = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sq += 2.0 * a[(p, q)].norm_sqr();
            }
        }
        if off_sq.sqrt() <= off_target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { routine: "hermitian_eig", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Descending eigenvalues; equal values keep their diagonal order.
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap().then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut eigenvectors = DMatrix::<Complex64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &v.column(src));
        fix_column_phase(&mut eigenvectors, dst);
    }

    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// One two-sided unitary rotation zeroing `a[(p, q)]`, with the same rotation
/// accumulated into `v`.
fn jacobi_rotate(a: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{iφ} with a_pq = r e^{iφ}
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let cp = phase * c; // column-p coefficient carries the phase
    let sp = phase * s;

    let n = a.nrows();
    // A <- A J with J = [[c e^{iφ}, s e^{iφ}], [-s, c]] on columns (p, q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = cp * akp - akq * s;
        a[(k, q)] = sp * akp + akq * c;
    }
    // A <- J^H A on rows (p, q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = cp.conj() * apk - aqk * s;
        a[(q, k)] = sp.conj() * apk + aqk * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    // V <- V J.
    for k in 0..v.nrows() {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = cp * vkp - vkq * s;
        v[(k, q)] = sp * vkp + vkq * c;
    }
}

/// Rotates column `col` so its largest-magnitude entry is real positive;
/// ties resolve to the lowest index.
fn fix_column_phase(m: &mut DMatrix<Complex64>, col: usize) {
    let n = m.nrows();
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for k in 0..n {
        let mag = m[(k, col)].norm();
        if mag > best_mag {
            best_mag = mag;
            best = k;
        }
    }
    if best_mag == 0.0 {
        return;
    }
    let rot = m[(best, col)].conj() / best_mag;
    for k in 0..n {
        m[(k, col)] *= rot;
    }
}

/// Hermitian PSD square root `S` with `S S = m` and `S` itself Hermitian PSD.
///
/// Eigenvalues within `-1e-12 * max(1, λ_max)` of zero are treated as exact
/// zeros; anything more negative is rejected.
pub fn matrix_sqrt_psd(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = hermitian_eig(m)?;
    let lambda_max = eig.max_eigenvalue().max(0.0);
    let floor = -1e-12 * lambda_max.max(1.0);
    if eig.min_eigenvalue() < floor {
        return Err(Error::MatrixStructure {
            property: "positive semidefinite",
            detail: format!("minimum eigenvalue {:.3e}", eig.min_eigenvalue()),
        });
    }
    let n = m.nrows();
    let sqrt_diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let s = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint();
    // Symmetrize away rounding from the triple product.
    let herm = DMatrix::from_fn(n, n, |i, j| (s[(i, j)] + s[(j, i)].conj()) * Complex64::new(0.5, 0.0));
    Ok(herm)
}

/// Full solution of the Hermitian-definite pencil `A x = λ B x`.
///
/// `A` must be Hermitian PSD and `B` Hermitian positive definite (minimum
/// eigenvalue at least `1e-10` of its maximum). Eigenvalues are real
/// nonnegative, sorted descending; eigenvectors are unit-norm in the standard
/// inner product with the same phase convention as [`hermitian_eig`].
pub fn generalized_eig(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<(Vec<f64>, Vec<DVector<Complex64>>)> {
    check_square_hermitian(a, "a")?;
    check_square_hermitian(b, "b")?;
    if a.nrows() != b.nrows() {
        return Err(Error::dim(format!("pencil dimensions differ: {} vs {}", a.nrows(), b.nrows())));
    }
    let eb = hermitian_eig(b)?;
    if eb.min_eigenvalue() < 1e-10 * eb.max_eigenvalue() || eb.max_eigenvalue() <= 0.0 {
        return Err(Error::MatrixStructure {
            property: "positive definite",
            detail: format!(
                "eigenvalue range [{:.3e}, {:.3e}] is too ill-conditioned",
                eb.min_eigenvalue(),
                eb.max_eigenvalue()
            ),
        });
    }
    let n = b.nrows();
    let inv_sqrt_diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0 / eb.eigenvalues[i].sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let b_inv_sqrt = &eb.eigenvectors * inv_sqrt_diag * eb.eigenvectors.adjoint();

    // Reduce to the ordinary Hermitian problem B^{-1/2} A B^{-1/2}.
    let reduced_raw = &b_inv_sqrt * a * &b_inv_sqrt;
    let reduced = DMatrix::from_fn(n, n, |i, j| {
        (reduced_raw[(i, j)] + reduced_raw[(j, i)].conj()) * Complex64::new(0.5, 0.0)
    });
    let er = hermitian_eig(&reduced)?;

    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let y = er.eigenvector(k);
        let mut x = &b_inv_sqrt * y;
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::NoConvergence { routine: "generalized_eig", iterations: 0 });
        }
        x /= Complex64::new(norm, 0.0);
        normalize_vector_phase(&mut x);
        vectors.push(x);
    }
    Ok((er.eigenvalues, vectors))
}

/// Dominant generalized eigenpair of `A x = λ B x`; see [`generalized_eig`]
/// for the admissible inputs. Returns `(x, λ_max)` with `‖x‖ = 1`.
pub fn generalized_dominant_eigvec(
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Result<(DVector<Complex64>, f64)> {
    let (values, mut vectors) = generalized_eig(a, b)?;
    Ok((vectors.swap_remove(0), values[0]))
}

/// Same phase convention as [`hermitian_eig`] columns, applied to a lone
/// vector.
pub(crate) fn normalize_vector_phase(v: &mut DVector<Complex64>) {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for k in 0..v.len() {
        let mag = v[k].norm();
        if mag > best_mag {
            best_mag = mag;
            best = k;
        }
    }
    if best_mag == 0.0 {
        return;
    }
    let rot = v[best].conj() / best_mag;
    for k in 0..v.len() {
        v[k] *= rot;
    }
}
