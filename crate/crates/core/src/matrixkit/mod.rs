//! Dense complex linear algebra.

mod expm;
mod hermitian;
mod lu;
mod lyapunov;
mod matrix;
mod schur;
mod svd;

use thiserror::Error;

pub use expm::expm;
pub use hermitian::{hermitian_eigen, HermitianEigen};
pub use lu::{determinant, inverse, solve, Lu};
pub use lyapunov::{solve_lyapunov, solve_sylvester_upper};
pub use matrix::{c, vec_dot, vec_norm, CMatrix, C64, I};
pub use schur::{schur, Schur};
pub use svd::{column_space, orthogonal_complement, singular_values, ColumnSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("iteration cap hit after {iterations} iterations")]
    ConvergenceFailure { iterations: usize },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Sylvester operator is singular")]
    SingularSylvester,
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite entry")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
}

/// Eigenvalues with per-eigenvalue backward error `‖Av − λv‖/max(1, ‖A‖_F)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> C64 {
        self.values.iter().sum()
    }
}

pub fn eigenvalues(a: &CMatrix) -> Result<Spectrum, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    let sch = schur(a)?;
    let scale = a.norm_scale();
    let mut values = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = sch.t[(k, k)];
        let y = schur::triangular_eigenvector(&sch.t, k);
        let v = sch.q.apply(&y);
        let av = a.apply(&v);
        let r: Vec<C64> = av.iter().zip(&v).map(|(x, vi)| x - lambda * vi).collect();
        values.push(lambda);
        residuals.push(vec_norm(&r) / scale);
    }
    Ok(Spectrum { values, residuals })
}

fn check_hermitian(h: &CMatrix, tol: f64) -> Result<(), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NonSquare { rows: h.rows(), cols: h.cols() });
    }
    let asym = h.hermitian_defect();
    if asym > tol * h.norm_scale() {
        return Err(LinalgError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Largest eigenvalue of the Hermitian part; `-inf` for an empty matrix.
pub fn max_hermitian_eigenvalue(h: &CMatrix) -> Result<f64, LinalgError> {
    Ok(hermitian_eigen(h)?.max())
}

pub fn is_negative_semidefinite(h: &CMatrix, tol: f64) -> Result<bool, LinalgError> {
    check_hermitian(h, tol)?;
    Ok(max_hermitian_eigenvalue(h)? <= tol * h.norm_scale())
}

/// Number of singular values above `tol·σ_max`.
pub fn rank(a: &CMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Hermitian PSD square root. Eigenvalues within `tol·max(1, ‖N‖)` of zero are
/// clamped to zero.
pub fn psd_sqrt(n: &CMatrix, tol: f64) -> Result<CMatrix, LinalgError> {
    check_hermitian(n, tol)?;
    let e = hermitian_eigen(n)?;
    let band = tol * n.norm_scale();
    if e.min() < -band {
        return Err(LinalgError::NotPsd { min_eigenvalue: e.min() });
    }
    Ok(e.reconstruct_with(|x| if x <= band { 0.0 } else { x.sqrt() }))
}

/// Greedy minimal-distance matching of two eigenvalue multisets. Returns the
/// largest matched distance, or infinity when the cardinalities differ.
pub fn spectra_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

pub fn spectra_match(a: &[C64], b: &[C64], tol: f64) -> bool {
    spectra_distance(a, b) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(r, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Roots of λ³ + a λ² + b λ + c by Cardano with complex arithmetic.
    fn cubic_roots(a: C64, b: C64, cc: C64) -> [C64; 3] {
        let p = b - a * a / 3.0;
        let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + cc;
        let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let mut u3 = -q / 2.0 + disc;
        if u3.norm() < 1e-14 {
            u3 = -q / 2.0 - disc;
        }
        let u = u3.powf(1.0 / 3.0);
        let w = c(-0.5, 3f64.sqrt() / 2.0);
        let mut out = [c(0.0, 0.0); 3];
        let mut uk = u;
        for slot in out.iter_mut() {
            let v = if uk.norm() == 0.0 { c(0.0, 0.0) } else { -p / (uk * 3.0) };
            *slot = uk + v - a / 3.0;
            uk *= w;
        }
        out
    }

    #[test]
    fn identity_and_rotation_spectra() {
        let s = eigenvalues(&CMatrix::identity(2)).unwrap();
        assert!(spectra_match(&s.values, &[c(1.0, 0.0), c(1.0, 0.0)], 1e-14));
        let r = CMatrix::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let s = eigenvalues(&r).unwrap();
        assert!(spectra_match(&s.values, &[I, -I], 1e-14));
    }

    #[test]
    fn random_3x3_matches_cubic_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random(&mut rng, 3, 3);
            // det(λI − A) = λ³ − tr λ² + e2 λ − det
            let tr = m.trace();
            let e2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
                + m[(1, 1)] * m[(2, 2)]
                - m[(1, 2)] * m[(2, 1)];
            let det = determinant(&m).unwrap();
            let roots = cubic_roots(-tr, e2, -det);
            let s = eigenvalues(&m).unwrap();
            assert!(spectra_distance(&s.values, &roots) < 1e-9, "{:?} vs {:?}", s.values, roots);
            assert!(s.residuals.iter().all(|&r| r <= 1e-10 * 3.0));
        }
    }

    #[test]
    fn nonsquare_rejected() {
        assert!(matches!(eigenvalues(&CMatrix::zeros(2, 3)), Err(LinalgError::NonSquare { .. })));
    }

    #[test]
    fn negative_semidefinite_examples() {
        assert!(is_negative_semidefinite(&CMatrix::identity(4).scale_re(-1.0), 1e-9).unwrap());
        let d = CMatrix::diag(&[c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(is_negative_semidefinite(&d, 1e-9).unwrap());
        let h = CMatrix::from_real(&[&[-1.0, 2.0], &[2.0, -1.0]]);
        assert!(!is_negative_semidefinite(&h, 1e-9).unwrap());
        let skew = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(is_negative_semidefinite(&skew, 1e-9), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&CMatrix::zeros(3, 3), 1e-10), 0);
        assert_eq!(rank(&CMatrix::identity(5), 1e-10), 5);
        let u = CMatrix::column_vector(&[c(1.0, 2.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let v = CMatrix::column_vector(&[c(-1.0, 0.5), c(2.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(rank(&(&u * &v.adjoint()), 1e-10), 1);
    }

    #[test]
    fn psd_sqrt_examples() {
        let g = psd_sqrt(&CMatrix::identity(3).scale_re(4.0), 1e-9).unwrap();
        assert!((&g - &CMatrix::identity(3).scale_re(2.0)).norm_fro() < 1e-14);
        assert_eq!(psd_sqrt(&CMatrix::zeros(2, 2), 1e-9).unwrap().norm_fro(), 0.0);
        let neg = CMatrix::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(psd_sqrt(&neg, 1e-9), Err(LinalgError::NotPsd { .. })));
    }

    #[test]
    fn spectra_matching_is_order_free() {
        let a = [c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0)];
        let b = [c(0.0, 1.0), c(1.0, 1e-12), c(0.0, 1.0)];
        assert!(spectra_match(&a, &b, 1e-11));
        assert!(!spectra_match(&a, &b[..2], 1.0));
    }
}
