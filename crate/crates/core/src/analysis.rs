//! Controllability, Kalman decomposition and decoherence-free mode detection.

use thiserror::Error;

use crate::matrixkit::{column_space, eigenvalues, orthogonal_complement, CMatrix, LinalgError, C64, I};
use crate::passive_model::{check_realizability, PassiveSystem};

/// Default relative tolerance for imaginary-axis classification.
pub const ANALYSIS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("dimension mismatch: A is {a:?}, other operand is {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("singular value {value:.3e} lies within a factor 10 of the rank threshold {threshold:.3e}")]
    ToleranceAmbiguous { value: f64, threshold: f64 },
    #[error("spectral count {spectral} disagrees with subspace dimension {geometric}")]
    Inconsistent { spectral: usize, geometric: usize },
    #[error("system is not physically realizable (residual {residual:.3e})")]
    NotRealizable { residual: f64 },
    #[error("M is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Orthonormal basis of the Krylov space spanned by `B, AB, A²B, …`.
#[derive(Debug, Clone)]
pub struct KrylovSpace {
    pub basis: CMatrix,
    /// Singular value closest (in ratio) to the threshold, if any was within a factor 10.
    pub ambiguous: Option<(f64, f64)>,
}

pub fn controllable_subspace(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<KrylovSpace, AnalysisError> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(AnalysisError::DimensionMismatch { a: a.shape(), b: b.shape() });
    }
    let n = a.rows();
    let threshold = tol * a.norm_scale().max(b.norm_fro());
    let mut ambiguous: Option<(f64, f64)> = None;
    let mut note = |values: &[f64]| {
        for &s in values {
            if s > threshold / 10.0 && s < threshold * 10.0 && ambiguous.is_none() {
                ambiguous = Some((s, threshold));
            }
        }
    };
    let first = column_space(b, threshold);
    note(&first.singular_values);
    let mut basis = first.basis;
    let mut fresh = basis.clone();
    while basis.cols() < n && fresh.cols() > 0 {
        let mut w = a * &fresh;
        for _ in 0..2 {
            let proj = &basis * &(&basis.adjoint() * &w);
            w = &w - &proj;
        }
        let cs = column_space(&w, threshold);
        note(&cs.singular_values);
        if cs.basis.cols() == 0 {
            break;
        }
        let mut new_dirs = cs.basis;
        // tighten orthogonality against the accumulated basis
        let proj = &basis * &(&basis.adjoint() * &new_dirs);
        new_dirs = column_space(&(&new_dirs - &proj), 0.5).basis;
        let take = new_dirs.cols().min(n - basis.cols());
        let new_dirs = new_dirs.select_columns(&(0..take).collect::<Vec<_>>());
        basis = CMatrix::hstack(n, &[&basis, &new_dirs]);
        fresh = new_dirs;
    }
    Ok(KrylovSpace { basis, ambiguous })
}

pub fn controllable(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, AnalysisError> {
    Ok(controllable_subspace(a, b, tol)?.basis.cols() == a.rows())
}

pub fn observable(a: &CMatrix, c: &CMatrix, tol: f64) -> Result<bool, AnalysisError> {
    if c.cols() != a.rows() {
        return Err(AnalysisError::DimensionMismatch { a: a.shape(), b: c.shape() });
    }
    controllable(&a.adjoint(), &c.adjoint(), tol)
}

/// `T = [V_c V_d]` with `V_c` spanning the controllable subspace; blocks of `T†AT`.
#[derive(Debug, Clone)]
pub struct KalmanDecomposition {
    pub t: CMatrix,
    pub a11: CMatrix,
    pub a12: CMatrix,
    pub a21: CMatrix,
    pub a22: CMatrix,
    pub b1: CMatrix,
    pub b2: CMatrix,
    pub c1: CMatrix,
    pub c2: CMatrix,
    pub df_dimension: usize,
}

impl KalmanDecomposition {
    pub fn controllable_dimension(&self) -> usize {
        self.t.cols() - self.df_dimension
    }

    /// Columns of `T` spanning the decoupled subspace.
    pub fn df_basis(&self) -> CMatrix {
        let r = self.controllable_dimension();
        self.t.block(0, r, self.t.rows(), self.df_dimension)
    }
}

fn require_realizable(sys: &PassiveSystem, tol: f64) -> Result<(), AnalysisError> {
    let rep = check_realizability(sys, tol);
    if rep.residual > tol {
        return Err(AnalysisError::NotRealizable { residual: rep.residual });
    }
    Ok(())
}

pub fn kalman_decompose(sys: &PassiveSystem, tol: f64) -> Result<KalmanDecomposition, AnalysisError> {
    require_realizable(sys, tol)?;
    let a = sys.a();
    let b = sys.b_aggregate();
    let c = sys.c_aggregate();
    let n = sys.n();
    let ks = controllable_subspace(a, &b, tol)?;
    if let Some((value, threshold)) = ks.ambiguous {
        return Err(AnalysisError::ToleranceAmbiguous { value, threshold });
    }
    let vc = ks.basis;
    let r = vc.cols();
    let vd = orthogonal_complement(&vc);
    let t = CMatrix::hstack(n, &[&vc, &vd]);
    let at = &(&t.adjoint() * a) * &t;
    let bt = &t.adjoint() * &b;
    let ct = &c * &t;
    let d = n - r;
    Ok(KalmanDecomposition {
        a11: at.block(0, 0, r, r),
        a12: at.block(0, r, r, d),
        a21: at.block(r, 0, d, r),
        a22: at.block(r, r, d, d),
        b1: bt.block(0, 0, r, bt.cols()),
        b2: bt.block(r, 0, d, bt.cols()),
        c1: ct.block(0, 0, ct.rows(), r),
        c2: ct.block(0, r, ct.rows(), d),
        t,
        df_dimension: d,
    })
}

#[derive(Debug, Clone)]
pub struct DfsReport {
    pub df_dimension: usize,
    pub df_eigenvalues: Vec<C64>,
    pub stable_eigenvalues: Vec<C64>,
    pub basis: CMatrix,
    pub spectral_count: usize,
    pub geometric_count: usize,
    pub consistency: bool,
    pub tol_used: f64,
}

/// Splits a spectrum into imaginary-axis and strictly stable parts; anything
/// to the right of the band is returned third.
pub fn partition_spectrum(values: &[C64], band: f64) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let mut axis = Vec::new();
    let mut stable = Vec::new();
    let mut unstable = Vec::new();
    for &z in values {
        if z.re.abs() <= band {
            axis.push(z);
        } else if z.re < 0.0 {
            stable.push(z);
        } else {
            unstable.push(z);
        }
    }
    (axis, stable, unstable)
}

pub fn dfs_report(sys: &PassiveSystem, tol: f64) -> Result<DfsReport, AnalysisError> {
    let kd = kalman_decompose(sys, tol)?;
    let spec = eigenvalues(sys.a())?;
    let band = tol * sys.a().norm_scale();
    let (axis, stable, unstable) = partition_spectrum(&spec.values, band);
    let spectral = axis.len();
    let geometric = kd.df_dimension;
    if spectral != geometric || !unstable.is_empty() {
        return Err(AnalysisError::Inconsistent { spectral, geometric });
    }
    Ok(DfsReport {
        df_dimension: geometric,
        df_eigenvalues: axis,
        stable_eigenvalues: stable,
        basis: kd.df_basis(),
        spectral_count: spectral,
        geometric_count: geometric,
        consistency: true,
        tol_used: tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoGoVerdict {
    /// `(−iM, B1)` controllable.
    pub controllable_check: bool,
    pub hurwitz: bool,
    /// False when the no-go result applies; true (with `undetermined`) otherwise.
    pub dfs_possible: bool,
    pub undetermined: bool,
    pub max_real_part: f64,
}

fn check_m(m: &CMatrix, tol: f64) -> Result<(), AnalysisError> {
    if !m.is_square() {
        return Err(AnalysisError::DimensionMismatch { a: m.shape(), b: m.shape() });
    }
    let asym = m.hermitian_defect();
    if asym > tol * m.norm_scale() {
        return Err(AnalysisError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

fn open_loop_a(m: &CMatrix, bs: &[&CMatrix]) -> CMatrix {
    bs.iter().fold(m.scale(-I), |acc, b| &acc - &b.gram().scale_re(0.5))
}

pub fn open_loop_no_go(m: &CMatrix, b1: &CMatrix, b3: &CMatrix, tol: f64) -> Result<NoGoVerdict, AnalysisError> {
    check_m(m, tol)?;
    let n = m.rows();
    if b1.rows() != n || b3.rows() != n {
        return Err(AnalysisError::DimensionMismatch {
            a: m.shape(),
            b: if b1.rows() != n { b1.shape() } else { b3.shape() },
        });
    }
    let ctrl = controllable(&m.scale(-I), b1, tol)?;
    let ap = open_loop_a(m, &[b1, b3]);
    let max_re = eigenvalues(&ap)?.max_real();
    let hurwitz = max_re < -tol * ap.norm_scale();
    Ok(NoGoVerdict {
        controllable_check: ctrl,
        hurwitz,
        dfs_possible: !ctrl,
        undetermined: !ctrl,
        max_real_part: max_re,
    })
}

/// Dimension of the decoupled subspace of `(−iM, [B…])`.
pub fn geometric_df_dimension(m: &CMatrix, bs: &[&CMatrix], tol: f64) -> Result<usize, AnalysisError> {
    let n = m.rows();
    let b = CMatrix::hstack(n, bs);
    Ok(n - controllable_subspace(&m.scale(-I), &b, tol)?.basis.cols())
}

pub fn dfs_monotonicity_check(m: &CMatrix, b1: &CMatrix, b3: &CMatrix, tol: f64) -> Result<bool, AnalysisError> {
    check_m(m, tol)?;
    let both = geometric_df_dimension(m, &[b1, b3], tol)?;
    let only1 = geometric_df_dimension(m, &[b1], tol)?;
    let only3 = geometric_df_dimension(m, &[b3], tol)?;
    Ok(both <= only1.min(only3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::c;
    use crate::passive_model::{realize, ChannelLabel, HamiltonianCoupling};
    use crate::random;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn col(v: &[f64]) -> CMatrix {
        CMatrix::column_vector(&v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn controllability_examples() {
        let a = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(controllable(&a, &col(&[1.0, 1.0]), 1e-8).unwrap());
        assert!(!controllable(&a, &col(&[1.0, 0.0]), 1e-8).unwrap());
        assert!(!observable(&a, &CMatrix::zeros(1, 2), 1e-8).unwrap());
        assert!(matches!(controllable(&a, &col(&[1.0]), 1e-8), Err(AnalysisError::DimensionMismatch { .. })));
    }

    #[test]
    fn closed_system_is_fully_decoupled() {
        let m = CMatrix::from_real(&[&[1.0, 0.3], &[0.3, 2.0]]);
        let sys = realize(&HamiltonianCoupling::new(m.clone(), vec![], 1e-9).unwrap());
        let kd = kalman_decompose(&sys, 1e-8).unwrap();
        assert_eq!(kd.df_dimension, 2);
        assert!(crate::matrixkit::spectra_match(
            &eigenvalues(&kd.a22).unwrap().values,
            &eigenvalues(&m.scale(-I)).unwrap().values,
            1e-12
        ));
        let rep = dfs_report(&sys, 1e-8).unwrap();
        assert_eq!(rep.df_dimension, 2);
    }

    #[test]
    fn lossy_cavity_has_no_dfs() {
        let hc = HamiltonianCoupling::new(
            CMatrix::scalar(c(0.7, 0.0)),
            vec![(ChannelLabel::W, CMatrix::scalar(c(1.0, 0.0))), (ChannelLabel::U, CMatrix::scalar(c(1.2, 0.0)))],
            1e-9,
        )
        .unwrap();
        let rep = dfs_report(&realize(&hc), 1e-8).unwrap();
        assert_eq!(rep.df_dimension, 0);
        assert_eq!(rep.stable_eigenvalues.len(), 1);
    }

    #[test]
    fn no_go_scalar_example() {
        let v = open_loop_no_go(&CMatrix::zeros(1, 1), &col(&[-1.0]), &col(&[-2.0]), 1e-8).unwrap();
        assert!(v.controllable_check && v.hurwitz && !v.dfs_possible);
        assert!((v.max_real_part + 2.5).abs() < 1e-15);
    }

    #[test]
    fn no_go_undetermined_with_decoupled_mode() {
        let m = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let v = open_loop_no_go(&m, &col(&[1.0, 0.0]), &CMatrix::zeros(2, 1), 1e-8).unwrap();
        assert!(!v.controllable_check && v.dfs_possible && v.undetermined && !v.hurwitz);
        assert_eq!(geometric_df_dimension(&m, &[&col(&[1.0, 0.0])], 1e-8).unwrap(), 1);
    }

    #[test]
    fn monotonicity_decoupled_construction() {
        let m = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b1 = col(&[1.0, 0.0]);
        let b3 = col(&[0.0, 1.0]);
        assert_eq!(geometric_df_dimension(&m, &[&b1, &b3], 1e-8).unwrap(), 0);
        assert!(dfs_monotonicity_check(&m, &b1, &b3, 1e-8).unwrap());
        let zero = CMatrix::zeros(2, 1);
        assert_eq!(
            geometric_df_dimension(&m, &[&b1, &zero], 1e-8).unwrap(),
            geometric_df_dimension(&m, &[&b1], 1e-8).unwrap()
        );
    }

    #[test]
    fn ambiguous_threshold_reported() {
        let a = CMatrix::diag(&[c(0.0, 1.0), c(0.0, 2.0)]);
        let sys = crate::passive_model::PassiveSystem::new(
            &a - &CMatrix::diag(&[c(0.5, 0.0), c(0.5e-16, 0.0)]),
            vec![crate::passive_model::Port {
                label: ChannelLabel::W,
                b: col(&[-1.0, -1e-8]),
                c: Some(col(&[1.0, 1e-8]).adjoint()),
            }],
        )
        .unwrap();
        assert!(matches!(kalman_decompose(&sys, 1e-8), Err(AnalysisError::ToleranceAmbiguous { .. })));
    }

    fn random_passive(seed: u64) -> PassiveSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=2);
        let hc = HamiltonianCoupling::new(
            random::hermitian(&mut rng, n),
            vec![(ChannelLabel::W, random::matrix(&mut rng, k, n))],
            1e-9,
        )
        .unwrap();
        realize(&hc)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn passive_duality(seed in any::<u64>()) {
            let sys = random_passive(seed);
            let b = sys.b_aggregate();
            let c = sys.c_aggregate();
            prop_assert_eq!(controllable(sys.a(), &b, 1e-8).unwrap(), observable(sys.a(), &c, 1e-8).unwrap());
        }

        #[test]
        fn spectral_and_geometric_counts_agree(seed in any::<u64>()) {
            let sys = random_passive(seed);
            match dfs_report(&sys, 1e-8) {
                Ok(rep) => prop_assert!(rep.consistency),
                Err(AnalysisError::ToleranceAmbiguous { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn monotonicity_holds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=5);
            let m = random::hermitian(&mut rng, n);
            let b1 = if rng.gen_bool(0.5) { random::matrix(&mut rng, n, 1) } else { CMatrix::zeros(n, 1) };
            let k3 = rng.gen_range(0..=2);
            let b3 = random::matrix(&mut rng, n, k3);
            prop_assert!(dfs_monotonicity_check(&m, &b1, &b3, 1e-8).unwrap());
        }

        #[test]
        fn controllable_open_loop_is_hurwitz(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=6);
            let m = random::hermitian(&mut rng, n);
            let b1 = random::matrix(&mut rng, n, 1);
            let k3 = rng.gen_range(0..=2);
            let b3 = random::matrix(&mut rng, n, k3);
            let v = open_loop_no_go(&m, &b1, &b3, 1e-8).unwrap();
            if v.controllable_check {
                prop_assert!(v.hurwitz && !v.dfs_possible);
                prop_assert!(v.max_real_part < 0.0);
            }
        }
    }
}
