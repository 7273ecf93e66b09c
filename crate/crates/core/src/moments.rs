//! Mean and covariance dynamics under vacuum inputs, and a time-domain check
//! that decoherence-free modes are neither driven nor observed.

use std::fmt::Write as _;

use thiserror::Error;

use crate::analysis::{dfs_report, kalman_decompose, AnalysisError, ANALYSIS_TOL};
use crate::matrixkit::{expm, hermitian_eigen, vec_norm, CMatrix, LinalgError, C64};
use crate::passive_model::{check_realizability, PassiveSystem};
use crate::synthesis::{ClosedLoop, SynthesisError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentsError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("initial covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("system has no decoherence-free modes")]
    NoDfsFound,
    #[error("system is not physically realizable (residual {residual:.3e})")]
    NotRealizable { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

/// Uniformly sampled trajectory starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub covariances: Option<Vec<CMatrix>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|x| vec_norm(x)).collect()
    }

    /// `t, re(x_1), im(x_1), ...` for mean trajectories; covariance
    /// trajectories list `P_ij` entries row by row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        let covs = self.covariances.as_ref().filter(|_| self.states.iter().all(|s| s.is_empty()));
        if let Some(covs) = covs {
            let n = covs.first().map_or(0, |p| p.rows());
            for i in 1..=n {
                for j in 1..=n {
                    let _ = write!(out, ", re(P_{i}_{j}), im(P_{i}_{j})");
                }
            }
            out.push('\n');
            for (t, p) in self.times.iter().zip(covs) {
                let _ = write!(out, "{t:.16e}");
                for z in p.as_slice() {
                    let _ = write!(out, ", {:.16e}, {:.16e}", z.re, z.im);
                }
                out.push('\n');
            }
            return out;
        }
        let n = self.states.first().map_or(0, |x| x.len());
        for i in 1..=n {
            let _ = write!(out, ", re(x_{i}), im(x_{i})");
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for z in x {
                let _ = write!(out, ", {:.16e}, {:.16e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }
}

fn check_step(dt: f64) -> Result<(), MomentsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(MomentsError::InvalidStep(dt));
    }
    Ok(())
}

fn times(dt: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| k as f64 * dt).collect()
}

/// `x_{k+1} = e^{A dt} x_k`.
pub fn evolve_mean(a: &CMatrix, x0: &[C64], dt: f64, steps: usize) -> Result<Trajectory, MomentsError> {
    check_step(dt)?;
    if !a.is_square() || a.rows() != x0.len() {
        return Err(MomentsError::DimensionMismatch(format!("A is {:?}, x0 has {} entries", a.shape(), x0.len())));
    }
    let phi = expm(&a.scale_re(dt))?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for k in 0..steps {
        let next = phi.apply(&states[k]);
        states.push(next);
    }
    Ok(Trajectory { times: times(dt, steps), states, covariances: None })
}

/// Exact discretization of `dP/dt = AP + PA† + BB†` from the exponential of
/// `[[−A, BB†], [0, A†]] dt`.
pub fn evolve_covariance(
    a: &CMatrix,
    b: &CMatrix,
    p0: &CMatrix,
    dt: f64,
    steps: usize,
) -> Result<Trajectory, MomentsError> {
    check_step(dt)?;
    let n = a.rows();
    if !a.is_square() || b.rows() != n || p0.shape() != (n, n) {
        return Err(MomentsError::DimensionMismatch(format!(
            "A is {:?}, B is {:?}, P0 is {:?}",
            a.shape(),
            b.shape(),
            p0.shape()
        )));
    }
    let scale = p0.norm_scale();
    if p0.hermitian_defect() > 1e-9 * scale {
        return Err(LinalgError::NotHermitian { asymmetry: p0.hermitian_defect() }.into());
    }
    let min = if n == 0 { 0.0 } else { hermitian_eigen(&p0.hermitian_part())?.min() };
    if min < -1e-9 * scale {
        return Err(MomentsError::NotPsd { min_eigenvalue: min });
    }
    let q = b.gram();
    let aug = CMatrix::block2(&-a, &q, &CMatrix::zeros(n, n), &a.adjoint()).scale_re(dt);
    let f = expm(&aug)?;
    let phi = f.block(n, n, n, n).adjoint();
    let qd = (&phi * &f.block(0, n, n, n)).hermitian_part();
    let mut covs = Vec::with_capacity(steps + 1);
    covs.push(p0.hermitian_part());
    for k in 0..steps {
        let next = (&(&(&phi * &covs[k]) * &phi.adjoint()) + &qd).hermitian_part();
        covs.push(next);
    }
    Ok(Trajectory { times: times(dt, steps), states: vec![Vec::new(); steps + 1], covariances: Some(covs) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicVerdict {
    pub decoupled: bool,
    pub max_input_leak: f64,
    pub max_output_leak: f64,
    pub df_dimension: usize,
}

/// In the Kalman basis, measures how strongly the decoupled coordinates are
/// driven (rows of `B̃`, also through `e^{Ãt}` over the horizon) and how
/// strongly they reach the outputs (columns of `C̃Ã^k` for `k ≤ 2n`, with `Ã`
/// normalized, and of
/// `C̃e^{Ãt}`).
pub fn dfs_dynamic_verify_system(sys: &PassiveSystem, tol: f64, horizon: f64) -> Result<DynamicVerdict, MomentsError> {
    let rep = check_realizability(sys, ANALYSIS_TOL);
    if !rep.ok {
        return Err(MomentsError::NotRealizable { residual: rep.residual.max(rep.output_residual) });
    }
    let report = dfs_report(sys, ANALYSIS_TOL)?;
    if report.df_dimension == 0 {
        return Err(MomentsError::NoDfsFound);
    }
    let kd = kalman_decompose(sys, ANALYSIS_TOL)?;
    let n = sys.n();
    let r = kd.controllable_dimension();
    let d = kd.df_dimension;
    let t = &kd.t;
    let at = &(&t.adjoint() * sys.a()) * t;
    let bt = &t.adjoint() * &sys.b_aggregate();
    let ct = &sys.c_aggregate() * t;
    let df_rows = |m: &CMatrix| m.block(r, 0, d, m.cols()).norm_fro();
    let df_cols = |m: &CMatrix| m.block(0, r, m.rows(), d).norm_fro();
    let mut input = df_rows(&bt);
    let mut output = 0.0f64;
    // powers of Ã/‖Ã‖ keep the Markov parameters on a common scale
    let step = at.scale_re(1.0 / at.norm_scale());
    let mut power = CMatrix::identity(n);
    for _ in 0..=2 * n {
        input = input.max(df_rows(&(&power * &bt)));
        output = output.max(df_cols(&(&ct * &power)));
        power = &power * &step;
    }
    if horizon > 0.0 && horizon.is_finite() {
        const SAMPLES: usize = 16;
        for k in 1..=SAMPLES {
            let e = expm(&at.scale_re(horizon * k as f64 / SAMPLES as f64))?;
            input = input.max(df_rows(&(&e * &bt)));
            output = output.max(df_cols(&(&ct * &e)));
        }
    }
    let limit = tol * bt.norm_fro().max(1.0);
    Ok(DynamicVerdict {
        decoupled: input <= limit && output <= limit,
        max_input_leak: input,
        max_output_leak: output,
        df_dimension: d,
    })
}

pub fn dfs_dynamic_verify(closed: &ClosedLoop, tol: f64, horizon: f64) -> Result<DynamicVerdict, MomentsError> {
    let res = closed.realizability_residual();
    if res > ANALYSIS_TOL {
        return Err(MomentsError::NotRealizable { residual: res });
    }
    dfs_dynamic_verify_system(&closed.as_passive_system()?, tol, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{c, solve_lyapunov, I};
    use crate::passive_model::{realize, sqrt_rate, ChannelLabel, HamiltonianCoupling};
    use crate::presets::{controller, Example1};
    use crate::random;
    use crate::synthesis::{assemble_closed_loop, ScatteringPair};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example1_loop(k: f64, m: f64) -> ClosedLoop {
        let ex = Example1 { kappa1: k, kappa2: k, m };
        let (g1, g2) = Example1::gains(k, k);
        let sw = ScatteringPair::observer(1, 1);
        let gains = controller(&ex.plant(), &sw, &g1, &g2, 1e-9).unwrap();
        assemble_closed_loop(&ex.plant(), &gains, &sw, 1e-9).unwrap()
    }

    #[test]
    fn zero_drift_is_constant() {
        let tr = evolve_mean(&CMatrix::zeros(2, 2), &[c(1.0, 2.0), c(-0.5, 0.0)], 0.1, 10).unwrap();
        assert!(tr.states.iter().all(|x| x == &tr.states[0]));
        assert_eq!(tr.len(), 11);
    }

    #[test]
    fn rotation_keeps_norm_and_advances_phase() {
        let w = 1.7;
        let tr = evolve_mean(&CMatrix::scalar(c(0.0, -w)), &[c(1.0, 0.0)], 0.05, 200).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            assert!((x[0].norm() - 1.0).abs() < 1e-9);
            assert!((x[0] - (-I * w * *t).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn example1_df_mode_rotates_and_rest_decays() {
        let (k, m) = (1.0, 0.4);
        let cl = example1_loop(k, m);
        let x0 = [c(1.0, 0.0), c(-1.0, 0.0)];
        let tr = evolve_mean(&cl.a_cl, &x0, 0.01, 500).unwrap();
        let s = 0.5f64.sqrt();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let along = (x[0] - x[1]) * s;
            let across = (x[0] + x[1]) * s;
            assert!((along.norm() - 2f64.sqrt()).abs() < 1e-9, "{t}");
            assert!(across.norm() < 1e-9);
        }
        let y0 = [c(1.0, 0.0), c(1.0, 0.0)];
        let tr = evolve_mean(&cl.a_cl, &y0, 0.01, 100).unwrap();
        let last = tr.states.last().unwrap();
        let expect = 2f64.sqrt() * (-2.0 * k * 1.0f64).exp();
        assert!(((last[0] + last[1]).norm() * s - expect).abs() < 1e-9);
    }

    #[test]
    fn damped_cavity_covariance_closed_form() {
        let a = CMatrix::identity(2).scale_re(-1.0);
        let b = CMatrix::identity(2).scale_re(2f64.sqrt());
        let tr = evolve_covariance(&a, &b, &CMatrix::zeros(2, 2), 0.1, 30).unwrap();
        for (t, p) in tr.times.iter().zip(tr.covariances.as_ref().unwrap()) {
            let expect = CMatrix::identity(2).scale_re(1.0 - (-2.0 * t).exp());
            assert!((p - &expect).norm_fro() < 1e-12);
        }
    }

    #[test]
    fn closed_dynamics_preserve_trace_and_steady_state_matches_lyapunov() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random::hermitian(&mut rng, 3);
        let a = h.scale(-I);
        let x = random::matrix(&mut rng, 3, 3);
        let p0 = x.gram();
        let tr = evolve_covariance(&a, &CMatrix::zeros(3, 0), &p0, 0.2, 50).unwrap();
        for p in tr.covariances.as_ref().unwrap() {
            assert!((p.trace() - p0.trace()).norm() < 1e-10);
        }
        let a = random::stable(&mut rng, 3);
        let b = random::matrix(&mut rng, 3, 2);
        let tr = evolve_covariance(&a, &b, &CMatrix::zeros(3, 3), 0.5, 400).unwrap();
        let lyap = solve_lyapunov(&a, &b.gram()).unwrap();
        assert!((tr.covariances.unwrap().last().unwrap() - &lyap).norm_fro() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = CMatrix::scalar(c(-1.0, 0.0));
        assert!(matches!(evolve_mean(&a, &[c(1.0, 0.0)], 0.0, 3), Err(MomentsError::InvalidStep(_))));
        assert!(matches!(
            evolve_covariance(&a, &a, &CMatrix::scalar(c(-1.0, 0.0)), 0.1, 3),
            Err(MomentsError::NotPsd { .. })
        ));
    }

    #[test]
    fn example1_loop_is_dynamically_decoupled() {
        let v = dfs_dynamic_verify(&example1_loop(1.0, 0.3), 1e-9, 50.0).unwrap();
        assert!(v.decoupled);
        assert!(v.max_input_leak <= 1e-9 && v.max_output_leak <= 1e-9, "{v:?}");
        assert_eq!(v.df_dimension, 1);
    }

    #[test]
    fn lossy_cavity_has_no_dfs() {
        let sys = realize(
            &HamiltonianCoupling::new(CMatrix::scalar(c(0.2, 0.0)), vec![(ChannelLabel::W, sqrt_rate(1.0))], 1e-9)
                .unwrap(),
        );
        assert!(matches!(dfs_dynamic_verify_system(&sys, 1e-9, 10.0), Err(MomentsError::NoDfsFound)));
    }

    #[test]
    fn csv_layout() {
        let tr = evolve_mean(&CMatrix::zeros(1, 1), &[c(0.5, -0.25)], 0.5, 1).unwrap();
        let csv = tr.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t, re(x_1), im(x_1)");
        assert_eq!(lines[2], "5.0000000000000000e-1, 5.0000000000000000e-1, -2.5000000000000000e-1");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn covariance_stays_psd(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random::stable(&mut rng, 3);
            let b = random::matrix(&mut rng, 3, 2);
            let p0 = random::matrix(&mut rng, 3, 3).gram();
            let tr = evolve_covariance(&a, &b, &p0, 0.1, 20).unwrap();
            for p in tr.covariances.unwrap() {
                prop_assert!(hermitian_eigen(&p).unwrap().min() >= -1e-10 * p.norm_scale());
            }
        }
    }
}
