use std::fs;
use std::path::PathBuf;

use qdfs_core::analysis::{controllable, dfs_report, observable, AnalysisError, ANALYSIS_TOL};
use qdfs_core::matrixkit::{eigenvalues, vec_norm, CMatrix, C64};
use qdfs_core::moments::{evolve_covariance, evolve_mean};
use qdfs_core::netformat::{serialize_network, NetworkDescription};
use qdfs_core::passive_model::{check_realizability, PassiveSystem};
use qdfs_core::presets::{controller, Example1, Example2};
use qdfs_core::synthesis::{
    closed_loop_matrices, corollary1_synthesize, hat_check, lmi_feasible, lmi_r, synthesize_dfs, ClosedLoop, Place,
    ScatteringPair, SynthesisError, SynthesisOptions,
};
use qdfs_core::DEFAULT_TOL;
use serde_json::{json, Value};

use crate::report::{complex_list, matrix, number, RunReport};

/// `--tol` or `QDFS_TOL` when given; commands fall back to their own default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tolerance(pub Option<f64>);

impl Tolerance {
    pub fn lmi(self) -> f64 {
        self.0.unwrap_or(DEFAULT_TOL)
    }

    pub fn analysis(self) -> f64 {
        self.0.unwrap_or(ANALYSIS_TOL)
    }
}

fn echo(desc: &NetworkDescription) -> Value {
    serde_json::from_slice(&serialize_network(desc)).unwrap_or(Value::Null)
}

fn scattering(desc: &NetworkDescription, command: &str) -> Result<ScatteringPair, RunReport> {
    match desc.scattering_pair() {
        Ok(Some(sw)) => Ok(sw),
        Ok(None) => Err(RunReport::input_error(command, "the description has no topology")),
        Err(e) => Err(RunReport::input_error(command, e.to_string())),
    }
}

/// Closed loop when gains are present, without realizability checks.
fn closed_loop(desc: &NetworkDescription) -> Result<Option<ClosedLoop>, String> {
    let Some(gains) = &desc.gains else { return Ok(None) };
    let sw = desc.scattering_pair().map_err(|e| e.to_string())?.ok_or("gains need a topology")?;
    closed_loop_matrices(&desc.system(), gains, &sw).map(Some).map_err(|e| e.to_string())
}

fn subject(desc: &NetworkDescription) -> Result<(PassiveSystem, &'static str), String> {
    match closed_loop(desc)? {
        Some(cl) => Ok((cl.as_passive_system().map_err(|e| e.to_string())?, "closed_loop")),
        None => Ok((desc.system(), "plant")),
    }
}

pub fn cmd_check(desc: &NetworkDescription, tol: Tolerance) -> RunReport {
    let tol = tol.lmi();
    let mut r = RunReport::new("check");
    r.inputs = Some(echo(desc));
    let rep = check_realizability(&desc.system(), tol);
    r.value("plant_residual", rep.residual)
        .value("plant_output_residual", rep.output_residual)
        .check("plant_realizable", rep.ok);
    match desc.scattering_pair() {
        Ok(Some(sw)) => {
            let (ds, dw) = sw.unitarity_defects();
            r.value("s_unitarity_defect", ds).value("w_unitarity_defect", dw);
            r.check("scattering_unitary", ds <= tol * sw.s().norm_scale() && dw <= tol * sw.w().norm_scale());
        }
        Ok(None) => {}
        Err(e) => return RunReport::input_error("check", e.to_string()),
    }
    if let Some(gains) = &desc.gains {
        let res = gains.realizability_residual();
        r.value("controller_residual", res).check("controller_realizable", res <= tol);
        match closed_loop(desc) {
            Ok(Some(cl)) => {
                let res = cl.realizability_residual();
                r.value("closed_loop_residual", res).check("closed_loop_realizable", res <= tol);
            }
            Ok(None) => {}
            Err(e) => {
                r.fail("closed_loop_realizable", e);
            }
        }
    }
    r
}

pub fn cmd_analyze(desc: &NetworkDescription, tol: Tolerance) -> RunReport {
    let tol = tol.analysis();
    let mut r = RunReport::new("analyze");
    r.inputs = Some(echo(desc));
    let (sys, which) = match subject(desc) {
        Ok(s) => s,
        Err(e) => return RunReport::input_error("analyze", e),
    };
    r.detail("subject", json!(which));
    if let Ok(spec) = eigenvalues(sys.a()) {
        r.detail("eigenvalues", complex_list(&spec.values));
    }
    let b = sys.b_aggregate();
    let c = sys.c_aggregate();
    if let (Ok(ctrb), Ok(obsv)) = (controllable(sys.a(), &b, tol), observable(sys.a(), &c, tol)) {
        r.detail("controllable", json!(ctrb)).detail("observable", json!(obsv));
    }
    let rep = check_realizability(&sys, tol);
    r.value("realizability_residual", rep.residual).check("realizable", rep.ok);
    if !rep.ok {
        r.error = Some("decoherence-free analysis needs a realizable system".into());
        return r;
    }
    match dfs_report(&sys, tol) {
        Ok(d) => {
            r.value("df_dimension", d.df_dimension as f64)
                .value("spectral_count", d.spectral_count as f64)
                .value("geometric_count", d.geometric_count as f64)
                .check("consistent", d.consistency);
            r.detail("df_eigenvalues", complex_list(&d.df_eigenvalues))
                .detail("stable_eigenvalues", complex_list(&d.stable_eigenvalues))
                .detail("df_basis", matrix(&d.basis));
        }
        Err(AnalysisError::Inconsistent { spectral, geometric }) => {
            r.value("spectral_count", spectral as f64).value("geometric_count", geometric as f64);
            r.fail("consistent", "spectral and geometric counts disagree");
        }
        Err(e) => {
            r.fail("consistent", e.to_string());
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizeArgs {
    pub df_modes: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub place: Place,
    pub out: Option<PathBuf>,
}

impl Default for SynthesizeArgs {
    fn default() -> Self {
        let o = SynthesisOptions::default();
        Self { df_modes: 1, seed: o.seed, max_iters: o.max_iters, place: o.place, out: None }
    }
}

fn options(seed: u64, max_iters: usize, place: Place, tol: Tolerance) -> SynthesisOptions {
    SynthesisOptions { seed, max_iters, tol: tol.lmi(), analysis_tol: ANALYSIS_TOL, place }
}

pub fn cmd_synthesize(desc: &NetworkDescription, args: &SynthesizeArgs, tol: Tolerance) -> RunReport {
    let mut r = RunReport::new("synthesize");
    r.inputs = Some(echo(desc));
    let sw = match scattering(desc, "synthesize") {
        Ok(sw) => sw,
        Err(rep) => return rep,
    };
    let plant = desc.system();
    let rep = check_realizability(&plant, tol.lmi());
    r.value("plant_residual", rep.residual).check("plant_realizable", rep.ok);
    if !rep.ok {
        r.error = Some("synthesis needs a realizable plant".into());
        return r;
    }
    let opts = options(args.seed, args.max_iters, args.place, tol);
    r.detail("seed", json!(args.seed)).detail("target_df", json!(args.df_modes));
    match synthesize_dfs(&plant, &sw, args.df_modes, &opts) {
        Ok(res) => {
            let g = &res.gains;
            r.check("synthesized", true)
                .check("df_target_met", res.df_report.df_dimension >= args.df_modes)
                .value("df_dimension", res.df_report.df_dimension as f64)
                .value("lmi_witness", res.lmi_witness)
                .value("g1_norm_sq", g.g1.norm_fro().powi(2))
                .value("g2_norm_sq", g.g2.norm_fro().powi(2))
                .value("closed_loop_residual", res.closed.realizability_residual())
                .value("iterations", res.iterations as f64);
            r.detail("G1", matrix(&g.g1))
                .detail("G2", matrix(&g.g2))
                .detail("G3", matrix(&g.g3))
                .detail("A_c", matrix(&g.a_c))
                .detail("multiplicity_collision", json!(res.multiplicity_collision))
                .detail("df_eigenvalues", complex_list(&res.df_report.df_eigenvalues));
            if let Ok(s) = eigenvalues(&res.hat_a) {
                r.detail("hat_eigenvalues", complex_list(&s.values));
            }
            if let Ok(s) = eigenvalues(&res.check_a) {
                r.detail("check_eigenvalues", complex_list(&s.values));
            }
            if let Some(out) = &args.out {
                let mut d = desc.clone();
                d.gains = Some(res.gains.clone());
                if let Err(e) = fs::write(out, serialize_network(&d)) {
                    return RunReport::input_error("synthesize", format!("cannot write {}: {e}", out.display()));
                }
                r.artifacts.push(out.display().to_string());
            }
        }
        Err(SynthesisError::SearchExhausted { best_witness, best_gains, iterations }) => {
            let (g1, g2) = *best_gains;
            r.value("best_witness", best_witness)
                .value("g1_norm_sq", g1.norm_fro().powi(2))
                .value("g2_norm_sq", g2.norm_fro().powi(2))
                .value("iterations", iterations as f64);
            r.detail("best_G1", matrix(&g1)).detail("best_G2", matrix(&g2));
            r.fail("synthesized", format!("search exhausted; best LMI witness {best_witness:.6e}"));
        }
        Err(e @ SynthesisError::StructurallyImpossible(_)) => {
            r.fail("structurally_possible", e.to_string());
        }
        Err(e) => {
            r.fail("synthesized", e.to_string());
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    pub t_final: f64,
    pub dt: f64,
    pub x0: Option<Vec<C64>>,
    pub covariance: bool,
    pub out: Option<PathBuf>,
}

pub fn cmd_simulate(desc: &NetworkDescription, args: &SimulateArgs) -> RunReport {
    let mut r = RunReport::new("simulate");
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return RunReport::input_error("simulate", format!("--dt must be positive, got {}", args.dt));
    }
    if !(args.t_final >= 0.0 && args.t_final.is_finite()) {
        return RunReport::input_error("simulate", format!("--t-final must be non-negative, got {}", args.t_final));
    }
    r.inputs = Some(echo(desc));
    let (sys, which) = match subject(desc) {
        Ok(s) => s,
        Err(e) => return RunReport::input_error("simulate", e),
    };
    r.detail("subject", json!(which));
    let n = sys.n();
    let steps = (args.t_final / args.dt).round() as usize;
    r.value("steps", steps as f64);
    let traj = if args.covariance {
        evolve_covariance(sys.a(), &sys.b_aggregate(), &CMatrix::zeros(n, n), args.dt, steps)
    } else {
        let x0 = match &args.x0 {
            Some(x) if x.len() != n => {
                return RunReport::input_error(
                    "simulate",
                    format!("--x0 has {} entries, the system has {n} modes", x.len()),
                )
            }
            Some(x) => x.clone(),
            None => (0..n).map(|i| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
        };
        evolve_mean(sys.a(), &x0, args.dt, steps)
    };
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            r.fail("simulated", e.to_string());
            return r;
        }
    };
    r.check("simulated", true);
    if args.covariance {
        if let Some(p) = traj.covariances.as_ref().and_then(|c| c.last()) {
            r.value("final_trace", p.trace().re);
        }
    } else {
        let norms = traj.norms();
        let first = norms.first().copied().unwrap_or(0.0);
        let dev = norms.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
        r.value("norm_initial", first)
            .value("norm_final", norms.last().copied().unwrap_or(0.0))
            .value("max_norm_deviation", dev);
        if let Some(x) = traj.states.last() {
            r.detail("final_state", complex_list(x)).detail("final_norm_check", number(vec_norm(x)));
        }
    }
    if let Some(out) = &args.out {
        if let Err(e) = fs::write(out, traj.to_csv()) {
            return RunReport::input_error("simulate", format!("cannot write {}: {e}", out.display()));
        }
        r.artifacts.push(out.display().to_string());
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Args {
    pub kappa1: f64,
    pub kappa2: f64,
    pub m: f64,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for Example1Args {
    fn default() -> Self {
        let e = Example1::default();
        Self { kappa1: e.kappa1, kappa2: e.kappa2, m: e.m, seed: 0, max_iters: SynthesisOptions::default().max_iters }
    }
}

pub fn cmd_reproduce_example1(args: &Example1Args, tol: Tolerance) -> RunReport {
    let mut r = RunReport::new("reproduce example1");
    if !(args.kappa1 > 0.0
        && args.kappa2 > 0.0
        && args.kappa1.is_finite()
        && args.kappa2.is_finite()
        && args.m.is_finite())
    {
        return RunReport::input_error("reproduce example1", "rates must be positive and finite");
    }
    let ex = Example1 { kappa1: args.kappa1, kappa2: args.kappa2, m: args.m };
    r.inputs = Some(echo(&ex.description()));
    let plant = ex.plant();
    let formula = ex.kappa3();
    r.value("kappa3_formula", formula);
    let (g1, g2) = Example1::gains(formula, ex.kappa2);
    match corollary1_synthesize(&plant, &g1, &g2, tol.lmi()) {
        Ok(ev) => {
            r.value("stated_gains_witness", ev.lmi_witness);
            r.detail("stated_gains_check_a", complex_list(&[ev.check_a[(0, 0)]]));
        }
        Err(e) => {
            r.fail("stated_gains_evaluated", e.to_string());
        }
    }
    let sw = ScatteringPair::observer(1, 1);
    let opts = options(args.seed, args.max_iters, Place::Check, tol);
    let close = |k3: f64| (k3 - formula).abs() <= 1e-8 * formula.max(1.0);
    match synthesize_dfs(&plant, &sw, 1, &opts) {
        Ok(res) => {
            let k3 = res.gains.g1.norm_fro().powi(2);
            let k4 = res.gains.g2.norm_fro().powi(2);
            r.check("synthesized", true)
                .value("kappa3", k3)
                .value("kappa4", k4)
                .check("kappa3_matches_formula", close(k3))
                .value("lmi_witness", res.lmi_witness)
                .value("df_dimension", res.df_report.df_dimension as f64)
                .check("one_df_mode", res.df_report.df_dimension == 1);
            if let Ok(s) = eigenvalues(&res.closed.a_cl) {
                r.detail("closed_loop_eigenvalues", complex_list(&s.values));
            }
        }
        Err(SynthesisError::SearchExhausted { best_witness, best_gains, .. }) => {
            let k3 = best_gains.0.norm_fro().powi(2);
            r.value("kappa3", k3)
                .value("kappa4", best_gains.1.norm_fro().powi(2))
                .check("kappa3_matches_formula", close(k3))
                .value("best_witness", best_witness)
                .check("one_df_mode", false);
            r.fail("synthesized", format!("no feasible controller; best LMI witness {best_witness:.6e}"));
        }
        Err(e) => {
            r.fail("synthesized", e.to_string());
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Args {
    pub ratio: f64,
    pub m1: f64,
    pub m2: f64,
    pub sweep: bool,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for Example2Args {
    fn default() -> Self {
        let e = Example2::default();
        Self {
            ratio: e.ratio(),
            m1: e.m1,
            m2: e.m2,
            sweep: false,
            seed: 0,
            max_iters: SynthesisOptions::default().max_iters,
        }
    }
}

pub const EXAMPLE2_REFERENCE_BOUNDARY: f64 = 6.162_277_660_168_379;

pub fn cmd_reproduce_example2(args: &Example2Args, tol: Tolerance) -> RunReport {
    let mut r = RunReport::new("reproduce example2");
    if !(args.ratio > 0.0 && args.ratio.is_finite() && args.m1.is_finite() && args.m2.is_finite()) {
        return RunReport::input_error("reproduce example2", "ratio must be positive and finite");
    }
    let mut ex = Example2::with_ratio(args.ratio);
    ex.m1 = args.m1;
    ex.m2 = args.m2;
    r.inputs = Some(echo(&ex.description()));
    let sw = ScatteringPair::observer(1, 1);
    let literal = ex.literal_plant();
    let lit = check_realizability(&literal, tol.lmi());
    r.value("literal_plant_residual", lit.residual).check("literal_plant_realizable", lit.ok);
    let (g1, g2) = ex.gains();
    if let Ok(rm) = lmi_r(&literal, &sw, &g1, &g2) {
        let [_, ga2, ga3, ga4] = ex.gamma;
        let shown = CMatrix::from_rows(&[
            vec![C64::new(-ga4.norm_sqr(), 0.0), ga2 * ga3.conj() * 2.0],
            vec![ga2.conj() * ga3 * 2.0, C64::new(-ga3.norm_sqr(), 0.0)],
        ]);
        r.value("r_display_deviation", (&rm - &shown).norm_fro());
        r.detail("R", matrix(&rm));
        if let Ok(v) = lmi_feasible(&rm, &g1, &g2, tol.lmi()) {
            r.value("lmi_witness", v.witness).check("lmi_feasible", v.feasible);
        }
    }
    if let Ok((hat, check)) = hat_check(&literal, &sw, &g1, &g2) {
        let band = ANALYSIS_TOL * literal.a().norm_scale();
        let axis =
            |m: &CMatrix| eigenvalues(m).map(|s| s.values.iter().filter(|z| z.re.abs() <= band).count()).unwrap_or(0);
        r.value("hat_axis_eigenvalues", axis(&hat) as f64).value("check_axis_eigenvalues", axis(&check) as f64);
    }
    match controller(&literal, &sw, &g1, &g2, tol.lmi()).and_then(|k| closed_loop_matrices(&literal, &k, &sw)) {
        Ok(cl) => {
            let res = cl.realizability_residual();
            r.value("literal_closed_loop_residual", res).check("literal_closed_loop_realizable", res <= tol.lmi());
        }
        Err(e) => {
            r.fail("literal_closed_loop_realizable", e.to_string());
        }
    }
    let plant = ex.realizable_plant();
    let opts = options(args.seed, args.max_iters, Place::Check, tol);
    match synthesize_dfs(&plant, &sw, 1, &opts) {
        Ok(res) => {
            r.check("realizable_plant_dfs", true)
                .value("realizable_plant_df_dimension", res.df_report.df_dimension as f64);
        }
        Err(SynthesisError::SearchExhausted { best_witness, .. }) => {
            r.value("realizable_plant_best_witness", best_witness);
            r.fail(
                "realizable_plant_dfs",
                format!("no feasible controller for the realizable plant; best witness {best_witness:.6e}"),
            );
        }
        Err(e) => {
            r.fail("realizable_plant_dfs", e.to_string());
        }
    }
    if args.sweep {
        match ex.feasibility_boundary(4.0, 12.0, 1e-9) {
            Ok(b) => {
                r.value("boundary", b)
                    .value("boundary_reference", EXAMPLE2_REFERENCE_BOUNDARY)
                    .check("boundary_matches_reference", (b - EXAMPLE2_REFERENCE_BOUNDARY).abs() <= 1e-6);
            }
            Err(e) => {
                r.fail("boundary_matches_reference", e.to_string());
            }
        }
    }
    r
}
