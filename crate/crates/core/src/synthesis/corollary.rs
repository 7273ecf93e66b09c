//! Closed-form controller matrices for the observer (`S = I`, `W = swap`) and
//! direct (`S = W = I`, `G2 = 0`) topologies, plus the general evaluation they
//! are compared against.

use super::algebra::{complete_g3, controller_ac, hat_check, lmi_feasible, lmi_r, plant_blocks};
use super::{ScatteringPair, SynthesisError};
use crate::matrixkit::{psd_sqrt, CMatrix};
use crate::passive_model::PassiveSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct GainEvaluation {
    pub a_c: CMatrix,
    pub hat_a: CMatrix,
    pub check_a: CMatrix,
    pub r: CMatrix,
    pub lmi_witness: f64,
    pub feasible: bool,
    /// Present when the LMI holds.
    pub g3: Option<CMatrix>,
}

fn herm(m: &CMatrix) -> CMatrix {
    m + &m.adjoint()
}

fn finish(
    a_c: CMatrix,
    hat_a: CMatrix,
    check_a: CMatrix,
    r: CMatrix,
    g1: &CMatrix,
    g2: &CMatrix,
    tol: f64,
) -> Result<GainEvaluation, SynthesisError> {
    let verdict = lmi_feasible(&r, g1, g2, tol)?;
    let g3 = if verdict.feasible { Some(complete_g3(&r, g1, g2, tol)?) } else { None };
    Ok(GainEvaluation { a_c, hat_a, check_a, r, lmi_witness: verdict.witness, feasible: verdict.feasible, g3 })
}

/// Evaluates given gains for an arbitrary scattering pair.
pub fn evaluate_gains(
    plant: &PassiveSystem,
    sw: &ScatteringPair,
    g1: &CMatrix,
    g2: &CMatrix,
    tol: f64,
) -> Result<GainEvaluation, SynthesisError> {
    let a_c = controller_ac(plant, sw, g1, g2)?;
    let (hat_a, check_a) = hat_check(plant, sw, g1, g2)?;
    let r = lmi_r(plant, sw, g1, g2)?;
    finish(a_c, hat_a, check_a, r, g1, g2, tol)
}

fn check_shape(name: &str, g: &CMatrix, shape: (usize, usize)) -> Result<(), SynthesisError> {
    if g.shape() != shape {
        return Err(SynthesisError::DimensionMismatch(format!("{name} is {:?}, expected {:?}", g.shape(), shape)));
    }
    Ok(())
}

/// Observer topology: `Â = A_p − B2G2†`, `Ǎ = A_p + G1B1†`.
pub fn corollary1_synthesize(
    plant: &PassiveSystem,
    g1: &CMatrix,
    g2: &CMatrix,
    tol: f64,
) -> Result<GainEvaluation, SynthesisError> {
    let pb = plant_blocks(plant)?;
    let n = plant.n();
    check_shape("G1", g1, (n, pb.b1.cols()))?;
    check_shape("G2", g2, (n, pb.b2.cols()))?;
    let inject = g1 * &pb.b1.adjoint();
    let feedback = &pb.b2 * &g2.adjoint();
    let hat_a = &pb.a - &feedback;
    let check_a = &pb.a + &inject;
    let a_c = &check_a - &feedback;
    let r = (&(&(-&pb.b1.gram()) - &pb.b2.gram()) + &(&herm(&inject) - &herm(&feedback))).hermitian_part();
    finish(a_c, hat_a, check_a, r, g1, g2, tol)
}

/// Direct topology with `G2 = 0`; the LMI must hold with equality, so `G3 = 0`.
pub fn corollary2_synthesize(plant: &PassiveSystem, g1: &CMatrix, tol: f64) -> Result<GainEvaluation, SynthesisError> {
    let pb = plant_blocks(plant)?;
    let n = plant.n();
    let k = pb.b1.cols();
    if pb.b2.cols() != k {
        return Err(SynthesisError::DimensionMismatch(format!("B1 has {k} columns but B2 has {}", pb.b2.cols())));
    }
    check_shape("G1", g1, (n, k))?;
    let cross = &pb.b2 * &pb.b1.adjoint();
    let inject = g1 * &pb.b1.adjoint();
    let feedback = &pb.b2 * &g1.adjoint();
    let base = &pb.a - &cross;
    let hat_a = &base - &feedback;
    let check_a = &base + &inject;
    let a_c = &check_a - &feedback;
    let r = (&(&(&(-&pb.b1.gram()) - &pb.b2.gram()) - &herm(&cross)) + &(&herm(&inject) - &herm(&feedback)))
        .hermitian_part();
    let eq = &r + &g1.gram();
    let residual = eq.norm_fro();
    if residual > tol * eq.norm_scale().max(r.norm_scale()) {
        return Err(SynthesisError::EqualityViolated { residual });
    }
    let g2 = CMatrix::zeros(n, k);
    let verdict = lmi_feasible(&r, g1, &g2, tol)?;
    let g3 = psd_sqrt(&CMatrix::zeros(n, n), tol)?;
    Ok(GainEvaluation { a_c, hat_a, check_a, r, lmi_witness: verdict.witness, feasible: true, g3: Some(g3) })
}
