use super::{ClosedLoop, ControllerGains, ScatteringPair, SynthesisError};
use crate::matrixkit::{eigenvalues, hermitian_eigen, psd_sqrt, spectra_distance, CMatrix, LinalgError};
use crate::passive_model::{check_realizability, ChannelLabel, PassiveSystem};

/// Plant matrices with the static channels `w` and `f` merged into `B1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantBlocks {
    pub a: CMatrix,
    pub b1: CMatrix,
    pub b2: CMatrix,
}

pub fn plant_blocks(plant: &PassiveSystem) -> Result<PlantBlocks, SynthesisError> {
    for p in plant.ports() {
        if !matches!(p.label, ChannelLabel::W | ChannelLabel::U | ChannelLabel::F) {
            return Err(SynthesisError::DimensionMismatch(format!("plant channel {} is not one of w, u, f", p.label)));
        }
    }
    let n = plant.n();
    let bw = plant.b(ChannelLabel::W);
    let bf = plant.b(ChannelLabel::F);
    Ok(PlantBlocks { a: plant.a().clone(), b1: CMatrix::hstack(n, &[&bw, &bf]), b2: plant.b(ChannelLabel::U) })
}

struct Terms {
    pb: PlantBlocks,
    /// `B2 (W11 S11 + W12 S21) B1†`
    cross: CMatrix,
    /// `(G1 S11 + G2 S21) B1†`
    inject: CMatrix,
    /// `B2 (W11 G1† + W12 G2†)`
    feedback: CMatrix,
}

fn check_gain_shapes(pb: &PlantBlocks, sw: &ScatteringPair, g1: &CMatrix, g2: &CMatrix) -> Result<(), SynthesisError> {
    let n = pb.a.rows();
    if pb.b1.cols() != sw.n_y() || pb.b2.cols() != sw.n_u() {
        return Err(SynthesisError::DimensionMismatch(format!(
            "plant has {} static and {} feedback inputs; topology expects {} and {}",
            pb.b1.cols(),
            pb.b2.cols(),
            sw.n_y(),
            sw.n_u()
        )));
    }
    if g1.shape() != (n, sw.n_y()) {
        return Err(SynthesisError::DimensionMismatch(format!("G1 is {:?}, expected {:?}", g1.shape(), (n, sw.n_y()))));
    }
    if g2.shape() != (n, sw.n_z()) {
        return Err(SynthesisError::DimensionMismatch(format!("G2 is {:?}, expected {:?}", g2.shape(), (n, sw.n_z()))));
    }
    Ok(())
}

fn terms(plant: &PassiveSystem, sw: &ScatteringPair, g1: &CMatrix, g2: &CMatrix) -> Result<Terms, SynthesisError> {
    let pb = plant_blocks(plant)?;
    check_gain_shapes(&pb, sw, g1, g2)?;
    let x = &(&sw.w11() * &sw.s11()) + &(&sw.w12() * &sw.s21());
    let b1h = pb.b1.adjoint();
    let cross = &(&pb.b2 * &x) * &b1h;
    let gs = &(g1 * &sw.s11()) + &(g2 * &sw.s21());
    let inject = &gs * &b1h;
    let wg = &(&sw.w11() * &g1.adjoint()) + &(&sw.w12() * &g2.adjoint());
    let feedback = &pb.b2 * &wg;
    Ok(Terms { pb, cross, inject, feedback })
}

/// `A_c = A_p − B2 X B1† + (G1S11 + G2S21)B1† − B2(W11G1† + W12G2†)`, `X = W11S11 + W12S21`.
pub fn controller_ac(
    plant: &PassiveSystem,
    sw: &ScatteringPair,
    g1: &CMatrix,
    g2: &CMatrix,
) -> Result<CMatrix, SynthesisError> {
    let t = terms(plant, sw, g1, g2)?;
    Ok(&(&(&t.pb.a - &t.cross) + &t.inject) - &t.feedback)
}

/// `(Â, Ǎ)`.
pub fn hat_check(
    plant: &PassiveSystem,
    sw: &ScatteringPair,
    g1: &CMatrix,
    g2: &CMatrix,
) -> Result<(CMatrix, CMatrix), SynthesisError> {
    let t = terms(plant, sw, g1, g2)?;
    let base = &t.pb.a - &t.cross;
    Ok((&base - &t.feedback, &base + &t.inject))
}

pub fn lmi_r(
    plant: &PassiveSystem,
    sw: &ScatteringPair,
    g1: &CMatrix,
    g2: &CMatrix,
) -> Result<CMatrix, SynthesisError> {
    let t = terms(plant, sw, g1, g2)?;
    let herm = |m: &CMatrix| m + &m.adjoint();
    let r = &(&(&(-&t.pb.b1.gram()) - &t.pb.b2.gram()) - &herm(&t.cross)) + &(&herm(&t.inject) - &herm(&t.feedback));
    Ok(r.hermitian_part())
}

/// `[[R, G1, G2], [G1†, −I, 0], [G2†, 0, −I]]`.
pub fn lmi_block(r: &CMatrix, g1: &CMatrix, g2: &CMatrix) -> CMatrix {
    let n = r.rows();
    let (k1, k2) = (g1.cols(), g2.cols());
    let mut m = CMatrix::zeros(n + k1 + k2, n + k1 + k2);
    m.set_block(0, 0, r);
    m.set_block(0, n, g1);
    m.set_block(0, n + k1, g2);
    m.set_block(n, 0, &g1.adjoint());
    m.set_block(n + k1, 0, &g2.adjoint());
    m.set_block(n, n, &CMatrix::identity(k1).scale_re(-1.0));
    m.set_block(n + k1, n + k1, &CMatrix::identity(k2).scale_re(-1.0));
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmiVerdict {
    pub feasible: bool,
    /// Largest eigenvalue of `R + G1G1† + G2G2†`.
    pub witness: f64,
}

fn schur_form(r: &CMatrix, g1: &CMatrix, g2: &CMatrix, tol: f64) -> Result<CMatrix, SynthesisError> {
    let asym = r.hermitian_defect();
    if asym > tol * r.norm_scale() {
        return Err(LinalgError::NotHermitian { asymmetry: asym }.into());
    }
    if g1.rows() != r.rows() || g2.rows() != r.rows() || !r.is_square() {
        return Err(SynthesisError::DimensionMismatch(format!(
            "R is {:?}, G1 is {:?}, G2 is {:?}",
            r.shape(),
            g1.shape(),
            g2.shape()
        )));
    }
    Ok(&(&r.hermitian_part() + &g1.gram()) + &g2.gram())
}

pub fn lmi_feasible(r: &CMatrix, g1: &CMatrix, g2: &CMatrix, tol: f64) -> Result<LmiVerdict, SynthesisError> {
    let n = schur_form(r, g1, g2, tol)?;
    let witness = hermitian_eigen(&n)?.max();
    let witness = if witness.is_finite() { witness } else { 0.0 };
    Ok(LmiVerdict { feasible: witness <= tol * n.norm_scale(), witness })
}

/// `G3` with `R + G1G1† + G2G2† + G3G3† = 0`.
pub fn complete_g3(r: &CMatrix, g1: &CMatrix, g2: &CMatrix, tol: f64) -> Result<CMatrix, SynthesisError> {
    let n = schur_form(r, g1, g2, tol)?;
    Ok(psd_sqrt(&-&n, tol)?)
}

/// `A_cl`, `B_cl` without any realizability checks.
pub fn closed_loop_matrices(
    plant: &PassiveSystem,
    gains: &ControllerGains,
    sw: &ScatteringPair,
) -> Result<ClosedLoop, SynthesisError> {
    let t = terms(plant, sw, &gains.g1, &gains.g2)?;
    let n = plant.n();
    let nc = gains.a_c.rows();
    if gains.a_c.shape() != (n, n) || gains.g3.rows() != nc {
        return Err(SynthesisError::DimensionMismatch(format!(
            "controller A_c is {:?} and G3 is {:?}; plant has {n} modes",
            gains.a_c.shape(),
            gains.g3.shape()
        )));
    }
    let (g1, g2) = (&gains.g1, &gains.g2);
    let x = &(&sw.w11() * &sw.s11()) + &(&sw.w12() * &sw.s21());
    let gs = &(g1 * &sw.s11()) + &(g2 * &sw.s21());
    let a_cl = CMatrix::block2(&(&t.pb.a - &t.cross), &-&t.feedback, &-&t.inject, &gains.a_c);
    let (nw, nz, nv) = (sw.n_y(), sw.n_z(), gains.g3.cols());
    let mut b_cl = CMatrix::zeros(n + nc, nw + nz + nv);
    b_cl.set_block(0, 0, &(&t.pb.b1 + &(&t.pb.b2 * &x)));
    let wz = &(&sw.w11() * &sw.s12()) + &(&sw.w12() * &sw.s22());
    b_cl.set_block(0, nw, &(&t.pb.b2 * &wz));
    b_cl.set_block(n, 0, &gs);
    b_cl.set_block(n, nw, &(&(g1 * &sw.s12()) + &(g2 * &sw.s22())));
    b_cl.set_block(n, nw + nz, &gains.g3);
    Ok(ClosedLoop { a_cl, b_cl, n_plant: n, n_ctrl: nc, n_w: nw, n_z: nz, n_v: nv })
}

/// Closed loop of a realizable plant and controller; the result is checked for
/// realizability as well.
pub fn assemble_closed_loop(
    plant: &PassiveSystem,
    gains: &ControllerGains,
    sw: &ScatteringPair,
    tol: f64,
) -> Result<ClosedLoop, SynthesisError> {
    let rep = check_realizability(plant, tol);
    if rep.residual > tol {
        return Err(SynthesisError::NotRealizable { what: "plant", residual: rep.residual });
    }
    let rc = gains.realizability_residual();
    if rc > tol {
        return Err(SynthesisError::NotRealizable { what: "controller", residual: rc });
    }
    let (ds, dw) = sw.unitarity_defects();
    if ds > tol * sw.s().norm_scale() {
        return Err(SynthesisError::NotUnitary { which: "S", defect: ds });
    }
    if dw > tol * sw.w().norm_scale() {
        return Err(SynthesisError::NotUnitary { which: "W", defect: dw });
    }
    let cl = closed_loop_matrices(plant, gains, sw)?;
    let res = cl.realizability_residual();
    if res > tol {
        return Err(SynthesisError::NotRealizable { what: "closed loop", residual: res });
    }
    Ok(cl)
}

/// Whether `spec(A_cl) = spec(Â) ⊎ spec(Ǎ)` within `tol·max(1, ‖A_cl‖_F)`.
pub fn lemma1_spectral_split(closed: &ClosedLoop, hat_a: &CMatrix, check_a: &CMatrix, tol: f64) -> bool {
    let (Ok(cl), Ok(h), Ok(c)) = (eigenvalues(&closed.a_cl), eigenvalues(hat_a), eigenvalues(check_a)) else {
        return false;
    };
    let mut split = h.values;
    split.extend(c.values);
    spectra_distance(&cl.values, &split) <= tol * closed.a_cl.norm_scale()
}
