//! Coherent feedback controller synthesis: closed-loop assembly, the LMI test
//! and the pole-placement search.

mod algebra;
mod corollary;
mod nelder_mead;
mod placement;
mod search;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::matrixkit::{CMatrix, LinalgError};
use crate::passive_model::{ChannelLabel, ModelError, PassiveSystem, Port};

pub use algebra::{
    assemble_closed_loop, closed_loop_matrices, complete_g3, controller_ac, hat_check, lemma1_spectral_split,
    lmi_block, lmi_feasible, lmi_r, plant_blocks, LmiVerdict, PlantBlocks,
};
pub use corollary::{corollary1_synthesize, corollary2_synthesize, evaluate_gains, GainEvaluation};
pub use nelder_mead::{minimize, Minimum};
pub use placement::{place_feedback, pole_place_injection};
pub use search::{synthesize_dfs, Place, SynthesisOptions, SynthesisResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{which} is not unitary (defect {defect:.3e})")]
    NotUnitary { which: &'static str, defect: f64 },
    #[error("{what} is not physically realizable (residual {residual:.3e})")]
    NotRealizable { what: &'static str, residual: f64 },
    #[error("pair is not controllable")]
    Uncontrollable,
    #[error("expected {expected} target poles, got {got}")]
    TargetCountMismatch { expected: usize, got: usize },
    #[error("placed poles miss their targets by {error:.3e}")]
    PlacementInaccurate { error: f64 },
    #[error("structurally impossible: {0}")]
    StructurallyImpossible(String),
    #[error("search exhausted after {iterations} iterations (best LMI witness {best_witness:.6e})")]
    SearchExhausted { best_witness: f64, best_gains: Box<(CMatrix, CMatrix)>, iterations: usize },
    #[error("equality constraint violated (residual {residual:.3e})")]
    EqualityViolated { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Unitary `S` (plant output and controller environment to controller
/// inputs) and `W` (controller outputs to plant feedback input).
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringPair {
    s: CMatrix,
    w: CMatrix,
    n_y: usize,
    n_u: usize,
}

fn unitarity_defect(m: &CMatrix) -> f64 {
    (&(&m.adjoint() * m) - &CMatrix::identity(m.cols())).norm_fro()
}

impl ScatteringPair {
    /// `n_y` is the width of the plant output `y` (the `S11` block), `n_u` the
    /// width of the plant feedback input `u` (rows of `W11`).
    pub fn new(s: CMatrix, w: CMatrix, n_y: usize, n_u: usize, tol: f64) -> Result<Self, SynthesisError> {
        if !s.is_square() || !w.is_square() || s.rows() != w.rows() {
            return Err(SynthesisError::DimensionMismatch(format!(
                "S is {}x{} and W is {}x{}; both must be square of equal size",
                s.rows(),
                s.cols(),
                w.rows(),
                w.cols()
            )));
        }
        let p = s.rows();
        if n_y > p || n_u > p {
            return Err(SynthesisError::DimensionMismatch(format!("partition ({n_y}, {n_u}) exceeds size {p}")));
        }
        let ds = unitarity_defect(&s);
        if ds > tol * s.norm_scale() {
            return Err(SynthesisError::NotUnitary { which: "S", defect: ds });
        }
        let dw = unitarity_defect(&w);
        if dw > tol * w.norm_scale() {
            return Err(SynthesisError::NotUnitary { which: "W", defect: dw });
        }
        Ok(Self { s, w, n_y, n_u })
    }

    /// `S = I`, `W = [[0, I], [I, 0]]`.
    pub fn observer(n_y: usize, n_u: usize) -> Self {
        let p = n_y + n_u;
        let mut w = CMatrix::zeros(p, p);
        w.set_block(0, n_y, &CMatrix::identity(n_u));
        w.set_block(n_u, 0, &CMatrix::identity(n_y));
        Self { s: CMatrix::identity(p), w, n_y, n_u }
    }

    /// `S = I`, `W = I`; needs `n_u = n_y`.
    pub fn yamamoto(n_y: usize) -> Self {
        let p = 2 * n_y;
        Self { s: CMatrix::identity(p), w: CMatrix::identity(p), n_y, n_u: n_y }
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn size(&self) -> usize {
        self.s.rows()
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    /// Width of the controller environment `z` (and of `z'`).
    pub fn n_z(&self) -> usize {
        self.size() - self.n_y
    }

    pub fn s11(&self) -> CMatrix {
        self.s.block(0, 0, self.n_y, self.n_y)
    }

    pub fn s12(&self) -> CMatrix {
        self.s.block(0, self.n_y, self.n_y, self.n_z())
    }

    pub fn s21(&self) -> CMatrix {
        self.s.block(self.n_y, 0, self.n_z(), self.n_y)
    }

    pub fn s22(&self) -> CMatrix {
        self.s.block(self.n_y, self.n_y, self.n_z(), self.n_z())
    }

    pub fn w11(&self) -> CMatrix {
        self.w.block(0, 0, self.n_u, self.n_y)
    }

    pub fn w12(&self) -> CMatrix {
        self.w.block(0, self.n_y, self.n_u, self.n_z())
    }

    pub fn w21(&self) -> CMatrix {
        self.w.block(self.n_u, 0, self.size() - self.n_u, self.n_y)
    }

    pub fn w22(&self) -> CMatrix {
        self.w.block(self.n_u, self.n_y, self.size() - self.n_u, self.n_z())
    }

    /// `[S11; S21]`.
    pub fn sigma(&self) -> CMatrix {
        self.s.block(0, 0, self.size(), self.n_y)
    }

    /// `[W11 W12]`.
    pub fn omega(&self) -> CMatrix {
        self.w.block(0, 0, self.n_u, self.size())
    }

    pub fn unitarity_defects(&self) -> (f64, f64) {
        (unitarity_defect(&self.s), unitarity_defect(&self.w))
    }
}

/// Controller matrices; `A_c + A_c† + G1G1† + G2G2† + G3G3† = 0` when realizable.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub g1: CMatrix,
    pub g2: CMatrix,
    pub g3: CMatrix,
    pub a_c: CMatrix,
}

impl ControllerGains {
    pub fn realizability_residual(&self) -> f64 {
        let r = &(&(&self.a_c + &self.a_c.adjoint()) + &self.g1.gram()) + &(&self.g2.gram() + &self.g3.gram());
        r.norm_fro() / self.a_c.norm_scale()
    }

    /// Controller as a passive system with inputs `y'`, `z'`, `v`.
    pub fn as_passive_system(&self) -> Result<PassiveSystem, SynthesisError> {
        Ok(PassiveSystem::new(
            self.a_c.clone(),
            vec![
                Port { label: ChannelLabel::YPrime, b: self.g1.clone(), c: Some(-&self.g1.adjoint()) },
                Port { label: ChannelLabel::ZPrime, b: self.g2.clone(), c: Some(-&self.g2.adjoint()) },
                Port { label: ChannelLabel::V, b: self.g3.clone(), c: Some(-&self.g3.adjoint()) },
            ],
        )?)
    }
}

/// Interconnected plant and controller driven by `w`, `z` and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a_cl: CMatrix,
    pub b_cl: CMatrix,
    pub n_plant: usize,
    pub n_ctrl: usize,
    pub n_w: usize,
    pub n_z: usize,
    pub n_v: usize,
}

impl ClosedLoop {
    pub fn n(&self) -> usize {
        self.n_plant + self.n_ctrl
    }

    pub fn realizability_residual(&self) -> f64 {
        (&(&self.a_cl + &self.a_cl.adjoint()) + &self.b_cl.gram()).norm_fro() / self.a_cl.norm_scale()
    }

    /// The loop as a passive system, with `C = −B†` on every external channel.
    pub fn as_passive_system(&self) -> Result<PassiveSystem, SynthesisError> {
        let n = self.n();
        let mut ports = Vec::new();
        let mut col = 0;
        for (label, width) in [(ChannelLabel::W, self.n_w), (ChannelLabel::Z, self.n_z), (ChannelLabel::V, self.n_v)] {
            let b = self.b_cl.block(0, col, n, width);
            col += width;
            ports.push(Port { label, c: Some(-&b.adjoint()), b });
        }
        Ok(PassiveSystem::new(self.a_cl.clone(), ports)?)
    }
}
