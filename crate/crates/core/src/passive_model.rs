//! Annihilation-only passive systems in Hamiltonian and state-space form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::matrixkit::{hermitian_eigen, is_negative_semidefinite, CMatrix, LinalgError, C64, I};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { what: String, asymmetry: f64 },
    #[error("channel {0} declared twice")]
    DuplicateChannel(ChannelLabel),
    #[error("system is not physically realizable (residual {residual:.3e})")]
    NotRealizable { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Field channel names. Declaration order in files does not matter; blocks are
/// always kept in the order below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelLabel {
    W,
    U,
    F,
    Z,
    YPrime,
    ZPrime,
    V,
}

impl ChannelLabel {
    pub const ALL: [ChannelLabel; 7] = [
        ChannelLabel::W,
        ChannelLabel::U,
        ChannelLabel::F,
        ChannelLabel::Z,
        ChannelLabel::YPrime,
        ChannelLabel::ZPrime,
        ChannelLabel::V,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelLabel::W => "w",
            ChannelLabel::U => "u",
            ChannelLabel::F => "f",
            ChannelLabel::Z => "z",
            ChannelLabel::YPrime => "y'",
            ChannelLabel::ZPrime => "z'",
            ChannelLabel::V => "v",
        }
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "w" => Ok(ChannelLabel::W),
            "u" => Ok(ChannelLabel::U),
            "f" => Ok(ChannelLabel::F),
            "z" => Ok(ChannelLabel::Z),
            "y'" | "y\u{2032}" => Ok(ChannelLabel::YPrime),
            "z'" | "z\u{2032}" => Ok(ChannelLabel::ZPrime),
            "v" => Ok(ChannelLabel::V),
            other => Err(format!("unknown channel label {other:?}")),
        }
    }
}

/// Hamiltonian matrix `M` and coupling matrices `α_i` (`L_i = α_i a`).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianCoupling {
    m: CMatrix,
    couplings: Vec<(ChannelLabel, CMatrix)>,
}

impl HamiltonianCoupling {
    pub fn new(m: CMatrix, couplings: Vec<(ChannelLabel, CMatrix)>, tol: f64) -> Result<Self, ModelError> {
        if !m.is_square() {
            return Err(ModelError::DimensionMismatch(format!("M is {}x{}", m.rows(), m.cols())));
        }
        let asym = m.hermitian_defect();
        if asym > tol * m.norm_scale() {
            return Err(ModelError::NotHermitian { what: "M".into(), asymmetry: asym });
        }
        let n = m.rows();
        let mut couplings = couplings;
        couplings.sort_by_key(|(l, _)| *l);
        for w in couplings.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ModelError::DuplicateChannel(w[0].0));
            }
        }
        for (l, alpha) in &couplings {
            if alpha.cols() != n {
                return Err(ModelError::DimensionMismatch(format!(
                    "coupling {l} has {} columns, expected {n}",
                    alpha.cols()
                )));
            }
        }
        Ok(Self { m: m.hermitian_part(), couplings })
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }

    pub fn couplings(&self) -> &[(ChannelLabel, CMatrix)] {
        &self.couplings
    }

    pub fn coupling(&self, label: ChannelLabel) -> Option<&CMatrix> {
        self.couplings.iter().find(|(l, _)| *l == label).map(|(_, a)| a)
    }
}

/// One input channel: `B_i` and, when the channel produces an output, `C_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub label: ChannelLabel,
    pub b: CMatrix,
    pub c: Option<CMatrix>,
}

/// `da = A a dt + Σ B_i dw_i`, `dy_i = C_i a dt + dw_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveSystem {
    a: CMatrix,
    ports: Vec<Port>,
    provenance: Option<HamiltonianCoupling>,
}

impl PassiveSystem {
    pub fn new(a: CMatrix, ports: Vec<Port>) -> Result<Self, ModelError> {
        if !a.is_square() {
            return Err(ModelError::DimensionMismatch(format!("A is {}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut ports = ports;
        ports.sort_by_key(|p| p.label);
        for w in ports.windows(2) {
            if w[0].label == w[1].label {
                return Err(ModelError::DuplicateChannel(w[0].label));
            }
        }
        for p in &ports {
            if p.b.rows() != n {
                return Err(ModelError::DimensionMismatch(format!(
                    "B[{}] has {} rows, expected {n}",
                    p.label,
                    p.b.rows()
                )));
            }
            if let Some(c) = &p.c {
                if c.cols() != n || c.rows() != p.b.cols() {
                    return Err(ModelError::DimensionMismatch(format!(
                        "C[{}] is {}x{}, expected {}x{n}",
                        p.label,
                        c.rows(),
                        c.cols(),
                        p.b.cols()
                    )));
                }
            }
        }
        Ok(Self { a, ports, provenance: None })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn ports(&self) -> &[Port] {
        &self.ports
    }

    pub fn port(&self, label: ChannelLabel) -> Option<&Port> {
        self.ports.iter().find(|p| p.label == label)
    }

    /// `B_i` for a channel, or an empty `n×0` block when absent.
    pub fn b(&self, label: ChannelLabel) -> CMatrix {
        self.port(label).map_or_else(|| CMatrix::zeros(self.n(), 0), |p| p.b.clone())
    }

    pub fn provenance(&self) -> Option<&HamiltonianCoupling> {
        self.provenance.as_ref()
    }

    /// All `B_i` side by side, in channel order.
    pub fn b_aggregate(&self) -> CMatrix {
        let parts: Vec<&CMatrix> = self.ports.iter().map(|p| &p.b).collect();
        CMatrix::hstack(self.n(), &parts)
    }

    /// Output matrices stacked, in channel order; channels without output are skipped.
    pub fn c_aggregate(&self) -> CMatrix {
        let parts: Vec<&CMatrix> = self.ports.iter().filter_map(|p| p.c.as_ref()).collect();
        CMatrix::vstack(self.n(), &parts)
    }

    /// `Σ B_i B_i†`.
    pub fn bb_sum(&self) -> CMatrix {
        self.ports.iter().fold(CMatrix::zeros(self.n(), self.n()), |acc, p| &acc + &p.b.gram())
    }
}

pub fn realize(hc: &HamiltonianCoupling) -> PassiveSystem {
    let n = hc.n();
    let mut a = hc.m().scale(-I);
    let mut ports = Vec::with_capacity(hc.couplings().len());
    for (label, alpha) in hc.couplings() {
        let g = &alpha.adjoint() * alpha;
        a = &a - &g.scale_re(0.5);
        ports.push(Port { label: *label, b: -&alpha.adjoint(), c: Some(alpha.clone()) });
    }
    debug_assert_eq!(a.rows(), n);
    PassiveSystem { a, ports, provenance: Some(hc.clone()) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizabilityReport {
    /// `‖A + A† + ΣB_iB_i†‖_F / max(1, ‖A‖_F)`.
    pub residual: f64,
    /// Largest `‖C_i + B_i†‖_F / max(1, ‖A‖_F)` over channels with outputs.
    pub output_residual: f64,
    pub ok: bool,
}

pub fn check_realizability(sys: &PassiveSystem, tol: f64) -> RealizabilityReport {
    let a = sys.a();
    let scale = a.norm_scale();
    let r = &(a + &a.adjoint()) + &sys.bb_sum();
    let residual = r.norm_fro() / scale;
    let output_residual = sys
        .ports()
        .iter()
        .filter_map(|p| p.c.as_ref().map(|c| (c + &p.b.adjoint()).norm_fro() / scale))
        .fold(0.0, f64::max);
    RealizabilityReport { residual, output_residual, ok: residual <= tol && output_residual <= tol }
}

pub fn recover_hamiltonian(sys: &PassiveSystem, tol: f64) -> Result<HamiltonianCoupling, ModelError> {
    let rep = check_realizability(sys, tol);
    if rep.residual > tol {
        return Err(ModelError::NotRealizable { residual: rep.residual });
    }
    let half = sys.bb_sum().scale_re(0.5);
    let m = (sys.a() + &half).scale(I);
    let couplings = sys.ports().iter().map(|p| (p.label, -&p.b.adjoint())).collect();
    HamiltonianCoupling::new(m, couplings, tol.max(1e-12))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassivityCertificate {
    pub p: CMatrix,
    pub c0: CMatrix,
    pub d0: CMatrix,
    pub verdict: bool,
    pub witness_eigenvalue: f64,
}

/// Positive-real block test `[[PA + A†P, PB − C0†], [B†P − C0, −(D0 + D0†)]] ≤ 0`
/// with `B` the aggregate input matrix.
pub fn check_passivity(
    sys: &PassiveSystem,
    p: &CMatrix,
    c0: &CMatrix,
    d0: &CMatrix,
    tol: f64,
) -> Result<PassivityCertificate, ModelError> {
    let n = sys.n();
    let b = sys.b_aggregate();
    let m = b.cols();
    if p.shape() != (n, n) {
        return Err(ModelError::DimensionMismatch(format!("P is {}x{}, expected {n}x{n}", p.rows(), p.cols())));
    }
    if c0.shape() != (m, n) {
        return Err(ModelError::DimensionMismatch(format!("C0 is {}x{}, expected {m}x{n}", c0.rows(), c0.cols())));
    }
    if d0.shape() != (m, m) {
        return Err(ModelError::DimensionMismatch(format!("D0 is {}x{}, expected {m}x{m}", d0.rows(), d0.cols())));
    }
    let asym = p.hermitian_defect();
    if asym > tol * p.norm_scale() {
        return Err(ModelError::NotHermitian { what: "P".into(), asymmetry: asym });
    }
    let a = sys.a();
    let top_left = &(p * a) + &(&a.adjoint() * p);
    let top_right = &(p * &b) - &c0.adjoint();
    let bottom = -&(d0 + &d0.adjoint());
    let block = CMatrix::block2(&top_left, &top_right, &top_right.adjoint(), &bottom).hermitian_part();
    let witness = hermitian_eigen(&block)?.max();
    let verdict = is_negative_semidefinite(&block, tol)?;
    Ok(PassivityCertificate {
        p: p.clone(),
        c0: c0.clone(),
        d0: d0.clone(),
        verdict,
        witness_eigenvalue: if witness.is_finite() { witness } else { 0.0 },
    })
}

/// Convenience: scalar `√κ` as a 1×1 matrix.
pub fn sqrt_rate(kappa: f64) -> CMatrix {
    CMatrix::scalar(C64::new(kappa.sqrt(), 0.0))
}
