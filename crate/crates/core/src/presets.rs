//! Built-in worked examples: a single lossy cavity under observer feedback,
//! and a two-cavity plant whose decoupled mode is shared with the controller.

use crate::matrixkit::{CMatrix, C64, I};
use crate::netformat::{NetworkDescription, PlantSpec, Topology};
use crate::passive_model::{realize, sqrt_rate, ChannelLabel, HamiltonianCoupling, PassiveSystem, Port};
use crate::synthesis::{
    complete_g3, controller_ac, lmi_feasible, lmi_r, ControllerGains, ScatteringPair, SynthesisError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1 {
    pub kappa1: f64,
    pub kappa2: f64,
    pub m: f64,
}

impl Default for Example1 {
    fn default() -> Self {
        Self { kappa1: 1.0, kappa2: 1.0, m: 1.0 }
    }
}

impl Example1 {
    pub fn coupling(&self) -> HamiltonianCoupling {
        HamiltonianCoupling::new(
            CMatrix::scalar(C64::new(self.m, 0.0)),
            vec![(ChannelLabel::W, sqrt_rate(self.kappa1)), (ChannelLabel::U, sqrt_rate(self.kappa2))],
            1e-9,
        )
        .expect("scalar Hamiltonian")
    }

    pub fn plant(&self) -> PassiveSystem {
        realize(&self.coupling())
    }

    /// Controller rate placing the `Ǎ` pole on the axis.
    pub fn kappa3(&self) -> f64 {
        (self.kappa1 + self.kappa2).powi(2) / (4.0 * self.kappa1)
    }

    /// `G1 = −√κ3`, `G2 = −√κ4`.
    pub fn gains(kappa3: f64, kappa4: f64) -> (CMatrix, CMatrix) {
        (CMatrix::scalar(C64::new(-kappa3.sqrt(), 0.0)), CMatrix::scalar(C64::new(-kappa4.sqrt(), 0.0)))
    }

    pub fn description(&self) -> NetworkDescription {
        let mut d = NetworkDescription::new(PlantSpec::Hamiltonian(self.coupling()));
        d.name = Some("example1".into());
        d.topology = Some(Topology::Observer);
        d
    }
}

/// Two cavities; `γ_j = √κ_j` may be complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2 {
    pub gamma: [C64; 4],
    pub m1: f64,
    pub m2: f64,
}

impl Default for Example2 {
    fn default() -> Self {
        Self::with_ratio(8.0)
    }
}

impl Example2 {
    /// `γ1 = −1`, `γ2 = γ3 = 1`, `|γ4|² = r`.
    pub fn with_ratio(r: f64) -> Self {
        Self {
            gamma: [C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(r.sqrt(), 0.0)],
            m1: 1.0,
            m2: 0.5,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.gamma[3].norm_sqr() / self.gamma[1].norm_sqr()
    }

    pub fn b1(&self) -> CMatrix {
        let [g1, g2, g3, _] = self.gamma;
        CMatrix::from_rows(&[vec![-(g1 + g2)], vec![-g3]])
    }

    pub fn b2(&self) -> CMatrix {
        CMatrix::from_rows(&[vec![-self.gamma[3]], vec![C64::new(0.0, 0.0)]])
    }

    /// Drift matrix as printed for this example, without the `u` damping term.
    pub fn literal_a(&self) -> CMatrix {
        let [g1, g2, g3, _] = self.gamma;
        let a11 = -(I * self.m1 + (g1.norm_sqr() + g2.norm_sqr()) / 2.0 + g1.conj() * g2);
        let a22 = -(I * self.m2 + g3.norm_sqr() / 2.0);
        CMatrix::from_rows(&[vec![a11, -g2 * g3.conj()], vec![-g1.conj() * g3, a22]])
    }

    fn ports(&self) -> Vec<Port> {
        let (b1, b2) = (self.b1(), self.b2());
        vec![
            Port { label: ChannelLabel::W, c: Some(-&b1.adjoint()), b: b1 },
            Port { label: ChannelLabel::U, c: Some(-&b2.adjoint()), b: b2 },
        ]
    }

    /// Plant with the literal drift; fails the realizability identity by `|γ4|²`.
    pub fn literal_plant(&self) -> PassiveSystem {
        PassiveSystem::new(self.literal_a(), self.ports()).expect("2x2 blocks")
    }

    /// Hamiltonian form with the same `M` and couplings; its drift carries
    /// the extra `−|γ4|²/2`.
    pub fn coupling(&self) -> HamiltonianCoupling {
        let m = (&self.literal_a() + &self.b1().gram().scale_re(0.5)).scale(I);
        HamiltonianCoupling::new(
            m,
            vec![(ChannelLabel::W, -&self.b1().adjoint()), (ChannelLabel::U, -&self.b2().adjoint())],
            1e-9,
        )
        .expect("Hermitian by construction")
    }

    pub fn realizable_plant(&self) -> PassiveSystem {
        realize(&self.coupling())
    }

    /// `G1 = [g1; 0]`, `G2 = [0; g2]` with `g1 = −γ2`, `g2 = γ2*γ3/γ4*`.
    pub fn gains(&self) -> (CMatrix, CMatrix) {
        let [_, g2, g3, g4] = self.gamma;
        let zero = C64::new(0.0, 0.0);
        (
            CMatrix::from_rows(&[vec![-g2], vec![zero]]),
            CMatrix::from_rows(&[vec![zero], vec![g2.conj() * g3 / g4.conj()]]),
        )
    }

    pub fn literal_description(&self) -> NetworkDescription {
        let mut d = NetworkDescription::new(PlantSpec::Raw(self.literal_plant()));
        d.name = Some("example2-literal".into());
        d.topology = Some(Topology::Observer);
        d
    }

    pub fn description(&self) -> NetworkDescription {
        let mut d = NetworkDescription::new(PlantSpec::Hamiltonian(self.coupling()));
        d.name = Some("example2".into());
        d.topology = Some(Topology::Observer);
        d
    }
}

impl Example2 {
    /// LMI witness of the stated gains on the literal drift.
    pub fn lmi_witness(&self) -> Result<f64, SynthesisError> {
        let (g1, g2) = self.gains();
        let r = lmi_r(&self.literal_plant(), &ScatteringPair::observer(1, 1), &g1, &g2)?;
        Ok(lmi_feasible(&r, &g1, &g2, f64::INFINITY)?.witness)
    }

    /// Bisects `|γ4|²/|γ2|²` in `[lo, hi]` for the point where the witness
    /// changes sign, keeping `γ4`'s phase; `lo` must be infeasible and `hi`
    /// feasible.
    pub fn feasibility_boundary(&self, lo: f64, hi: f64, width: f64) -> Result<f64, SynthesisError> {
        let at = |r: f64| -> Result<f64, SynthesisError> {
            let mut ex = *self;
            let phase =
                if self.gamma[3].norm() > 0.0 { self.gamma[3] / self.gamma[3].norm() } else { C64::new(1.0, 0.0) };
            ex.gamma[3] = phase * (r * self.gamma[1].norm_sqr()).sqrt();
            ex.lmi_witness()
        };
        let (mut lo, mut hi) = (lo, hi);
        if at(lo)? <= 0.0 || at(hi)? > 0.0 {
            return Err(SynthesisError::DimensionMismatch(format!(
                "[{lo}, {hi}] does not bracket the feasibility boundary"
            )));
        }
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if at(mid)? <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Full controller for given `G1`, `G2`: `A_c` from the plant and `G3` from
/// the LMI completion.
pub fn controller(
    plant: &PassiveSystem,
    sw: &ScatteringPair,
    g1: &CMatrix,
    g2: &CMatrix,
    tol: f64,
) -> Result<ControllerGains, SynthesisError> {
    let r = lmi_r(plant, sw, g1, g2)?;
    let g3 = complete_g3(&r, g1, g2, tol)?;
    let a_c = controller_ac(plant, sw, g1, g2)?;
    Ok(ControllerGains { g1: g1.clone(), g2: g2.clone(), g3, a_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passive_model::check_realizability;

    #[test]
    fn literal_plant_misses_feedback_damping() {
        let ex = Example2::default();
        let rep = check_realizability(&ex.literal_plant(), 1e-9);
        assert!(!rep.ok);
        assert!(check_realizability(&ex.realizable_plant(), 1e-9).ok);
        let diff = &ex.realizable_plant().a().clone() - &ex.literal_a();
        assert!((diff[(0, 0)] - C64::new(-ex.gamma[3].norm_sqr() / 2.0, 0.0)).norm() < 1e-12);
        assert!(diff[(0, 1)].norm() + diff[(1, 0)].norm() + diff[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn example2_boundary_solves_quadratic() {
        // witness vanishes where r² − 6r + 1 = 0
        let r = Example2::default().feasibility_boundary(4.0, 12.0, 1e-10).unwrap();
        assert!((r - (3.0 + 8f64.sqrt())).abs() < 1e-8, "{r}");
    }

    #[test]
    fn example1_symmetric_controller_is_realizable() {
        let ex = Example1::default();
        let (g1, g2) = Example1::gains(1.0, 1.0);
        let k = controller(&ex.plant(), &ScatteringPair::observer(1, 1), &g1, &g2, 1e-9).unwrap();
        assert!(k.realizability_residual() < 1e-12);
        assert!(k.g3.norm_fro() < 1e-12);
    }
}
