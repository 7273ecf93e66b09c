//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use super::{CMatrix, LinalgError, C64};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * &self.vectors.adjoint()
    }
}

/// Unitary 2×2 `U` (as `[u00, u01, u10, u11]`) with `U† [[app, apq], [apq*, aqq]] U` diagonal.
pub(crate) fn jacobi_2x2(app: f64, aqq: f64, apq: C64) -> [C64; 4] {
    let r = apq.norm();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if r == 0.0 {
        return [one, zero, zero, one];
    }
    let phase = apq / r; // e^{iφ}
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // D = diag(1, e^{-iφ}) makes the pivot real, then a real rotation.
    let e = phase.conj();
    [C64::new(cs, 0.0), C64::new(sn, 0.0), e * (-sn), e * cs]
}

/// Full eigendecomposition of the Hermitian part `(H + H†)/2`.
pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NonSquare { rows: h.rows(), cols: h.cols() });
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = CMatrix::identity(n);
    let scale = a.norm_fro();
    if n > 1 && scale > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-16 * scale {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    if a[(p, q)].norm() <= 1e-300 {
                        continue;
                    }
                    let u = jacobi_2x2(a[(p, p)].re, a[(q, q)].re, a[(p, q)]);
                    rotate(&mut a, &mut v, p, q, u);
                }
            }
        }
        if !converged {
            return Err(LinalgError::ConvergenceFailure { iterations: MAX_SWEEPS });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(HermitianEigen { values, vectors })
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize, u: [C64; 4]) {
    let n = a.rows();
    let [u00, u01, u10, u11] = u;
    // A ← A U
    for i in 0..n {
        let x = a[(i, p)];
        let y = a[(i, q)];
        a[(i, p)] = x * u00 + y * u10;
        a[(i, q)] = x * u01 + y * u11;
    }
    // A ← U† A
    for j in 0..n {
        let x = a[(p, j)];
        let y = a[(q, j)];
        a[(p, j)] = u00.conj() * x + u10.conj() * y;
        a[(q, j)] = u01.conj() * x + u11.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for i in 0..n {
        let x = v[(i, p)];
        let y = v[(i, q)];
        v[(i, p)] = x * u00 + y * u10;
        v[(i, q)] = x * u01 + y * u11;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::c;

    #[test]
    fn two_by_two_closed_form() {
        let h = CMatrix::from_real(&[&[-1.0, 2.0], &[2.0, -1.0]]);
        let e = hermitian_eigen(&h).unwrap();
        assert!((e.values[0] + 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_hermitian_reconstructs() {
        let h = CMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.5)],
            vec![c(1.0, 1.0), c(-1.0, 0.0), c(0.3, 0.0)],
            vec![c(0.0, -0.5), c(0.3, 0.0), c(0.5, 0.0)],
        ]);
        let e = hermitian_eigen(&h).unwrap();
        let back = e.reconstruct_with(|x| x);
        assert!((&back - &h).norm_fro() < 1e-13);
        let vtv = &e.vectors.adjoint() * &e.vectors;
        assert!((&vtv - &CMatrix::identity(3)).norm_fro() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
