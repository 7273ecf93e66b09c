use super::{CMatrix, LinalgError, C64};

/// LU factorization with partial pivoting, `P A = L U`, packed in place.
#[derive(Debug, Clone)]
pub struct Lu {
    packed: CMatrix,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, best) =
                (k..n).map(|i| (i, m[(i, k)].norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            min_pivot = min_pivot.min(best);
            if best == 0.0 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    let t = m[(k, j)];
                    m[(k, j)] = m[(p, j)];
                    m[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            let pivot = m[(k, k)];
            for i in k + 1..n {
                let f = m[(i, k)] / pivot;
                m[(i, k)] = f;
                if f != C64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let u = m[(k, j)];
                        m[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { packed: m, perm, min_pivot })
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.perm.len();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.packed[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.packed[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.packed[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            out.set_column(j, &self.solve_vec(&b.column(j)));
        }
        out
    }

    pub fn determinant(&self) -> C64 {
        let n = self.perm.len();
        let mut d: C64 = (0..n).map(|i| self.packed[(i, i)]).product();
        // parity of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                d = -d;
            }
        }
        d
    }
}

pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    if a.rows() != b.rows() {
        return Err(LinalgError::DimensionMismatch { op: "solve", left: a.shape(), right: b.shape() });
    }
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    Ok(Lu::factor(a)?.solve(&CMatrix::identity(a.rows())))
}

pub fn determinant(a: &CMatrix) -> Result<C64, LinalgError> {
    match Lu::factor(a) {
        Ok(lu) => Ok(lu.determinant()),
        Err(LinalgError::Singular) => Ok(C64::new(0.0, 0.0)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::c;

    #[test]
    fn solves_small_system() {
        let a = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(2.0, 1.0)], vec![c(1.0, 0.0), c(1.0, -1.0)]]);
        let x = CMatrix::from_rows(&[vec![c(1.0, 1.0)], vec![c(-2.0, 0.5)]]);
        let b = &a * &x;
        let got = solve(&a, &b).unwrap();
        assert!((&got - &x).norm_fro() < 1e-14);
        // det = 0*(1-i) - (2+i)*1
        let d = determinant(&a).unwrap();
        assert!((d - c(-2.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_detected() {
        let a = CMatrix::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(Lu::factor(&a), Err(LinalgError::Singular)) || Lu::factor(&a).unwrap().min_pivot() < 1e-12);
    }
}
