//! One-sided Jacobi orthogonalization: singular values and column spaces.

use super::hermitian::jacobi_2x2;
use super::{vec_dot, vec_norm, CMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Result of orthogonalizing the columns of a matrix.
#[derive(Debug, Clone)]
pub struct ColumnSpace {
    /// Orthonormal basis of the retained directions (n × rank).
    pub basis: CMatrix,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Mutually orthogonal columns spanning the same space as `a`'s columns,
/// sorted by decreasing norm. The norms are the singular values.
fn orthogonalized_columns(a: &CMatrix) -> Vec<Vec<C64>> {
    let k = a.cols();
    let mut cols: Vec<Vec<C64>> = (0..k).map(|j| a.column(j)).collect();
    if k > 1 {
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..k - 1 {
                for q in p + 1..k {
                    let alpha = vec_dot(&cols[p], &cols[p]).re;
                    let beta = vec_dot(&cols[q], &cols[q]).re;
                    let gamma = vec_dot(&cols[p], &cols[q]);
                    if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                        continue;
                    }
                    rotated = true;
                    let [u00, u01, u10, u11] = jacobi_2x2(alpha, beta, gamma);
                    for i in 0..cols[p].len() {
                        let x = cols[p][i];
                        let y = cols[q][i];
                        cols[p][i] = x * u00 + y * u10;
                        cols[q][i] = x * u01 + y * u11;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    cols.sort_by(|x, y| vec_norm(y).total_cmp(&vec_norm(x)));
    cols
}

/// Singular values, descending; `min(rows, cols)` of them.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let m = a.rows().min(a.cols());
    let cols = if a.cols() > a.rows() { orthogonalized_columns(&a.adjoint()) } else { orthogonalized_columns(a) };
    cols.iter().take(m).map(|c| vec_norm(c)).collect()
}

/// Orthonormal basis of the column space, keeping directions whose singular
/// value exceeds `threshold` (absolute).
pub fn column_space(a: &CMatrix, threshold: f64) -> ColumnSpace {
    let n = a.rows();
    let cols = orthogonalized_columns(a);
    let mut singular_values: Vec<f64> = cols.iter().map(|c| vec_norm(c)).collect();
    singular_values.truncate(n.min(a.cols()));
    let mut kept: Vec<Vec<C64>> = Vec::new();
    for c in &cols {
        let s = vec_norm(c);
        if s <= threshold || kept.len() == n {
            break;
        }
        let mut v: Vec<C64> = c.iter().map(|z| z / s).collect();
        // Re-orthogonalize against earlier vectors; Jacobi leaves tiny overlaps.
        for _ in 0..2 {
            for u in &kept {
                let d = vec_dot(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
            let nv = vec_norm(&v);
            for vi in v.iter_mut() {
                *vi /= nv;
            }
        }
        kept.push(v);
    }
    let mut basis = CMatrix::zeros(n, kept.len());
    for (j, v) in kept.iter().enumerate() {
        basis.set_column(j, v);
    }
    ColumnSpace { basis, singular_values }
}

/// Orthonormal basis of the orthogonal complement of `range(v)`, where `v`
/// has orthonormal columns.
pub fn orthogonal_complement(v: &CMatrix) -> CMatrix {
    let n = v.rows();
    let k = v.cols();
    let mut basis: Vec<Vec<C64>> = (0..k).map(|j| v.column(j)).collect();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(n - k);
    while out.len() < n - k {
        // candidate unit vector with largest residual after projection
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..n {
            let mut x = vec![C64::new(0.0, 0.0); n];
            x[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for u in &basis {
                    let d = vec_dot(u, &x);
                    for (xi, ui) in x.iter_mut().zip(u) {
                        *xi -= d * ui;
                    }
                }
            }
            let r = vec_norm(&x);
            if best.as_ref().is_none_or(|b| r > b.0) {
                best = Some((r, x));
            }
        }
        let (r, mut x) = best.expect("n > 0");
        for xi in x.iter_mut() {
            *xi /= r;
        }
        basis.push(x.clone());
        out.push(x);
    }
    let mut m = CMatrix::zeros(n, out.len());
    for (j, x) in out.iter().enumerate() {
        m.set_column(j, x);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::c;

    #[test]
    fn singular_values_of_diagonal() {
        let a = CMatrix::diag(&[c(3.0, 0.0), c(0.0, -5.0), c(1.0, 0.0)]);
        let s = singular_values(&a);
        assert_eq!(s.len(), 3);
        assert!((s[0] - 5.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_column_space() {
        let a = CMatrix::from_real(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let cs = column_space(&a, 1e-10);
        assert_eq!(cs.basis.cols(), 1);
        let comp = orthogonal_complement(&cs.basis);
        assert_eq!(comp.cols(), 1);
        let overlap = &cs.basis.adjoint() * &comp;
        assert!(overlap.norm_fro() < 1e-14);
    }
}
