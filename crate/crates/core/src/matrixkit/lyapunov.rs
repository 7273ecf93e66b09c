use super::schur::schur;
use super::{CMatrix, LinalgError, C64};

/// Solves `A X + X A† + Q = 0` by Bartels–Stewart on the complex Schur form.
pub fn solve_lyapunov(a: &CMatrix, q: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    if q.shape() != a.shape() {
        return Err(LinalgError::DimensionMismatch { op: "solve_lyapunov", left: a.shape(), right: q.shape() });
    }
    let n = a.rows();
    let sch = schur(a)?;
    let t = &sch.t;
    let u = &sch.q;
    let qt = &(&u.adjoint() * q) * u;
    let mut x = CMatrix::zeros(n, n);
    let small = 1e-14 * a.norm_scale();
    // T X + X T† = −Q̃, solved from the bottom-right corner.
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut rhs = -qt[(i, j)];
            for k in i + 1..n {
                rhs -= t[(i, k)] * x[(k, j)];
            }
            for k in j + 1..n {
                rhs -= x[(i, k)] * t[(j, k)].conj();
            }
            let d: C64 = t[(i, i)] + t[(j, j)].conj();
            if d.norm() <= small {
                return Err(LinalgError::SingularSylvester);
            }
            x[(i, j)] = rhs / d;
        }
    }
    let x = &(u * &x) * &u.adjoint();
    Ok(x.hermitian_part())
}

/// Solves the Sylvester equation `A X − X F = C` for upper-triangular `F`.
pub fn solve_sylvester_upper(a: &CMatrix, f: &CMatrix, c: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = a.rows();
    let k = f.rows();
    let mut x = CMatrix::zeros(n, k);
    for j in 0..k {
        // (A − f_jj I) x_j = c_j + Σ_{i<j} f_ij x_i
        let mut rhs = c.column(j);
        for i in 0..j {
            let fij = f[(i, j)];
            for r in 0..n {
                rhs[r] += fij * x[(r, i)];
            }
        }
        let shifted = a.add_diag(-f[(j, j)]);
        let lu = super::Lu::factor(&shifted).map_err(|_| LinalgError::SingularSylvester)?;
        if lu.min_pivot() <= 1e-13 * a.norm_scale() {
            return Err(LinalgError::SingularSylvester);
        }
        x.set_column(j, &lu.solve_vec(&rhs));
    }
    Ok(x)
}
