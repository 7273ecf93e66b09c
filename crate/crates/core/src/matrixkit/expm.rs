use super::{CMatrix, LinalgError, Lu};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &CMatrix) -> f64 {
    (0..a.cols()).map(|j| (0..a.rows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale_re(0.5f64.powi(s));
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = PADE13;
    let r = |m: &CMatrix, k: f64| m.scale_re(k);
    let u_inner = &(&r(&a6, b[13]) + &r(&a4, b[11])) + &r(&a2, b[9]);
    let u_tail = &(&(&r(&a6, b[7]) + &r(&a4, b[5])) + &r(&a2, b[3])) + &r(&id, b[1]);
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);
    let v_inner = &(&r(&a6, b[12]) + &r(&a4, b[10])) + &r(&a2, b[8]);
    let v_tail = &(&(&r(&a6, b[6]) + &r(&a4, b[4])) + &r(&a2, b[2])) + &r(&id, b[0]);
    let v = &(&a6 * &v_inner) + &v_tail;
    let p = &v + &u;
    let q = &v - &u;
    let mut e = Lu::factor(&q)?.solve(&p);
    for _ in 0..s {
        e = &e * &e;
    }
    if !e.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    Ok(e)
}
