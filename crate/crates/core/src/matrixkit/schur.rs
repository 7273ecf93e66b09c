//! Complex Schur form: Householder reduction to Hessenberg form followed by
//! single-shift QR iteration with Givens rotations.

use super::{CMatrix, LinalgError, C64};

/// `A = Q T Q†`, `T` upper triangular, `Q` unitary.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: CMatrix,
    pub q: CMatrix,
}

fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let mut v = x.clone();
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H ← P H with P = I − 2 v v† / (v†v) acting on rows k+1..n
        for j in 0..n {
            let s: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            let f = s * (2.0 / vnorm2);
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * f;
            }
        }
        // H ← H P, Q ← Q P on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = (0..v.len()).map(|j| m[(i, k + 1 + j)] * v[j]).sum();
                let f = s * (2.0 / vnorm2);
                for j in 0..v.len() {
                    m[(i, k + 1 + j)] -= f * v[j].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (h, q)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let disc = (p * p + bc).sqrt();
    let den1 = p + disc;
    let den2 = p - disc;
    let den = if den1.norm() >= den2.norm() { den1 } else { den2 };
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Complex Schur decomposition. The iteration cap is `100·n` QR sweeps.
pub fn schur(a: &CMatrix) -> Result<Schur, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NonSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let (mut h, mut q) = hessenberg(a);
    if n < 2 {
        return Ok(Schur { t: h, q });
    }
    let eps = f64::EPSILON;
    let hnorm = h.norm_fro().max(f64::MIN_POSITIVE);
    let cap = 100 * n;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = hnorm;
            }
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > cap {
            return Err(LinalgError::ConvergenceFailure { iterations: total });
        }
        let mu = if iter.is_multiple_of(10) {
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].re.abs() + 0.5 * h[(hi, hi - 1)].im.abs(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots: Vec<(f64, C64)> = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cs, sn) = if r == 0.0 {
                (1.0, C64::new(0.0, 0.0))
            } else if x.norm() == 0.0 {
                (0.0, y.conj() / y.norm())
            } else {
                let ph = x / x.norm();
                (x.norm() / r, ph * y.conj() / r)
            };
            for j in k..n {
                let a1 = h[(k, j)];
                let a2 = h[(k + 1, j)];
                h[(k, j)] = a1 * cs + sn * a2;
                h[(k + 1, j)] = -sn.conj() * a1 + a2 * cs;
            }
            h[(k + 1, k)] = C64::new(0.0, 0.0);
            rots.push((cs, sn));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (cs, sn) = rots[idx];
            let top = (k + 2).min(hi + 1);
            for i in 0..top {
                let a1 = h[(i, k)];
                let a2 = h[(i, k + 1)];
                h[(i, k)] = a1 * cs + sn.conj() * a2;
                h[(i, k + 1)] = -sn * a1 + a2 * cs;
            }
            for i in 0..n {
                let a1 = q[(i, k)];
                let a2 = q[(i, k + 1)];
                q[(i, k)] = a1 * cs + sn.conj() * a2;
                q[(i, k + 1)] = -sn * a1 + a2 * cs;
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok(Schur { t: h, q })
}

/// Unit eigenvector of `T` for its `k`-th diagonal entry by back-substitution,
/// with tiny pivots replaced by `eps·‖T‖`.
pub(crate) fn triangular_eigenvector(t: &CMatrix, k: usize) -> Vec<C64> {
    let n = t.rows();
    let lambda = t[(k, k)];
    let small = f64::EPSILON * t.norm_fro().max(f64::MIN_POSITIVE);
    let mut y = vec![C64::new(0.0, 0.0); n];
    y[k] = C64::new(1.0, 0.0);
    for i in (0..k).rev() {
        let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
        let mut d = t[(i, i)] - lambda;
        if d.norm() < small {
            d = C64::new(small, 0.0);
        }
        y[i] = -s / d;
        // keep the growth bounded
        let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if big > 1e150 {
            for z in y.iter_mut() {
                *z /= big;
            }
        }
    }
    let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    y.iter().map(|z| z / nrm).collect()
}
