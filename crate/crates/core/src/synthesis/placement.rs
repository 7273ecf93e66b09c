//! Eigenvalue assignment for `A + B K` and, by duality, `A + G C`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SynthesisError;
use crate::analysis::controllable;
use crate::matrixkit::{eigenvalues, inverse, solve, solve_sylvester_upper, spectra_distance, CMatrix, Lu, C64};

const ATTEMPTS: usize = 24;

fn verify(a: &CMatrix, b: &CMatrix, k: &CMatrix, targets: &[C64]) -> f64 {
    match eigenvalues(&(a + &(b * k))) {
        Ok(s) => spectra_distance(&s.values, targets),
        Err(_) => f64::INFINITY,
    }
}

/// Characteristic-polynomial (Ackermann) formula for a single input.
fn ackermann(a: &CMatrix, b: &CMatrix, targets: &[C64]) -> Option<CMatrix> {
    let n = a.rows();
    let mut ctrb = CMatrix::zeros(n, n);
    let mut v = b.column(0);
    for j in 0..n {
        ctrb.set_column(j, &v);
        v = a.apply(&v);
    }
    let mut p = CMatrix::identity(n);
    for &t in targets {
        p = &p * &a.add_diag(-t);
    }
    let mut en = CMatrix::zeros(n, 1);
    en[(n - 1, 0)] = C64::new(1.0, 0.0);
    // row r with r·ctrb = e_nᵀ
    let r = solve(&ctrb.transpose(), &en).ok()?.transpose();
    Some(-&(&r * &p))
}

/// Upper-bidiagonal target matrix; equal neighbours are chained into a Jordan block.
fn target_matrix(targets: &[C64], scale: f64) -> CMatrix {
    let mut t: Vec<C64> = targets.to_vec();
    t.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let k = t.len();
    let mut f = CMatrix::diag(&t);
    for j in 0..k.saturating_sub(1) {
        if (t[j] - t[j + 1]).norm() <= 1e-10 * scale {
            f[(j, j + 1)] = C64::new(1.0, 0.0);
        }
    }
    f
}

/// Eigenvector assignment: solve `(A + B K0) X − X Λ = −B G` and set
/// `K = K0 + G X⁻¹`, over a few seeded random `G`.
fn sylvester_place(a: &CMatrix, b: &CMatrix, targets: &[C64]) -> Option<(CMatrix, f64)> {
    let n = a.rows();
    let m = b.cols();
    let scale = a.norm_scale();
    let lambda = target_matrix(targets, scale);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
    let mut best: Option<(CMatrix, f64)> = None;
    for attempt in 0..ATTEMPTS {
        let k0 = if attempt == 0 {
            CMatrix::zeros(m, n)
        } else {
            CMatrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .scale_re(scale / (b.norm_fro().max(1e-300)))
        };
        let g = CMatrix::from_fn(m, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let a0 = a + &(b * &k0);
        let rhs = -&(b * &g);
        let Ok(x) = solve_sylvester_upper(&a0, &lambda, &rhs) else { continue };
        let Ok(lu) = Lu::factor(&x) else { continue };
        if lu.min_pivot() <= 1e-12 * x.norm_fro() {
            continue;
        }
        let Ok(xinv) = inverse(&x) else { continue };
        let k = &k0 + &(&g * &xinv);
        let err = verify(a, b, &k, targets);
        if best.as_ref().is_none_or(|(_, e)| err < *e) {
            best = Some((k, err));
        }
        if err <= 1e-12 * scale {
            break;
        }
    }
    best
}

/// `K` with `spec(A + B K) = targets`.
pub fn place_feedback(a: &CMatrix, b: &CMatrix, targets: &[C64], tol: f64) -> Result<CMatrix, SynthesisError> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(SynthesisError::DimensionMismatch(format!("A is {:?}, B is {:?}", a.shape(), b.shape())));
    }
    if targets.len() != n {
        return Err(SynthesisError::TargetCountMismatch { expected: n, got: targets.len() });
    }
    if n == 0 {
        return Ok(CMatrix::zeros(b.cols(), 0));
    }
    if !controllable(a, b, 1e-10)? {
        return Err(SynthesisError::Uncontrollable);
    }
    let scale = a.norm_scale().max(targets.iter().map(|t| t.norm()).fold(0.0, f64::max));
    let mut best: Option<(CMatrix, f64)> = None;
    if b.cols() == 1 {
        if let Some(k) = ackermann(a, b, targets) {
            let err = verify(a, b, &k, targets);
            best = Some((k, err));
        }
    }
    if best.as_ref().is_none_or(|(_, e)| *e > tol * scale) {
        if let Some((k, err)) = sylvester_place(a, b, targets) {
            if best.as_ref().is_none_or(|(_, e)| err < *e) {
                best = Some((k, err));
            }
        }
    }
    match best {
        Some((k, err)) if err <= tol * scale => Ok(k),
        Some((_, err)) => Err(SynthesisError::PlacementInaccurate { error: err }),
        None => Err(SynthesisError::PlacementInaccurate { error: f64::INFINITY }),
    }
}

/// `G` with `spec(A + G Cd) = targets`, through the dual pair `(A†, Cd†)`.
pub fn pole_place_injection(a: &CMatrix, cd: &CMatrix, targets: &[C64], tol: f64) -> Result<CMatrix, SynthesisError> {
    if cd.cols() != a.rows() {
        return Err(SynthesisError::DimensionMismatch(format!("A is {:?}, Cd is {:?}", a.shape(), cd.shape())));
    }
    let conj: Vec<C64> = targets.iter().map(|t| t.conj()).collect();
    let k = place_feedback(&a.adjoint(), &cd.adjoint(), &conj, tol)?;
    Ok(k.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::{c, spectra_match};
    use crate::random;

    #[test]
    fn scalar_origin_placement() {
        let g =
            pole_place_injection(&CMatrix::scalar(c(-1.0, 0.0)), &CMatrix::scalar(c(-1.0, 0.0)), &[c(0.0, 0.0)], 1e-9)
                .unwrap();
        assert!((g[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn already_placed_needs_no_gain() {
        let a = CMatrix::diag(&[c(-1.0, 0.0), c(-2.0, 1.0)]);
        let b = CMatrix::from_real(&[&[1.0], &[1.0]]);
        let k = place_feedback(&a, &b, &[c(-1.0, 0.0), c(-2.0, 1.0)], 1e-9).unwrap();
        assert!(k.norm_fro() < 1e-10);
    }

    #[test]
    fn random_pairs_are_placed() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..=2 {
            for _ in 0..20 {
                let a = random::matrix(&mut rng, 3, 3);
                let cd = random::matrix(&mut rng, m, 3);
                let targets: Vec<C64> = (0..3).map(|_| c(rng.gen_range(-2.0..0.0), rng.gen_range(-2.0..2.0))).collect();
                let g = pole_place_injection(&a, &cd, &targets, 1e-8).unwrap();
                let s = eigenvalues(&(&a + &(&g * &cd))).unwrap();
                assert!(spectra_match(&s.values, &targets, 1e-8));
            }
        }
    }

    #[test]
    fn repeated_targets_multi_input() {
        let a = CMatrix::from_real(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 2.0, 3.0]]);
        let b = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
        let t = [c(-1.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.5)];
        let k = place_feedback(&a, &b, &t, 1e-6).unwrap();
        let s = eigenvalues(&(&a + &(&b * &k))).unwrap();
        assert!(spectra_match(&s.values, &t, 1e-6));
    }

    #[test]
    fn errors() {
        let a = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = CMatrix::from_real(&[&[1.0], &[0.0]]);
        assert!(matches!(place_feedback(&a, &b, &[c(0.0, 0.0); 2], 1e-9), Err(SynthesisError::Uncontrollable)));
        assert!(matches!(
            place_feedback(&a, &b, &[c(0.0, 0.0)], 1e-9),
            Err(SynthesisError::TargetCountMismatch { expected: 2, got: 1 })
        ));
    }
}
