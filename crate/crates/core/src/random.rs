//! Seeded random instances: matrices, unitaries, Hermitian and passive models.

use rand::Rng;

use crate::matrixkit::{c, column_space, CMatrix};

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    matrix(rng, n, n).hermitian_part()
}

/// Unitary from orthonormalizing a random square matrix.
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        let cs = column_space(&matrix(rng, n, n), 1e-6);
        if cs.basis.cols() == n {
            return cs.basis;
        }
    }
}

/// Random stable matrix: random entries shifted left of the axis.
pub fn stable<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let a = matrix(rng, n, n);
    let shift = a.norm_fro() + 0.5;
    a.add_diag(c(-shift, 0.0))
}
