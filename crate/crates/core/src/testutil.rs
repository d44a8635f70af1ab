use crate::linalg::{CMatrix, C64};
use crate::operator::DensityMatrix;

/// Deterministic pseudo-random full-rank state.
pub fn random_state(dim: usize, seed: u64) -> DensityMatrix {
    let a = random_matrix(dim, seed);
    DensityMatrix::normalized(&a * a.adjoint()).unwrap()
}

pub fn random_matrix(dim: usize, seed: u64) -> CMatrix {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    CMatrix::from_fn(dim, dim, |_, _| C64::new(next(), next()))
}
