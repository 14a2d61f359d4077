#![allow(dead_code)]

use dadal_core::instances::random_sdp;
use dadal_core::subsolver::AugLagState;
use dadal_core::{Factor, SdpProblem, SymMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_problem(n: usize, m: usize, seed: u64) -> SdpProblem {
    random_sdp(n, m, 0.4, seed).expect("generator succeeds")
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
    let g = uniform_matrix(n, n, rng);
    SymMatrix::from_dense(&g * g.transpose() / n as f64).unwrap()
}

/// Random `(X, sigma, y, V)` on `p`, `V` with `r` columns.
pub fn random_state(p: &SdpProblem, r: usize, seed: u64) -> AugLagState<'_> {
    let mut rng = rng(seed);
    let x = random_psd(p.n(), &mut rng);
    let sigma = rng.random_range(0.2..3.0);
    let y = uniform_vector(p.m(), &mut rng);
    let v = Factor::new(uniform_matrix(p.n(), r, &mut rng)).unwrap();
    AugLagState::new(p, x, sigma, y, v).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}
