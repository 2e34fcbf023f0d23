#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqht::alt_set::{sample_prior, AltSet, ParticlePrior, PriorMode};
use sqht::quantum::DensityMatrix;

/// Frozen reference values for R1, from the solver and the qubit oracle at bring-up.
pub const R1_D_RHO_TO_SET: f64 = 0.268301484759236;
pub const R1_D_SET_TO_RHO: f64 = 0.29323224238386913;
pub const R1_DELTA: f64 = 0.3;

/// R1: rho = diag(0.8, 0.2) against the hull of diag(0.3, 0.7) and [[0.5, 0.2], [0.2, 0.5]].
pub fn r1() -> (DensityMatrix, AltSet, ParticlePrior) {
    let rho = DensityMatrix::diagonal(&[0.8, 0.2]).unwrap();
    let set = AltSet::with_null(
        vec![
            DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap(),
        ],
        &rho,
    )
    .unwrap();
    let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid).unwrap();
    (rho, set, prior)
}

/// Full-rank qubit state with Bloch radius at most `max_radius`.
pub fn random_qubit(rng: &mut ChaCha8Rng, max_radius: f64) -> DensityMatrix {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            let r = max_radius * rng.gen::<f64>().sqrt() / norm;
            return DensityMatrix::from_bloch([v[0] * r, v[1] * r, v[2] * r]).unwrap();
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Classical KL divergence in nats.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}
