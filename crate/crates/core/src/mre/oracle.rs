use crate::error::{Error, Result};
use crate::quantum::DensityMatrix;

/// Brute-force qubit measured relative entropy: the best induced relative
/// entropy over projective measurements along Bloch directions on a
/// `grid` x `grid` mesh of polar and azimuthal angles.
///
/// Independent of the solvers; used to certify them.
pub fn oracle_mre_qubit(first: &DensityMatrix, second: &DensityMatrix, grid: usize) -> Result<f64> {
    for s in [first, second] {
        if s.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: s.dim() });
        }
    }
    let grid = grid.max(2);
    let a = first.bloch().unwrap();
    let b = second.bloch().unwrap();
    let mut best: f64 = 0.0;
    for i in 0..grid {
        let theta = std::f64::consts::PI * i as f64 / (grid - 1) as f64;
        let (st, ct) = theta.sin_cos();
        for j in 0..grid {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
            let (sp, cp) = phi.sin_cos();
            let n = [st * cp, st * sp, ct];
            let x = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
            let y = b[0] * n[0] + b[1] * n[1] + b[2] * n[2];
            let mut kl = 0.0;
            for (p, q) in [(0.5 * (1.0 + x), 0.5 * (1.0 + y)), (0.5 * (1.0 - x), 0.5 * (1.0 - y))] {
                if p > 0.0 {
                    kl += p * (p / q).ln();
                }
            }
            best = best.max(kl);
        }
    }
    Ok(best)
}
