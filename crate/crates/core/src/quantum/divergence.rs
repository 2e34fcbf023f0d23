use super::povm::OutcomeDistribution;
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Classical relative entropy D(p || q) in nats.
///
/// Terms with p(x) = 0 contribute nothing; p(x) > 0 with q(x) = 0 gives +inf.
pub fn kl_divergence(p: &OutcomeDistribution, q: &OutcomeDistribution) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different outcome sets");
    kl_slices(p.probs(), q.probs())
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        total += a * (a / b).ln();
    }
    total.max(0.0)
}

/// Max-relative entropy log inf{l : sigma <= l sigma'}.
pub fn d_max(sigma: &DensityMatrix, sigma_prime: &DensityMatrix) -> Result<f64> {
    if sigma.dim() != sigma_prime.dim() {
        return Err(Error::DimensionMismatch { expected: sigma_prime.dim(), found: sigma.dim() });
    }
    let floor = sigma_prime.min_eigenvalue();
    if floor <= 1e-12 {
        return Err(Error::SingularReference { min_eigenvalue: floor });
    }
    let inv_sqrt = linalg::hermitian_function(sigma_prime.matrix(), |x| 1.0 / x.sqrt());
    let sandwiched = &inv_sqrt * sigma.matrix() * &inv_sqrt;
    let top = *linalg::hermitian_eigenvalues(&sandwiched).last().unwrap();
    Ok(top.ln())
}

/// Trace norm ||a - b||_1 (sum of absolute eigenvalues, not halved).
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(trace_norm(&(a.matrix() - b.matrix())))
}

pub(crate) fn trace_norm(delta: &linalg::CMatrix) -> f64 {
    linalg::hermitian_eigenvalues(delta).iter().map(|x| x.abs()).sum()
}
