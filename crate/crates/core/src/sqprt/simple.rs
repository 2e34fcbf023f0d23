use super::trajectory::{sample_outcome, trial_rng};
use super::{decide_value, Decision, TrialOutcome, Verdict};
use crate::error::{Error, Result};
use crate::mre::{mre_pair, SolverOptions};
use crate::quantum::DensityMatrix;

/// Pointwise test of rho against the single state `sigma`.
///
/// Written without posteriors or caches: the two measurements are solved
/// once up front. `truth` is the state generating outcomes. Shares its
/// random streams with [`super::run_trial`], so a one-atom composite run
/// with the same seed and index follows the same trajectory.
#[allow(clippy::too_many_arguments)]
pub fn run_simple_trial(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    truth: &DensityMatrix,
    a: f64,
    b: f64,
    k_max: usize,
    solver: &SolverOptions,
    seed: u64,
    trial_index: u64,
) -> Result<TrialOutcome> {
    if k_max == 0 {
        return Err(Error::InvalidThreshold("k_max must be at least 1".into()));
    }
    let toward_null = mre_pair(rho, sigma, solver, seed)?.povm;
    let toward_alt = mre_pair(sigma, rho, solver, seed)?.povm;
    let mut rng = trial_rng(seed, trial_index);
    let mut s = 0.0f64;
    let mut plus_steps = 0;
    let mut k = 0;
    let decision = loop {
        let povm = if s >= 0.0 {
            plus_steps += 1;
            &toward_null
        } else {
            &toward_alt
        };
        let x = sample_outcome(povm, truth, &mut rng);
        let p = povm.probability(x, rho);
        let q = povm.probability(x, sigma);
        if !(p > 0.0 && q > 0.0) {
            return Err(Error::ZeroProbabilityOutcome { outcome: x, which: "simple test" });
        }
        s += p.ln() - q.ln();
        k += 1;
        match decide_value(s, a, b) {
            Verdict::Null => break Decision::AcceptNull,
            Verdict::Alt => break Decision::AcceptAlt,
            Verdict::Continue if k >= k_max => break Decision::Truncated,
            Verdict::Continue => {}
        }
    };
    Ok(TrialOutcome {
        decision,
        stopping_time: k,
        final_s_tilde: s,
        final_pointwise_s: vec![s],
        plus_steps,
        probe_s: Vec::new(),
        trace: None,
    })
}
