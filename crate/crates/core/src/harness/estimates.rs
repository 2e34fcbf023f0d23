use serde::Serialize;

use super::{par_trials, Estimate, McOptions};
use crate::alt_set::MEMBERSHIP_TOL;
use crate::error::{Error, Result};
use crate::quantum::DensityMatrix;
use crate::sqprt::{Decision, TestConfig, Trajectory, TrialOutcome, Truth};

/// An error probability estimate with the stopping-time statistics of the same batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub estimate: Estimate,
    /// Trials that contributed a nonzero term.
    pub hits: usize,
    pub trials: usize,
    pub truncated: usize,
    pub stopping_time: Estimate,
}

impl RateEstimate {
    fn from_terms(outcomes: &[TrialOutcome], term: impl Fn(&TrialOutcome) -> f64) -> Self {
        let terms: Vec<f64> = outcomes.iter().map(&term).collect();
        RateEstimate {
            estimate: Estimate::of_mean(terms.iter().copied()),
            hits: terms.iter().filter(|&&t| t != 0.0).count(),
            trials: outcomes.len(),
            truncated: outcomes.iter().filter(|o| o.decision == Decision::Truncated).count(),
            stopping_time: Estimate::of_mean(outcomes.iter().map(|o| o.stopping_time as f64)),
        }
    }

    fn from_hits(outcomes: &[TrialOutcome], hit: Decision) -> Self {
        let mut r = Self::from_terms(outcomes, |o| if o.decision == hit { 1.0 } else { 0.0 });
        r.estimate = Estimate::proportion(r.hits, r.trials);
        r
    }

    pub fn truncation_rate(&self) -> f64 {
        self.truncated as f64 / self.trials as f64
    }
}

fn batch(config: &TestConfig, truth: &Truth, probes: &[DensityMatrix], mc: &McOptions) -> Result<Vec<TrialOutcome>> {
    if mc.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let config = config.clone().with_seed(mc.seed);
    par_trials(mc.workers, mc.trials, |i| {
        Trajectory::new_unchecked(&config, truth.clone(), i).with_probes(probes).run()
    })
}

fn check_member(config: &TestConfig, sigma: &DensityMatrix) -> Result<()> {
    if sigma.dim() != config.rho().dim() {
        return Err(Error::DimensionMismatch { expected: config.rho().dim(), found: sigma.dim() });
    }
    if !config.set().contains(sigma, MEMBERSHIP_TOL)? {
        return Err(Error::OutsideSet);
    }
    Ok(())
}

/// Fraction of null trials deciding for the alternative.
pub fn estimate_alpha(config: &TestConfig, mc: &McOptions) -> Result<RateEstimate> {
    let outcomes = batch(config, &Truth::Null, &[], mc)?;
    Ok(RateEstimate::from_hits(&outcomes, Decision::AcceptAlt))
}

/// Type-I error by change of measure from the prior mixture of alternatives.
///
/// Trials sample predictively from the barycentre; each trial deciding for
/// the alternative contributes exp(S~_T) <= exp(-A).
pub fn estimate_alpha_is(config: &TestConfig, mc: &McOptions) -> Result<RateEstimate> {
    let outcomes = batch(config, &Truth::Mixture, &[], mc)?;
    Ok(RateEstimate::from_terms(&outcomes, |o| {
        if o.decision == Decision::AcceptAlt {
            o.final_s_tilde.exp()
        } else {
            0.0
        }
    }))
}

/// Fraction of trials under `sigma` deciding for the null.
pub fn estimate_beta_direct(config: &TestConfig, sigma: &DensityMatrix, mc: &McOptions) -> Result<RateEstimate> {
    check_member(config, sigma)?;
    let outcomes = batch(config, &Truth::Alt(sigma.clone()), &[], mc)?;
    Ok(RateEstimate::from_hits(&outcomes, Decision::AcceptNull))
}

/// Type-II error at `sigma` from null trials reweighted by exp(-S_T(sigma)).
pub fn estimate_beta_is(config: &TestConfig, sigma: &DensityMatrix, mc: &McOptions) -> Result<RateEstimate> {
    check_member(config, sigma)?;
    let probes = [sigma.clone()];
    let outcomes = batch(config, &Truth::Null, &probes, mc)?;
    Ok(is_beta(&outcomes, 0))
}

fn is_beta(outcomes: &[TrialOutcome], probe: usize) -> RateEstimate {
    RateEstimate::from_terms(outcomes, |o| {
        if o.decision == Decision::AcceptNull {
            (-o.probe_s[probe]).exp()
        } else {
            0.0
        }
    })
}

/// Whether an importance-sampling estimate is too noisy to trust.
fn is_unreliable(r: &RateEstimate) -> bool {
    r.hits < 10 || r.estimate.se > 0.5 * r.estimate.value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMethod {
    ImportanceSampling,
    Direct,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeEstimate {
    pub probe: usize,
    pub beta_is: RateEstimate,
    /// Direct estimate; its stopping times give E_sigma[T].
    pub beta_direct: RateEstimate,
    pub method: BetaMethod,
    pub beta: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEstimates {
    pub trials: usize,
    pub alpha: RateEstimate,
    pub probes: Vec<ProbeEstimate>,
    pub beta_worst: Estimate,
    /// Index of the probe attaining `beta_worst`.
    pub worst_probe: usize,
    pub e_t_null: Estimate,
    /// Largest mean stopping time over the probes.
    pub e_t_alt_max: Estimate,
    /// Largest truncation rate over all batches.
    pub truncation_rate: f64,
}

/// Type-I error, per-probe type-II errors and stopping times.
///
/// One null batch gives the type-I error, E_rho[T] and the importance
/// sampling type-II estimates for every probe; each probe also gets a
/// direct batch under its own law, which supplies E_sigma[T] and the
/// fallback estimate when the weighted one is unreliable.
pub fn worst_case_beta(config: &TestConfig, probes: &[DensityMatrix], mc: &McOptions) -> Result<ErrorEstimates> {
    if probes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for p in probes {
        check_member(config, p)?;
    }
    let null = batch(config, &Truth::Null, probes, mc)?;
    let alpha = RateEstimate::from_hits(&null, Decision::AcceptAlt);
    let mut truncation_rate = alpha.truncation_rate();
    let mut per_probe = Vec::with_capacity(probes.len());
    for (j, sigma) in probes.iter().enumerate() {
        let direct = batch(config, &Truth::Alt(sigma.clone()), &[], &mc.derive(j as u64 + 1))?;
        let direct = RateEstimate::from_hits(&direct, Decision::AcceptNull);
        truncation_rate = truncation_rate.max(direct.truncation_rate());
        let weighted = is_beta(&null, j);
        let (method, beta) = if is_unreliable(&weighted) {
            (BetaMethod::Direct, direct.estimate)
        } else {
            (BetaMethod::ImportanceSampling, weighted.estimate)
        };
        per_probe.push(ProbeEstimate { probe: j, beta_is: weighted, beta_direct: direct, method, beta });
    }
    let worst = per_probe
        .iter()
        .enumerate()
        .fold(0, |best, (j, p)| if p.beta.value > per_probe[best].beta.value { j } else { best });
    let slowest = per_probe
        .iter()
        .enumerate()
        .fold(0, |best, (j, p)| {
            if p.beta_direct.stopping_time.value > per_probe[best].beta_direct.stopping_time.value {
                j
            } else {
                best
            }
        });
    Ok(ErrorEstimates {
        trials: mc.trials,
        e_t_null: alpha.stopping_time,
        alpha,
        beta_worst: per_probe[worst].beta,
        worst_probe: worst,
        e_t_alt_max: per_probe[slowest].beta_direct.stopping_time,
        probes: per_probe,
        truncation_rate,
    })
}
