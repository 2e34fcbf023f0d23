use serde::{Deserialize, Serialize};

use super::sweep::reference_values;
use super::{par_trials, Estimate, McOptions};
use crate::error::{Error, Result};
use crate::mre::{mre_pair, Direction};
use crate::logspace::logsumexp;
use crate::quantum::{d_max, DensityMatrix, Povm};
use crate::sqprt::{thresholds_for, TestConfig, Trajectory, Truth};

/// Steps at which the martingale checks sample the unstopped trajectories.
const MARTINGALE_STEPS: [usize; 4] = [1, 5, 10, 20];
const MIXTURE_STEPS: [usize; 2] = [5, 10];
/// Floating-point allowance for the exact one-step martingale identity.
const STEP_IDENTITY_TOL: f64 = 1e-9;
const EARLY_STEP: usize = 10;
const LATE_STEP: usize = 30;

const MIXTURE_ANCHOR: &str = "the mixture likelihood ratio exp(-S~_k) is a martingale under the null";
const POINTWISE_ANCHOR: &str = "the pointwise likelihood ratio exp(-S_k(sigma)) is a martingale under the null";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PropertyOptions {
    pub trials: usize,
    /// Length of the unstopped null trajectories; at least 20.
    pub horizon: usize,
    pub seed: u64,
    pub workers: usize,
    /// Threshold scales compared by the plus-time check.
    pub plus_time_n: [usize; 2],
    /// tau as a fraction of min(D_M(rho||D), D_M(D||rho)) for the plus-time check.
    pub tau_fraction: f64,
    pub k_max: usize,
    /// Steps compared against a cold solve in the drift identity check.
    pub drift_samples: usize,
    pub drift_tol: f64,
    /// Alternatives for the plus-time check; the set's vertices when absent.
    #[serde(skip)]
    pub probes: Option<Vec<DensityMatrix>>,
}

impl Default for PropertyOptions {
    fn default() -> Self {
        PropertyOptions {
            trials: 10_000,
            horizon: 30,
            seed: 0,
            workers: 1,
            plus_time_n: [32, 64],
            tau_fraction: 0.2,
            k_max: 100_000,
            drift_samples: 1000,
            drift_tol: 1e-4,
            probes: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    /// Letter of the check, "a" to "g".
    pub check: &'static str,
    pub name: &'static str,
    /// The property of the test the check exercises.
    pub anchor: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<usize>,
    pub statistic: f64,
    pub standard_error: f64,
    /// Allowed deviation; the comparison is described by `rule`.
    pub tolerance: f64,
    pub rule: &'static str,
    pub sample_size: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Atom used by the pointwise martingale check.
    pub designated_atom: usize,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl PropertyReport {
    /// Letters of the checks with at least one failing entry.
    pub fn failed_checks(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.check).collect();
        out.dedup();
        out
    }
}

struct NullPath {
    mixture_lr: Vec<f64>,
    atom_lr: Vec<f64>,
    /// Largest |E[L_k / L_{k-1} | F_{k-1}] - 1| along the path, mixture then atom.
    mixture_cond: f64,
    atom_cond: f64,
    compensated: Vec<f64>,
    negative_early: bool,
    negative_late: bool,
    drift_pairs: Vec<(DensityMatrix, f64)>,
}

/// E[exp(-Z~_k) | F_{k-1}] and E[exp(-Z_k(atom)) | F_{k-1}] under the null,
/// summed over the outcomes of the measurement used at step k.
fn conditional_step_means(
    rho: &DensityMatrix,
    atoms: &[DensityMatrix],
    log_weights: &[f64],
    povm: &Povm,
    atom: usize,
) -> (f64, f64) {
    let (mut mixture, mut pointwise) = (0.0, 0.0);
    for x in 0..povm.len() {
        let p = povm.probability(x, rho);
        let joint: Vec<f64> = log_weights.iter().zip(atoms).map(|(w, s)| w + povm.probability(x, s).ln()).collect();
        let z = p.ln() - logsumexp(&joint);
        mixture += p * (-z).exp();
        pointwise += p * (povm.probability(x, &atoms[atom]) / p);
    }
    (mixture, pointwise)
}

/// Atom whose likelihood ratio against rho grows slowest in the worst case.
fn designated_atom(config: &TestConfig) -> Result<usize> {
    let mut best = (0, f64::INFINITY);
    for (i, atom) in config.prior().atoms().iter().enumerate() {
        let g = d_max(atom, config.rho())?;
        if g < best.1 {
            best = (i, g);
        }
    }
    Ok(best.0)
}

fn mean_check(
    samples: &[f64],
    center: f64,
    check: &'static str,
    name: &'static str,
    anchor: &'static str,
    k: usize,
) -> CheckResult {
    let e = Estimate::of_mean(samples.iter().copied());
    CheckResult {
        check,
        name,
        anchor,
        k: Some(k),
        probe: None,
        statistic: e.value,
        standard_error: e.se,
        tolerance: 3.0 * e.se,
        rule: "|statistic - expected| <= tolerance",
        sample_size: samples.len(),
        passed: (e.value - center).abs() <= 3.0 * e.se,
    }
}

/// Statistical checks of the martingale, drift, concentration and plus-time properties.
pub fn property_suite(config: &TestConfig, opts: &PropertyOptions) -> Result<PropertyReport> {
    if opts.horizon < 20 {
        return Err(Error::Config(format!("horizon must be at least 20, got {}", opts.horizon)));
    }
    if opts.trials < 2 {
        return Err(Error::Config("at least two trials are required".into()));
    }
    let late = LATE_STEP.min(opts.horizon);
    let steps = opts.horizon.max(LATE_STEP);
    let atom = designated_atom(config)?;
    let mc = McOptions { trials: opts.trials, seed: opts.seed, workers: opts.workers };
    let mut checks = Vec::new();

    // unstopped null trajectories: (a), (b), (c), (d), (e)
    let null_config = config.clone().with_seed(mc.seed);
    let paths = par_trials(mc.workers, mc.trials, |i| {
        let mut t = Trajectory::new_unchecked(&null_config, Truth::Null, i);
        let record_drift = (i as usize) < opts.drift_samples;
        let mut path = NullPath {
            mixture_lr: Vec::with_capacity(MARTINGALE_STEPS.len()),
            atom_lr: Vec::with_capacity(MARTINGALE_STEPS.len()),
            mixture_cond: 0.0,
            atom_cond: 0.0,
            compensated: Vec::with_capacity(MARTINGALE_STEPS.len()),
            negative_early: false,
            negative_late: false,
            drift_pairs: Vec::new(),
        };
        let mut compensator = 0.0;
        for k in 1..=steps {
            let before = record_drift.then(|| t.state().barycentre.clone());
            let weights = t.state().log_weights.clone();
            let rec = t.step()?;
            compensator += rec.drift;
            if let Some(b) = before {
                if rec.branch == Direction::NullDrift {
                    path.drift_pairs.push((b, rec.drift));
                }
            }
            let s = t.state();
            if let Some(povm) = &s.last_povm {
                let (m, a) = conditional_step_means(null_config.rho(), null_config.prior().atoms(), &weights, povm, atom);
                path.mixture_cond = path.mixture_cond.max((m - 1.0).abs());
                path.atom_cond = path.atom_cond.max((a - 1.0).abs());
            }
            if MARTINGALE_STEPS.contains(&k) {
                path.mixture_lr.push((-s.s_tilde).exp());
                path.atom_lr.push((-s.pointwise_s[atom]).exp());
                path.compensated.push(-s.s_tilde + compensator);
            }
            if k == EARLY_STEP {
                path.negative_early = s.s_tilde < 0.0;
            }
            if k == late {
                path.negative_late = s.s_tilde < 0.0;
            }
        }
        Ok(path)
    })?;

    // The level L_k is heavy-tailed and its sample mean is dominated by a
    // few trajectories, so each letter also checks the exact one-step
    // identity E[L_k / L_{k-1} | F_{k-1}] = 1 at every step of every path.
    for (letter, name, anchor) in [
        ("a", "mixture martingale, level", MIXTURE_ANCHOR),
        ("b", "pointwise martingale, level", POINTWISE_ANCHOR),
    ] {
        for (j, &k) in MARTINGALE_STEPS.iter().enumerate() {
            let level: Vec<f64> =
                paths.iter().map(|p| if letter == "a" { p.mixture_lr[j] } else { p.atom_lr[j] }).collect();
            checks.push(mean_check(&level, 1.0, letter, name, anchor, k));
        }
        let worst = paths
            .iter()
            .map(|p| if letter == "a" { p.mixture_cond } else { p.atom_cond })
            .fold(0.0, f64::max);
        checks.push(CheckResult {
            check: letter,
            name: if letter == "a" { "mixture martingale, one-step identity" } else { "pointwise martingale, one-step identity" },
            anchor,
            k: None,
            probe: None,
            statistic: worst,
            standard_error: 0.0,
            tolerance: STEP_IDENTITY_TOL,
            rule: "max |E[L_k / L_{k-1} | F_{k-1}] - 1| <= tolerance",
            sample_size: paths.len() * steps,
            passed: worst <= STEP_IDENTITY_TOL,
        });
    }
    for (j, &k) in MARTINGALE_STEPS.iter().enumerate() {
        let column: Vec<f64> = paths.iter().map(|p| p.compensated[j]).collect();
        checks.push(mean_check(
            &column,
            0.0,
            "c",
            "compensator",
            "-S~_k plus the summed conditional drifts is a zero-mean martingale under the null",
            k,
        ));
    }

    // (d): drift on the nonnegative branch against a cold solve at the same barycentre
    let pairs: Vec<&(DensityMatrix, f64)> = paths.iter().flat_map(|p| &p.drift_pairs).take(opts.drift_samples).collect();
    let mut worst: f64 = 0.0;
    for (sigma, drift) in &pairs {
        let cold = mre_pair(config.rho(), sigma, config.solver(), config.seed())?;
        worst = worst.max((cold.value - drift).abs());
    }
    checks.push(CheckResult {
        check: "d",
        name: "drift identity",
        anchor: "on the nonnegative branch the conditional drift equals D_M(rho || barycentre)",
        k: None,
        probe: None,
        statistic: worst,
        standard_error: 0.0,
        tolerance: opts.drift_tol,
        rule: "max |drift - D_M| <= tolerance",
        sample_size: pairs.len(),
        passed: !pairs.is_empty() && worst <= opts.drift_tol,
    });

    // (e): P(S~_k < 0) under the null decays between the early and late step
    let early = Estimate::proportion(paths.iter().filter(|p| p.negative_early).count(), paths.len());
    let late_p = Estimate::proportion(paths.iter().filter(|p| p.negative_late).count(), paths.len());
    let log_se = |e: &Estimate| if e.value > 0.0 { e.se / e.value } else { 0.0 };
    let diff = late_p.value.ln() - early.value.ln();
    let se = (log_se(&early).powi(2) + log_se(&late_p).powi(2)).sqrt();
    checks.push(CheckResult {
        check: "e",
        name: "concentration",
        anchor: "P(S~_k < 0) decays exponentially in k under the null",
        k: Some(late),
        probe: None,
        statistic: diff,
        standard_error: se,
        tolerance: 3.0 * se,
        rule: "log P(S~_late < 0) - log P(S~_early < 0) <= -tolerance",
        sample_size: paths.len(),
        passed: early.value > 0.0 && diff <= -3.0 * se,
    });
    drop(paths);

    // (f): plus-time under each probe alternative at two threshold scales
    let probes = opts.probes.clone().unwrap_or_else(|| config.set().vertices().to_vec());
    let (to, from) = reference_values(config.rho(), config.set(), config.solver(), config.seed())?;
    let tau = opts.tau_fraction * to.value.min(from.value);
    for (j, sigma) in probes.iter().enumerate() {
        let mut means = Vec::new();
        for &n in &opts.plus_time_n {
            let (a, b) = thresholds_for(n, tau, to.value, from.value)?;
            let c = config.clone().with_thresholds(a, b)?.with_k_max(opts.k_max)?.with_seed(mc.derive(j as u64 + 1).seed);
            let truth = Truth::Alt(sigma.clone());
            let plus = par_trials(mc.workers, mc.trials, |i| {
                Ok(Trajectory::new(&c, truth.clone(), i)?.run()?.plus_steps as f64)
            })?;
            means.push(Estimate::of_mean(plus));
        }
        let (small, large) = (means[0], means[1]);
        let joint = (small.se * small.se + large.se * large.se).sqrt();
        checks.push(CheckResult {
            check: "f",
            name: "plus-time",
            anchor: "expected number of steps with S~ >= 0 under an alternative is bounded uniformly in n",
            k: None,
            probe: Some(j),
            statistic: large.value - small.value,
            standard_error: joint,
            tolerance: 3.0 * joint,
            rule: "mean(largest n) - mean(smallest n) <= tolerance",
            sample_size: mc.trials,
            passed: large.value - small.value <= 3.0 * joint,
        });
    }

    // (g): drift under the prior mixture of alternatives
    let mix_config = config.clone().with_seed(mc.derive(0).seed);
    let last = *MIXTURE_STEPS.last().unwrap();
    let increments = par_trials(mc.workers, mc.trials, |i| {
        let mut t = Trajectory::new_unchecked(&mix_config, Truth::Mixture, i);
        let mut out = Vec::with_capacity(MIXTURE_STEPS.len());
        for k in 1..=last {
            let rec = t.step()?;
            if MIXTURE_STEPS.contains(&k) {
                out.push(-rec.z_tilde);
            }
        }
        Ok(out)
    })?;
    for (j, &k) in MIXTURE_STEPS.iter().enumerate() {
        let e = Estimate::of_mean(increments.iter().map(|v| v[j]));
        checks.push(CheckResult {
            check: "g",
            name: "mixture drift",
            anchor: "-Z~_k has positive conditional mean under the prior mixture of alternatives",
            k: Some(k),
            probe: None,
            statistic: e.value,
            standard_error: e.se,
            tolerance: 3.0 * e.se,
            rule: "statistic >= tolerance",
            sample_size: increments.len(),
            passed: e.value >= 3.0 * e.se,
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(PropertyReport { trials: mc.trials, horizon: opts.horizon, seed: mc.seed, designated_atom: atom, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alt_set::{AltSet, ParticlePrior};
    use crate::sqprt::Mutation;

    fn singleton() -> TestConfig {
        let sigma = DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap();
        let set = AltSet::new(vec![sigma.clone()]).unwrap();
        TestConfig::new(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(), set, ParticlePrior::singleton(sigma), 1.0, 1.0, 1)
            .unwrap()
    }

    #[test]
    fn short_horizon_rejected() {
        let opts = PropertyOptions { horizon: 19, ..PropertyOptions::default() };
        assert!(matches!(property_suite(&singleton(), &opts), Err(Error::Config(_))));
    }

    #[test]
    fn singleton_suite_passes() {
        let opts = PropertyOptions { trials: 4000, drift_samples: 200, ..PropertyOptions::default() };
        let report = property_suite(&singleton(), &opts).unwrap();
        assert!(report.passed, "{:#?}", report.failed_checks());
        assert_eq!(report.checks.iter().filter(|c| c.check == "a").count(), 5);
    }

    #[test]
    fn skipped_renormalization_breaks_the_martingale() {
        let set = AltSet::new(vec![
            DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap(),
        ])
        .unwrap();
        let prior = crate::alt_set::sample_prior(&set, 9, 0, crate::alt_set::PriorMode::VertexGrid).unwrap();
        let config = TestConfig::new(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(), set, prior, 1.0, 1.0, 1)
            .unwrap()
            .with_mutation(Some(Mutation::SkipRenormalization));
        let opts = PropertyOptions { trials: 2000, plus_time_n: [8, 16], drift_samples: 50, ..PropertyOptions::default() };
        let report = property_suite(&config, &opts).unwrap();
        let identity = report.checks.iter().find(|c| c.name == "mixture martingale, one-step identity").unwrap();
        assert!(!identity.passed, "{identity:?}");
        assert!(report.failed_checks().contains(&"a"));
    }
}
