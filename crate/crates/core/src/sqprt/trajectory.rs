use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    apply_outcome, branch, decide, povm_id, Decision, TestConfig, TrajectoryState, TrialOutcome, Verdict,
};
use crate::alt_set::MEMBERSHIP_TOL;
use crate::error::{Error, Result};
use crate::mre::{CacheStats, Direction, PovmCache};
use crate::quantum::{kl_slices, DensityMatrix, Povm};

/// Which law generates the outcomes.
#[derive(Clone, Debug)]
pub enum Truth {
    /// Outcomes drawn from the null state.
    Null,
    /// Outcomes drawn from a state of the alternative set.
    Alt(DensityMatrix),
    /// Like `Alt`, without the membership check. For robustness probes outside the set.
    AltOverride(DensityMatrix),
    /// Predictive sampling from the current barycentre: the prior mixture of alternatives.
    Mixture,
}

/// What happened at one step.
#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub branch: Direction,
    pub outcome: usize,
    pub z_tilde: f64,
    pub s_tilde: f64,
    /// KL(P_rho,M || P_sigma~,M) at the pre-step barycentre: E[Z~ | past] under the null.
    pub drift: f64,
    /// KL(P_sigma~,M || P_rho,M) at the pre-step barycentre: E[-Z~ | past] under the mixture.
    pub mixture_drift: f64,
    /// Value the solver reported for the chosen measurement.
    pub solver_value: f64,
}

/// One line of the optional JSON-lines trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceLine {
    pub k: usize,
    pub povm_id: String,
    pub outcome: String,
    pub z_tilde: f64,
    pub s_tilde: f64,
    pub weights_hash: String,
}

/// A single trajectory that can be stepped past the thresholds.
pub struct Trajectory<'a> {
    config: &'a TestConfig,
    truth: Truth,
    state: TrajectoryState,
    cache: PovmCache,
    rng: ChaCha8Rng,
    probes: &'a [DensityMatrix],
    trace: Option<Vec<TraceLine>>,
}

/// Random stream for one trial: independent of how trials are scheduled.
pub(crate) fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Inverse-CDF draw over the ordered outcome list.
pub(crate) fn sample_outcome(povm: &Povm, state: &DensityMatrix, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for x in 0..povm.len() {
        let p = povm.probability(x, state);
        if p > 0.0 {
            last_positive = x;
            cumulative += p;
            if u < cumulative {
                return x;
            }
        }
    }
    last_positive
}

impl<'a> Trajectory<'a> {
    pub fn new(config: &'a TestConfig, truth: Truth, trial_index: u64) -> Result<Self> {
        if let Truth::Alt(sigma) = &truth {
            if sigma.dim() != config.rho().dim() {
                return Err(Error::DimensionMismatch { expected: config.rho().dim(), found: sigma.dim() });
            }
            if !config.set().contains(sigma, MEMBERSHIP_TOL)? {
                return Err(Error::OutsideSet);
            }
        }
        Ok(Self::new_unchecked(config, truth, trial_index))
    }

    /// Skips the membership check for an `Alt` truth the caller has already validated.
    pub(crate) fn new_unchecked(config: &'a TestConfig, truth: Truth, trial_index: u64) -> Self {
        Trajectory {
            config,
            truth,
            state: TrajectoryState::initial(config, 0),
            cache: config.new_cache(),
            rng: trial_rng(config.seed(), trial_index),
            probes: &[],
            trace: None,
        }
    }

    /// Also track the pointwise statistic of each probe state.
    pub fn with_probes(mut self, probes: &'a [DensityMatrix]) -> Self {
        self.probes = probes;
        self.state.probe_s = vec![0.0; probes.len()];
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn state(&self) -> &TrajectoryState {
        &self.state
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }

    /// Measure, sample, update. Ignores the thresholds.
    pub fn step(&mut self) -> Result<StepRecord> {
        let direction = branch(&self.state);
        let choice = self.cache.query(&self.state.barycentre, direction)?;
        let povm = choice.povm;
        let n = povm.len();
        let p: Vec<f64> = (0..n).map(|x| povm.probability(x, self.config.rho()).max(0.0)).collect();
        let q: Vec<f64> = (0..n).map(|x| povm.probability(x, &self.state.barycentre).max(0.0)).collect();
        let drift = kl_slices(&p, &q);
        let mixture_drift = kl_slices(&q, &p);

        let outcome = match &self.truth {
            Truth::Null => sample_outcome(&povm, self.config.rho(), &mut self.rng),
            Truth::Alt(s) | Truth::AltOverride(s) => sample_outcome(&povm, s, &mut self.rng),
            Truth::Mixture => sample_outcome(&povm, &self.state.barycentre, &mut self.rng),
        };
        let z_tilde = apply_outcome(&mut self.state, &povm, outcome, self.config, self.probes)?;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceLine {
                k: self.state.k,
                povm_id: povm_id(&povm),
                outcome: povm.outcomes()[outcome].clone(),
                z_tilde,
                s_tilde: self.state.s_tilde,
                weights_hash: self.state.weights_hash(),
            });
        }
        Ok(StepRecord {
            k: self.state.k,
            branch: direction,
            outcome,
            z_tilde,
            s_tilde: self.state.s_tilde,
            drift,
            mixture_drift,
            solver_value: choice.value,
        })
    }

    /// Steps until a threshold is crossed or k_max is reached.
    pub fn run(mut self) -> Result<TrialOutcome> {
        let decision = loop {
            self.step()?;
            match decide(&self.state, self.config) {
                Verdict::Null => break Decision::AcceptNull,
                Verdict::Alt => break Decision::AcceptAlt,
                Verdict::Continue if self.state.k >= self.config.k_max() => break Decision::Truncated,
                Verdict::Continue => {}
            }
        };
        Ok(self.finish(decision))
    }

    fn finish(self, decision: Decision) -> TrialOutcome {
        TrialOutcome {
            decision,
            stopping_time: self.state.k,
            final_s_tilde: self.state.s_tilde,
            final_pointwise_s: self.state.pointwise_s,
            plus_steps: self.state.plus_steps,
            probe_s: self.state.probe_s,
            trace: self.trace,
        }
    }
}

/// Runs one trial. Deterministic given the config seed, the truth and `trial_index`.
pub fn run_trial(config: &TestConfig, truth: Truth, trial_index: u64) -> Result<TrialOutcome> {
    Trajectory::new(config, truth, trial_index)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alt_set::{sample_prior, AltSet, ParticlePrior, PriorMode};
    use crate::quantum::d_max;

    fn r1_config(a: f64, b: f64, k_max: usize) -> TestConfig {
        let set = AltSet::new(vec![
            DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap(),
        ])
        .unwrap();
        let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid).unwrap();
        TestConfig::new(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(), set, prior, a, b, k_max).unwrap()
    }

    #[test]
    fn trials_are_reproducible() {
        let config = r1_config(2.0, 2.0, 200).with_seed(11);
        for i in 0..20 {
            let a = run_trial(&config, Truth::Null, i).unwrap();
            let b = run_trial(&config, Truth::Null, i).unwrap();
            assert_eq!(a.stopping_time, b.stopping_time);
            assert_eq!(a.final_s_tilde.to_bits(), b.final_s_tilde.to_bits());
            assert_eq!(a.decision, b.decision);
        }
    }

    #[test]
    fn decision_matches_final_statistic() {
        let config = r1_config(1.5, 1.0, 100);
        for i in 0..50 {
            for truth in [Truth::Null, Truth::Mixture, Truth::Alt(config.set().vertices()[1].clone())] {
                let out = run_trial(&config, truth, i).unwrap();
                match out.decision {
                    Decision::AcceptNull => assert!(out.final_s_tilde >= 1.0),
                    Decision::AcceptAlt => assert!(out.final_s_tilde <= -1.5),
                    Decision::Truncated => panic!("horizon 100 should not truncate here"),
                }
                assert!(out.plus_steps <= out.stopping_time);
            }
        }
    }

    #[test]
    fn huge_thresholds_truncate_at_horizon_one() {
        let config = r1_config(1e6, 1e6, 1);
        let out = run_trial(&config, Truth::Null, 0).unwrap();
        assert_eq!(out.decision, Decision::Truncated);
        assert_eq!(out.stopping_time, 1);
    }

    #[test]
    fn alt_truth_outside_set_needs_override() {
        let config = r1_config(1.0, 1.0, 10);
        let outside = DensityMatrix::diagonal(&[0.6, 0.4]).unwrap();
        assert!(matches!(run_trial(&config, Truth::Alt(outside.clone()), 0), Err(Error::OutsideSet)));
        assert!(run_trial(&config, Truth::AltOverride(outside), 0).is_ok());
    }

    #[test]
    fn step_invariants_along_a_horizon_run() {
        let config = r1_config(1.0, 1.0, 1);
        let prior_w = config.prior().log_weights().to_vec();
        let mut t = Trajectory::new(&config, Truth::Null, 3).unwrap();
        for _ in 0..200 {
            let before = t.state().barycentre.clone();
            let rec = t.step().unwrap();
            let s = t.state();
            assert!((s.s_tilde - s.direct_s_tilde(&prior_w)).abs() <= 1e-9);
            assert!(s.gap_excess(&prior_w) <= 1e-9);
            let bound = d_max(config.rho(), &before).unwrap().max(d_max(&before, config.rho()).unwrap());
            assert!(rec.z_tilde.abs() <= bound + 1e-9);
            assert!(config.set().contains(&s.barycentre, MEMBERSHIP_TOL).unwrap());
        }
    }

    #[test]
    fn trace_lines_follow_steps() {
        let config = r1_config(2.0, 2.0, 50);
        let out = Trajectory::new(&config, Truth::Null, 0).unwrap().with_trace().run().unwrap();
        let trace = out.trace.unwrap();
        assert_eq!(trace.len(), out.stopping_time);
        assert_eq!(trace.last().unwrap().s_tilde, out.final_s_tilde);
        assert_eq!(trace[0].k, 1);
        assert_eq!(trace[0].povm_id.len(), 16);
    }

    #[test]
    fn probes_track_pointwise_statistics() {
        let config = r1_config(2.0, 2.0, 50);
        let probes = config.prior().atoms().to_vec();
        let out = Trajectory::new(&config, Truth::Null, 5).unwrap().with_probes(&probes).run().unwrap();
        for (a, b) in out.probe_s.iter().zip(&out.final_pointwise_s) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let _ = ParticlePrior::singleton(probes[0].clone());
    }
}
