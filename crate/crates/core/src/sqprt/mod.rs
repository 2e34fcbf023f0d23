//! The mixture sequential probability ratio test.
//!
//! One trajectory alternates measurement choice (driven by the posterior
//! mean state and the sign of the mixture statistic), outcome sampling,
//! a log-domain posterior update and threshold stopping.

mod simple;
mod trajectory;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use simple::run_simple_trial;
pub use trajectory::{run_trial, StepRecord, TraceLine, Trajectory, Truth};

use crate::alt_set::{AltSet, ParticlePrior, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::logspace::logsumexp;
use crate::mre::{Direction, PovmCache, SolverOptions, SOLVER_RANK_FLOOR};
use crate::quantum::{DensityMatrix, Povm};

/// Deliberate defects used to check that the property suite catches them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Posterior log weights are not renormalized after each update.
    SkipRenormalization,
}

/// Everything one trial needs besides the truth and the trial index.
#[derive(Clone, Debug)]
pub struct TestConfig {
    rho: DensityMatrix,
    set: AltSet,
    prior: ParticlePrior,
    a_threshold: f64,
    b_threshold: f64,
    k_max: usize,
    solver: SolverOptions,
    seed: u64,
    mutation: Option<Mutation>,
}

impl TestConfig {
    /// Atoms of `prior` must lie in `set`; their vertex weights are recovered if missing.
    pub fn new(
        rho: DensityMatrix,
        set: AltSet,
        prior: ParticlePrior,
        a_threshold: f64,
        b_threshold: f64,
        k_max: usize,
    ) -> Result<Self> {
        if rho.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), found: rho.dim() });
        }
        if !rho.is_full_rank(SOLVER_RANK_FLOOR) {
            return Err(Error::NotFullRank { min_eigenvalue: rho.min_eigenvalue() });
        }
        let prior = prior.attach(&set, MEMBERSHIP_TOL)?;
        check_thresholds(a_threshold, b_threshold)?;
        if k_max == 0 {
            return Err(Error::InvalidThreshold("k_max must be at least 1".into()));
        }
        Ok(TestConfig {
            rho,
            set,
            prior,
            a_threshold,
            b_threshold,
            k_max,
            solver: SolverOptions::default(),
            seed: 0,
            mutation: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_mutation(mut self, mutation: Option<Mutation>) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn with_thresholds(mut self, a_threshold: f64, b_threshold: f64) -> Result<Self> {
        check_thresholds(a_threshold, b_threshold)?;
        self.a_threshold = a_threshold;
        self.b_threshold = b_threshold;
        Ok(self)
    }

    pub fn with_k_max(mut self, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::InvalidThreshold("k_max must be at least 1".into()));
        }
        self.k_max = k_max;
        Ok(self)
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn set(&self) -> &AltSet {
        &self.set
    }

    pub fn prior(&self) -> &ParticlePrior {
        &self.prior
    }

    pub fn a_threshold(&self) -> f64 {
        self.a_threshold
    }

    pub fn b_threshold(&self) -> f64 {
        self.b_threshold
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn solver(&self) -> &SolverOptions {
        &self.solver
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mutation(&self) -> Option<Mutation> {
        self.mutation
    }

    /// A fresh measurement cache for one trajectory.
    pub fn new_cache(&self) -> PovmCache {
        PovmCache::new(self.rho.clone(), self.solver, self.seed)
    }
}

fn check_thresholds(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidThreshold(format!("thresholds must be positive and finite, got A={a}, B={b}")));
    }
    Ok(())
}

/// Thresholds (A, B) = (n (D_M(D||rho) - tau), n (D_M(rho||D) - tau)).
pub fn thresholds_for(n: usize, tau: f64, d_m_rho_to_set: f64, d_m_set_to_rho: f64) -> Result<(f64, f64)> {
    let limit = d_m_rho_to_set.min(d_m_set_to_rho);
    if !(tau > 0.0 && tau < limit) {
        return Err(Error::TauOutOfRange { tau, limit });
    }
    if n == 0 {
        return Err(Error::InvalidThreshold("n must be at least 1".into()));
    }
    let n = n as f64;
    Ok((n * (d_m_set_to_rho - tau), n * (d_m_rho_to_set - tau)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    AcceptNull,
    AcceptAlt,
    Truncated,
}

/// Result of [`decide`] for a running trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Declare the null (0).
    Null,
    /// Declare the alternative (1).
    Alt,
    Continue,
}

/// Posterior and statistics after k steps.
#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub k: usize,
    /// Mixture statistic S~_k.
    pub s_tilde: f64,
    /// Log posterior weights; normalized to logsumexp 0.
    pub log_weights: Vec<f64>,
    /// Pointwise statistics S_k(sigma_i) per atom.
    pub pointwise_s: Vec<f64>,
    /// Posterior mean state sigma~_k.
    pub barycentre: DensityMatrix,
    /// Vertex weights of the barycentre.
    pub barycentre_weights: Vec<f64>,
    pub last_povm: Option<Povm>,
    /// Pointwise statistics of extra states tracked alongside the atoms.
    pub probe_s: Vec<f64>,
    /// Number of steps j <= k taken with S~_{j-1} >= 0.
    pub plus_steps: usize,
}

impl TrajectoryState {
    pub fn initial(config: &TestConfig, probes: usize) -> Self {
        let prior = config.prior();
        let log_weights = prior.log_weights().to_vec();
        let (barycentre, barycentre_weights) = mean_state(config, &log_weights);
        TrajectoryState {
            k: 0,
            s_tilde: 0.0,
            pointwise_s: vec![0.0; log_weights.len()],
            log_weights,
            barycentre,
            barycentre_weights,
            last_povm: None,
            probe_s: vec![0.0; probes],
            plus_steps: 0,
        }
    }

    /// S~_k from its defining mixture, -log sum_i w_i exp(-S_k(sigma_i)).
    pub fn direct_s_tilde(&self, prior_log_weights: &[f64]) -> f64 {
        let terms: Vec<f64> = prior_log_weights.iter().zip(&self.pointwise_s).map(|(w, s)| w - s).collect();
        -logsumexp(&terms)
    }

    /// max_i (S~_k - S_k(sigma_i) - log(1/w_i)); never positive for a correct update.
    pub fn gap_excess(&self, prior_log_weights: &[f64]) -> f64 {
        prior_log_weights
            .iter()
            .zip(&self.pointwise_s)
            .map(|(w, s)| self.s_tilde - s + w)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hash of the posterior log weights, for traces.
    pub fn weights_hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.log_weights {
            h.update(w.to_le_bytes());
        }
        short_hex(&h.finalize())
    }
}

/// Identifier of a measurement derived from its effect entries.
pub fn povm_id(povm: &Povm) -> String {
    let mut h = Sha256::new();
    for e in povm.effects() {
        for z in e.iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    short_hex(&h.finalize())
}

fn short_hex(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Normalized posterior weights and the posterior mean state.
fn mean_state(config: &TestConfig, log_weights: &[f64]) -> (DensityMatrix, Vec<f64>) {
    let z = logsumexp(log_weights);
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - z).exp()).collect();
    let set = config.set();
    let mut vertex = vec![0.0; set.vertices().len()];
    for (w, vw) in weights.iter().zip(config.prior().vertex_weights()) {
        for (acc, x) in vertex.iter_mut().zip(vw) {
            *acc += w * x;
        }
    }
    (set.point(&vertex), vertex)
}

/// Direction the next measurement optimizes for: null drift when S~ >= 0.
pub fn branch(state: &TrajectoryState) -> Direction {
    if state.s_tilde >= 0.0 {
        Direction::NullDrift
    } else {
        Direction::AltDrift
    }
}

/// The measurement for the next step, chosen at the current barycentre.
pub fn select_measurement(state: &TrajectoryState, cache: &mut PovmCache) -> Result<Povm> {
    cache.m_star(&state.barycentre, branch(state))
}

/// Applies one outcome in place and returns Z~, the mixture increment.
pub(crate) fn apply_outcome(
    state: &mut TrajectoryState,
    povm: &Povm,
    outcome: usize,
    config: &TestConfig,
    probes: &[DensityMatrix],
) -> Result<f64> {
    if outcome >= povm.len() {
        return Err(Error::InvalidPovm(format!("outcome index {outcome} out of range")));
    }
    let p = povm.probability(outcome, config.rho());
    if !(p > 0.0) {
        return Err(Error::ZeroProbabilityOutcome { outcome, which: "null state" });
    }
    let log_p = p.ln();
    let atoms = config.prior().atoms();
    let mut log_q = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let q = povm.probability(outcome, atom);
        if !(q > 0.0) {
            return Err(Error::ZeroProbabilityOutcome { outcome, which: "prior atom" });
        }
        log_q.push(q.ln());
    }
    for (s, probe) in state.probe_s.iter_mut().zip(probes) {
        let q = povm.probability(outcome, probe);
        if !(q > 0.0) {
            return Err(Error::ZeroProbabilityOutcome { outcome, which: "probe state" });
        }
        *s += log_p - q.ln();
    }

    // Tr[M(x) sigma~_{k-1}] = sum_i w_i Tr[M(x) sigma_i] with the pre-update weights
    let joint: Vec<f64> = state.log_weights.iter().zip(&log_q).map(|(w, q)| w + q).collect();
    let z = log_p - logsumexp(&joint);

    if state.s_tilde >= 0.0 {
        state.plus_steps += 1;
    }
    state.s_tilde += z;
    for (s, q) in state.pointwise_s.iter_mut().zip(&log_q) {
        *s += log_p - q;
    }
    let norm = logsumexp(&joint) - log_p;
    for (w, j) in state.log_weights.iter_mut().zip(&joint) {
        *w = j - log_p;
        if config.mutation() != Some(Mutation::SkipRenormalization) {
            *w -= norm;
        }
    }
    let (barycentre, weights) = mean_state(config, &state.log_weights);
    state.barycentre = barycentre;
    state.barycentre_weights = weights;
    state.last_povm = Some(povm.clone());
    state.k += 1;
    Ok(z)
}

/// Pure form of the update: returns the successor state.
pub fn posterior_and_llr_update(
    state: &TrajectoryState,
    povm: &Povm,
    outcome: usize,
    config: &TestConfig,
) -> Result<TrajectoryState> {
    let mut next = state.clone();
    apply_outcome(&mut next, povm, outcome, config, &[])?;
    Ok(next)
}

/// Stopping rule with inclusive boundaries.
pub fn decide(state: &TrajectoryState, config: &TestConfig) -> Verdict {
    decide_value(state.s_tilde, config.a_threshold(), config.b_threshold())
}

pub(crate) fn decide_value(s: f64, a: f64, b: f64) -> Verdict {
    if s >= b {
        Verdict::Null
    } else if s <= -a {
        Verdict::Alt
    } else {
        Verdict::Continue
    }
}

/// One finished (or truncated) trial.
#[derive(Clone, Debug, Serialize)]
pub struct TrialOutcome {
    pub decision: Decision,
    pub stopping_time: usize,
    pub final_s_tilde: f64,
    pub final_pointwise_s: Vec<f64>,
    pub plus_steps: usize,
    /// Final pointwise statistics of the probe states, if any were tracked.
    pub probe_s: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceLine>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alt_set::{sample_prior, PriorMode};
    use crate::linalg::CMatrix;

    fn two_atom_config() -> TestConfig {
        let a = DensityMatrix::diagonal(&[0.25, 0.75]).unwrap();
        let b = DensityMatrix::diagonal(&[0.4, 0.6]).unwrap();
        let set = AltSet::new(vec![a.clone(), b.clone()]).unwrap();
        let prior = ParticlePrior::new(vec![a, b], &[0.5, 0.5]).unwrap();
        TestConfig::new(DensityMatrix::maximally_mixed(2), set, prior, 1.0, 1.0, 10).unwrap()
    }

    #[test]
    fn posterior_update_example() {
        let config = two_atom_config();
        let state = TrajectoryState::initial(&config, 0);
        let next = posterior_and_llr_update(&state, &Povm::computational(2), 0, &config).unwrap();
        let w: Vec<f64> = next.log_weights.iter().map(|w| w.exp()).collect();
        assert!((w[0] - 5.0 / 13.0).abs() < 1e-12 && (w[1] - 8.0 / 13.0).abs() < 1e-12);
        let m = next.barycentre.matrix();
        assert!((m[(0, 0)].re - 4.45 / 13.0).abs() < 1e-12);
        assert!((m[(1, 1)].re - 8.55 / 13.0).abs() < 1e-12);
        // Z~ used the prior barycentre diag(0.325, 0.675)
        assert!((next.s_tilde - (0.5f64 / 0.325).ln()).abs() < 1e-12);
        assert!((next.s_tilde - next.direct_s_tilde(config.prior().log_weights())).abs() < 1e-12);
        assert_eq!(next.k, 1);
        assert_eq!(next.plus_steps, 1);
    }

    #[test]
    fn singleton_increment_is_pointwise() {
        let sigma = DensityMatrix::from_bloch([0.1, 0.3, -0.2]).unwrap();
        let set = AltSet::new(vec![sigma.clone()]).unwrap();
        let config = TestConfig::new(
            DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(),
            set,
            ParticlePrior::singleton(sigma),
            1.0,
            1.0,
            5,
        )
        .unwrap();
        let mut state = TrajectoryState::initial(&config, 0);
        let povm = Povm::qubit_axis([0.6, 0.0, 0.8]);
        for x in [0, 1, 1, 0] {
            state = posterior_and_llr_update(&state, &povm, x, &config).unwrap();
            assert_eq!(state.s_tilde, state.pointwise_s[0]);
        }
    }

    #[test]
    fn decide_boundaries() {
        let config = two_atom_config().with_thresholds(2.0, 3.0).unwrap();
        let mut state = TrajectoryState::initial(&config, 0);
        assert_eq!(decide(&state, &config), Verdict::Continue);
        state.s_tilde = 3.0;
        assert_eq!(decide(&state, &config), Verdict::Null);
        state.s_tilde = -2.0;
        assert_eq!(decide(&state, &config), Verdict::Alt);
        state.s_tilde = -1.999;
        assert_eq!(decide(&state, &config), Verdict::Continue);
    }

    #[test]
    fn branch_rule() {
        let config = two_atom_config();
        let mut state = TrajectoryState::initial(&config, 0);
        assert_eq!(branch(&state), Direction::NullDrift);
        state.s_tilde = 2.0;
        assert_eq!(branch(&state), Direction::NullDrift);
        state.s_tilde = -0.001;
        assert_eq!(branch(&state), Direction::AltDrift);
        let mut cache = config.new_cache();
        let povm = select_measurement(&state, &mut cache).unwrap();
        let expected = cache.m_star(&state.barycentre, Direction::AltDrift).unwrap();
        assert_eq!(povm.effects(), expected.effects());
    }

    #[test]
    fn thresholds() {
        assert_eq!(thresholds_for(10, 0.05, 0.25, 0.30).unwrap(), (2.5, 2.0));
        assert!(matches!(thresholds_for(10, 0.30, 0.40, 0.30), Err(Error::TauOutOfRange { .. })));
        assert!(matches!(thresholds_for(10, 0.0, 0.40, 0.30), Err(Error::TauOutOfRange { .. })));
        assert!(matches!(thresholds_for(0, 0.05, 0.25, 0.30), Err(Error::InvalidThreshold(_))));
    }

    #[test]
    fn config_rejects_bad_parameters() {
        let config = two_atom_config();
        assert!(config.clone().with_thresholds(0.0, 1.0).is_err());
        assert!(config.clone().with_k_max(0).is_err());
        let outside = ParticlePrior::new(vec![DensityMatrix::diagonal(&[0.9, 0.1]).unwrap()], &[1.0]).unwrap();
        let err = TestConfig::new(
            DensityMatrix::maximally_mixed(2),
            config.set().clone(),
            outside,
            1.0,
            1.0,
            1,
        );
        assert!(matches!(err, Err(Error::OutsideSet)));
    }

    #[test]
    fn zero_effect_outcome_rejected() {
        let config = two_atom_config();
        let state = TrajectoryState::initial(&config, 0);
        let povm = Povm::new(
            vec!["a".into(), "b".into()],
            vec![CMatrix::identity(2, 2), CMatrix::zeros(2, 2)],
        )
        .unwrap();
        assert!(matches!(
            posterior_and_llr_update(&state, &povm, 1, &config),
            Err(Error::ZeroProbabilityOutcome { outcome: 1, .. })
        ));
    }

    #[test]
    fn gap_bound_holds_after_updates() {
        let set = AltSet::new(vec![
            DensityMatrix::diagonal(&[0.3, 0.7]).unwrap(),
            DensityMatrix::from_real(2, &[0.5, 0.2, 0.2, 0.5]).unwrap(),
        ])
        .unwrap();
        let prior = sample_prior(&set, 9, 0, PriorMode::VertexGrid).unwrap();
        let config = TestConfig::new(DensityMatrix::diagonal(&[0.8, 0.2]).unwrap(), set, prior, 5.0, 5.0, 50).unwrap();
        let mut state = TrajectoryState::initial(&config, 0);
        let povm = Povm::qubit_axis([0.0, 0.0, 1.0]);
        for x in [0, 0, 1, 0, 1, 1, 1, 0] {
            state = posterior_and_llr_update(&state, &povm, x, &config).unwrap();
            assert!(state.gap_excess(config.prior().log_weights()) <= 1e-9);
            assert!(logsumexp(&state.log_weights).abs() <= 1e-9);
        }
    }
}
