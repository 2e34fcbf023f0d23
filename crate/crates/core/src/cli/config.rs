use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CommandError, ExitCode};
use crate::alt_set::{sample_prior, AltSet, ParticlePrior, PriorMode};
use crate::error::Error;
use crate::mre::SolverOptions;
use crate::quantum::wire::{check_version, from_rows, StateWire};
use crate::quantum::{validate_state, DensityMatrix};
use crate::sqprt::Mutation;

/// The experiment file, schema v1.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub v: Option<String>,
    pub problem: ProblemSpec,
    pub prior: PriorSpec,
    pub test: TestSpec,
    pub mc: McSpec,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub proptest: ProptestSpec,
    /// Deliberate defect for exercising the property suite.
    #[serde(default)]
    pub mutation: Option<Mutation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub rho: StateSource,
    pub alt_set: AltSetSpec,
}

/// A state given inline or as a path to a state file (relative to the config).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSource {
    File(PathBuf),
    Inline(StateWire),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltSetSpec {
    pub vertices: Vec<StateSource>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub mode: PriorMode,
    pub n_atoms: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    /// Absolute margin below the reference exponents.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Margin as a fraction of min(D_M(rho||D), D_M(D||rho)); used when `tau` is absent.
    #[serde(default)]
    pub tau_fraction: Option<f64>,
    pub n_grid: Vec<usize>,
    pub k_max: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    /// Size of the vertex-grid probe set for the worst type-II error.
    #[serde(default = "nine")]
    pub probe_points: usize,
}

fn one() -> usize {
    1
}

fn nine() -> usize {
    9
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    #[serde(rename = "json")]
    Json,
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "jsonl-trace")]
    JsonlTrace,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Null trials per n written as JSON-lines traces when "jsonl-trace" is requested.
    #[serde(default = "one")]
    pub trace_trials: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { directory: PathBuf::from("out"), formats: vec![Format::Json, Format::Csv], trace_trials: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProptestSpec {
    /// Defaults to `mc.trials`.
    pub trials: Option<usize>,
    pub horizon: usize,
    pub plus_time_n: [usize; 2],
    pub tau_fraction: f64,
    pub drift_samples: usize,
}

impl Default for ProptestSpec {
    fn default() -> Self {
        ProptestSpec { trials: None, horizon: 30, plus_time_n: [32, 64], tau_fraction: 0.2, drift_samples: 1000 }
    }
}

/// A parsed and physically validated experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub rho: DensityMatrix,
    pub set: AltSet,
    pub prior: ParticlePrior,
}

fn schema(message: String) -> CommandError {
    CommandError { code: ExitCode::Schema, message }
}

fn physics(locator: &str, e: Error) -> CommandError {
    CommandError { code: ExitCode::Physics, message: format!("{locator}: {e}") }
}

fn load_state(source: &StateSource, base: &Path, locator: &str) -> Result<DensityMatrix, CommandError> {
    let wire = match source {
        StateSource::Inline(w) => w.clone(),
        StateSource::File(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| schema(format!("{locator}: cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<StateWire>(&text)
                .map_err(|e| schema(format!("{locator}: {}: {e}", path.display())))?
        }
    };
    check_version(&wire.v).map_err(|e| schema(format!("{locator}: {e}")))?;
    let m = from_rows(&wire.entries).map_err(|e| schema(format!("{locator}: {e}")))?;
    if let Some(d) = wire.dim {
        if d != m.nrows() {
            return Err(schema(format!("{locator}: dim {d} but {} rows", m.nrows())));
        }
    }
    validate_state(&m).map_err(|e| physics(locator, e))
}

impl Experiment {
    /// Reads, schema-checks and physics-checks a config file.
    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let bytes = std::fs::read(path).map_err(|e| schema(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_slice(&bytes).map_err(|e| schema(format!("{}: {e}", path.display())))?;
        check_version(&config.v).map_err(schema)?;
        let config_hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        let base = path.parent().unwrap_or(Path::new("."));
        config.check_fields()?;

        let rho = load_state(&config.problem.rho, base, "problem.rho")?;
        let mut vertices = Vec::with_capacity(config.problem.alt_set.vertices.len());
        for (i, v) in config.problem.alt_set.vertices.iter().enumerate() {
            let locator = format!("problem.alt_set.vertices[{i}]");
            let state = load_state(v, base, &locator)?;
            if state.dim() != rho.dim() {
                return Err(physics(&locator, Error::DimensionMismatch { expected: rho.dim(), found: state.dim() }));
            }
            vertices.push(state);
        }
        let set = AltSet::with_null(vertices, &rho).map_err(|e| physics("problem.alt_set", e))?;
        let prior = sample_prior(&set, config.prior.n_atoms, config.prior.seed, config.prior.mode)
            .map_err(|e| physics("prior", e))?;
        Ok(Experiment { config, config_hash, rho, set, prior })
    }

    /// Probe states for the worst type-II error: a vertex grid over the set.
    pub fn probes(&self) -> Vec<DensityMatrix> {
        if self.set.vertices().len() == 1 {
            return self.set.vertices().to_vec();
        }
        match sample_prior(&self.set, self.config.mc.probe_points, 0, PriorMode::VertexGrid) {
            Ok(grid) => grid.atoms().to_vec(),
            Err(_) => self.set.vertices().to_vec(),
        }
    }
}

impl ExperimentConfig {
    fn check_fields(&self) -> Result<(), CommandError> {
        let t = &self.test;
        if t.n_grid.is_empty() || t.n_grid.contains(&0) {
            return Err(schema("test.n_grid must hold positive integers".into()));
        }
        if t.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(schema("test.n_grid must be strictly increasing".into()));
        }
        if t.k_max == 0 {
            return Err(schema("test.k_max must be at least 1".into()));
        }
        match (t.tau, t.tau_fraction) {
            (Some(_), Some(_)) => return Err(schema("test: give either tau or tau_fraction, not both".into())),
            (None, Some(f)) if !(f > 0.0 && f < 1.0) => {
                return Err(schema(format!("test.tau_fraction must lie in (0, 1), got {f}")))
            }
            _ => {}
        }
        if self.mc.trials == 0 {
            return Err(schema("mc.trials must be at least 1".into()));
        }
        if self.prior.n_atoms == 0 {
            return Err(schema("prior.n_atoms must be at least 1".into()));
        }
        if self.problem.alt_set.vertices.is_empty() {
            return Err(schema("problem.alt_set.vertices is empty".into()));
        }
        if !(self.solver.tol > 0.0) || self.solver.restarts == 0 {
            return Err(schema("solver.tol must be positive and solver.restarts at least 1".into()));
        }
        Ok(())
    }

    /// tau from the config: absolute, or a fraction (default 0.2) of the smaller reference value.
    pub fn tau(&self, d_rho_to_set: f64, d_set_to_rho: f64) -> f64 {
        match (self.test.tau, self.test.tau_fraction) {
            (Some(t), _) => t,
            (None, f) => f.unwrap_or(0.2) * d_rho_to_set.min(d_set_to_rho),
        }
    }
}
