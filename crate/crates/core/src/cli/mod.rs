//! Batch entry points behind the `sqht` binary.
//!
//! Each command takes a JSON experiment file, writes its reports into the
//! output directory and maps failures onto a fixed exit-code taxonomy.
//! Output directory precedence: `--output-dir`, then the `SQHT_OUTPUT_DIR`
//! environment variable, then `output.directory` from the config.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    AltSetSpec, Experiment, ExperimentConfig, Format, McSpec, OutputSpec, PriorSpec, ProblemSpec, ProptestSpec,
    StateSource, TestSpec,
};

use crate::error::Error;
use crate::harness::{exponent_sweep, property_suite, McOptions, PropertyOptions, SweepSettings};
use crate::mre::{mre_from_set, mre_to_set, oracle_mre_qubit, SetMreResult, SolverOptions};
use crate::quantum::wire::SCHEMA_VERSION;
use crate::sqprt::{thresholds_for, TestConfig, Trajectory, Truth};

pub const OUTPUT_DIR_ENV: &str = "SQHT_OUTPUT_DIR";
/// Sphere grid used for the qubit oracle cross-check.
pub const ORACLE_GRID: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    /// Unexpected runtime failure, such as an unwritable output directory.
    Runtime = 1,
    /// Unreadable file, malformed JSON, schema or usage error.
    Schema = 2,
    /// Invalid states, null inside the set, tau out of range.
    Physics = 3,
    SolverNotConverged = 4,
    Truncation = 5,
    PropertyFailure = 6,
}

#[derive(Clone, Debug)]
pub struct CommandError {
    pub code: ExitCode,
    pub message: String,
}

impl CommandError {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        CommandError { code, message: message.into() }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Lp(_) => ExitCode::Runtime,
            Error::Config(_) => ExitCode::Schema,
            _ => ExitCode::Physics,
        };
        CommandError { code, message: e.to_string() }
    }
}

/// Command-line overrides of config values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// What a command printed and wrote, and how it ended.
#[derive(Clone, Debug)]
pub struct CommandOutcome {
    pub code: ExitCode,
    pub stdout: String,
    /// Human-readable failure description, empty on success.
    pub stderr: String,
    pub written: Vec<PathBuf>,
}

impl CommandOutcome {
    fn fail(e: CommandError, stdout: String, written: Vec<PathBuf>) -> Self {
        CommandOutcome { code: e.code, stdout, stderr: e.message, written }
    }
}

#[derive(Serialize)]
struct Header<'a, T: Serialize> {
    v: &'static str,
    command: &'static str,
    config_hash: &'a str,
    solver: &'a SolverOptions,
    #[serde(flatten)]
    body: T,
}

struct Context {
    exp: Experiment,
    out_dir: PathBuf,
    workers: usize,
    written: Vec<PathBuf>,
}

impl Context {
    fn new(config_path: &Path, overrides: &Overrides) -> Result<Self, CommandError> {
        let exp = Experiment::load(config_path)?;
        let out_dir = overrides
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| exp.config.output.directory.clone());
        let workers = overrides.workers.unwrap_or(exp.config.mc.workers).max(1);
        Ok(Context { exp, out_dir, workers, written: Vec::new() })
    }

    fn wants(&self, f: Format) -> bool {
        self.exp.config.output.formats.contains(&f)
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CommandError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            CommandError::new(ExitCode::Runtime, format!("cannot create {}: {e}", self.out_dir.display()))
        })?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CommandError::new(ExitCode::Runtime, format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, command: &'static str, body: T) -> Result<(), CommandError> {
        let doc = Header {
            v: SCHEMA_VERSION,
            command,
            config_hash: &self.exp.config_hash,
            solver: &self.exp.config.solver,
            body,
        };
        let mut text = serde_json::to_vec_pretty(&doc).map_err(Error::from)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    fn reference(&self) -> Result<(SetMreResult, SetMreResult), CommandError> {
        let e = &self.exp;
        let solver = &e.config.solver;
        let to = mre_to_set(&e.rho, &e.set, solver, e.config.mc.seed)?;
        let from = mre_from_set(&e.set, &e.rho, solver, e.config.mc.seed)?;
        Ok((to, from))
    }
}

fn run(
    config_path: &Path,
    overrides: &Overrides,
    body: impl FnOnce(&mut Context, &mut String) -> Result<(), CommandError>,
) -> CommandOutcome {
    let mut stdout = String::new();
    let mut ctx = match Context::new(config_path, overrides) {
        Ok(c) => c,
        Err(e) => return CommandOutcome::fail(e, stdout, Vec::new()),
    };
    match body(&mut ctx, &mut stdout) {
        Ok(()) => CommandOutcome { code: ExitCode::Ok, stdout, stderr: String::new(), written: ctx.written },
        Err(e) => CommandOutcome::fail(e, stdout, ctx.written),
    }
}

/// Schema and physics validation with a short summary.
pub fn cmd_validate(config_path: &Path, overrides: &Overrides) -> CommandOutcome {
    run(config_path, overrides, |ctx, out| {
        let e = &ctx.exp;
        writeln!(out, "config ok ({})", &e.config_hash[..16]).unwrap();
        writeln!(out, "d = {}", e.rho.dim()).unwrap();
        writeln!(out, "vertices = {}", e.set.vertices().len()).unwrap();
        writeln!(out, "delta = {}", e.set.delta()).unwrap();
        writeln!(out, "prior atoms = {}", e.prior.len()).unwrap();
        writeln!(out, "null state outside the alternative set").unwrap();
        Ok(())
    })
}

#[derive(Serialize)]
struct OracleCheck {
    grid: usize,
    rho_to_set: f64,
    set_to_rho: f64,
    max_abs_diff: f64,
}

#[derive(Serialize)]
struct MreReport<'a> {
    dim: usize,
    delta: f64,
    rho_to_set: &'a SetMreResult,
    set_to_rho: &'a SetMreResult,
    oracle: Option<OracleCheck>,
    oracle_note: Option<&'static str>,
}

/// Both set-level measured relative entropies, with the qubit oracle when d = 2.
pub fn cmd_mre(config_path: &Path, overrides: &Overrides) -> CommandOutcome {
    run(config_path, overrides, |ctx, out| {
        let (to, from) = ctx.reference()?;
        let e = &ctx.exp;
        let (oracle, oracle_note) = if e.rho.dim() == 2 {
            let a = oracle_mre_qubit(&e.rho, &to.minimizer_state, ORACLE_GRID)?;
            let b = oracle_mre_qubit(&from.minimizer_state, &e.rho, ORACLE_GRID)?;
            let diff = (a - to.value).abs().max((b - from.value).abs());
            (Some(OracleCheck { grid: ORACLE_GRID, rho_to_set: a, set_to_rho: b, max_abs_diff: diff }), None)
        } else {
            (None, Some("no oracle at d>2"))
        };
        writeln!(out, "D_M(rho || D) = {:.10}", to.value).unwrap();
        writeln!(out, "D_M(D || rho) = {:.10}", from.value).unwrap();
        match &oracle {
            Some(o) => writeln!(out, "oracle (grid {}): max |solver - oracle| = {:.3e}", o.grid, o.max_abs_diff).unwrap(),
            None => writeln!(out, "no oracle at d>2").unwrap(),
        }
        let report =
            MreReport { dim: e.rho.dim(), delta: e.set.delta(), rho_to_set: &to, set_to_rho: &from, oracle, oracle_note };
        ctx.write_json("mre.json", "mre", report)?;
        if !(to.converged && from.converged) {
            return Err(CommandError::new(
                ExitCode::SolverNotConverged,
                "measured relative entropy solver did not converge; raise solver.restarts or solver.max_iterations",
            ));
        }
        Ok(())
    })
}

/// Error probabilities and realized exponents over test.n_grid.
pub fn cmd_sweep(config_path: &Path, overrides: &Overrides) -> CommandOutcome {
    run(config_path, overrides, |ctx, out| {
        let (to, from) = ctx.reference()?;
        let tau = ctx.exp.config.tau(to.value, from.value);
        thresholds_for(ctx.exp.config.test.n_grid[0], tau, to.value, from.value)?;
        let e = &ctx.exp;
        let c = &e.config;
        let mc = McOptions { trials: c.mc.trials, seed: c.mc.seed, workers: ctx.workers };
        let settings = SweepSettings {
            n_grid: c.test.n_grid.clone(),
            tau,
            k_max: c.test.k_max,
            probes: ctx.exp.probes(),
            mc,
            solver: c.solver,
        };
        let report = exponent_sweep(&e.rho, &e.set, &e.prior, &settings)?;
        out.push_str(&report.table());

        if ctx.wants(Format::Csv) {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            ctx.write("sweep.csv", &buf)?;
        }
        if ctx.wants(Format::JsonlTrace) {
            write_traces(ctx, &settings, &report.rows.iter().map(|r| (r.n, r.a, r.b)).collect::<Vec<_>>())?;
        }
        if ctx.wants(Format::Json) {
            ctx.write_json("sweep.json", "sweep", &report)?;
        }
        let k_max = ctx.exp.config.test.k_max;
        if let Some(row) = report.rows.iter().find(|r| r.estimates.truncation_rate > 0.01) {
            return Err(CommandError::new(
                ExitCode::Truncation,
                format!(
                    "truncation rate {:.4} at n = {} exceeds 0.01; horizon too short, try test.k_max = {}",
                    row.estimates.truncation_rate,
                    row.n,
                    4 * k_max
                ),
            ));
        }
        Ok(())
    })
}

/// The first `trace_trials` null trials of each sweep row, one JSON-lines file each.
fn write_traces(ctx: &mut Context, settings: &SweepSettings, rows: &[(usize, f64, f64)]) -> Result<(), CommandError> {
    let e = &ctx.exp;
    let base = TestConfig::new(e.rho.clone(), e.set.clone(), e.prior.clone(), 1.0, 1.0, settings.k_max)?
        .with_solver(settings.solver);
    let mut files = Vec::new();
    for (r, &(n, a, b)) in rows.iter().enumerate() {
        // the same seed and streams the sweep used for this row's null batch
        let config = base.clone().with_thresholds(a, b)?.with_seed(settings.mc.derive(r as u64).seed);
        for i in 0..e.config.output.trace_trials {
            let outcome = Trajectory::new(&config, Truth::Null, i as u64)?.with_trace().run()?;
            let mut text = String::new();
            for line in outcome.trace.unwrap_or_default() {
                text.push_str(&serde_json::to_string(&line).map_err(Error::from)?);
                text.push('\n');
            }
            files.push((format!("trace_n{n}_trial{i}.jsonl"), text));
        }
    }
    for (name, text) in files {
        ctx.write(&name, text.as_bytes())?;
    }
    Ok(())
}

/// The statistical property suite on unstopped and stopped trajectories.
pub fn cmd_proptest(config_path: &Path, overrides: &Overrides) -> CommandOutcome {
    run(config_path, overrides, |ctx, out| {
        let e = &ctx.exp;
        let c = &e.config;
        let p = &c.proptest;
        if p.horizon < 20 {
            return Err(CommandError::new(ExitCode::Schema, format!("proptest.horizon must be at least 20, got {}", p.horizon)));
        }
        let config = TestConfig::new(e.rho.clone(), e.set.clone(), e.prior.clone(), 1.0, 1.0, c.test.k_max)?
            .with_solver(c.solver)
            .with_mutation(c.mutation);
        let opts = PropertyOptions {
            trials: p.trials.unwrap_or(c.mc.trials),
            horizon: p.horizon,
            seed: c.mc.seed,
            workers: ctx.workers,
            plus_time_n: p.plus_time_n,
            tau_fraction: p.tau_fraction,
            k_max: c.test.k_max,
            drift_samples: p.drift_samples,
            ..PropertyOptions::default()
        };
        let report = property_suite(&config, &opts)?;
        for check in &report.checks {
            let at = match (check.k, check.probe) {
                (Some(k), _) => format!("k={k}"),
                (None, Some(j)) => format!("probe {j}"),
                (None, None) => String::new(),
            };
            writeln!(
                out,
                "({}) {:<38} {:<8} stat={:<12.5e} tol={:<10.3e} N={:<7} {}",
                check.check,
                check.name,
                at,
                check.statistic,
                check.tolerance,
                check.sample_size,
                if check.passed { "pass" } else { "FAIL" }
            )
            .unwrap();
        }
        let failed = report.failed_checks();
        ctx.write_json("properties.json", "proptest", &report)?;
        if !failed.is_empty() {
            let list: Vec<String> = failed.iter().map(|c| format!("({c})")).collect();
            return Err(CommandError::new(ExitCode::PropertyFailure, format!("failed checks: {}", list.join(", "))));
        }
        Ok(())
    })
}
