use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn state(diag: &[f64]) -> Value {
    let d = diag.len();
    let rows: Vec<Vec<[f64; 2]>> =
        (0..d).map(|i| (0..d).map(|j| [if i == j { diag[i] } else { 0.0 }, 0.0]).collect()).collect();
    json!({ "entries": rows })
}

fn r1_config() -> Value {
    json!({
        "v": "v1",
        "problem": {
            "rho": state(&[0.8, 0.2]),
            "alt_set": { "vertices": [
                state(&[0.3, 0.7]),
                { "entries": [[[0.5, 0.0], [0.2, 0.0]], [[0.2, 0.0], [0.5, 0.0]]] }
            ]}
        },
        "prior": { "mode": "vertex_grid", "n_atoms": 9, "seed": 0 },
        "test": { "tau_fraction": 0.2, "n_grid": [4, 8], "k_max": 100000 },
        "mc": { "trials": 400, "seed": 9, "probe_points": 3 },
        "output": { "directory": "unused", "formats": ["json", "csv"] },
        "proptest": { "trials": 1000, "drift_samples": 50 }
    })
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn sqht(args: &[&str], env: Option<(&str, &Path)>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sqht"));
    cmd.args(args).env_remove("SQHT_OUTPUT_DIR");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn write_config(dir: &TempDir, name: &str, config: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_vec_pretty(config).unwrap()).unwrap();
    path
}

fn run_cmd(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Run {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    sqht(&args, None)
}

#[test]
fn validate_accepts_r1_and_prints_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "r1.json", &r1_config());
    let run = run_cmd("validate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("d = 2"));
    assert!(run.stdout.contains("vertices = 2"));
    assert!(run.stdout.contains("delta = 0.3"));
}

#[test]
fn validate_reports_physics_violations_with_locators() {
    let dir = TempDir::new().unwrap();
    let mut inside = r1_config();
    // midpoint of the two vertices
    inside["problem"]["rho"] = json!({ "entries": [[[0.4, 0.0], [0.1, 0.0]], [[0.1, 0.0], [0.6, 0.0]]] });
    let run = run_cmd("validate", &write_config(&dir, "inside.json", &inside), dir.path(), &[]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("null state lies in alternative set"), "{}", run.stderr);

    let mut singular = r1_config();
    singular["problem"]["alt_set"]["vertices"][1] = state(&[1.0 - 1e-9, 1e-9]);
    let run = run_cmd("validate", &write_config(&dir, "singular.json", &singular), dir.path(), &[]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("not full rank"), "{}", run.stderr);
    assert!(run.stderr.contains("problem.alt_set"), "{}", run.stderr);

    let mut bad_trace = r1_config();
    bad_trace["problem"]["alt_set"]["vertices"][0] = state(&[0.3, 0.6]);
    let run = run_cmd("validate", &write_config(&dir, "trace.json", &bad_trace), dir.path(), &[]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("problem.alt_set.vertices[0]"), "{}", run.stderr);
}

#[test]
fn schema_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(run_cmd("validate", &garbled, dir.path(), &[]).code, 2);

    let mut unknown = r1_config();
    unknown["mc"]["trails"] = json!(10);
    assert_eq!(run_cmd("validate", &write_config(&dir, "unknown.json", &unknown), dir.path(), &[]).code, 2);

    let mut missing_file = r1_config();
    missing_file["problem"]["rho"] = json!("states/nowhere.json");
    let run = run_cmd("validate", &write_config(&dir, "missing.json", &missing_file), dir.path(), &[]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("problem.rho"), "{}", run.stderr);

    let mut grid = r1_config();
    grid["test"]["n_grid"] = json!([8, 4]);
    assert_eq!(run_cmd("validate", &write_config(&dir, "grid.json", &grid), dir.path(), &[]).code, 2);

    assert_eq!(run_cmd("validate", &dir.path().join("absent.json"), dir.path(), &[]).code, 2);
    assert_eq!(sqht(&["frobnicate"], None).code, 2);
    assert_eq!(sqht(&["sweep"], None).code, 2);
}

#[test]
fn state_files_resolve_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("states")).unwrap();
    fs::write(dir.path().join("states/rho.json"), serde_json::to_vec(&state(&[0.8, 0.2])).unwrap()).unwrap();
    let mut config = r1_config();
    config["problem"]["rho"] = json!("states/rho.json");
    let run = run_cmd("validate", &write_config(&dir, "c.json", &config), &dir.path().join("o"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn mre_reports_oracle_for_qubits_only() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("q");
    let run = run_cmd("mre", &write_config(&dir, "r1.json", &r1_config()), &out, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report: Value = serde_json::from_slice(&fs::read(out.join("mre.json")).unwrap()).unwrap();
    assert_eq!(report["v"], "v1");
    assert_eq!(report["command"], "mre");
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["solver"]["tol"], 1e-8);
    assert!(report["oracle"]["max_abs_diff"].as_f64().unwrap() <= 1e-4);
    assert!(report["rho_to_set"]["povm"]["effects"].is_array());
    assert!(report["set_to_rho"]["minimizer_state"]["entries"].is_array());

    let mut qutrit = r1_config();
    qutrit["problem"]["rho"] = state(&[0.6, 0.3, 0.1]);
    qutrit["problem"]["alt_set"]["vertices"] = json!([state(&[0.2, 0.3, 0.5]), state(&[0.1, 0.5, 0.4])]);
    let out3 = dir.path().join("t");
    let run = run_cmd("mre", &write_config(&dir, "qutrit.json", &qutrit), &out3, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report: Value = serde_json::from_slice(&fs::read(out3.join("mre.json")).unwrap()).unwrap();
    assert!(report["oracle"].is_null());
    assert_eq!(report["oracle_note"], "no oracle at d>2");
}

#[test]
fn starved_solver_exits_four() {
    let dir = TempDir::new().unwrap();
    let mut config = r1_config();
    config["problem"]["rho"] = state(&[0.6, 0.3, 0.1]);
    config["problem"]["alt_set"]["vertices"] =
        json!([{ "entries": [[[0.3, 0.0], [0.1, 0.05], [0.0, 0.0]], [[0.1, -0.05], [0.3, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0], [0.4, 0.0]]] }]);
    config["prior"]["n_atoms"] = json!(1);
    config["solver"] = json!({ "max_iterations": 1, "restarts": 1 });
    let run = run_cmd("mre", &write_config(&dir, "c.json", &config), dir.path(), &[]);
    assert_eq!(run.code, 4, "{}", run.stderr);
}

#[test]
fn sweep_rejects_tau_before_simulating() {
    let dir = TempDir::new().unwrap();
    let mut config = r1_config();
    config["test"]["tau_fraction"] = Value::Null;
    config["test"]["tau"] = json!(0.5);
    let out = dir.path().join("never");
    let run = run_cmd("sweep", &write_config(&dir, "c.json", &config), &out, &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    assert!(run.stderr.contains("tau"), "{}", run.stderr);
    assert!(!out.exists());
}

#[test]
fn sweep_flags_truncation() {
    let dir = TempDir::new().unwrap();
    let mut config = r1_config();
    config["test"]["k_max"] = json!(3);
    let run = run_cmd("sweep", &write_config(&dir, "c.json", &config), &dir.path().join("o"), &[]);
    assert_eq!(run.code, 5, "{}", run.stderr);
    assert!(run.stderr.contains("k_max = 12"), "{}", run.stderr);
}

#[test]
fn sweep_outputs_are_identical_across_worker_counts_and_repeats() {
    let dir = TempDir::new().unwrap();
    let mut config = r1_config();
    config["output"]["formats"] = json!(["json", "csv", "jsonl-trace"]);
    let cfg = write_config(&dir, "c.json", &config);
    let mut outputs = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let out = dir.path().join(tag);
        let run = run_cmd("sweep", &cfg, &out, &["--workers", workers]);
        assert_eq!(run.code, 0, "{}", run.stderr);
        assert!(run.stdout.contains("reference:"));
        let mut names: Vec<String> =
            fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        names.sort();
        let files: Vec<(String, Vec<u8>)> = names.into_iter().map(|n| (n.clone(), fs::read(out.join(&n)).unwrap())).collect();
        outputs.push(files);
    }
    assert!(outputs[0].iter().any(|(n, _)| n == "sweep.csv"));
    assert!(outputs[0].iter().any(|(n, _)| n == "trace_n8_trial0.jsonl"));
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let csv = String::from_utf8(outputs[0].iter().find(|(n, _)| n == "sweep.csv").unwrap().1.clone()).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,A,B,alpha_hat,alpha_se,beta_worst,e_t_null,e_t_alt_max,truncation_rate,realized_R0,realized_R1"
    );
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", &r1_config());
    let env_dir = dir.path().join("from_env");
    let run = sqht(&["mre", "--config", cfg.to_str().unwrap()], Some(("SQHT_OUTPUT_DIR", &env_dir)));
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(env_dir.join("mre.json").exists());

    let flag_dir = dir.path().join("from_flag");
    let args = ["mre", "--config", cfg.to_str().unwrap(), "--output-dir", flag_dir.to_str().unwrap()];
    assert_eq!(sqht(&args, Some(("SQHT_OUTPUT_DIR", &env_dir))).code, 0);
    assert!(flag_dir.join("mre.json").exists());
}

#[test]
fn proptest_exit_codes() {
    let dir = TempDir::new().unwrap();
    let mut short = r1_config();
    short["proptest"]["horizon"] = json!(19);
    assert_eq!(run_cmd("proptest", &write_config(&dir, "short.json", &short), dir.path(), &[]).code, 2);

    let mut mutated = r1_config();
    mutated["mutation"] = json!("skip_renormalization");
    let out = dir.path().join("m");
    let run = run_cmd("proptest", &write_config(&dir, "m.json", &mutated), &out, &[]);
    assert_eq!(run.code, 6, "{}", run.stderr);
    assert!(run.stderr.contains("(a)"), "{}", run.stderr);
    let report: Value = serde_json::from_slice(&fs::read(out.join("properties.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}
