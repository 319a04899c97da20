//! End-to-end tests of the `ptlms` binary: exit codes, file outputs,
//! seeded byte-level reproducibility and manifest round trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ptlms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptlms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_SIM: &str = "\
l = 8
n_active = 2
rules = lms,plms
mu = 0.05
sigma_v2 = 0.01
n_iters = 600
n_runs = 5
seed = 3
regressor = tapped_delay_line
";

#[test]
fn simulate_emits_one_curve_per_rule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.cfg", SMALL_SIM);
    let out = ptlms(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    for name in ["curve_lms.csv", "curve_plms.csv", "manifest.txt"] {
        assert!(run.join(name).exists(), "missing {name}");
    }
    let text = fs::read_to_string(run.join("curve_lms.csv")).unwrap();
    assert!(text.starts_with("iteration,msd_db\n"));
    assert_eq!(text.lines().count(), 601);
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.cfg", SMALL_SIM);
    for sub in ["a", "b"] {
        let out = ptlms(&[
            "simulate",
            "--config",
            &cfg,
            "--runs",
            "1",
            "--seed",
            "7",
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in ["curve_lms.csv", "curve_plms.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
}

#[test]
fn missing_config_is_usage_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = ptlms(&[
        "simulate",
        "--config",
        dir.path().join("nope.cfg").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "no partial outputs on config errors");
}

#[test]
fn bad_config_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.cfg", "l = 8\nn_active = 99\n");
    let out = ptlms(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("n_active"), "stderr: {stderr}");
}

#[test]
fn diverging_simulation_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 8\nn_active = 2\nrules = lms\nmu = 5.0\nn_iters = 2000\nn_runs = 3\n",
    );
    let out = ptlms(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theory_reports_white_input_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 8\nn_active = 2\nrules = lms\nmu = 0.05\nn_iters = 500\nseed = 3\n",
    );
    let out = ptlms(&[
        "theory",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/theory_lms.txt")).unwrap();
    assert!(report.contains("mean_bound = 2.00000"), "report:\n{report}");
    assert!(report.contains("stable = true"));
    assert!(dir.path().join("out/transient_lms.csv").exists());
}

#[test]
fn theory_marks_unstable_step_size() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 8\nn_active = 2\nrules = lms\nmu = 1.0\nn_iters = 500\n",
    );
    let out = ptlms(&[
        "theory",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = fs::read_to_string(dir.path().join("out/theory_lms.txt")).unwrap();
    assert!(report.contains("steady_state_msd = unstable"));
}

#[test]
fn theory_refuses_lengths_over_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 128\nn_active = 4\nrules = lms\nmu = 0.001\ntheory_cap = 64\n",
    );
    let out = ptlms(&[
        "theory",
        "--config",
        &cfg,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cap 64"), "stderr: {stderr}");
}

#[test]
fn sweep_single_mu_and_rule_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 8\nn_active = 2\nrules = lms,plms\nmu = 0.02\nn_iters = 3000\nn_runs = 40\nseed = 5\n",
    );
    let out = ptlms(&[
        "sweep",
        "--config",
        &cfg,
        "--rule",
        "plms",
        "--mu",
        "0.02",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("out/sweep_lms.csv").exists());
    let table = fs::read_to_string(dir.path().join("out/sweep_plms.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2, "one header plus one data row:\n{table}");
    assert!(lines[1].ends_with("true"));
}

#[test]
fn all_unstable_sweep_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 8\nn_active = 2\nrules = lms\nmu = 0.02\nn_iters = 500\nn_runs = 3\n",
    );
    let out = ptlms(&[
        "sweep",
        "--config",
        &cfg,
        "--mu",
        "2.0,5.0",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = fs::read_to_string(dir.path().join("out/sweep_lms.csv")).unwrap();
    for line in table.lines().skip(1) {
        assert!(line.contains("diverged,unstable,false"), "row: {line}");
    }
}

/// The theory report and the sweep table must agree on the prediction for
/// the same config and step size (same system seed, same plugin moments).
#[test]
fn theory_report_matches_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.cfg",
        "l = 32\nn_active = 2\nrules = plms\nmu = 0.005\nsigma_v2 = 0.01\n\
         n_iters = 4000\nn_runs = 50\nseed = 2024\nregressor = independent\n",
    );
    let theory_out = dir.path().join("theory");
    let out = ptlms(&["theory", "--config", &cfg, "--out", theory_out.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(theory_out.join("theory_plms.txt")).unwrap();
    let reported_db: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("steady_state_msd_db = "))
        .expect("report carries a steady-state prediction")
        .parse()
        .unwrap();

    let sweep_out = dir.path().join("sweep");
    let out = ptlms(&[
        "sweep",
        "--config",
        &cfg,
        "--mu",
        "0.005",
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = ptlms::io::read_sweep_csv(&sweep_out.join("sweep_plms.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].stable);
    let table_db = rows[0].theory_msd_db.unwrap();
    assert_eq!(
        table_db, reported_db,
        "prediction must be identical across commands"
    );

    // And the simulation lands near it even with this small ensemble.
    let sim_db = rows[0].sim_msd_db.unwrap();
    assert!(
        (sim_db - table_db).abs() <= 1.0,
        "sim {sim_db} vs theory {table_db}"
    );
}

#[test]
fn manifest_reproduces_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "exp.cfg", SMALL_SIM);
    let first = dir.path().join("first");
    let out = ptlms(&["simulate", "--config", &cfg, "--out", first.to_str().unwrap()]);
    assert!(out.status.success());

    // Rebuild a config file from the manifest echo and re-run.
    let manifest = ptlms::io::read_manifest(&first.join("manifest.txt")).unwrap();
    let rebuilt: String = manifest
        .config_entries
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let cfg2 = write_config(dir.path(), "rebuilt.cfg", &rebuilt);
    let second = dir.path().join("second");
    let out = ptlms(&["simulate", "--config", &cfg2, "--out", second.to_str().unwrap()]);
    assert!(out.status.success());

    for name in &manifest.outputs {
        let a = fs::read(first.join(name)).unwrap();
        let b = fs::read(second.join(name)).unwrap();
        assert_eq!(a, b, "{name} must reproduce byte-for-byte from the manifest");
    }
}
