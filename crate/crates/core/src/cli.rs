//! Implementations behind the `ptlms` command-line front end.
//!
//! Each command reads one experiment config, produces data files plus a run
//! manifest in the output directory, and reports the written paths. Outputs
//! are written only after all computation succeeds, so a failing run leaves
//! no partial files.

use crate::config::CliConfig;
use crate::error::{Error, Result};
use crate::harness::{generate_sparse_system, run_ensemble, sweep_mu, LearningCurve, SweepRow};
use crate::io::{
    fmt_sig, write_curve_csv, write_manifest, write_sweep_csv, Manifest, CSV_SIG_DIGITS,
};
use crate::theory::{GainMomentsMode, TheoryModel};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn manifest_for(cfg: &CliConfig, command: &str, outputs: &[PathBuf]) -> Manifest {
    Manifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        created_unix: now_unix(),
        master_seed: cfg.seed,
        config_entries: cfg.entries(),
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string())
            })
            .collect(),
    }
}

fn enforce_theory_cap(cfg: &CliConfig) -> Result<()> {
    if cfg.l > cfg.theory_cap {
        return Err(Error::Config {
            field: "l".into(),
            message: format!(
                "L = {} exceeds the theory size cap {} (L^2 x L^2 dense algebra); \
                 raise theory_cap or use `simulate` for large systems",
                cfg.l, cfg.theory_cap
            ),
        });
    }
    Ok(())
}

/// `ptlms simulate`: one learning-curve CSV per configured rule.
pub fn cmd_simulate(cfg: &CliConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let w_opt = generate_sparse_system(cfg.l, cfg.n_active, cfg.seed)?;
    let mut curves: Vec<(String, LearningCurve)> = Vec::new();
    for idx in 0..cfg.rules.len() {
        let experiment = cfg.experiment(idx)?;
        let curve = run_ensemble(&experiment, &w_opt)?;
        if curve.diverged_runs > 0 {
            eprintln!(
                "warning: rule {} at mu = {}: {} of {} runs diverged and were excluded",
                cfg.rules[idx].name(),
                experiment.mu,
                curve.diverged_runs,
                experiment.n_runs
            );
        }
        curves.push((cfg.rules[idx].name().to_string(), curve));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for (name, curve) in &curves {
        let path = out_dir.join(format!("curve_{name}.csv"));
        write_curve_csv(&path, &curve.msd_db)?;
        outputs.push(path);
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest_for(cfg, "simulate", &outputs))?;
    outputs.push(manifest_path);
    Ok(outputs)
}

/// `ptlms theory`: per rule, a structured text report (step-size bounds,
/// spectral radius, steady-state MSD) plus a predicted transient-curve CSV.
pub fn cmd_theory(cfg: &CliConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    enforce_theory_cap(cfg)?;
    let w_opt = generate_sparse_system(cfg.l, cfg.n_active, cfg.seed)?;
    let norm2: f64 = w_opt.iter().map(|x| x * x).sum();

    struct Report {
        name: String,
        text: String,
        transient_db: Option<Vec<f64>>,
    }

    let mut reports = Vec::new();
    for idx in 0..cfg.rules.len() {
        let variant = cfg.rules[idx];
        let mu = cfg.mus[idx];
        let rule = cfg.rule_for(variant)?;
        let model = TheoryModel::build(
            &w_opt,
            &rule,
            mu,
            cfg.sigma_u2,
            cfg.sigma_v2,
            GainMomentsMode::Plugin,
        )?;
        let mean = model.mean_stability_bound()?;
        let ms = model.ms_stability_range()?;
        let rho = model.spectral_radius_f()?;
        let stable = rho < 1.0;

        let mut text = String::new();
        writeln!(text, "# ptlms theory report").unwrap();
        writeln!(text, "rule = {}", variant.name()).unwrap();
        writeln!(text, "l = {}", cfg.l).unwrap();
        writeln!(text, "n_active = {}", cfg.n_active).unwrap();
        writeln!(text, "seed = {}", cfg.seed).unwrap();
        writeln!(text, "mu = {mu}").unwrap();
        writeln!(text, "sigma_u2 = {}", cfg.sigma_u2).unwrap();
        writeln!(text, "sigma_v2 = {}", cfg.sigma_v2).unwrap();
        writeln!(text, "w_opt_norm2 = {}", fmt_sig(norm2, CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "g_bar_max = {}", fmt_sig(model.g_bar().max(), CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "mean_bound = {}", fmt_sig(mean.mu_max, CSV_SIG_DIGITS)).unwrap();
        writeln!(
            text,
            "mean_bound_sharp = {}",
            fmt_sig(mean.mu_max_sharp, CSV_SIG_DIGITS)
        )
        .unwrap();
        writeln!(text, "ms_bound = {}", fmt_sig(ms.mu_max, CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "ms_bound_cd = {}", fmt_sig(ms.cd_bound, CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "ms_bound_h = {}", fmt_sig(ms.h_bound, CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "spectral_radius_f = {}", fmt_sig(rho, CSV_SIG_DIGITS)).unwrap();
        writeln!(text, "stable = {stable}").unwrap();
        let transient_db = if stable {
            let msd = model.steady_state_msd()?;
            writeln!(text, "steady_state_msd = {}", fmt_sig(msd, CSV_SIG_DIGITS)).unwrap();
            writeln!(
                text,
                "steady_state_msd_db = {}",
                fmt_sig(model.steady_state_msd_db()?, CSV_SIG_DIGITS)
            )
            .unwrap();
            let curve = model.transient_curve(&w_opt, cfg.n_iters.saturating_sub(1))?;
            Some(curve.iter().map(|&m| 10.0 * (m / norm2).log10()).collect())
        } else {
            writeln!(text, "steady_state_msd = unstable").unwrap();
            writeln!(text, "steady_state_msd_db = unstable").unwrap();
            None
        };
        reports.push(Report {
            name: variant.name().to_string(),
            text,
            transient_db,
        });
    }

    std::fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for report in &reports {
        let report_path = out_dir.join(format!("theory_{}.txt", report.name));
        std::fs::write(&report_path, &report.text)?;
        outputs.push(report_path);
        if let Some(curve_db) = &report.transient_db {
            let curve_path = out_dir.join(format!("transient_{}.csv", report.name));
            write_curve_csv(&curve_path, curve_db)?;
            outputs.push(curve_path);
        }
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest_for(cfg, "theory", &outputs))?;
    outputs.push(manifest_path);
    Ok(outputs)
}

/// `ptlms sweep`: per rule, a CSV pairing empirical and predicted
/// steady-state MSD across the given step sizes.
pub fn cmd_sweep(cfg: &CliConfig, mu_values: &[f64], out_dir: &Path) -> Result<Vec<PathBuf>> {
    enforce_theory_cap(cfg)?;
    if mu_values.is_empty() {
        return Err(Error::Config {
            field: "mu".into(),
            message: "sweep needs at least one step size (--mu)".into(),
        });
    }
    let w_opt = generate_sparse_system(cfg.l, cfg.n_active, cfg.seed)?;
    let mut tables: Vec<(String, Vec<SweepRow>)> = Vec::new();
    for idx in 0..cfg.rules.len() {
        let experiment = cfg.experiment(idx)?;
        let rows = sweep_mu(&experiment, &w_opt, mu_values)?;
        tables.push((cfg.rules[idx].name().to_string(), rows));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    for (name, rows) in &tables {
        let path = out_dir.join(format!("sweep_{name}.csv"));
        write_sweep_csv(&path, rows)?;
        outputs.push(path);
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest_for(cfg, "sweep", &outputs))?;
    outputs.push(manifest_path);
    Ok(outputs)
}
