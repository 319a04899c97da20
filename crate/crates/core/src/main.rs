use clap::{Args, Parser, Subcommand};
use ptlms::cli::{cmd_simulate, cmd_sweep, cmd_theory};
use ptlms::config::CliConfig;
use ptlms::error::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

/// Proportionate-type LMS: seeded system-identification experiments and
/// convergence-theory predictions, emitted as plot-ready CSV.
#[derive(Parser)]
#[command(name = "ptlms", version, disable_help_subcommand = true)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (flat `key = value` lines).
    #[arg(long)]
    config: PathBuf,

    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the ensemble size from the config.
    #[arg(long)]
    runs: Option<usize>,

    /// Restrict the run to a single rule (lms, plms, iplms, mulaw).
    #[arg(long)]
    rule: Option<String>,

    /// Output directory for data files and the manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte-Carlo ensembles and write learning-curve CSVs.
    Simulate(CommonArgs),
    /// Write step-size bounds, stability and predicted MSD reports.
    Theory(CommonArgs),
    /// Sweep the step size, pairing simulation with theory per value.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,

        /// Comma-separated step sizes to sweep.
        #[arg(long)]
        mu: String,
    },
}

fn load_config(common: &CommonArgs) -> Result<CliConfig> {
    let mut cfg = CliConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.n_runs = runs;
    }
    if let Some(rule) = &common.rule {
        cfg.restrict_to_rule(rule)?;
    }
    Ok(cfg)
}

fn parse_mu_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Config {
                field: "mu".into(),
                message: format!("cannot parse step size `{s}`"),
            })
        })
        .collect()
}

fn run() -> Result<()> {
    let args = match CliArgs::try_parse() {
        Ok(args) => args,
        Err(e) => {
            // Help/version requests are not usage errors.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            return Ok(());
        }
    };
    let outputs = match &args.command {
        Command::Simulate(common) => cmd_simulate(&load_config(common)?, &common.out)?,
        Command::Theory(common) => cmd_theory(&load_config(common)?, &common.out)?,
        Command::Sweep { common, mu } => {
            cmd_sweep(&load_config(common)?, &parse_mu_list(mu)?, &common.out)?
        }
    };
    for path in outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
