//! Monte-Carlo system-identification experiments: sparse test systems,
//! seeded independent run ensembles, learning-curve aggregation and the
//! step-size sweep that pits simulation against theory.

use crate::adaptive::{run_identification, RegressorModel, SystemSpec};
use crate::error::{Error, Result};
use crate::gain::GainRule;
use crate::theory::{GainMomentsMode, TheoryModel};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Default fraction of the curve tail averaged for a steady-state estimate.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;

/// Default admissible drift (dB) of the linear fit over the last quarter of
/// a curve before its tail counts as steady state.
pub const DEFAULT_PLATEAU_DRIFT_DB: f64 = 1.0;

/// One ensemble experiment, fully determined by its fields plus the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub l: usize,
    pub n_active: usize,
    pub mu: f64,
    pub rule: GainRule,
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub n_iters: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub regressor: RegressorModel,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidParameter {
                name: "l",
                message: "filter length must be at least 1".into(),
            });
        }
        if self.n_active == 0 || self.n_active > self.l {
            return Err(Error::InvalidParameter {
                name: "n_active",
                message: format!(
                    "active tap count must lie in 1..={}, got {}",
                    self.l, self.n_active
                ),
            });
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                message: format!("step size must be positive, got {}", self.mu),
            });
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "n_iters",
                message: "need at least one iteration".into(),
            });
        }
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter {
                name: "n_runs",
                message: "need at least one run".into(),
            });
        }
        // Variance checks ride on SystemSpec construction.
        SystemSpec::new(vec![1.0; self.l], self.sigma_u2, self.sigma_v2).map(|_| ())
    }
}

/// Ensemble-averaged normalized MSD in dB, one entry per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub msd_db: Vec<f64>,
    pub n_runs_averaged: usize,
    pub diverged_runs: usize,
}

/// One row of a step-size sweep. `stable` is the theory verdict
/// (spectral radius of F below 1); a `None` in the simulation column means
/// the runs diverged or never plateaued at that step size.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mu: f64,
    pub sim_msd_db: Option<f64>,
    pub theory_msd_db: Option<f64>,
    pub stable: bool,
}

/// splitmix64, used to derive independent per-run seeds from the master seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for run `run_idx` of the ensemble rooted at `master_seed`.
pub fn derive_run_seed(master_seed: u64, run_idx: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(run_idx as u64 + 1))
}

/// Draw a sparse system: `n_active` standard-Gaussian taps at uniformly
/// random positions, every other tap exactly zero. Deterministic per seed
/// and never all-zero.
pub fn generate_sparse_system(l: usize, n_active: usize, seed: u64) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "l",
            message: "filter length must be at least 1".into(),
        });
    }
    if n_active == 0 || n_active > l {
        return Err(Error::InvalidParameter {
            name: "n_active",
            message: format!("active tap count must lie in 1..={l}, got {n_active}"),
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let positions = rand::seq::index::sample(&mut rng, l, n_active);
    let mut w = vec![0.0; l];
    loop {
        for pos in positions.iter() {
            w[pos] = StandardNormal.sample(&mut rng);
        }
        if w.iter().any(|&x| x != 0.0) {
            return Ok(w);
        }
    }
}

/// Run `n_runs` independent identification experiments and average the
/// squared deviations pointwise into a normalized dB learning curve.
///
/// Runs are independent (seeded via [`derive_run_seed`]) and execute in
/// parallel; the averaging is a fixed-order reduction, so results are
/// byte-identical across thread counts. Diverged runs are counted and
/// excluded from the average.
pub fn run_ensemble(config: &ExperimentConfig, w_opt: &[f64]) -> Result<LearningCurve> {
    config.validate()?;
    if w_opt.len() != config.l {
        return Err(Error::DimensionMismatch {
            context: "run_ensemble system",
            expected: config.l,
            got: w_opt.len(),
        });
    }
    let spec = SystemSpec::new(w_opt.to_vec(), config.sigma_u2, config.sigma_v2)?;
    let norm2 = spec.w_opt_norm2();
    if norm2 <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "w_opt",
            message: "cannot normalize the learning curve of an all-zero system".into(),
        });
    }

    let runs: Vec<Result<Vec<f64>>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run_idx| {
            run_identification(
                &spec,
                &config.rule,
                config.mu,
                config.n_iters,
                derive_run_seed(config.seed, run_idx),
                config.regressor,
            )
        })
        .collect();

    let mut sum = vec![0.0_f64; config.n_iters];
    let mut n_ok = 0usize;
    let mut diverged = 0usize;
    for run in &runs {
        match run {
            Ok(devs) => {
                for (acc, &d) in sum.iter_mut().zip(devs) {
                    *acc += d;
                }
                n_ok += 1;
            }
            Err(Error::Diverged { .. }) => diverged += 1,
            Err(e) => {
                return Err(Error::InvalidParameter {
                    name: "run_ensemble",
                    message: format!("run failed: {e}"),
                })
            }
        }
    }
    if n_ok == 0 {
        return Err(Error::AllRunsDiverged {
            n_runs: config.n_runs,
        });
    }
    let scale = 1.0 / (n_ok as f64 * norm2);
    let msd_db = sum.iter().map(|&s| 10.0 * (s * scale).log10()).collect();
    Ok(LearningCurve {
        msd_db,
        n_runs_averaged: n_ok,
        diverged_runs: diverged,
    })
}

/// Least-squares slope of `y` against its index.
fn slope(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mean_x;
        num += dx * (v - mean_y);
        den += dx * dx;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Steady-state MSD estimate (dB): mean of the final `tail_fraction` of the
/// curve, guarded by a plateau check on the last quarter.
pub fn empirical_steady_state_msd(curve: &LearningCurve, tail_fraction: f64) -> Result<f64> {
    empirical_steady_state_msd_with_threshold(curve, tail_fraction, DEFAULT_PLATEAU_DRIFT_DB)
}

/// As [`empirical_steady_state_msd`] with an explicit drift threshold: the
/// curve counts as converged when the fitted last-quarter slope drifts less
/// than `threshold_db` over that quarter.
pub fn empirical_steady_state_msd_with_threshold(
    curve: &LearningCurve,
    tail_fraction: f64,
    threshold_db: f64,
) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_fraction",
            message: format!("must lie in (0, 1], got {tail_fraction}"),
        });
    }
    let n = curve.msd_db.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "curve",
            message: "empty learning curve".into(),
        });
    }
    if curve.msd_db.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "learning curve",
        });
    }
    let quarter = (n / 4).max(2).min(n);
    let tail_quarter = &curve.msd_db[n - quarter..];
    let drift_db = (slope(tail_quarter) * quarter as f64).abs();
    if drift_db > threshold_db {
        return Err(Error::NotConverged {
            drift_db,
            threshold_db,
        });
    }
    let tail_len = ((n as f64 * tail_fraction).round() as usize).clamp(1, n);
    let tail = &curve.msd_db[n - tail_len..];
    Ok(tail.iter().sum::<f64>() / tail_len as f64)
}

/// Sweep the step size: for each `mu`, pair the ensemble steady-state MSD
/// with the theoretical prediction (plugin gain moments at `w_opt`).
/// Step sizes the theory flags unstable are not simulated.
pub fn sweep_mu(
    base: &ExperimentConfig,
    w_opt: &[f64],
    mu_values: &[f64],
) -> Result<Vec<SweepRow>> {
    if mu_values.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "mu_values",
            message: "step sizes must be positive".into(),
        });
    }
    let mut rows = Vec::with_capacity(mu_values.len());
    for &mu in mu_values {
        let model = TheoryModel::build(
            w_opt,
            &base.rule,
            mu,
            base.sigma_u2,
            base.sigma_v2,
            GainMomentsMode::Plugin,
        )?;
        let stable = model.spectral_radius_f()? < 1.0;
        if !stable {
            rows.push(SweepRow {
                mu,
                sim_msd_db: None,
                theory_msd_db: None,
                stable: false,
            });
            continue;
        }
        let theory_db = model.steady_state_msd_db()?;
        let config = ExperimentConfig {
            mu,
            ..base.clone()
        };
        let sim_db = match run_ensemble(&config, w_opt) {
            Ok(curve) => empirical_steady_state_msd(&curve, DEFAULT_TAIL_FRACTION).ok(),
            Err(Error::AllRunsDiverged { .. }) => None,
            Err(e) => return Err(e),
        };
        rows.push(SweepRow {
            mu,
            sim_msd_db: sim_db,
            theory_msd_db: Some(theory_db),
            stable: true,
        });
    }
    Ok(rows)
}
