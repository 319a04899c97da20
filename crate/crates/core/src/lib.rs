//! Proportionate-type LMS (Pt-LMS) adaptive filters for sparse system
//! identification, with both a Monte-Carlo simulation harness and an
//! independent convergence theory to cross-validate it.
//!
//! The filter family updates its weights as
//!
//! ```text
//! w(n+1) = w(n) + mu G(n) u(n) e(n)
//! ```
//!
//! where the diagonal gain matrix `G(n)` redistributes adaptation energy
//! toward large taps ([`gain`]). The crate covers:
//!
//! - [`gain`] — the per-tap gain rules (standard LMS, PLMS, IPLMS, mu-law
//!   PLMS) behind `G(n)`;
//! - [`adaptive`] — the update recursion, error path and seeded
//!   identification runs;
//! - [`theory`] — mean and mean-square convergence predictions: the mean
//!   recursion matrix, the `L^2 x L^2` variance-relation matrix `F`,
//!   transient and steady-state MSD, step-size stability bounds;
//! - [`harness`] — sparse test systems, run ensembles, learning curves and
//!   the step-size sweep that pits simulation against theory;
//! - [`config`], [`io`], [`cli`] — the `ptlms` command-line front end with
//!   reproducible, manifest-tracked CSV outputs.
//!
//! ```no_run
//! use ptlms::gain::GainRule;
//! use ptlms::harness::{generate_sparse_system, run_ensemble, ExperimentConfig};
//! use ptlms::adaptive::RegressorModel;
//! use ptlms::theory::{GainMomentsMode, TheoryModel};
//!
//! let w_opt = generate_sparse_system(32, 2, 1).unwrap();
//! let config = ExperimentConfig {
//!     l: 32,
//!     n_active: 2,
//!     mu: 0.005,
//!     rule: GainRule::plms(0.01, 0.01).unwrap(),
//!     sigma_u2: 1.0,
//!     sigma_v2: 0.01,
//!     n_iters: 20_000,
//!     n_runs: 200,
//!     seed: 1,
//!     regressor: RegressorModel::Independent,
//! };
//! let curve = run_ensemble(&config, &w_opt).unwrap();
//! let model = TheoryModel::build(
//!     &w_opt, &config.rule, config.mu, 1.0, 0.01, GainMomentsMode::Plugin,
//! ).unwrap();
//! println!(
//!     "simulated tail {:.2} dB vs predicted {:.2} dB",
//!     curve.msd_db.last().unwrap(),
//!     model.steady_state_msd_db().unwrap(),
//! );
//! ```

pub mod adaptive;
pub mod cli;
pub mod config;
pub mod error;
pub mod gain;
pub mod harness;
pub mod io;
pub mod theory;

pub use adaptive::{FilterState, RegressorModel, SystemSpec};
pub use error::{Error, Result};
pub use gain::{GainRule, GainVariant, GainVector};
pub use harness::{ExperimentConfig, LearningCurve, SweepRow};
pub use theory::{GainMomentsMode, TheoryModel};
