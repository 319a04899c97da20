//! Flat key-value experiment configuration, one experiment per file.
//!
//! ```text
//! # Fig-3 style sweep base
//! l = 32
//! n_active = 2
//! rules = plms            # comma list: lms, plms, iplms, mulaw
//! mu = 0.005              # one value per rule, or a single broadcast value
//! sigma_u2 = 1.0
//! sigma_v2 = 0.01
//! n_iters = 20000
//! n_runs = 200
//! seed = 1
//! regressor = independent # or tapped_delay_line
//! rho = 0.01
//! delta = 0.01
//! alpha = 0.0
//! delta_i = 0.01
//! epsilon = 1000.0
//! theory_cap = 64
//! tail_fraction = 0.1
//! ```
//!
//! Missing keys take the defaults above; the CLI echoes every resolved value
//! into the run manifest so nothing is applied silently.

use crate::adaptive::RegressorModel;
use crate::error::{Error, Result};
use crate::gain::{GainParams, GainRule, GainVariant};
use crate::harness::ExperimentConfig;
use std::collections::BTreeMap;
use std::path::Path;

/// A fully resolved experiment configuration as consumed by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub l: usize,
    pub n_active: usize,
    pub rules: Vec<GainVariant>,
    /// Step size per rule, same length as `rules`.
    pub mus: Vec<f64>,
    pub sigma_u2: f64,
    pub sigma_v2: f64,
    pub n_iters: usize,
    pub n_runs: usize,
    pub seed: u64,
    pub regressor: RegressorModel,
    pub gain: GainParams,
    /// Largest filter length the theory engine will accept (L^2 x L^2
    /// matrices grow fast).
    pub theory_cap: usize,
    pub tail_fraction: f64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            l: 32,
            n_active: 2,
            rules: vec![GainVariant::Plms],
            mus: vec![0.01],
            sigma_u2: 1.0,
            sigma_v2: 0.01,
            n_iters: 20_000,
            n_runs: 200,
            seed: 1,
            regressor: RegressorModel::Independent,
            gain: GainParams::default(),
            theory_cap: 64,
            tail_fraction: 0.1,
        }
    }
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn parse_value<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| config_err(field, format!("cannot parse `{raw}`")))
}

impl CliConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if seen.insert(key.clone(), value).is_some() {
                return Err(config_err(&key, "duplicate key"));
            }
        }

        let mut cfg = CliConfig::default();
        for (key, value) in &seen {
            match key.as_str() {
                "l" => cfg.l = parse_value(key, value)?,
                "n_active" => cfg.n_active = parse_value(key, value)?,
                "rules" | "rule" => {
                    cfg.rules = value
                        .split(',')
                        .map(|s| GainVariant::parse(s.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "mu" => {
                    cfg.mus = value
                        .split(',')
                        .map(|s| parse_value::<f64>("mu", s.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "sigma_u2" => cfg.sigma_u2 = parse_value(key, value)?,
                "sigma_v2" => cfg.sigma_v2 = parse_value(key, value)?,
                "n_iters" => cfg.n_iters = parse_value(key, value)?,
                "n_runs" => cfg.n_runs = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "regressor" => cfg.regressor = RegressorModel::parse(value)?,
                "rho" => cfg.gain.rho = parse_value(key, value)?,
                "delta" => cfg.gain.delta = parse_value(key, value)?,
                "alpha" => cfg.gain.alpha = parse_value(key, value)?,
                "delta_i" => cfg.gain.delta_i = parse_value(key, value)?,
                "epsilon" => cfg.gain.epsilon = parse_value(key, value)?,
                "theory_cap" => cfg.theory_cap = parse_value(key, value)?,
                "tail_fraction" => cfg.tail_fraction = parse_value(key, value)?,
                other => return Err(config_err(other, "unknown config key")),
            }
        }
        cfg.normalize_and_validate()?;
        Ok(cfg)
    }

    fn normalize_and_validate(&mut self) -> Result<()> {
        if self.rules.is_empty() {
            return Err(config_err("rules", "at least one rule is required"));
        }
        let mut dedup = self.rules.clone();
        dedup.sort_by_key(|r| r.name());
        dedup.dedup();
        if dedup.len() != self.rules.len() {
            return Err(config_err("rules", "duplicate rule in list"));
        }
        if self.mus.len() == 1 && self.rules.len() > 1 {
            self.mus = vec![self.mus[0]; self.rules.len()];
        }
        if self.mus.len() != self.rules.len() {
            return Err(config_err(
                "mu",
                format!(
                    "{} step sizes for {} rules (use one per rule or a single value)",
                    self.mus.len(),
                    self.rules.len()
                ),
            ));
        }
        if self.l == 0 {
            return Err(config_err("l", "filter length must be at least 1"));
        }
        if self.n_active == 0 || self.n_active > self.l {
            return Err(config_err(
                "n_active",
                format!("must lie in 1..={}, got {}", self.l, self.n_active),
            ));
        }
        for &mu in &self.mus {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(config_err("mu", format!("step size must be positive, got {mu}")));
            }
        }
        if !(self.sigma_u2.is_finite() && self.sigma_u2 > 0.0) {
            return Err(config_err("sigma_u2", "input variance must be positive"));
        }
        if !(self.sigma_v2.is_finite() && self.sigma_v2 >= 0.0) {
            return Err(config_err("sigma_v2", "noise variance must be nonnegative"));
        }
        if self.n_iters == 0 {
            return Err(config_err("n_iters", "need at least one iteration"));
        }
        if self.n_runs == 0 {
            return Err(config_err("n_runs", "need at least one run"));
        }
        if self.theory_cap == 0 {
            return Err(config_err("theory_cap", "cap must be at least 1"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(config_err("tail_fraction", "must lie in (0, 1]"));
        }
        // Gain parameter validation happens in GainRule::new.
        for variant in self.rules.clone() {
            self.rule_for(variant)?;
        }
        Ok(())
    }

    /// The validated gain rule for one of the configured variants.
    pub fn rule_for(&self, variant: GainVariant) -> Result<GainRule> {
        GainRule::new(variant, self.gain)
    }

    /// The ensemble configuration for rule index `idx`.
    pub fn experiment(&self, idx: usize) -> Result<ExperimentConfig> {
        let variant = *self.rules.get(idx).ok_or_else(|| {
            config_err("rules", format!("no rule at index {idx}"))
        })?;
        Ok(ExperimentConfig {
            l: self.l,
            n_active: self.n_active,
            mu: self.mus[idx],
            rule: self.rule_for(variant)?,
            sigma_u2: self.sigma_u2,
            sigma_v2: self.sigma_v2,
            n_iters: self.n_iters,
            n_runs: self.n_runs,
            seed: self.seed,
            regressor: self.regressor,
        })
    }

    /// Restrict the run to a single rule (the `--rule` override).
    pub fn restrict_to_rule(&mut self, name: &str) -> Result<()> {
        let variant = GainVariant::parse(name)?;
        let mu = self
            .rules
            .iter()
            .position(|&r| r == variant)
            .map(|i| self.mus[i])
            .unwrap_or(self.mus[0]);
        self.rules = vec![variant];
        self.mus = vec![mu];
        Ok(())
    }

    /// Every resolved key-value pair, in the file format's own syntax.
    /// Parsing these entries reproduces this config exactly.
    pub fn entries(&self) -> Vec<(String, String)> {
        let rules = self
            .rules
            .iter()
            .map(|r| r.name())
            .collect::<Vec<_>>()
            .join(",");
        let mus = self
            .mus
            .iter()
            .map(|m| format!("{m}"))
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("l".into(), self.l.to_string()),
            ("n_active".into(), self.n_active.to_string()),
            ("rules".into(), rules),
            ("mu".into(), mus),
            ("sigma_u2".into(), format!("{}", self.sigma_u2)),
            ("sigma_v2".into(), format!("{}", self.sigma_v2)),
            ("n_iters".into(), self.n_iters.to_string()),
            ("n_runs".into(), self.n_runs.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("regressor".into(), self.regressor.name().into()),
            ("rho".into(), format!("{}", self.gain.rho)),
            ("delta".into(), format!("{}", self.gain.delta)),
            ("alpha".into(), format!("{}", self.gain.alpha)),
            ("delta_i".into(), format!("{}", self.gain.delta_i)),
            ("epsilon".into(), format!("{}", self.gain.epsilon)),
            ("theory_cap".into(), self.theory_cap.to_string()),
            ("tail_fraction".into(), format!("{}", self.tail_fraction)),
        ]
    }

    /// Render as a parseable config file.
    pub fn to_config_text(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.entries() {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }
}
