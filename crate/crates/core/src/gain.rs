//! Per-tap gain rules for the proportionate-type LMS family.
//!
//! A proportionate filter speeds up convergence on sparse systems by giving
//! each tap its own effective step size `mu * g_l(n)`, where the gain
//! `g_l(n)` grows with the current tap magnitude. For the activation-based
//! rules the gains are built in three steps:
//!
//! ```text
//! gamma_min(n) = max(delta, F[|w_0(n)|], ..., F[|w_{L-1}(n)|])
//! gamma_l(n)   = max(rho * gamma_min(n), F[|w_l(n)|])
//! g_l(n)       = gamma_l(n) / ((1/L) * sum_k gamma_k(n))
//! ```
//!
//! so the gains always sum to `L` and the `rho`/`delta` floors keep inactive
//! or freshly zero-initialized taps adapting. The activation `F` selects the
//! algorithm:
//!
//! | rule          | `F[|w_l|]` or direct gain                                   |
//! |---------------|-------------------------------------------------------------|
//! | standard LMS  | `1`                                                         |
//! | PLMS          | `|w_l|`                                                     |
//! | IPLMS         | `g_l = (1-alpha)/(2L) + (1+alpha)/2 * |w_l|/(||w||_1 + delta_i)` |
//! | mu-law PLMS   | `ln(1 + eps*|w_l|) / ln(1 + eps)`                           |
//!
//! The improved-proportionate (IPLMS) rule bypasses the activation pipeline
//! and defines the gains directly; they sum to at most 1 instead of `L`.

use crate::error::{Error, Result};

/// Relative tolerance for the sum-to-L check on activation-based gains.
pub const GAIN_SUM_REL_TOL: f64 = 1e-10;

/// Which proportionate algorithm the gain rule implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GainVariant {
    /// Uniform gains; the update degenerates to plain LMS.
    StandardLms,
    /// Gains proportional to tap magnitude.
    Plms,
    /// Improved proportionate rule with an l1-norm mix.
    Iplms,
    /// Logarithmically compressed proportionality.
    MuLawPlms,
}

impl GainVariant {
    pub fn name(self) -> &'static str {
        match self {
            GainVariant::StandardLms => "lms",
            GainVariant::Plms => "plms",
            GainVariant::Iplms => "iplms",
            GainVariant::MuLawPlms => "mulaw",
        }
    }

    /// Parse a rule name as used in config files and CLI flags.
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lms" | "standard_lms" => Ok(GainVariant::StandardLms),
            "plms" => Ok(GainVariant::Plms),
            "iplms" => Ok(GainVariant::Iplms),
            "mulaw" | "mu_law" | "mulaw_plms" => Ok(GainVariant::MuLawPlms),
            other => Err(Error::Config {
                field: "rule".into(),
                message: format!("unknown rule `{other}` (expected lms, plms, iplms or mulaw)"),
            }),
        }
    }
}

/// Parameters shared by the gain rules. Fields irrelevant to the selected
/// variant are stored but ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParams {
    /// Floor fraction rho applied to `gamma_min`.
    pub rho: f64,
    /// Startup floor delta inside `gamma_min`.
    pub delta: f64,
    /// IPLMS mix in `[-1, 1]`; `-1` is plain LMS, `+1` fully proportionate.
    pub alpha: f64,
    /// IPLMS l1-norm regularizer.
    pub delta_i: f64,
    /// mu-law compression constant.
    pub epsilon: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        GainParams {
            rho: 0.01,
            delta: 0.01,
            alpha: 0.0,
            delta_i: 0.01,
            epsilon: 1000.0,
        }
    }
}

/// A validated gain rule: variant plus parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRule {
    variant: GainVariant,
    params: GainParams,
}

impl GainRule {
    pub fn new(variant: GainVariant, params: GainParams) -> Result<Self> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    message: format!("must be a positive finite real, got {v}"),
                })
            }
        }
        positive("rho", params.rho)?;
        positive("delta", params.delta)?;
        positive("delta_i", params.delta_i)?;
        positive("epsilon", params.epsilon)?;
        if !(params.alpha.is_finite() && (-1.0..=1.0).contains(&params.alpha)) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                message: format!("must lie in [-1, 1], got {}", params.alpha),
            });
        }
        Ok(GainRule { variant, params })
    }

    /// Standard LMS (all gains 1).
    pub fn standard_lms() -> Self {
        GainRule::new(GainVariant::StandardLms, GainParams::default()).unwrap()
    }

    /// PLMS with the given floors.
    pub fn plms(rho: f64, delta: f64) -> Result<Self> {
        GainRule::new(
            GainVariant::Plms,
            GainParams {
                rho,
                delta,
                ..GainParams::default()
            },
        )
    }

    /// IPLMS with the given mix and regularizer.
    pub fn iplms(alpha: f64, delta_i: f64) -> Result<Self> {
        GainRule::new(
            GainVariant::Iplms,
            GainParams {
                alpha,
                delta_i,
                ..GainParams::default()
            },
        )
    }

    /// mu-law PLMS with the given compression constant and floors.
    pub fn mu_law(epsilon: f64, rho: f64, delta: f64) -> Result<Self> {
        GainRule::new(
            GainVariant::MuLawPlms,
            GainParams {
                epsilon,
                rho,
                delta,
                ..GainParams::default()
            },
        )
    }

    pub fn variant(&self) -> GainVariant {
        self.variant
    }

    pub fn params(&self) -> &GainParams {
        &self.params
    }
}

/// The per-tap gain vector, i.e. the diagonal of the gain matrix `G(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    g: Vec<f64>,
}

impl GainVector {
    fn validated(g: Vec<f64>, variant: GainVariant) -> Result<Self> {
        for (tap, &v) in g.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::DegenerateGain { tap, value: v });
            }
        }
        let l = g.len() as f64;
        let sum: f64 = g.iter().sum();
        match variant {
            GainVariant::Iplms => {
                if sum > 1.0 + GAIN_SUM_REL_TOL {
                    return Err(Error::InvalidParameter {
                        name: "gain_vector",
                        message: format!("iplms gains sum to {sum}, above 1"),
                    });
                }
            }
            _ => {
                if ((sum - l) / l).abs() > GAIN_SUM_REL_TOL {
                    return Err(Error::InvalidParameter {
                        name: "gain_vector",
                        message: format!("gains sum to {sum}, expected {l}"),
                    });
                }
            }
        }
        Ok(GainVector { g })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.g.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.g
    }
}

impl std::ops::Index<usize> for GainVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.g[i]
    }
}

/// Activation `F[|w_l|]` for the activation-based rules.
///
/// The improved-proportionate rule defines its gains directly and is
/// rejected here.
pub fn activation(w_abs: f64, rule: &GainRule) -> Result<f64> {
    if !(w_abs.is_finite() && w_abs >= 0.0) {
        return Err(Error::NonFinite {
            context: "activation input",
        });
    }
    match rule.variant {
        GainVariant::StandardLms => Ok(1.0),
        GainVariant::Plms => Ok(w_abs),
        GainVariant::MuLawPlms => {
            let eps = rule.params.epsilon;
            Ok((1.0 + eps * w_abs).ln() / (1.0 + eps).ln())
        }
        GainVariant::Iplms => Err(Error::NoActivation { rule: "iplms" }),
    }
}

/// Compute the gain vector `g(n)` from the current weights.
///
/// Activation-based rules go through the `gamma_min`/`gamma_l` floors and
/// normalize so the gains sum to `L`; IPLMS evaluates its direct formula.
pub fn gain_vector(w: &[f64], rule: &GainRule) -> Result<GainVector> {
    let l = w.len();
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "w",
            message: "weight vector must have at least one tap".into(),
        });
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "gain_vector weights",
        });
    }

    let g = match rule.variant {
        GainVariant::Iplms => {
            let p = rule.params;
            let norm1: f64 = w.iter().map(|x| x.abs()).sum();
            let uniform = (1.0 - p.alpha) / (2.0 * l as f64);
            let scale = (1.0 + p.alpha) / 2.0 / (norm1 + p.delta_i);
            w.iter().map(|x| uniform + scale * x.abs()).collect()
        }
        _ => {
            let mut f_vals = Vec::with_capacity(l);
            for &x in w {
                f_vals.push(activation(x.abs(), rule)?);
            }
            let gamma_min = f_vals.iter().fold(rule.params.delta, |m, &v| m.max(v));
            let floor = rule.params.rho * gamma_min;
            let gamma: Vec<f64> = f_vals.iter().map(|&v| floor.max(v)).collect();
            let mean = gamma.iter().sum::<f64>() / l as f64;
            gamma.iter().map(|&v| v / mean).collect()
        }
    };
    GainVector::validated(g, rule.variant)
}
