//! Loss names and their string grammar.
//!
//! A name is a `+`-separated list of tokens:
//!
//! | token | meaning |
//! |---|---|
//! | `mse`, `mae` | base error (default `mse`) |
//! | `c` | instance-based costs from a baseline model |
//! | `ic:K`, `eic:K` | iterative / ensemble instance-based costs, `K` rounds |
//! | `o` | one-sided mask on the optimal decision |
//! | `o_s` (or `os`) | one-sided mask using sensitivity ranges |
//! | `s` | scale-invariant normalization |
//! | `cos` | shorthand for `c+o+s` |
//! | `tau:x` or `tau:x1,x2,...` | pinball weights, one value or one per output |
//! | `lawless:w` | baseline-regret reweighting with weight `w` |
//!
//! The whole string `spo+` selects the SPO+ surrogate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseError {
    Squared,
    Absolute,
}

impl BaseError {
    pub fn value(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Squared => (a - b) * (a - b),
            Self::Absolute => (a - b).abs(),
        }
    }

    /// Derivative in `a`; the absolute error uses subgradient 0 at `a == b`.
    pub fn derivative(self, a: f64, b: f64) -> f64 {
        match self {
            Self::Squared => 2.0 * (a - b),
            Self::Absolute => {
                if a > b {
                    1.0
                } else if a < b {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Squared => "mse",
            Self::Absolute => "mae",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OneSided {
    Off,
    /// Mask against the optimal decision of the true costs.
    Optimal,
    /// Mask against objective-coefficient ranges of the relaxation.
    Sensitivity,
}

/// How the per-instance costs are obtained before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostSource {
    Baseline,
    Iterative(usize),
    Ensemble(usize),
}

/// Composition of a base error with optional components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub base: BaseError,
    pub scale_invariant: bool,
    pub one_sided: OneSided,
    /// When set, each instance's cached cost multiplies its loss.
    pub instance_costs: Option<CostSource>,
    /// Pinball asymmetry per output (a single entry broadcasts).
    pub tau: Option<Vec<f64>>,
}

impl LossSpec {
    pub fn base(base: BaseError) -> Self {
        Self {
            base,
            scale_invariant: false,
            one_sided: OneSided::Off,
            instance_costs: None,
            tau: None,
        }
    }

    pub fn mse() -> Self {
        Self::base(BaseError::Squared)
    }

    pub fn mae() -> Self {
        Self::base(BaseError::Absolute)
    }

    pub fn with_costs(mut self) -> Self {
        self.instance_costs = Some(CostSource::Baseline);
        self
    }

    pub fn with_one_sided(mut self, mode: OneSided) -> Self {
        self.one_sided = mode;
        self
    }

    pub fn with_scale_invariance(mut self) -> Self {
        self.scale_invariant = true;
        self
    }

    pub fn with_tau(mut self, tau: Vec<f64>) -> Self {
        self.tau = Some(tau);
        self
    }

    /// Same spec with the instance-cost component removed.
    pub fn without_costs(&self) -> Self {
        Self {
            instance_costs: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: &str| Error::InvalidLossSpec {
            spec: Loss::Composed(self.clone()).to_string(),
            reason: reason.to_string(),
        };
        if let Some(tau) = &self.tau {
            if self.one_sided != OneSided::Off {
                return Err(invalid("tau cannot be combined with a one-sided mask"));
            }
            if tau.is_empty() || tau.iter().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(invalid("tau values must lie in [0, 1]"));
            }
        }
        match self.instance_costs {
            Some(CostSource::Iterative(0)) | Some(CostSource::Ensemble(0)) => {
                Err(invalid("round count must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Every trainable loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Loss {
    Composed(LossSpec),
    SpoPlus,
    /// Base loss reweighted by `w * baseline_regret + 1 - w`.
    Lawless {
        w: f64,
        base: BaseError,
    },
}

impl Loss {
    pub fn needs_optimal_decisions(&self) -> bool {
        match self {
            Self::Composed(s) => s.one_sided != OneSided::Off,
            Self::SpoPlus => true,
            Self::Lawless { .. } => false,
        }
    }

    pub fn needs_ranges(&self) -> bool {
        matches!(self, Self::Composed(s) if s.one_sided == OneSided::Sensitivity)
    }

    pub fn cost_source(&self) -> Option<CostSource> {
        match self {
            Self::Composed(s) => s.instance_costs,
            _ => None,
        }
    }

    pub fn needs_baseline_regret(&self) -> bool {
        matches!(self, Self::Lawless { .. })
    }

    /// Solver calls per training evaluation of one instance.
    pub fn solves_per_evaluation(&self) -> u64 {
        u64::from(matches!(self, Self::SpoPlus))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Composed(s) => s.validate(),
            Self::SpoPlus => Ok(()),
            Self::Lawless { w, .. } => {
                if (0.0..=1.0).contains(w) {
                    Ok(())
                } else {
                    Err(Error::InvalidLossSpec {
                        spec: self.to_string(),
                        reason: "lawless weight must lie in [0, 1]".into(),
                    })
                }
            }
        }
    }
}

impl From<LossSpec> for Loss {
    fn from(spec: LossSpec) -> Self {
        Self::Composed(spec)
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SpoPlus => f.write_str("spo+"),
            Self::Lawless { w, base } => match base {
                BaseError::Squared => write!(f, "lawless:{}", fmt_num(*w)),
                BaseError::Absolute => write!(f, "mae+lawless:{}", fmt_num(*w)),
            },
            Self::Composed(s) => {
                let mut parts = vec![s.base.name().to_string()];
                match s.instance_costs {
                    None => {}
                    Some(CostSource::Baseline) => parts.push("c".into()),
                    Some(CostSource::Iterative(k)) => parts.push(format!("ic:{k}")),
                    Some(CostSource::Ensemble(k)) => parts.push(format!("eic:{k}")),
                }
                match s.one_sided {
                    OneSided::Off => {}
                    OneSided::Optimal => parts.push("o".into()),
                    OneSided::Sensitivity => parts.push("o_s".into()),
                }
                if s.scale_invariant {
                    parts.push("s".into());
                }
                if let Some(tau) = &s.tau {
                    let vals: Vec<String> = tau.iter().map(|t| fmt_num(*t)).collect();
                    parts.push(format!("tau:{}", vals.join(",")));
                }
                f.write_str(&parts.join("+"))
            }
        }
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let name = text.trim().to_ascii_lowercase();
        let invalid = |reason: String| Error::InvalidLossSpec {
            spec: text.to_string(),
            reason,
        };
        if name == "spo+" || name == "spoplus" || name == "spo_plus" {
            return Ok(Self::SpoPlus);
        }
        let mut base: Option<BaseError> = None;
        let mut costs: Option<CostSource> = None;
        let mut one_sided = OneSided::Off;
        let mut scale = false;
        let mut tau: Option<Vec<f64>> = None;
        let mut lawless: Option<f64> = None;

        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| invalid(format!("bad number `{s}`")))
        };
        let parse_k = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| invalid(format!("bad round count `{s}`")))
        };

        for token in name.split('+').map(str::trim) {
            let (head, arg) = match token.split_once(':') {
                Some((h, a)) => (h, Some(a)),
                None => (token, None),
            };
            let set_costs = |costs: &mut Option<CostSource>, v: CostSource| {
                if costs.replace(v).is_some() {
                    Err(invalid("instance costs given twice".into()))
                } else {
                    Ok(())
                }
            };
            let set_mask = |mask: &mut OneSided, v: OneSided| {
                if *mask != OneSided::Off {
                    return Err(invalid("one-sided mask given twice".into()));
                }
                *mask = v;
                Ok(())
            };
            match (head, arg) {
                ("mse", None) | ("mae", None) => {
                    let b = if head == "mse" {
                        BaseError::Squared
                    } else {
                        BaseError::Absolute
                    };
                    if base.replace(b).is_some() {
                        return Err(invalid("base error given twice".into()));
                    }
                }
                ("c", None) => set_costs(&mut costs, CostSource::Baseline)?,
                ("ic", Some(k)) => set_costs(&mut costs, CostSource::Iterative(parse_k(k)?))?,
                ("eic", Some(k)) => set_costs(&mut costs, CostSource::Ensemble(parse_k(k)?))?,
                ("o", None) => set_mask(&mut one_sided, OneSided::Optimal)?,
                ("o_s", None) | ("os", None) => set_mask(&mut one_sided, OneSided::Sensitivity)?,
                ("s", None) => {
                    if scale {
                        return Err(invalid("`s` given twice".into()));
                    }
                    scale = true;
                }
                ("cos", None) => {
                    set_costs(&mut costs, CostSource::Baseline)?;
                    set_mask(&mut one_sided, OneSided::Optimal)?;
                    if scale {
                        return Err(invalid("`s` given twice".into()));
                    }
                    scale = true;
                }
                ("tau", Some(v)) => {
                    let vals = v.split(',').map(parse_f).collect::<Result<Vec<_>>>()?;
                    if tau.replace(vals).is_some() {
                        return Err(invalid("tau given twice".into()));
                    }
                }
                ("lawless", Some(w)) => {
                    if lawless.replace(parse_f(w)?).is_some() {
                        return Err(invalid("lawless given twice".into()));
                    }
                }
                _ => return Err(invalid(format!("unknown token `{token}`"))),
            }
        }

        let base = base.unwrap_or(BaseError::Squared);
        let loss = match lawless {
            Some(w) => {
                if costs.is_some() || one_sided != OneSided::Off || scale || tau.is_some() {
                    return Err(invalid("lawless combines only with a base error".into()));
                }
                Self::Lawless { w, base }
            }
            None => Self::Composed(LossSpec {
                base,
                scale_invariant: scale,
                one_sided,
                instance_costs: costs,
                tau,
            }),
        };
        loss.validate().map_err(|e| match e {
            Error::InvalidLossSpec { reason, .. } => invalid(reason),
            other => other,
        })?;
        Ok(loss)
    }
}
