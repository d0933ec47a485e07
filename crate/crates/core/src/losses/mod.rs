//! Cost-sensitive regression losses and their gradients in the prediction.
//!
//! A composed loss for one instance is
//!
//! ```text
//! C * (1/d) * sum_j  w_j * e(p_j, t_j)
//! ```
//!
//! where `e` is the squared or absolute error, `(p, t)` are the prediction and
//! true costs (both divided by their Euclidean norm when scale invariance is
//! on), `C` is the instance cost (1 when unused) and `w_j` is either a pinball
//! weight or a one-sided 0/1 mask. Masks are differentiated as locally constant;
//! at a mask boundary the masked-off branch is taken.

mod spec;

use serde::{Deserialize, Serialize};

pub use spec::{BaseError, CostSource, Loss, LossSpec, OneSided};

use crate::error::{check_len, Error, Result};
use crate::problems::ProblemOracle;
use crate::types::{dot, norm, CostRangeVector, DataInstance, Decision, Sense};

/// Norms at or below this cannot be normalized.
pub const NORM_EPS: f64 = 1e-12;
/// Tolerance for a decision variable to count as sitting on a bound.
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LossValueGrad {
    pub value: f64,
    /// Derivative of the loss in each predicted cost.
    pub gradient: Vec<f64>,
}

impl LossValueGrad {
    fn checked(self) -> Result<Self> {
        if let Some(j) = self.gradient.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(j));
        }
        Ok(self)
    }
}

/// Problem facts the masks need: sense and decision-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossContext {
    pub sense: Sense,
    pub lower: Vec<f64>,
    #[serde(with = "crate::types::inf_vec")]
    pub upper: Vec<f64>,
}

impl LossContext {
    pub fn binary(sense: Sense, d: usize) -> Self {
        Self {
            sense,
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn from_problem(problem: &ProblemOracle) -> Self {
        let (lower, upper) = problem.decision_bounds();
        Self {
            sense: problem.sense(),
            lower,
            upper,
        }
    }
}

/// Asymmetric error: `tau * e` for underprediction (`c_hat <= c`), `(1 - tau) * e`
/// otherwise.
pub fn pinball_loss(c_hat: f64, c: f64, tau: f64, base: BaseError) -> f64 {
    pinball_weight(c_hat, c, tau) * base.value(c_hat, c)
}

fn pinball_weight(c_hat: f64, c: f64, tau: f64) -> f64 {
    if c_hat <= c {
        tau
    } else {
        1.0 - tau
    }
}

pub fn normalize(c: &[f64]) -> Result<Vec<f64>> {
    let n = norm(c);
    if n <= NORM_EPS || !n.is_finite() {
        return Err(Error::ZeroVector(n));
    }
    Ok(c.iter().map(|v| v / n).collect())
}

/// 0/1 weights in the working space (`p`, `t` and `ranges` share one scale).
fn mask(
    p: &[f64],
    t: &[f64],
    x: &Decision,
    ranges: Option<&CostRangeVector>,
    ctx: &LossContext,
    mode: OneSided,
) -> Vec<f64> {
    let max = ctx.sense == Sense::Maximize;
    (0..p.len())
        .map(|j| {
            let at_upper = ctx.upper[j].is_finite() && x.values[j] >= ctx.upper[j] - BOUND_TOL;
            let at_lower = x.values[j] <= ctx.lower[j] + BOUND_TOL;
            // Keeping a variable at a bound only needs the prediction on one side.
            let (above, below) = match (mode, ranges) {
                (OneSided::Sensitivity, Some(r)) => (r.lower[j], r.upper[j]),
                _ => (t[j], t[j]),
            };
            let free = if max {
                (at_upper && p[j] >= above) || (at_lower && p[j] <= below)
            } else {
                (at_upper && p[j] <= below) || (at_lower && p[j] >= above)
            };
            if free {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

/// One-sided mask of `c_hat` for `instance` (1 = penalized, 0 = masked). With
/// `scale_invariant`, the comparison happens between normalized vectors and
/// normalized ranges.
pub fn one_sided_mask(
    c_hat: &[f64],
    instance: &DataInstance,
    ctx: &LossContext,
    mode: OneSided,
    scale_invariant: bool,
) -> Result<Vec<f64>> {
    let d = instance.true_costs.len();
    check_len("prediction", d, c_hat.len())?;
    if mode == OneSided::Off {
        return Ok(vec![1.0; d]);
    }
    let x = instance
        .optimal_decision
        .as_ref()
        .ok_or(Error::MissingOptimalDecision)?;
    let raw_ranges = match mode {
        OneSided::Sensitivity => Some(
            instance
                .sensitivity_ranges
                .as_ref()
                .ok_or(Error::MissingRanges)?,
        ),
        _ => None,
    };
    if scale_invariant {
        let n = norm(&instance.true_costs);
        let t = normalize(&instance.true_costs)?;
        let p = normalize(c_hat)?;
        let ranges = raw_ranges.map(|r| r.scaled(1.0 / n));
        Ok(mask(&p, &t, x, ranges.as_ref(), ctx, mode))
    } else {
        Ok(mask(c_hat, &instance.true_costs, x, raw_ranges, ctx, mode))
    }
}

/// Value and gradient of a composed loss on one instance.
pub fn evaluate_loss(
    spec: &LossSpec,
    c_hat: &[f64],
    instance: &DataInstance,
    ctx: &LossContext,
) -> Result<LossValueGrad> {
    let c = &instance.true_costs;
    let d = c.len();
    check_len("prediction", d, c_hat.len())?;
    check_len("decision bounds", d, ctx.lower.len())?;
    let df = d as f64;
    let weight = match spec.instance_costs {
        Some(_) => instance.instance_cost.ok_or(Error::MissingInstanceCost)?,
        None => 1.0,
    };

    let (t, c_norm) = if spec.scale_invariant {
        (normalize(c)?, norm(c))
    } else {
        (c.clone(), 1.0)
    };
    let (p, p_norm) = if spec.scale_invariant {
        let n = norm(c_hat);
        if n < NORM_EPS {
            // Push away from the origin rather than divide by ~0.
            return LossValueGrad {
                value: weight * 4.0 / df,
                gradient: t.iter().map(|v| -weight * 2.0 / df * v).collect(),
            }
            .checked();
        }
        (c_hat.iter().map(|v| v / n).collect::<Vec<_>>(), n)
    } else {
        (c_hat.to_vec(), 1.0)
    };

    let mut w = match spec.one_sided {
        OneSided::Off => vec![1.0; d],
        mode => {
            let x = instance
                .optimal_decision
                .as_ref()
                .ok_or(Error::MissingOptimalDecision)?;
            check_len("optimal decision", d, x.len())?;
            let ranges = match mode {
                OneSided::Sensitivity => {
                    let r = instance
                        .sensitivity_ranges
                        .as_ref()
                        .ok_or(Error::MissingRanges)?;
                    check_len("sensitivity ranges", d, r.len())?;
                    Some(r.scaled(1.0 / c_norm))
                }
                _ => None,
            };
            mask(&p, &t, x, ranges.as_ref(), ctx, mode)
        }
    };
    if let Some(tau) = &spec.tau {
        if tau.len() != 1 {
            check_len("tau", d, tau.len())?;
        }
        for j in 0..d {
            let tj = if tau.len() == 1 { tau[0] } else { tau[j] };
            w[j] *= pinball_weight(p[j], t[j], tj);
        }
    }

    let scale = weight / df;
    let mut value = 0.0;
    let mut g_p = vec![0.0; d];
    for j in 0..d {
        if w[j] == 0.0 {
            continue;
        }
        value += w[j] * spec.base.value(p[j], t[j]);
        g_p[j] = scale * w[j] * spec.base.derivative(p[j], t[j]);
    }
    value *= scale;

    let gradient = if spec.scale_invariant {
        // Jacobian of c_hat / |c_hat| is (I - p p^T) / |c_hat|.
        let pg = dot(&p, &g_p);
        g_p.iter()
            .zip(&p)
            .map(|(g, pj)| (g - pj * pg) / p_norm)
            .collect()
    } else {
        g_p
    };
    LossValueGrad { value, gradient }.checked()
}

/// SPO+ surrogate. Performs exactly one counted solve.
pub fn spo_plus_loss(
    c_hat: &[f64],
    instance: &DataInstance,
    problem: &ProblemOracle,
) -> Result<LossValueGrad> {
    let c = &instance.true_costs;
    let d = c.len();
    check_len("prediction", d, c_hat.len())?;
    let x_star = instance
        .optimal_decision
        .as_ref()
        .ok_or(Error::MissingOptimalDecision)?;
    let shifted: Vec<f64> = c_hat.iter().zip(c).map(|(h, v)| 2.0 * h - v).collect();
    let x_tilde = problem.solve(&shifted)?;
    let z_star = dot(c, &x_star.values);
    let two_hat_star = 2.0 * dot(c_hat, &x_star.values);
    let tilde = dot(&shifted, &x_tilde.values);
    let (value, gradient) = match problem.sense() {
        Sense::Maximize => (
            tilde - two_hat_star + z_star,
            (0..d)
                .map(|j| 2.0 * (x_tilde.values[j] - x_star.values[j]))
                .collect(),
        ),
        Sense::Minimize => (
            two_hat_star - tilde - z_star,
            (0..d)
                .map(|j| 2.0 * (x_star.values[j] - x_tilde.values[j]))
                .collect(),
        ),
    };
    LossValueGrad { value, gradient }.checked()
}

/// Base loss scaled by `w * baseline_regret + (1 - w)`.
pub fn lawless_loss(
    w: f64,
    c_hat: &[f64],
    instance: &DataInstance,
    base: BaseError,
) -> Result<LossValueGrad> {
    let r = instance
        .baseline_regret
        .ok_or(Error::MissingBaselineRegret)?;
    let factor = w * r + (1.0 - w);
    let ctx = LossContext::binary(Sense::Maximize, instance.true_costs.len());
    let mut out = evaluate_loss(&LossSpec::base(base), c_hat, instance, &ctx)?;
    out.value *= factor;
    out.gradient.iter_mut().for_each(|g| *g *= factor);
    Ok(out)
}

/// Any trainable loss on one instance. Solver calls happen only for SPO+.
pub fn evaluate(
    loss: &Loss,
    c_hat: &[f64],
    instance: &DataInstance,
    ctx: &LossContext,
    problem: &ProblemOracle,
) -> Result<LossValueGrad> {
    match loss {
        Loss::Composed(spec) => evaluate_loss(spec, c_hat, instance, ctx),
        Loss::SpoPlus => spo_plus_loss(c_hat, instance, problem),
        Loss::Lawless { w, base } => lawless_loss(*w, c_hat, instance, *base),
    }
}
