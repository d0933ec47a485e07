//! Instance-based costs: per-instance weights that make the weighted base loss
//! of a baseline model equal its regret.
//!
//! For instances with positive baseline regret (`N+`), `C_i = regret_i / loss_i`.
//! Every other instance receives the mean of those costs, and all costs are 1
//! when `N+` is empty. A positive regret with a vanishing base loss would give an
//! unbounded cost; such entries are capped at the 99th percentile of the finite
//! costs and reported as warnings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{evaluate_loss, LossContext, LossSpec};
use crate::model::{LinearModel, Predictor};
use crate::problems::ProblemOracle;
use crate::regret::regret_against;
use crate::types::{CostVector, DataInstance};

/// Base losses below this are treated as zero.
pub const DEGENERATE_LOSS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CostWarning {
    /// No instance had positive regret; every cost is 1.
    AllZeroRegret,
    /// Positive regret with a vanishing base loss; the cost was capped.
    DegenerateBaseLoss { index: usize, capped_to: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub predictions: Vec<CostVector>,
    pub base_losses: Vec<f64>,
    pub regrets: Vec<f64>,
    pub costs: Vec<f64>,
    /// Indices with strictly positive regret.
    pub positive: Vec<usize>,
    pub warnings: Vec<CostWarning>,
}

impl BaselineReport {
    /// `sum_{N+} C_i loss_i - sum_{N+} regret_i`.
    pub fn identity_gap(&self) -> f64 {
        let weighted: f64 = self
            .positive
            .iter()
            .map(|&i| self.costs[i] * self.base_losses[i])
            .sum();
        let regret: f64 = self.positive.iter().map(|&i| self.regrets[i]).sum();
        weighted - regret
    }

    /// Copies the costs onto `instances` (same order as the report).
    pub fn apply(&self, instances: &mut [DataInstance]) {
        for (inst, &c) in instances.iter_mut().zip(&self.costs) {
            inst.instance_cost = Some(c);
        }
    }
}

fn percentile_99(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let rank = (0.99 * v.len() as f64).ceil() as usize;
    Some(v[rank.saturating_sub(1)])
}

/// Costs from `baseline` predictions on `instances`. One counted solve per
/// instance; every instance must carry its optimal decision.
pub fn compute_instance_costs(
    problem: &ProblemOracle,
    baseline: &(impl Predictor + ?Sized),
    instances: &[DataInstance],
    base_spec: &LossSpec,
    ctx: &LossContext,
) -> Result<BaselineReport> {
    if base_spec.instance_costs.is_some() {
        return Err(Error::InvalidLossSpec {
            spec: crate::losses::Loss::Composed(base_spec.clone()).to_string(),
            reason: "the base loss for instance costs cannot itself use instance costs".into(),
        });
    }
    let rows = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let x = inst
                .optimal_decision
                .as_ref()
                .ok_or(Error::MissingOptimalDecision)
                .map_err(|e| e.at_instance(i))?;
            let pred = baseline.predict(&inst.features)?;
            let loss = evaluate_loss(base_spec, &pred, inst, ctx)?.value;
            let r = regret_against(problem, &pred, &inst.true_costs, x)
                .map_err(|e| e.at_instance(i))?;
            Ok((pred, loss, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = rows.len();
    let mut predictions = Vec::with_capacity(n);
    let mut base_losses = Vec::with_capacity(n);
    let mut regrets = Vec::with_capacity(n);
    for (p, l, r) in rows {
        predictions.push(p);
        base_losses.push(l);
        regrets.push(r);
    }
    let positive: Vec<usize> = (0..n).filter(|&i| regrets[i] > 0.0).collect();
    let mut warnings = Vec::new();
    let mut costs = vec![1.0; n];
    if positive.is_empty() {
        if n > 0 {
            warnings.push(CostWarning::AllZeroRegret);
        }
    } else {
        let mut degenerate = Vec::new();
        for &i in &positive {
            if base_losses[i] < DEGENERATE_LOSS {
                degenerate.push(i);
                costs[i] = f64::INFINITY;
            } else {
                costs[i] = regrets[i] / base_losses[i];
            }
        }
        if !degenerate.is_empty() {
            let finite: Vec<f64> = positive.iter().map(|&i| costs[i]).collect();
            let cap = percentile_99(&finite).unwrap_or(1.0);
            for i in degenerate {
                costs[i] = cap;
                warnings.push(CostWarning::DegenerateBaseLoss {
                    index: i,
                    capped_to: cap,
                });
            }
        }
        let mean = positive.iter().map(|&i| costs[i]).sum::<f64>() / positive.len() as f64;
        for (i, c) in costs.iter_mut().enumerate() {
            if regrets[i] <= 0.0 {
                *c = mean;
            }
        }
    }
    Ok(BaselineReport {
        predictions,
        base_losses,
        regrets,
        costs,
        positive,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct CostRounds {
    pub model: LinearModel,
    /// One report per cost computation, in order.
    pub reports: Vec<BaselineReport>,
}

fn with_unit_costs(instances: &[DataInstance]) -> Vec<DataInstance> {
    let mut data = instances.to_vec();
    for inst in &mut data {
        inst.instance_cost = Some(1.0);
    }
    data
}

/// Repeated cost estimation. A baseline is trained with unit costs, then each
/// of `rounds` rounds recomputes the costs from the current model and
/// retrains. `train(round, instances)` trains a fresh model on instances
/// carrying the current costs; round 0 is the baseline. One round is the
/// plain baseline-then-costs pipeline; each round costs `n` solves.
pub fn iterative_costs<F>(
    problem: &ProblemOracle,
    instances: &[DataInstance],
    base_spec: &LossSpec,
    ctx: &LossContext,
    rounds: usize,
    mut train: F,
) -> Result<CostRounds>
where
    F: FnMut(usize, &[DataInstance]) -> Result<LinearModel>,
{
    if rounds == 0 {
        return Err(Error::InvalidConfig(
            "at least one round is required".into(),
        ));
    }
    let mut data = with_unit_costs(instances);
    let mut model = train(0, &data)?;
    let mut reports = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let report = compute_instance_costs(problem, &model, &data, base_spec, ctx)?;
        report.apply(&mut data);
        reports.push(report);
        model = train(round, &data)?;
    }
    Ok(CostRounds { model, reports })
}

/// Ensemble cost estimation. Member `k` is trained on costs computed from the
/// average of members `0..k` (member 0 uses unit costs); the result is the
/// average of all `rounds` members.
pub fn ensemble_costs<F>(
    problem: &ProblemOracle,
    instances: &[DataInstance],
    base_spec: &LossSpec,
    ctx: &LossContext,
    rounds: usize,
    mut train: F,
) -> Result<CostRounds>
where
    F: FnMut(usize, &[DataInstance]) -> Result<LinearModel>,
{
    if rounds == 0 {
        return Err(Error::InvalidConfig(
            "at least one round is required".into(),
        ));
    }
    let mut data = with_unit_costs(instances);
    let mut members: Vec<LinearModel> = Vec::with_capacity(rounds);
    let mut reports = Vec::with_capacity(rounds - 1);
    let mut ensemble: Option<LinearModel> = None;
    for round in 0..rounds {
        if let Some(phi) = &ensemble {
            let report = compute_instance_costs(problem, phi, &data, base_spec, ctx)?;
            report.apply(&mut data);
            reports.push(report);
        }
        members.push(train(round, &data)?);
        ensemble = Some(LinearModel::average(&members)?);
    }
    Ok(CostRounds {
        model: ensemble.expect("at least one round"),
        reports,
    })
}
