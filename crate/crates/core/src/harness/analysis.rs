use serde::{Deserialize, Serialize};

use super::{run_experiment, AggregateRow, ExperimentConfig, ExperimentOutput};
use crate::error::{Error, Result};
use crate::losses::{BaseError, Loss, LossSpec, OneSided};

/// Largest tolerated relative increase of mean normalized regret per step.
pub const MONOTONICITY_TOL: f64 = 0.05;

/// Runtimes closer than this are considered equal, in seconds.
pub const PARETO_TIME_BAND: f64 = 30.0;

const ORDERS: [[char; 3]; 6] = [
    ['C', 'O', 'S'],
    ['C', 'S', 'O'],
    ['O', 'C', 'S'],
    ['O', 'S', 'C'],
    ['S', 'C', 'O'],
    ['S', 'O', 'C'],
];

fn loss_with(base: BaseError, parts: &[char]) -> String {
    let mut spec = LossSpec::base(base);
    for p in parts {
        spec = match p {
            'C' => spec.with_costs(),
            'O' => spec.with_one_sided(OneSided::Optimal),
            _ => spec.with_scale_invariance(),
        };
    }
    Loss::Composed(spec).to_string()
}

/// The eight subsets of `{C, O, S}` on `base`, smallest first.
pub fn component_losses(base: BaseError) -> Vec<String> {
    let parts = ['C', 'O', 'S'];
    let mut subsets: Vec<Vec<char>> = (0..8u8)
        .map(|m| {
            (0..3)
                .filter(|b| m >> b & 1 == 1)
                .map(|b| parts[b])
                .collect()
        })
        .collect();
    subsets.sort_by_key(Vec::len);
    subsets.iter().map(|s| loss_with(base, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    /// For example `S>O>C`.
    pub order: String,
    /// Loss of each prefix, starting with the bare base.
    pub losses: Vec<String>,
    /// Mean normalized regret of each prefix.
    pub values: Vec<f64>,
    /// Steps `i` where going from prefix `i` to `i + 1` exceeded the tolerance.
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub base: String,
    pub tolerance: f64,
    pub orders: Vec<OrderRow>,
}

impl MonotonicityReport {
    pub fn is_monotone(&self) -> bool {
        self.orders.iter().all(|o| o.violations.is_empty())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["order", "step", "loss", "regret_norm", "violation"])?;
        for row in &self.orders {
            for (i, (loss, v)) in row.losses.iter().zip(&row.values).enumerate() {
                let flagged = i > 0 && row.violations.contains(&(i - 1));
                w.write_record([
                    row.order.clone(),
                    i.to_string(),
                    loss.clone(),
                    v.to_string(),
                    flagged.to_string(),
                ])?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Prefix table of every addition order, read from aggregate rows that cover
/// all of [`component_losses`].
pub fn monotonicity_from(
    rows: &[AggregateRow],
    base: BaseError,
    tolerance: f64,
) -> Result<MonotonicityReport> {
    let lookup = |name: &str| {
        rows.iter()
            .find(|r| r.loss == name)
            .map(|r| r.regret_norm_mean)
            .ok_or_else(|| Error::InvalidConfig(format!("no runs for loss {name}")))
    };
    let orders = ORDERS
        .iter()
        .map(|order| {
            let losses: Vec<String> = (0..=3).map(|i| loss_with(base, &order[..i])).collect();
            let values = losses
                .iter()
                .map(|l| lookup(l))
                .collect::<Result<Vec<_>>>()?;
            let violations = (0..3)
                .filter(|&i| !(values[i + 1] <= values[i] * (1.0 + tolerance)))
                .collect();
            Ok(OrderRow {
                order: order
                    .iter()
                    .map(char::to_string)
                    .collect::<Vec<_>>()
                    .join(">"),
                losses,
                values,
                violations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonotonicityReport {
        base: base.name().to_string(),
        tolerance,
        orders,
    })
}

/// Runs all eight component subsets of the base loss named by
/// `normalize_against` (the configured loss list is replaced) and tabulates
/// every addition order.
pub fn monotonicity_report(
    config: &ExperimentConfig,
) -> Result<(ExperimentOutput, MonotonicityReport)> {
    let base = match config.normalize_against.parse::<Loss>()? {
        Loss::Composed(s) if s == LossSpec::base(s.base) => s.base,
        other => {
            return Err(Error::InvalidConfig(format!(
                "monotonicity needs a plain base loss, got {other}"
            )))
        }
    };
    let mut config = config.clone();
    config.losses = component_losses(base);
    config.normalize_against = base.name().to_string();
    let out = run_experiment(&config)?;
    if let Some(f) = out.failures.first() {
        return Err(Error::InvalidConfig(format!(
            "run {} seed {} failed: {}",
            f.loss, f.seed, f.message
        )));
    }
    let report = monotonicity_from(&out.aggregate, base, MONOTONICITY_TOL)?;
    if let Some(dir) = &config.output_dir {
        std::fs::write(dir.join("monotonicity.csv"), report.to_csv()?)?;
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub label: String,
    pub regret: f64,
    pub time: f64,
    pub pareto: bool,
}

/// `a` dominates `b` when it is no worse on both axes and better on one, with
/// runtimes within [`PARETO_TIME_BAND`] counted as equal.
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    let no_worse = a.0 <= b.0 && a.1 <= b.1 + PARETO_TIME_BAND;
    let better = a.0 < b.0 || a.1 < b.1 - PARETO_TIME_BAND;
    no_worse && better
}

/// Flags the points of `(label, regret, time)` that no other point dominates.
pub fn emit_pareto(points: &[(String, f64, f64)]) -> Vec<ParetoPoint> {
    points
        .iter()
        .enumerate()
        .map(|(i, (label, regret, time))| ParetoPoint {
            label: label.clone(),
            regret: *regret,
            time: *time,
            pareto: !points
                .iter()
                .enumerate()
                .any(|(j, p)| j != i && dominates((p.1, p.2), (*regret, *time))),
        })
        .collect()
}
