//! Result tables written to the output directory:
//!
//! * `results.csv`: one row per run,
//! * `aggregate.csv`: mean and sample standard deviation per loss,
//! * `pareto.csv`: mean regret against mean time, with front flags,
//! * `reports.json`: full reports including failures and warnings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::emit_pareto;
use super::{ExperimentConfig, ExperimentOutput, RunReport};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub problem: String,
    pub loss: String,
    pub runs: usize,
    pub regret_abs_mean: f64,
    pub regret_abs_std: f64,
    pub regret_norm_mean: f64,
    pub regret_norm_std: f64,
    pub time_mean: f64,
    pub solves_pre_mean: f64,
    pub solves_train_mean: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per loss, in order of first appearance.
pub fn aggregate(reports: &[RunReport]) -> Vec<AggregateRow> {
    let mut losses: Vec<&str> = Vec::new();
    for r in reports {
        if !losses.contains(&r.loss.as_str()) {
            losses.push(&r.loss);
        }
    }
    losses
        .into_iter()
        .map(|loss| {
            let runs: Vec<&RunReport> = reports.iter().filter(|r| r.loss == loss).collect();
            let col = |f: fn(&RunReport) -> f64| runs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (regret_abs_mean, regret_abs_std) = mean_std(&col(|r| r.regret_abs));
            let (regret_norm_mean, regret_norm_std) = mean_std(&col(|r| r.regret_norm));
            AggregateRow {
                problem: runs[0].problem.clone(),
                loss: loss.to_string(),
                runs: runs.len(),
                regret_abs_mean,
                regret_abs_std,
                regret_norm_mean,
                regret_norm_std,
                time_mean: mean_std(&col(|r| r.time_s)).0,
                solves_pre_mean: mean_std(&col(|r| r.solves.precompute() as f64)).0,
                solves_train_mean: mean_std(&col(|r| r.solves.training_solves as f64)).0,
            }
        })
        .collect()
}

/// `results.csv` contents. Without `timing` the time column is 0.
pub fn results_csv(reports: &[RunReport], timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "problem",
        "loss",
        "seed",
        "regret_abs",
        "regret_norm",
        "time_s",
        "solves_pre",
        "solves_train",
        "exact",
    ])?;
    for r in reports {
        let time = if timing { r.time_s } else { 0.0 };
        w.write_record([
            r.problem.clone(),
            r.loss.clone(),
            r.seed.to_string(),
            r.regret_abs.to_string(),
            r.regret_norm.to_string(),
            time.to_string(),
            r.solves.precompute().to_string(),
            r.solves.training_solves.to_string(),
            r.exact.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn aggregate_csv(rows: &[AggregateRow], timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        let mut row = row.clone();
        if !timing {
            row.time_mean = 0.0;
        }
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn pareto_csv(rows: &[AggregateRow]) -> Result<String> {
    let points: Vec<(String, f64, f64)> = rows
        .iter()
        .map(|r| (r.loss.clone(), r.regret_norm_mean, r.time_mean))
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["loss", "regret_norm", "time_s", "pareto"])?;
    for p in emit_pareto(&points) {
        w.write_record([
            p.label,
            p.regret.to_string(),
            p.time.to_string(),
            p.pareto.to_string(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_outputs(dir: &Path, config: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("results.csv"),
        results_csv(&out.reports, config.timing)?,
    )?;
    std::fs::write(
        dir.join("aggregate.csv"),
        aggregate_csv(&out.aggregate, config.timing)?,
    )?;
    if !out.aggregate.is_empty() {
        std::fs::write(dir.join("pareto.csv"), pareto_csv(&out.aggregate)?)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(dir.join("reports.json"))?);
    serde_json::to_writer_pretty(file, out)?;
    Ok(())
}
