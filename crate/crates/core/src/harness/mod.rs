//! Experiment orchestration: loss × seed grids with exact solver-call accounting.
//!
//! Loss names use the grammar of [`Loss`]: a base error (`mse` or `mae`) joined
//! by `+` to any of the components
//!
//! | name     | meaning                                         |
//! |----------|-------------------------------------------------|
//! | `c`      | instance costs from a baseline                  |
//! | `ic:K`   | instance costs, `K` iterative rounds            |
//! | `eic:K`  | instance costs, ensemble of `K` members         |
//! | `o`      | one-sided mask from the optimal decision        |
//! | `o_s`    | one-sided mask from cost ranges of the relaxation |
//! | `s`      | scale invariance                                |
//! | `cos`    | shorthand for `c+o+s`                           |
//! | `tau:x`  | pinball asymmetry, one value or one per output  |
//!
//! plus the comparison losses `spo+` and `lawless:w` (`mae+lawless:w` for an
//! absolute base).
//!
//! Each (loss, seed) cell owns a fresh oracle, so its counters report exactly
//! the solver calls of that run:
//!
//! * `precompute_n_star`: optimal decisions of the training and validation
//!   instances, when the loss needs them,
//! * `precompute_ranges`: relaxed solves for `o_s`,
//! * `instance_cost_solves`: baseline regrets for `c` and `lawless`,
//! * `training_solves`: solves inside the training loop (SPO+ only).
//!
//! Test regret is evaluated on a separate oracle and is not part of the count.

mod analysis;
mod checks;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate, GenSpec};
use crate::error::{Error, Result};
use crate::instance_costs::{
    ensemble_costs, iterative_costs, BaselineReport, CostRounds, CostWarning,
};
use crate::losses::{CostSource, Loss, LossContext, LossSpec};
use crate::model::{train, LinearModel, Predictor, TrainConfig};
use crate::problems::{ProblemOracle, ProblemSpec};
use crate::regret::{normalized, regret_against, total_regret};
use crate::types::{DataInstance, Dataset};

pub use analysis::{
    component_losses, emit_pareto, monotonicity_from, monotonicity_report, MonotonicityReport,
    OrderRow, ParetoPoint, MONOTONICITY_TOL, PARETO_TIME_BAND,
};
pub use checks::{random_lp, sensitivity_check, SensitivityCheck};
pub use output::{aggregate, results_csv, write_outputs, AggregateRow};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "COSDFL_THREADS";

fn default_normalize() -> String {
    "mse".into()
}

fn default_timeout() -> Option<f64> {
    Some(600.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Problem name: `ks<N>`, `sp<R>x<C>`, `tsp<N>` or `custom:<file>`.
    pub problem: String,
    #[serde(default)]
    pub gen: GenSpec,
    /// Load this dataset instead of generating one per seed.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    pub losses: Vec<String>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_normalize")]
    pub normalize_against: String,
    /// Time limit per training run, in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_seconds: Option<f64>,
    /// Write measured wall times to `results.csv`. Off by default so that
    /// the file depends on the configuration alone.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, losses: &[&str], seeds: &[u64]) -> Self {
        Self {
            problem: problem.to_string(),
            gen: GenSpec::default(),
            dataset: None,
            losses: losses.iter().map(|s| s.to_string()).collect(),
            seeds: seeds.to_vec(),
            train: TrainConfig::default(),
            output_dir: None,
            normalize_against: default_normalize(),
            timeout_seconds: default_timeout(),
            timing: false,
            threads: None,
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Parsed losses in configuration order.
    pub fn parsed_losses(&self) -> Result<Vec<Loss>> {
        self.losses.iter().map(|s| s.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.losses.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one loss and one seed are required".into(),
            ));
        }
        let losses = self.parsed_losses()?;
        let names: Vec<String> = losses.iter().map(Loss::to_string).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidConfig(format!("loss {n} listed twice")));
            }
        }
        let norm: Loss = self.normalize_against.parse()?;
        if !losses.contains(&norm) {
            return Err(Error::InvalidConfig(format!(
                "normalize_against {} is not among the losses",
                self.normalize_against
            )));
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::InvalidConfig(format!("seed {s} listed twice")));
            }
        }
        if self.timeout_seconds.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("timeout must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        self.train.validate()?;
        if self.dataset.is_none() {
            self.gen.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveBreakdown {
    pub precompute_n_star: u64,
    pub precompute_ranges: u64,
    pub instance_cost_solves: u64,
    pub training_solves: u64,
}

impl SolveBreakdown {
    /// Everything spent before the final training run.
    pub fn precompute(&self) -> u64 {
        self.precompute_n_star + self.precompute_ranges + self.instance_cost_solves
    }

    pub fn total(&self) -> u64 {
        self.precompute() + self.training_solves
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub loss: String,
    pub seed: u64,
    /// Mean test regret.
    pub regret_abs: f64,
    /// `regret_abs` over the normalization loss's `regret_abs` for this seed.
    pub regret_norm: f64,
    /// Wall time from data preparation to the end of training.
    pub time_s: f64,
    pub solves: SolveBreakdown,
    /// Whether the oracle is exact.
    pub exact: bool,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub loss: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    /// Successful runs, by configured loss order then seed order.
    pub reports: Vec<RunReport>,
    pub aggregate: Vec<AggregateRow>,
    pub failures: Vec<RunFailure>,
}

impl ExperimentOutput {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn report(&self, loss: &str, seed: u64) -> Option<&RunReport> {
        let name = canonical(loss)?;
        self.reports
            .iter()
            .find(|r| r.loss == name && r.seed == seed)
    }

    pub fn aggregate_row(&self, loss: &str) -> Option<&AggregateRow> {
        let name = canonical(loss)?;
        self.aggregate.iter().find(|r| r.loss == name)
    }
}

fn canonical(loss: &str) -> Option<String> {
    loss.parse::<Loss>().ok().map(|l| l.to_string())
}

/// Worker pool size: `threads`, else `COSDFL_THREADS`, else rayon's default.
fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or(from_env) {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn prepare_data(config: &ExperimentConfig, seed: u64) -> Result<(ProblemSpec, Dataset)> {
    let spec = ProblemSpec::from_name(&config.problem, seed)?;
    let data = match &config.dataset {
        Some(path) => Dataset::load_json(path)?,
        None => {
            let gen = GenSpec {
                seed,
                ..config.gen.clone()
            };
            generate(&gen, &ProblemOracle::new(spec.clone()))?
        }
    };
    if data.d != spec.dim() {
        return Err(Error::DimensionMismatch {
            what: "dataset costs",
            expected: spec.dim(),
            got: data.d,
        });
    }
    Ok((spec, data))
}

/// Runs every (loss, seed) cell and assembles reports in configuration order.
/// Failed cells are recorded and the rest of the grid continues; only an
/// invalid configuration is an error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let losses = config.parsed_losses()?;
    let pool = pool(config.threads)?;
    let (data, cells) = pool.install(|| {
        let data: Vec<Result<(ProblemSpec, Dataset)>> = config
            .seeds
            .par_iter()
            .map(|&seed| prepare_data(config, seed))
            .collect();
        let grid: Vec<(usize, usize)> = (0..losses.len())
            .flat_map(|l| (0..config.seeds.len()).map(move |s| (l, s)))
            .collect();
        let cells: Vec<Result<RunReport>> = grid
            .par_iter()
            .map(|&(l, s)| match &data[s] {
                Ok((spec, ds)) => run_cell(config, &losses[l], config.seeds[s], spec, ds),
                Err(e) => Err(Error::InvalidConfig(format!(
                    "data preparation failed: {e}"
                ))),
            })
            .collect();
        (data, cells)
    });
    drop(data);

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (i, cell) in cells.into_iter().enumerate() {
        let (l, s) = (i / config.seeds.len(), i % config.seeds.len());
        match cell {
            Ok(r) => reports.push(r),
            Err(e) => failures.push(RunFailure {
                loss: losses[l].to_string(),
                seed: config.seeds[s],
                message: e.to_string(),
            }),
        }
    }
    normalize_reports(
        &mut reports,
        &config.normalize_against.parse::<Loss>()?.to_string(),
    );
    let aggregate = aggregate(&reports);
    let out = ExperimentOutput {
        reports,
        aggregate,
        failures,
    };
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, config, &out)?;
    }
    Ok(out)
}

fn normalize_reports(reports: &mut [RunReport], against: &str) {
    let baselines: Vec<(u64, f64)> = reports
        .iter()
        .filter(|r| r.loss == against)
        .map(|r| (r.seed, r.regret_abs))
        .collect();
    for r in reports.iter_mut() {
        r.regret_norm = baselines
            .iter()
            .find(|(s, _)| *s == r.seed)
            .map_or(f64::NAN, |&(_, b)| normalized(r.regret_abs, b));
    }
}

fn clear_caches(instances: &mut [DataInstance]) {
    for inst in instances {
        inst.optimal_decision = None;
        inst.sensitivity_ranges = None;
        inst.instance_cost = None;
        inst.baseline_regret = None;
    }
}

fn attach_optimal(oracle: &ProblemOracle, instances: &mut [DataInstance]) -> Result<()> {
    let xs = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| oracle.solve(&inst.true_costs).map_err(|e| e.at_instance(i)))
        .collect::<Result<Vec<_>>>()?;
    for (inst, x) in instances.iter_mut().zip(xs) {
        inst.optimal_decision = Some(x);
    }
    Ok(())
}

fn attach_ranges(oracle: &ProblemOracle, instances: &mut [DataInstance]) -> Result<()> {
    let rs = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            oracle
                .sensitivity_ranges(&inst.true_costs)
                .map_err(|e| e.at_instance(i))
        })
        .collect::<Result<Vec<_>>>()?;
    for (inst, r) in instances.iter_mut().zip(rs) {
        inst.sensitivity_ranges = Some(r);
    }
    Ok(())
}

fn describe(w: &CostWarning) -> String {
    match w {
        CostWarning::AllZeroRegret => "baseline has zero regret on every instance".into(),
        CostWarning::DegenerateBaseLoss { index, capped_to } => {
            format!("instance {index}: vanishing base loss, cost capped to {capped_to}")
        }
    }
}

/// Training data as seen by `loss`. SPO+ trains on training and validation
/// data together and validates on its training loss.
pub fn training_split(loss: &Loss, data: &Dataset) -> (Vec<DataInstance>, Vec<DataInstance>) {
    let (mut train, mut val) = match loss {
        Loss::SpoPlus => {
            let mut t = data.train();
            t.extend(data.val());
            (t, Vec::new())
        }
        _ => (data.train(), data.val()),
    };
    clear_caches(&mut train);
    clear_caches(&mut val);
    (train, val)
}

/// A trained model with the solver calls spent on it.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: LinearModel,
    pub solves: SolveBreakdown,
    /// Instance-cost computations, in order.
    pub cost_reports: Vec<BaselineReport>,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

impl Fit {
    pub fn warnings(&self) -> Vec<String> {
        self.cost_reports
            .iter()
            .flat_map(|r| r.warnings.iter().map(describe))
            .collect()
    }
}

/// Precompute, optional baseline and instance costs, then training of a model
/// initialized from `config.seed`, all counted on a fresh oracle for `spec`.
pub fn fit(config: &TrainConfig, loss: &Loss, spec: &ProblemSpec, data: &Dataset) -> Result<Fit> {
    loss.validate()?;
    let oracle = ProblemOracle::new(spec.clone());
    let ctx = LossContext::from_problem(&oracle);
    let (mut train_set, mut val_set) = training_split(loss, data);

    let needs_x = loss.needs_optimal_decisions()
        || loss.cost_source().is_some()
        || loss.needs_baseline_regret();
    if needs_x {
        attach_optimal(&oracle, &mut train_set)?;
        attach_optimal(&oracle, &mut val_set)?;
    }
    let precompute_n_star = oracle.counts().solves;
    if loss.needs_ranges() {
        attach_ranges(&oracle, &mut train_set)?;
        attach_ranges(&oracle, &mut val_set)?;
    }
    let precompute_ranges = oracle.counts().relaxed;

    let (k, d) = (data.k, data.d);
    let seed = config.seed;
    let run = |insts: &[DataInstance], loss: &Loss| -> Result<(LinearModel, usize, usize)> {
        let mut model = LinearModel::init(k, d, seed);
        let trace = train(&mut model, insts, &val_set, loss, config, &oracle)?;
        Ok((model, trace.train_loss.len(), trace.best_epoch))
    };

    let before_costs = oracle.counts().solves;
    let mut cost_reports = Vec::new();
    let (model, epochs_run, best_epoch) = match loss {
        Loss::Composed(s) if s.instance_costs.is_some() => {
            // The baseline is trained with every other component of the loss.
            let base = s.without_costs();
            let mut last = (0, 0);
            let mut round = |_: usize, insts: &[DataInstance]| {
                let (m, e, b) = run(insts, loss)?;
                last = (e, b);
                Ok(m)
            };
            let CostRounds { model, reports } = match s.instance_costs {
                Some(CostSource::Ensemble(k)) => {
                    ensemble_costs(&oracle, &train_set, &base, &ctx, k, &mut round)?
                }
                Some(CostSource::Iterative(k)) => {
                    iterative_costs(&oracle, &train_set, &base, &ctx, k, &mut round)?
                }
                _ => iterative_costs(&oracle, &train_set, &base, &ctx, 1, &mut round)?,
            };
            cost_reports = reports;
            (model, last.0, last.1)
        }
        Loss::Lawless { base, .. } => {
            let (baseline, _, _) = run(&train_set, &Loss::Composed(LossSpec::base(*base)))?;
            let regrets = train_set
                .par_iter()
                .enumerate()
                .map(|(i, inst)| {
                    let pred = baseline.predict(&inst.features)?;
                    let x = inst
                        .optimal_decision
                        .as_ref()
                        .ok_or(Error::MissingOptimalDecision)?;
                    regret_against(&oracle, &pred, &inst.true_costs, x)
                        .map_err(|e| e.at_instance(i))
                })
                .collect::<Result<Vec<_>>>()?;
            for (inst, r) in train_set.iter_mut().zip(regrets) {
                inst.baseline_regret = Some(r);
            }
            run(&train_set, loss)?
        }
        _ => run(&train_set, loss)?,
    };
    // Only SPO+ solves during training, and it has no cost phase.
    let spent = oracle.counts().solves - before_costs;
    let (instance_cost_solves, training_solves) = match loss {
        Loss::SpoPlus => (0, spent),
        _ => (spent, 0),
    };
    Ok(Fit {
        model,
        solves: SolveBreakdown {
            precompute_n_star,
            precompute_ranges,
            instance_cost_solves,
            training_solves,
        },
        cost_reports,
        epochs_run,
        best_epoch,
    })
}

/// One grid cell: [`fit`] with the cell's seed, then test regret on an
/// uncounted oracle.
pub fn run_cell(
    config: &ExperimentConfig,
    loss: &Loss,
    seed: u64,
    spec: &ProblemSpec,
    data: &Dataset,
) -> Result<RunReport> {
    let start = Instant::now();
    let tc = TrainConfig {
        seed,
        time_limit_seconds: config.timeout_seconds,
        ..config.train.clone()
    };
    let fitted = fit(&tc, loss, spec, data)?;
    let time_s = start.elapsed().as_secs_f64();
    let eval = ProblemOracle::new(spec.clone());
    let test = total_regret(&eval, &fitted.model, &data.test())?;
    Ok(RunReport {
        problem: config.problem.clone(),
        loss: loss.to_string(),
        seed,
        regret_abs: test.mean,
        regret_norm: f64::NAN,
        time_s,
        solves: fitted.solves,
        exact: eval.is_exact(),
        epochs_run: fitted.epochs_run,
        best_epoch: fitted.best_epoch,
        warnings: fitted.warnings(),
    })
}

#[cfg(test)]
mod tests;
