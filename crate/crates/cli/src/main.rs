use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cosdfl_core::datagen::{generate, GenSpec};
use cosdfl_core::harness::{
    fit, monotonicity_report, run_experiment, sensitivity_check, ExperimentConfig, ExperimentOutput,
};
use cosdfl_core::regret::total_regret;
use cosdfl_core::{Dataset, LinearModel, Loss, ProblemOracle, ProblemSpec, TrainConfig};

/// Cost-sensitive surrogate losses for decision-focused learning.
#[derive(Parser)]
#[command(name = "cosdfl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Generate(GenerateArgs),
    /// Train one model on a dataset.
    Train(TrainArgs),
    /// Mean test regret of a trained model.
    Eval(EvalArgs),
    /// Run a loss x seed grid.
    Experiment(GridArgs),
    /// Run every subset of {C, O, S} and tabulate the addition orders.
    Monotonicity(GridArgs),
    /// Re-solve random LPs at their cost-range endpoints.
    SensitivityCheck(CheckArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// ks<N>, sp<R>x<C>, tsp<N> or custom:<file>.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    n_train: usize,
    #[arg(long, default_value_t = 400)]
    n_val: usize,
    #[arg(long, default_value_t = 600)]
    n_test: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    deg: u32,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    /// Output path; `.csv` writes a flat table, anything else JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    problem: String,
    /// Dataset JSON; its seed also fixes the problem instance.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "mse")]
    loss: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Model path; `.json` or binary checkpoint.
    #[arg(long, short)]
    out: PathBuf,
    /// Write the instance-cost reports as JSON.
    #[arg(long)]
    emit_costs: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated loss names.
    #[arg(long, value_delimiter = ',')]
    losses: Vec<String>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_val: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    normalize_against: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write wall times into results.csv.
    #[arg(long)]
    timing: bool,
    /// Worker threads; defaults to COSDFL_THREADS or all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long, default_value_t = 8)]
    max_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(a) => generate_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Experiment(a) => {
            let out = run_experiment(&grid_config(a)?)?;
            print_summary(&out);
            Ok(out.succeeded())
        }
        Command::Monotonicity(a) => {
            let (out, report) = monotonicity_report(&grid_config(a)?)?;
            print_summary(&out);
            print!("{}", report.to_csv()?);
            Ok(out.succeeded() && report.is_monotone())
        }
        Command::SensitivityCheck(a) => {
            let rep = sensitivity_check(a.count, a.max_dim, a.seed)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(rep.passed())
        }
    }
}

fn generate_cmd(a: GenerateArgs) -> Result<bool> {
    let spec = GenSpec {
        k: a.k,
        deg: a.deg,
        noise: a.noise,
        n_train: a.n_train,
        n_val: a.n_val,
        n_test: a.n_test,
        seed: a.seed,
        ..GenSpec::default()
    };
    let oracle = ProblemOracle::new(ProblemSpec::from_name(&a.problem, a.seed)?);
    let ds = generate(&spec, &oracle)?;
    if a.out.extension().is_some_and(|e| e == "csv") {
        ds.to_csv_writer(std::fs::File::create(&a.out)?)?;
    } else {
        ds.save_json(&a.out)?;
    }
    eprintln!(
        "wrote {} instances (d = {}) with {} solves to {}",
        ds.instances.len(),
        ds.d,
        oracle.counts().solves,
        a.out.display()
    );
    Ok(true)
}

fn load_data(problem: &str, path: &Path) -> Result<(ProblemSpec, Dataset)> {
    let ds = Dataset::load_json(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = ProblemSpec::from_name(problem, ds.seed)?;
    if spec.dim() != ds.d {
        bail!(
            "dataset has d = {} but {problem} has {} costs",
            ds.d,
            spec.dim()
        );
    }
    Ok((spec, ds))
}

fn train_cmd(a: TrainArgs) -> Result<bool> {
    let (spec, ds) = load_data(&a.problem, &a.data)?;
    let loss: Loss = a.loss.parse()?;
    let config = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let fitted = fit(&config, &loss, &spec, &ds)?;
    fitted.model.save(&a.out)?;
    if let Some(path) = &a.emit_costs {
        std::fs::write(path, serde_json::to_string_pretty(&fitted.cost_reports)?)?;
    }
    for w in fitted.warnings() {
        eprintln!("warning: {w}");
    }
    println!(
        "{}",
        serde_json::json!({
            "loss": loss.to_string(),
            "epochs_run": fitted.epochs_run,
            "best_epoch": fitted.best_epoch,
            "solves": fitted.solves,
        })
    );
    Ok(true)
}

fn eval_cmd(a: EvalArgs) -> Result<bool> {
    let (spec, ds) = load_data(&a.problem, &a.data)?;
    let model = LinearModel::load(&a.model)?;
    let oracle = ProblemOracle::new(spec);
    let summary = total_regret(&oracle, &model, &ds.test())?;
    println!(
        "{}",
        serde_json::json!({"mean_regret": summary.mean, "total_regret": summary.total, "instances": summary.count})
    );
    Ok(true)
}

fn grid_config(a: GridArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let problem = a
                .problem
                .clone()
                .context("--problem or --config is required")?;
            let mut c = ExperimentConfig::new(&problem, &["mse"], &[0]);
            c.losses.clear();
            c.seeds.clear();
            c
        }
    };
    if let Some(p) = a.problem {
        cfg.problem = p;
    }
    if !a.losses.is_empty() {
        cfg.losses = a.losses;
    }
    if !a.seeds.is_empty() {
        cfg.seeds = a.seeds;
    }
    if let Some(n) = a.n_train {
        cfg.gen.n_train = n;
    }
    if let Some(n) = a.n_val {
        cfg.gen.n_val = n;
    }
    if let Some(n) = a.n_test {
        cfg.gen.n_test = n;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(n) = a.normalize_against {
        cfg.normalize_against = n;
    }
    if a.out.is_some() {
        cfg.output_dir = a.out;
    }
    cfg.timing |= a.timing;
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if cfg.seeds.is_empty() {
        cfg.seeds = vec![0];
    }
    Ok(cfg)
}

fn print_summary(out: &ExperimentOutput) {
    println!("loss,runs,regret_abs_mean,regret_norm_mean,regret_norm_std,time_mean");
    for r in &out.aggregate {
        println!(
            "{},{},{:.6},{:.4},{:.4},{:.2}",
            r.loss, r.runs, r.regret_abs_mean, r.regret_norm_mean, r.regret_norm_std, r.time_mean
        );
    }
    for f in &out.failures {
        eprintln!("failed: {} seed {}: {}", f.loss, f.seed, f.message);
    }
}
