use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LinearModel, Predictor};
use crate::error::{check_len, Error, Result};
use crate::losses::{evaluate, evaluate_loss, Loss, LossContext, LossSpec};
use crate::problems::ProblemOracle;
use crate::types::DataInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Seeds the batch shuffles.
    pub seed: u64,
    /// Stop once this long has passed without a validation improvement.
    pub patience_seconds: Option<f64>,
    /// Stop after the first epoch that ends past this budget.
    pub time_limit_seconds: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            epochs: 50,
            batch_size: 32,
            optimizer: Optimizer::adam(),
            seed: 0,
            patience_seconds: None,
            time_limit_seconds: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Seconds since the start of training, per epoch.
    pub wall_time: Vec<f64>,
    /// Solver calls made since the start of training, per epoch.
    pub solves: Vec<u64>,
    /// Index of the epoch with the lowest validation loss.
    pub best_epoch: usize,
    pub best_model: LinearModel,
}

impl TrainTrace {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch]
    }
}

/// Validation loss: the composed loss without instance costs, or the base
/// loss for the comparison losses. No solver calls.
fn validation_spec(loss: &Loss) -> Option<LossSpec> {
    match loss {
        Loss::Composed(s) => Some(s.without_costs()),
        Loss::Lawless { base, .. } => Some(LossSpec::base(*base)),
        Loss::SpoPlus => None,
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

#[cfg(test)]
fn flatten(model: &LinearModel) -> Vec<f64> {
    model
        .weights
        .iter()
        .flatten()
        .chain(&model.bias)
        .copied()
        .collect()
}

fn apply(model: &mut LinearModel, step: &[f64]) {
    let mut it = step.iter();
    for v in model
        .weights
        .iter_mut()
        .flatten()
        .chain(model.bias.iter_mut())
    {
        *v -= it.next().expect("step has one entry per parameter");
    }
}

/// Mean loss and parameter gradient over `batch`; the parameter gradient is
/// `g z^T` for the weights and `g` for the bias.
pub(crate) fn batch_gradient(
    model: &LinearModel,
    batch: &[&DataInstance],
    loss: &Loss,
    ctx: &LossContext,
    problem: &ProblemOracle,
) -> Result<(f64, Vec<f64>)> {
    let (k, d) = (model.k(), model.d());
    let mut grad = vec![0.0; d * (k + 1)];
    let mut total = 0.0;
    let n = batch.len() as f64;
    for inst in batch {
        let pred = model.predict(&inst.features)?;
        let out = evaluate(loss, &pred, inst, ctx, problem)?;
        total += out.value;
        for j in 0..d {
            let g = out.gradient[j] / n;
            if g == 0.0 {
                continue;
            }
            for (i, z) in inst.features.iter().enumerate() {
                grad[j * k + i] += g * z;
            }
            grad[d * k + j] += g;
        }
    }
    Ok((total / n, grad))
}

fn mean_loss(
    model: &LinearModel,
    instances: &[DataInstance],
    spec: &LossSpec,
    ctx: &LossContext,
) -> Result<f64> {
    let mut total = 0.0;
    for inst in instances {
        let pred = model.predict(&inst.features)?;
        total += evaluate_loss(spec, &pred, inst, ctx)?.value;
    }
    Ok(total / instances.len() as f64)
}

/// Mini-batch training of `model` on `train`, selecting the epoch with the best
/// validation loss. When `val` is empty (or the loss is SPO+) the epoch's
/// training loss serves as the validation loss. On return `model` holds the
/// selected parameters.
pub fn train(
    model: &mut LinearModel,
    train: &[DataInstance],
    val: &[DataInstance],
    loss: &Loss,
    config: &TrainConfig,
    problem: &ProblemOracle,
) -> Result<TrainTrace> {
    config.validate()?;
    loss.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    let d = problem.dim();
    check_len("model outputs", d, model.d())?;
    let ctx = LossContext::from_problem(problem);
    let val_spec = validation_spec(loss).filter(|_| !val.is_empty());

    let start = Instant::now();
    let solves0 = problem.counts().solves;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut adam = Adam {
        m: vec![0.0; model.num_params()],
        v: vec![0.0; model.num_params()],
        t: 0,
    };

    let mut trace = TrainTrace {
        train_loss: Vec::with_capacity(config.epochs),
        val_loss: Vec::with_capacity(config.epochs),
        wall_time: Vec::with_capacity(config.epochs),
        solves: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_model: model.clone(),
    };
    let mut last_improvement = 0.0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&DataInstance> = chunk.iter().map(|&i| &train[i]).collect();
            let (value, grad) = batch_gradient(model, &batch, loss, &ctx, problem)?;
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += value * chunk.len() as f64;
            let lr = config.learning_rate;
            let step: Vec<f64> = match config.optimizer {
                Optimizer::Sgd => grad.iter().map(|g| lr * g).collect(),
                Optimizer::Adam { beta1, beta2, eps } => {
                    adam.t += 1;
                    let c1 = 1.0 - beta1.powi(adam.t);
                    let c2 = 1.0 - beta2.powi(adam.t);
                    grad.iter()
                        .enumerate()
                        .map(|(i, g)| {
                            adam.m[i] = beta1 * adam.m[i] + (1.0 - beta1) * g;
                            adam.v[i] = beta2 * adam.v[i] + (1.0 - beta2) * g * g;
                            lr * (adam.m[i] / c1) / ((adam.v[i] / c2).sqrt() + eps)
                        })
                        .collect()
                }
            };
            apply(model, &step);
            if !model.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
        }
        let train_loss = epoch_loss / train.len() as f64;
        let val_loss = match &val_spec {
            Some(spec) => mean_loss(model, val, spec, &ctx)?,
            None => train_loss,
        };
        let now = start.elapsed().as_secs_f64();
        trace.train_loss.push(train_loss);
        trace.val_loss.push(val_loss);
        trace.wall_time.push(now);
        trace.solves.push(problem.counts().solves - solves0);
        if epoch == 0 || val_loss < trace.val_loss[trace.best_epoch] {
            trace.best_epoch = epoch;
            trace.best_model = model.clone();
            last_improvement = now;
        }
        let stalled = config
            .patience_seconds
            .is_some_and(|p| now - last_improvement > p);
        if stalled || config.time_limit_seconds.is_some_and(|t| now > t) {
            break;
        }
    }
    *model = trace.best_model.clone();
    Ok(trace)
}
