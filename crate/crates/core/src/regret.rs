//! Decision regret of predicted costs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::model::Predictor;
use crate::problems::ProblemOracle;
use crate::types::{dot, DataInstance, Decision, Sense};

/// Negative regret beyond this is treated as an oracle failure.
pub const REGRET_TOL: f64 = 1e-9;

/// Regret of acting on `predicted` when the truth is `true_costs`. Two counted
/// solves.
pub fn regret(problem: &ProblemOracle, predicted: &[f64], true_costs: &[f64]) -> Result<f64> {
    check_len("true costs", problem.dim(), true_costs.len())?;
    let x_star = problem.solve(true_costs)?;
    regret_against(problem, predicted, true_costs, &x_star)
}

/// Regret using a known optimal decision for `true_costs`. One counted solve.
pub fn regret_against(
    problem: &ProblemOracle,
    predicted: &[f64],
    true_costs: &[f64],
    x_star: &Decision,
) -> Result<f64> {
    let d = problem.dim();
    check_len("predicted costs", d, predicted.len())?;
    check_len("true costs", d, true_costs.len())?;
    check_len("optimal decision", d, x_star.len())?;
    let x_hat = problem.solve(predicted)?;
    regret_of_decision(problem, &x_hat, true_costs, x_star)
}

/// Regret of a given decision `x_hat`; no solves.
pub fn regret_of_decision(
    problem: &ProblemOracle,
    x_hat: &Decision,
    true_costs: &[f64],
    x_star: &Decision,
) -> Result<f64> {
    let best = dot(true_costs, &x_star.values);
    let got = dot(true_costs, &x_hat.values);
    let r = match problem.sense() {
        Sense::Maximize => best - got,
        Sense::Minimize => got - best,
    };
    let tol = REGRET_TOL * (1.0 + best.abs());
    if r < -tol && problem.is_exact() {
        return Err(Error::SolveFailure(format!(
            "negative regret {r:e}: oracle returned a non-optimal decision"
        )));
    }
    Ok(r.max(0.0))
}

/// Regret of one instance, reusing its cached optimal decision when present.
pub fn instance_regret(
    problem: &ProblemOracle,
    predicted: &[f64],
    instance: &DataInstance,
) -> Result<f64> {
    match &instance.optimal_decision {
        Some(x) => regret_against(problem, predicted, &instance.true_costs, x),
        None => regret(problem, predicted, &instance.true_costs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegretSummary {
    pub total: f64,
    pub mean: f64,
    pub count: usize,
}

impl RegretSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let total: f64 = values.iter().sum();
        let count = values.len();
        let mean = if count == 0 {
            0.0
        } else {
            total / count as f64
        };
        Self { total, mean, count }
    }

    /// Ratio of mean regrets; `1.0` when both are zero.
    pub fn normalized_against(&self, baseline: &RegretSummary) -> f64 {
        normalized(self.mean, baseline.mean)
    }
}

/// `value / baseline`, with `0 / 0 = 1`.
pub fn normalized(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / baseline
    }
}

/// Per-instance regrets of `model` over `instances`, in order.
pub fn regrets(
    problem: &ProblemOracle,
    model: &(impl Predictor + ?Sized),
    instances: &[DataInstance],
) -> Result<Vec<f64>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let pred = model.predict(&inst.features)?;
            instance_regret(problem, &pred, inst).map_err(|e| e.at_instance(i))
        })
        .collect()
}

pub fn total_regret(
    problem: &ProblemOracle,
    model: &(impl Predictor + ?Sized),
    instances: &[DataInstance],
) -> Result<RegretSummary> {
    Ok(RegretSummary::from_values(&regrets(
        problem, model, instances,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearModel;
    use crate::problems::{KnapsackSpec, ProblemSpec};
    use crate::simplex::LinearProgram;

    fn fig1() -> ProblemOracle {
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0]],
            vec![1.0],
            Sense::Maximize,
            vec![0.0; 2],
        );
        ProblemOracle::new(ProblemSpec::Lp(lp))
    }

    fn small_knapsack() -> ProblemOracle {
        ProblemOracle::new(ProblemSpec::Knapsack(KnapsackSpec {
            weights: vec![vec![2.0, 3.0, 4.0, 5.0]],
            capacities: vec![6.0],
        }))
    }

    /// Best value over all feasible subsets, and the value of the lexicographically
    /// smallest subset that is optimal for `rank_by`.
    fn enumerate(spec: &KnapsackSpec, c: &[f64], rank_by: &[f64]) -> (f64, f64) {
        let d = spec.items();
        let mut best = f64::NEG_INFINITY;
        let mut chosen: Option<(f64, f64)> = None;
        for code in 0u32..(1 << d) {
            let x: Vec<f64> = (0..d).map(|j| ((code >> (d - 1 - j)) & 1) as f64).collect();
            if !spec.is_feasible(&x) {
                continue;
            }
            best = best.max(dot(c, &x));
            let r = dot(rank_by, &x);
            if chosen.is_none_or(|(v, _)| r > v + 1e-12) {
                chosen = Some((r, dot(c, &x)));
            }
        }
        (best, chosen.unwrap().1)
    }

    #[test]
    fn identity_prediction_has_zero_regret() {
        let p = small_knapsack();
        let c = [3.0, 4.0, 5.0, 6.0];
        assert_eq!(regret(&p, &c, &c).unwrap(), 0.0);
    }

    #[test]
    fn fig1_wrong_ranking_costs_the_gap() {
        let p = fig1();
        let r = regret(&p, &[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn knapsack_regret_matches_enumeration() {
        let p = small_knapsack();
        let c = [3.0, 4.0, 5.0, 6.0];
        let c_hat = [6.0, 5.0, 4.0, 3.0];
        let ProblemSpec::Knapsack(spec) = p.spec() else {
            unreachable!()
        };
        let (best, got) = enumerate(spec, &c, &c_hat);
        assert!((regret(&p, &c_hat, &c).unwrap() - (best - got)).abs() < 1e-12);
        assert_eq!(p.counts().solves, 2);
    }

    #[test]
    fn empty_split_and_perfect_model() {
        let p = small_knapsack();
        let m = LinearModel::zeros(1, 4);
        assert_eq!(total_regret(&p, &m, &[]).unwrap(), RegretSummary::default());

        // W = 0, b = c gives a perfect constant predictor.
        let c = vec![3.0, 4.0, 5.0, 6.0];
        let mut m = LinearModel::zeros(1, 4);
        m.bias = c.clone();
        let inst = DataInstance::new(vec![0.3], c);
        assert_eq!(
            total_regret(&p, &m, &[inst.clone(), inst]).unwrap().total,
            0.0
        );
    }

    #[test]
    fn two_instance_total_is_sum_of_parts() {
        let p = small_knapsack();
        let ProblemSpec::Knapsack(spec) = p.spec().clone() else {
            unreachable!()
        };
        let mut m = LinearModel::zeros(1, 4);
        m.bias = vec![6.0, 5.0, 4.0, 3.0];
        let cs = [[3.0, 4.0, 5.0, 6.0], [1.0, 1.0, 1.0, 9.0]];
        let insts: Vec<DataInstance> = cs
            .iter()
            .map(|c| DataInstance::new(vec![0.0], c.to_vec()))
            .collect();
        let expected: f64 = cs
            .iter()
            .map(|c| {
                let (best, got) = enumerate(&spec, c, &m.bias);
                best - got
            })
            .sum();
        let s = total_regret(&p, &m, &insts).unwrap();
        assert!((s.total - expected).abs() < 1e-12);
        assert_eq!(s.count, 2);
        assert!((s.mean - expected / 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_of_zero_baseline() {
        assert_eq!(normalized(0.0, 0.0), 1.0);
        assert_eq!(normalized(3.0, 3.0), 1.0);
        assert_eq!(normalized(1.0, 4.0), 0.25);
    }
}
