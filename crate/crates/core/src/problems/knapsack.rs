//! Multi-dimensional 0/1 knapsack solved by depth-first branch-and-bound.
//!
//! The bound at a node is the smallest single-dimension fractional relaxation
//! over the free items. A first search (items by density on the tightest
//! dimension, take-first) finds the optimal value; a second search in index
//! order (skip-first) returns the lexicographically smallest selection that
//! attains it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::simplex::LinearProgram;
use crate::types::{Decision, Sense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnapsackSpec {
    /// `q x d` nonnegative weights.
    pub weights: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
}

impl KnapsackSpec {
    /// Integer weights drawn uniformly from `weight_low..=weight_high`, the same
    /// capacity in every dimension.
    pub fn random(
        items: usize,
        dims: usize,
        capacity: f64,
        weight_low: u32,
        weight_high: u32,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..dims)
            .map(|_| {
                (0..items)
                    .map(|_| f64::from(rng.random_range(weight_low..=weight_high)))
                    .collect()
            })
            .collect();
        Self {
            weights,
            capacities: vec![capacity; dims],
        }
    }

    pub fn items(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn dims(&self) -> usize {
        self.capacities.len()
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.weights.iter().zip(&self.capacities).all(|(w, &cap)| {
            let load: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            load <= cap + 1e-9
        })
    }

    pub fn lp_form(&self) -> LinearProgram {
        let d = self.items();
        LinearProgram::new(
            self.weights.clone(),
            self.capacities.clone(),
            Sense::Maximize,
            vec![0.0; d],
        )
        .with_bounds(vec![0.0; d], vec![1.0; d])
    }

    fn tightest_dim(&self) -> usize {
        (0..self.dims())
            .max_by(|&a, &b| {
                let ra = self.weights[a].iter().sum::<f64>() / self.capacities[a];
                let rb = self.weights[b].iter().sum::<f64>() / self.capacities[b];
                ra.total_cmp(&rb).then(b.cmp(&a))
            })
            .unwrap_or(0)
    }
}

struct Search<'a> {
    spec: &'a KnapsackSpec,
    values: &'a [f64],
    /// Branching order over candidate items.
    order: Vec<usize>,
    /// Per dimension, candidates sorted by decreasing value/weight.
    by_density: Vec<Vec<usize>>,
    fixed: Vec<Option<bool>>,
    residual: Vec<f64>,
    value: f64,
    best: f64,
    target: Option<f64>,
    found: Option<Vec<bool>>,
    take_first: bool,
    tol: f64,
}

impl Search<'_> {
    fn fits(&self, j: usize) -> bool {
        self.spec
            .weights
            .iter()
            .zip(&self.residual)
            .all(|(w, &r)| w[j] <= r + 1e-12)
    }

    fn bound(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (q, order) in self.by_density.iter().enumerate() {
            let mut cap = self.residual[q];
            let mut extra = 0.0;
            for &j in order {
                if self.fixed[j].is_some() || !self.fits(j) {
                    continue;
                }
                let w = self.spec.weights[q][j];
                if w <= cap {
                    cap -= w;
                    extra += self.values[j];
                } else {
                    extra += self.values[j] * cap / w;
                    break;
                }
            }
            best = best.min(extra);
        }
        if self.by_density.is_empty() {
            best = self
                .order
                .iter()
                .filter(|&&j| self.fixed[j].is_none())
                .map(|&j| self.values[j])
                .sum();
        }
        self.value + best
    }

    fn set(&mut self, j: usize, take: bool) {
        self.fixed[j] = Some(take);
        if take {
            for (q, w) in self.spec.weights.iter().enumerate() {
                self.residual[q] -= w[j];
            }
            self.value += self.values[j];
        }
    }

    fn unset(&mut self, j: usize) {
        if self.fixed[j] == Some(true) {
            for (q, w) in self.spec.weights.iter().enumerate() {
                self.residual[q] += w[j];
            }
            self.value -= self.values[j];
        }
        self.fixed[j] = None;
    }

    fn leaf(&mut self) -> bool {
        match self.target {
            Some(t) => {
                if self.value >= t - self.tol {
                    self.found = Some(self.fixed.iter().map(|f| f == &Some(true)).collect());
                    return true;
                }
                false
            }
            None => {
                if self.value > self.best {
                    self.best = self.value;
                }
                false
            }
        }
    }

    /// Returns `true` once a target-attaining leaf has been found.
    fn dfs(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return self.leaf();
        }
        let cutoff = self.target.map_or(self.best + self.tol, |t| t - self.tol);
        let prune = if self.target.is_some() {
            self.bound() < cutoff
        } else {
            self.bound() <= cutoff
        };
        if prune {
            return false;
        }
        let j = self.order[depth];
        let branches = if self.take_first {
            [true, false]
        } else {
            [false, true]
        };
        for take in branches {
            if take && !self.fits(j) {
                continue;
            }
            self.set(j, take);
            let done = self.dfs(depth + 1);
            self.unset(j);
            if done {
                return true;
            }
        }
        false
    }
}

pub fn solve_knapsack(spec: &KnapsackSpec, costs: &[f64]) -> Result<Decision> {
    let d = spec.items();
    check_len("knapsack costs", d, costs.len())?;
    for w in &spec.weights {
        check_len("knapsack weight row", d, w.len())?;
    }
    let candidates: Vec<usize> = (0..d).filter(|&j| costs[j] > 0.0).collect();
    let by_density: Vec<Vec<usize>> = spec
        .weights
        .iter()
        .map(|w| {
            let mut o = candidates.clone();
            o.sort_by(|&a, &b| {
                let da = costs[a] / w[a];
                let db = costs[b] / w[b];
                db.total_cmp(&da).then(a.cmp(&b))
            });
            o
        })
        .collect();
    let scale = candidates.iter().map(|&j| costs[j]).sum::<f64>().max(1.0);

    let mut search = Search {
        spec,
        values: costs,
        order: by_density
            .get(spec.tightest_dim())
            .cloned()
            .unwrap_or_else(|| candidates.clone()),
        by_density,
        fixed: vec![None; d],
        residual: spec.capacities.clone(),
        value: 0.0,
        best: 0.0,
        target: None,
        found: None,
        take_first: true,
        tol: 1e-12 * scale,
    };
    search.dfs(0);

    search.target = Some(search.best);
    search.order = candidates;
    search.take_first = false;
    search.value = 0.0;
    search.fixed = vec![None; d];
    search.residual = spec.capacities.clone();
    search.dfs(0);
    let bits = search.found.unwrap_or_else(|| vec![false; d]);
    let x = Decision::from_bits(&bits);
    debug_assert!(spec.is_feasible(&x.values));
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::dot;

    /// Lexicographically smallest optimal selection by exhaustive enumeration.
    pub(crate) fn brute_force(spec: &KnapsackSpec, c: &[f64]) -> Vec<f64> {
        let d = spec.items();
        let mut best: Option<(f64, Vec<f64>)> = None;
        // Enumerate in lexicographic order of the indicator vector (item 0 most significant).
        for code in 0u64..(1 << d) {
            let x: Vec<f64> = (0..d).map(|j| ((code >> (d - 1 - j)) & 1) as f64).collect();
            if !spec.is_feasible(&x) {
                continue;
            }
            let v = dot(c, &x);
            if best.as_ref().is_none_or(|(b, _)| v > b + 1e-12) {
                best = Some((v, x));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn nonpositive_values_pack_nothing() {
        let spec = KnapsackSpec {
            weights: vec![vec![2.0, 3.0, 4.0]],
            capacities: vec![6.0],
        };
        let x = solve_knapsack(&spec, &[-1.0, 0.0, -3.0]).unwrap();
        assert_eq!(x.values, vec![0.0; 3]);
    }

    #[test]
    fn small_instance_matches_enumeration() {
        let spec = KnapsackSpec {
            weights: vec![vec![2.0, 3.0, 4.0, 5.0]],
            capacities: vec![6.0],
        };
        let c = [3.0, 4.0, 5.0, 6.0];
        let x = solve_knapsack(&spec, &c).unwrap();
        assert_eq!(x.values, brute_force(&spec, &c));
        // {2,4} -> 8 beats {3} alone and {2,3} -> 7.
        assert_eq!(x.values, vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let spec = KnapsackSpec {
            weights: vec![vec![1.0, 1.0, 1.0]],
            capacities: vec![1.0],
        };
        let x = solve_knapsack(&spec, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(x.values, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn sixteen_items_two_dims_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..3 {
            let spec = KnapsackSpec::random(16, 2, 20.0, 3, 8, seed);
            let c: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..10.0)).collect();
            let x = solve_knapsack(&spec, &c).unwrap();
            assert_eq!(x.values, brute_force(&spec, &c));
        }
    }

    #[test]
    fn random_weights_are_integers_in_range() {
        let spec = KnapsackSpec::random(32, 2, 20.0, 3, 8, 1);
        assert_eq!(spec.dims(), 2);
        assert_eq!(spec.items(), 32);
        assert!(spec
            .weights
            .iter()
            .flatten()
            .all(|&w| (3.0..=8.0).contains(&w) && w.fract() == 0.0));
        assert_eq!(spec, KnapsackSpec::random(32, 2, 20.0, 3, 8, 1));
    }
}
