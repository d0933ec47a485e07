//! Dense two-phase simplex with objective-coefficient ranging.
//!
//! Problems are stated as `max/min c·x` subject to `A x {<=,=,>=} b` and
//! `lower <= x <= upper`. Internally every problem is shifted to `y = x - lower`,
//! finite upper bounds become explicit rows, and the objective is turned into a
//! maximization. Entering variables follow Dantzig's rule; after `3 (m + d)`
//! consecutive degenerate pivots the solver switches to Bland's rule for the
//! remainder of the phase.
//!
//! [`cost_ranging`] reads the final tableau (`B^-1 A` and the reduced costs) to
//! compute, per coordinate, the interval of `c_j` over which the terminal basis
//! stays optimal when every other coefficient is held fixed. When the optimum is
//! degenerate the ranges depend on which optimal basis the solver stopped at.

mod tableau;
mod text;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
pub use crate::types::CostRangeVector;
use crate::types::{Decision, Sense};
pub use text::{parse_lp, write_lp};

use tableau::{FinalTableau, StandardForm};

/// Below this magnitude a tableau entry is treated as zero in ratio tests.
pub const PIVOT_TOL: f64 = 1e-9;
/// Pivots smaller than this abort the solve.
pub const BREAKDOWN_TOL: f64 = 1e-10;
/// Optimality tolerance on reduced costs.
pub const OPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    /// `m x d` constraint matrix, row-major.
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub kinds: Vec<ConstraintKind>,
    pub sense: Sense,
    pub lower: Vec<f64>,
    #[serde(with = "crate::types::inf_vec")]
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
}

impl LinearProgram {
    /// `A x <= b`, `x >= 0`, no upper bounds.
    pub fn new(
        constraints: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        sense: Sense,
        objective: Vec<f64>,
    ) -> Self {
        let d = objective.len();
        let m = rhs.len();
        Self {
            constraints,
            rhs,
            kinds: vec![ConstraintKind::Le; m],
            sense,
            lower: vec![0.0; d],
            upper: vec![f64::INFINITY; d],
            objective,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_kinds(mut self, kinds: Vec<ConstraintKind>) -> Self {
        self.kinds = kinds;
        self
    }

    pub fn with_objective(&self, objective: &[f64]) -> Self {
        Self {
            objective: objective.to_vec(),
            ..self.clone()
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = (self.num_constraints(), self.num_vars());
        if d == 0 {
            return Err(Error::InvalidLp("no variables".into()));
        }
        check_len("constraint rows", m, self.constraints.len())?;
        check_len("constraint kinds", m, self.kinds.len())?;
        check_len("lower bounds", d, self.lower.len())?;
        check_len("upper bounds", d, self.upper.len())?;
        for row in &self.constraints {
            check_len("constraint row", d, row.len())?;
        }
        for j in 0..d {
            if !self.lower[j].is_finite() {
                return Err(Error::InvalidLp(format!(
                    "lower bound of x{j} must be finite"
                )));
            }
            if self.lower[j] > self.upper[j] {
                return Err(Error::InvalidLp(format!("x{j} has lower > upper")));
            }
        }
        let finite = self
            .constraints
            .iter()
            .flatten()
            .chain(&self.rhs)
            .chain(&self.objective)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidLp("non-finite coefficient".into()));
        }
        Ok(())
    }

    /// Maximum violation of any constraint or bound at `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for ((row, &b), kind) in self.constraints.iter().zip(&self.rhs).zip(&self.kinds) {
            let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match kind {
                ConstraintKind::Le => ax - b,
                ConstraintKind::Ge => b - ax,
                ConstraintKind::Eq => (ax - b).abs(),
            };
            worst = worst.max(v);
        }
        for ((&v, &lo), &hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub status: LpStatus,
    /// Optimal vertex; empty unless `status == Optimal`.
    pub decision: Decision,
    pub objective_value: f64,
    /// Basic columns of the internal standard form; indices `< d` are the
    /// original variables.
    pub basis: Vec<usize>,
    /// `c_j - c_B B^-1 A_j` in the problem's own sense (<= 0 for nonbasic
    /// variables of a maximization at optimum, >= 0 for a minimization).
    pub reduced_costs: Vec<f64>,
    tableau: Option<FinalTableau>,
}

impl SimplexSolution {
    fn without_optimum(status: LpStatus) -> Self {
        Self {
            status,
            decision: Decision::continuous(Vec::new()),
            objective_value: f64::NAN,
            basis: Vec::new(),
            reduced_costs: Vec::new(),
            tableau: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<SimplexSolution> {
    lp.validate()?;
    let form = StandardForm::build(lp);
    let Some(fin) = form.solve()? else {
        return Ok(SimplexSolution::without_optimum(LpStatus::Infeasible));
    };
    let fin = match fin {
        tableau::Outcome::Optimal(t) => t,
        tableau::Outcome::Unbounded => {
            return Ok(SimplexSolution::without_optimum(LpStatus::Unbounded))
        }
    };

    let d = lp.num_vars();
    let mut x = lp.lower.clone();
    for (row, &col) in fin.basis.iter().enumerate() {
        if col < d {
            x[col] += fin.rhs[row].max(0.0);
        }
    }
    let sign = lp.sense.sign();
    let reduced_costs: Vec<f64> = fin.reduced[..d].iter().map(|r| sign * r).collect();
    let objective_value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    debug_assert!(
        lp.violation(&x) <= 1e-7 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        "simplex returned an infeasible vertex (violation {})",
        lp.violation(&x)
    );
    debug_assert!(fin
        .reduced
        .iter()
        .zip(&fin.eligible)
        .all(|(&r, &ok)| !ok || r <= 1e-7));

    Ok(SimplexSolution {
        status: LpStatus::Optimal,
        decision: Decision::continuous(x),
        objective_value,
        basis: fin.basis.clone(),
        reduced_costs,
        tableau: Some(fin),
    })
}

/// Objective-coefficient ranges of the optimal basis in `solution`.
pub fn cost_ranging(lp: &LinearProgram, solution: &SimplexSolution) -> Result<CostRangeVector> {
    let fin = match (&solution.status, &solution.tableau) {
        (LpStatus::Optimal, Some(t)) => t,
        (status, _) => return Err(Error::NotOptimal(format!("{status:?}"))),
    };
    let d = lp.num_vars();
    check_len("objective", fin.num_structural, d)?;
    let sign = lp.sense.sign();

    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for j in 0..d {
        // Internal problem maximizes sign * c; work with deltas on that scale.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        match fin.basis.iter().position(|&b| b == j) {
            Some(row) => {
                for k in 0..fin.num_cols {
                    if !fin.eligible[k] || fin.is_basic[k] {
                        continue;
                    }
                    let alpha = fin.rows[row][k];
                    let dk = fin.reduced[k].min(0.0);
                    if alpha > PIVOT_TOL {
                        lo = lo.max(dk / alpha);
                    } else if alpha < -PIVOT_TOL {
                        hi = hi.min(dk / alpha);
                    }
                }
            }
            None => hi = -fin.reduced[j].min(0.0),
        }
        let lo = lo.min(0.0);
        let hi = hi.max(0.0);
        let c = lp.objective[j];
        if sign > 0.0 {
            lower.push(c + lo);
            upper.push(c + hi);
        } else {
            lower.push(c - hi);
            upper.push(c - lo);
        }
    }
    Ok(CostRangeVector { lower, upper })
}

/// LP relaxation of a problem: binary variables become `[0, 1]` boxes, all
/// other constraints are kept.
pub fn relax(problem: &crate::problems::ProblemOracle) -> Result<LinearProgram> {
    let lp = problem.lp_form();
    if lp.num_constraints() == 0 {
        return Err(Error::NoRelaxationAvailable(problem.label()));
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1(c: Vec<f64>) -> LinearProgram {
        LinearProgram::new(vec![vec![1.0, 1.0]], vec![1.0], Sense::Maximize, c)
    }

    #[test]
    fn fig1_unique_optimum() {
        let sol = solve_lp(&fig1(vec![2.0, 1.0])).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.decision.values, vec![1.0, 0.0]);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
        assert!(sol.reduced_costs[1] <= 0.0);
    }

    #[test]
    fn fig1_tie_is_deterministic() {
        let a = solve_lp(&fig1(vec![1.0, 1.0])).unwrap();
        let b = solve_lp(&fig1(vec![1.0, 1.0])).unwrap();
        assert!((a.objective_value - 1.0).abs() < 1e-12);
        assert_eq!(a.decision, b.decision);
        let v = &a.decision.values;
        assert!(v == &vec![1.0, 0.0] || v == &vec![0.0, 1.0]);
    }

    #[test]
    fn single_variable_range_is_nonnegative_halfline() {
        let lp = LinearProgram::new(vec![vec![1.0]], vec![1.0], Sense::Maximize, vec![5.0]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.decision.values, vec![1.0]);
        let r = cost_ranging(&lp, &sol).unwrap();
        assert_eq!(r.lower, vec![0.0]);
        assert_eq!(r.upper, vec![f64::INFINITY]);
    }

    #[test]
    fn fig1_range_matches_grid_resolve() {
        let lp = fig1(vec![2.0, 1.0]);
        let sol = solve_lp(&lp).unwrap();
        let r = cost_ranging(&lp, &sol).unwrap();
        assert!((r.lower[0] - 1.0).abs() < 1e-12);
        assert_eq!(r.upper[0], f64::INFINITY);
        // Oracle: re-solve on a grid of c_1 values and locate where x* leaves (1, 0).
        let mut flip = None;
        let mut c1 = 3.0;
        while c1 > 0.0 {
            let s = solve_lp(&fig1(vec![c1, 1.0])).unwrap();
            if s.decision.values != vec![1.0, 0.0] {
                flip = Some(c1);
                break;
            }
            c1 -= 0.001;
        }
        let flip = flip.expect("basis should change below c_2");
        assert!(flip < 1.0 && flip > 1.0 - 0.0021, "flip at {flip}");
        // The nonbasic x_2 may rise to c_1 before entering.
        assert!(r.lower[1] == f64::NEG_INFINITY);
        assert!((r.upper[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let lp = LinearProgram::new(vec![vec![1.0]], vec![-1.0], Sense::Maximize, vec![1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        let lp = LinearProgram::new(vec![vec![-1.0]], vec![1.0], Sense::Maximize, vec![1.0]);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
        let sol = solve_lp(&lp).unwrap();
        assert!(matches!(cost_ranging(&lp, &sol), Err(Error::NotOptimal(_))));
    }

    #[test]
    fn equality_and_ge_rows_with_minimize() {
        // min x1 + 2 x2  s.t. x1 + x2 = 3, x1 >= 1, x1 <= 2
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0], vec![1.0, 0.0]],
            vec![3.0, 1.0],
            Sense::Minimize,
            vec![1.0, 2.0],
        )
        .with_kinds(vec![ConstraintKind::Eq, ConstraintKind::Ge])
        .with_bounds(vec![0.0, 0.0], vec![2.0, f64::INFINITY]);
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.decision.values[0] - 2.0).abs() < 1e-9);
        assert!((sol.decision.values[1] - 1.0).abs() < 1e-9);
        assert!((sol.objective_value - 4.0).abs() < 1e-9);
        assert!(sol.reduced_costs.iter().all(|&r| r >= -1e-9));
    }

    #[test]
    fn redundant_equality_rows_are_tolerated() {
        // x1 + x2 = 1 stated twice.
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 1.0],
            Sense::Minimize,
            vec![3.0, 1.0],
        )
        .with_kinds(vec![ConstraintKind::Eq, ConstraintKind::Eq]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.decision.values, vec![0.0, 1.0]);
        let r = cost_ranging(&lp, &sol).unwrap();
        assert!(r.contains(&lp.objective, 0.0));
    }

    #[test]
    fn nonzero_lower_bounds_shift_the_vertex() {
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0]],
            vec![4.0],
            Sense::Maximize,
            vec![1.0, 3.0],
        )
        .with_bounds(vec![1.0, 0.5], vec![f64::INFINITY, f64::INFINITY]);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.decision.values, vec![1.0, 3.0]);
    }

    #[test]
    fn bad_bounds_are_rejected() {
        let lp = LinearProgram::new(vec![vec![1.0]], vec![1.0], Sense::Maximize, vec![1.0])
            .with_bounds(vec![2.0], vec![1.0]);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidLp(_))));
    }

    /// Brute force over every basis of `[A | I]`: the best feasible basic solution.
    fn enumerate_vertices(lp: &LinearProgram) -> f64 {
        let (m, d) = (lp.num_constraints(), lp.num_vars());
        let n = d + m;
        let col = |j: usize, i: usize| -> f64 {
            if j < d {
                lp.constraints[i][j]
            } else if j - d == i {
                1.0
            } else {
                0.0
            }
        };
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != m {
                continue;
            }
            let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
            let mut a: Vec<Vec<f64>> = (0..m)
                .map(|i| {
                    let mut r: Vec<f64> = cols.iter().map(|&j| col(j, i)).collect();
                    r.push(lp.rhs[i]);
                    r
                })
                .collect();
            let mut singular = false;
            for p in 0..m {
                let piv = (p..m)
                    .max_by(|&x, &y| a[x][p].abs().total_cmp(&a[y][p].abs()))
                    .unwrap();
                if a[piv][p].abs() < 1e-10 {
                    singular = true;
                    break;
                }
                a.swap(p, piv);
                for r in 0..m {
                    if r != p {
                        let f = a[r][p] / a[p][p];
                        for c in p..=m {
                            a[r][c] -= f * a[p][c];
                        }
                    }
                }
            }
            if singular {
                continue;
            }
            let vals: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i]).collect();
            if vals.iter().any(|&v| v < -1e-9) {
                continue;
            }
            let obj: f64 = cols
                .iter()
                .zip(&vals)
                .filter(|(&j, _)| j < d)
                .map(|(&j, v)| lp.objective[j] * v)
                .sum();
            best = best.max(obj);
        }
        best
    }

    fn random_lp(rng: &mut ChaCha8Rng, m: usize, d: usize) -> LinearProgram {
        let a = (0..m)
            .map(|_| (0..d).map(|_| rng.random_range(0.05..1.0)).collect())
            .collect();
        let b = (0..m).map(|_| rng.random_range(1.0..5.0)).collect();
        let c = (0..d).map(|_| rng.random_range(-1.0..2.0)).collect();
        LinearProgram::new(a, b, Sense::Maximize, c)
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let lp = random_lp(&mut rng, 5, 5);
            let sol = solve_lp(&lp).unwrap();
            let brute = enumerate_vertices(&lp);
            assert!(
                (sol.objective_value - brute).abs() < 1e-8,
                "{} vs {}",
                sol.objective_value,
                brute
            );
        }
    }

    #[test]
    fn random_ranges_survive_reoptimization() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let lp = random_lp(&mut rng, 6, 6);
            let sol = solve_lp(&lp).unwrap();
            let ranges = cost_ranging(&lp, &sol).unwrap();
            assert!(ranges.contains(&lp.objective, 1e-12));
            for j in 0..6 {
                let (lo, hi) = (ranges.lower[j], ranges.upper[j]);
                let mid = match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0,
                    (false, true) => hi - 1.0,
                    (false, false) => lp.objective[j],
                };
                for v in [lo, mid, hi].into_iter().filter(|v| v.is_finite()) {
                    let mut c = lp.objective.clone();
                    c[j] = v;
                    let re = solve_lp(&lp.with_objective(&c)).unwrap();
                    let kept: f64 = c.iter().zip(&sol.decision.values).map(|(a, b)| a * b).sum();
                    assert!(
                        (re.objective_value - kept).abs() <= 1e-7,
                        "coordinate {j} at {v}: {} vs {}",
                        re.objective_value,
                        kept
                    );
                }
            }
        }
    }
}
