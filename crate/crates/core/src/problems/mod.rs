//! Benchmark optimization problems and the counted oracle wrapper used by
//! losses, regret evaluation and the experiment harness.

mod grid;
mod knapsack;
mod tsp;

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use grid::{solve_shortest_path, GridSpec};
pub use knapsack::{solve_knapsack, KnapsackSpec};
pub use tsp::{solve_tsp, TspMode, TspSpec, MAX_EXACT_NODES};

use crate::error::{check_len, Error, Result};
use crate::simplex::{
    cost_ranging, solve_lp, ConstraintKind, CostRangeVector, LinearProgram, LpStatus,
};
use crate::types::{Decision, Sense};

/// Default knapsack generator constants.
pub const KNAPSACK_DIMS: usize = 2;
pub const KNAPSACK_CAPACITY: f64 = 20.0;
pub const KNAPSACK_WEIGHT_RANGE: (u32, u32) = (3, 8);

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Knapsack(KnapsackSpec),
    Grid(GridSpec),
    Tsp(TspSpec),
    /// An explicit LP solved directly by the simplex method.
    Lp(LinearProgram),
}

/// On-disk form: `{"family": ..., "params": {...}, "seed": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub family: String,
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Knapsack(s) => s.items(),
            Self::Grid(s) => s.num_arcs(),
            Self::Tsp(s) => s.num_edges(),
            Self::Lp(lp) => lp.num_vars(),
        }
    }

    pub fn sense(&self) -> Sense {
        match self {
            Self::Knapsack(_) => Sense::Maximize,
            Self::Grid(_) | Self::Tsp(_) => Sense::Minimize,
            Self::Lp(lp) => lp.sense,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Knapsack(_) => "knapsack",
            Self::Grid(_) => "grid",
            Self::Tsp(_) => "tsp",
            Self::Lp(_) => "lp",
        }
    }

    /// Short label such as `ks32`, `sp5x5`, `tsp20` or `lp6`.
    pub fn label(&self) -> String {
        match self {
            Self::Knapsack(s) => format!("ks{}", s.items()),
            Self::Grid(s) => format!("sp{}x{}", s.rows, s.cols),
            Self::Tsp(s) => format!("tsp{}", s.nodes),
            Self::Lp(lp) => format!("lp{}", lp.num_vars()),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::Tsp(s) if s.mode == TspMode::Heuristic)
    }

    /// Builds a problem from a CLI name: `ks<N>`, `sp<R>x<C>`, `tsp<N>` or
    /// `custom:<file>` (a problem JSON file or an LP text file).
    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown problem `{name}`"));
        if let Some(path) = name.strip_prefix("custom:") {
            return Self::load(path);
        }
        if let Some(n) = name.strip_prefix("tsp") {
            let n: usize = n.parse().map_err(|_| bad())?;
            if n < 3 {
                return Err(bad());
            }
            return Ok(Self::Tsp(TspSpec {
                seed,
                ..TspSpec::new(n)
            }));
        }
        if let Some(n) = name.strip_prefix("ks") {
            let n: usize = n.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            let (lo, hi) = KNAPSACK_WEIGHT_RANGE;
            return Ok(Self::Knapsack(KnapsackSpec::random(
                n,
                KNAPSACK_DIMS,
                KNAPSACK_CAPACITY,
                lo,
                hi,
                seed,
            )));
        }
        if let Some(rc) = name.strip_prefix("sp") {
            let (r, c) = rc.split_once('x').ok_or_else(bad)?;
            let r: usize = r.parse().map_err(|_| bad())?;
            let c: usize = c.parse().map_err(|_| bad())?;
            if r == 0 || c == 0 || r * c < 2 {
                return Err(bad());
            }
            return Ok(Self::Grid(GridSpec::new(r, c)));
        }
        Err(bad())
    }

    pub fn to_file(&self, seed: u64) -> ProblemFile {
        let params = match self {
            Self::Knapsack(s) => serde_json::to_value(s),
            Self::Grid(s) => serde_json::to_value(s),
            Self::Tsp(s) => serde_json::to_value(s),
            Self::Lp(lp) => serde_json::to_value(lp),
        }
        .expect("problem parameters serialize");
        ProblemFile {
            family: self.family().to_string(),
            params,
            seed,
        }
    }

    pub fn from_file(file: &ProblemFile) -> Result<Self> {
        let p = file.params.clone();
        let spec = match file.family.as_str() {
            "knapsack" => Self::Knapsack(serde_json::from_value(p)?),
            "grid" => Self::Grid(serde_json::from_value(p)?),
            "tsp" => Self::Tsp(serde_json::from_value(p)?),
            "lp" => {
                let lp: LinearProgram = serde_json::from_value(p)?;
                lp.validate()?;
                Self::Lp(lp)
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown problem family `{other}`"
                )))
            }
        };
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str::<ProblemFile>(&text) {
            Ok(file) => Self::from_file(&file),
            Err(_) => Ok(Self::Lp(crate::simplex::parse_lp(&text)?)),
        }
    }

    /// LP form for relaxation: binary variables boxed to `[0, 1]`.
    pub fn lp_form(&self) -> LinearProgram {
        match self {
            Self::Knapsack(s) => s.lp_form(),
            Self::Grid(s) => s.lp_form(),
            Self::Tsp(s) => s.lp_form(),
            Self::Lp(lp) => lp.clone(),
        }
    }

    /// Uncounted solve.
    pub fn solve(&self, costs: &[f64]) -> Result<Decision> {
        match self {
            Self::Knapsack(s) => solve_knapsack(s, costs),
            Self::Grid(s) => solve_shortest_path(s, costs),
            Self::Tsp(s) => solve_tsp(s, costs),
            Self::Lp(lp) => {
                check_len("lp costs", lp.num_vars(), costs.len())?;
                let sol = solve_lp(&lp.with_objective(costs))?;
                match sol.status {
                    LpStatus::Optimal => Ok(sol.decision),
                    status => Err(Error::SolveFailure(format!("lp is {status:?}"))),
                }
            }
        }
    }
}

/// Upper bounds implied by `<=` and `=` rows: with every other variable at the
/// bound minimizing its term, `a_j x_j <= b - rest`.
fn implied_upper(lp: &LinearProgram) -> Vec<f64> {
    let mut upper = lp.upper.clone();
    for ((row, &b), kind) in lp.constraints.iter().zip(&lp.rhs).zip(&lp.kinds) {
        if *kind == ConstraintKind::Ge {
            continue;
        }
        let term_min = |k: usize| {
            let a = row[k];
            if a > 0.0 {
                a * lp.lower[k]
            } else if a < 0.0 {
                a * lp.upper[k]
            } else {
                0.0
            }
        };
        let total: f64 = (0..row.len()).map(term_min).sum();
        if !total.is_finite() {
            continue;
        }
        for (j, &a) in row.iter().enumerate() {
            if a > 0.0 {
                let bound = (b - (total - term_min(j))) / a;
                upper[j] = upper[j].min(bound);
            }
        }
    }
    upper
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveCounts {
    /// Calls to the exact combinatorial (or explicit LP) oracle.
    pub solves: u64,
    /// Simplex solves of the relaxation for sensitivity ranges.
    pub relaxed: u64,
}

/// A problem plus atomic solver-call counters.
#[derive(Debug)]
pub struct ProblemOracle {
    spec: ProblemSpec,
    solves: AtomicU64,
    relaxed: AtomicU64,
}

impl Clone for ProblemOracle {
    /// The clone starts with zeroed counters.
    fn clone(&self) -> Self {
        Self::new(self.spec.clone())
    }
}

impl ProblemOracle {
    pub fn new(spec: ProblemSpec) -> Self {
        Self {
            spec,
            solves: AtomicU64::new(0),
            relaxed: AtomicU64::new(0),
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn sense(&self) -> Sense {
        self.spec.sense()
    }

    pub fn is_exact(&self) -> bool {
        self.spec.is_exact()
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    /// Counted solve returning the optimal decision for `costs`.
    pub fn solve(&self, costs: &[f64]) -> Result<Decision> {
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.spec.solve(costs)
    }

    pub fn lp_form(&self) -> LinearProgram {
        self.spec.lp_form()
    }

    /// Per-variable bounds `(l, u)` of the decision space. For an explicit LP,
    /// infinite upper bounds are tightened by single-row propagation.
    pub fn decision_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.spec {
            ProblemSpec::Lp(lp) => (lp.lower.clone(), implied_upper(lp)),
            _ => (vec![0.0; self.dim()], vec![1.0; self.dim()]),
        }
    }

    /// Objective-coefficient ranges from the relaxed LP at `costs`; one
    /// counted relaxed solve.
    pub fn sensitivity_ranges(&self, costs: &[f64]) -> Result<CostRangeVector> {
        check_len("costs", self.dim(), costs.len())?;
        self.relaxed.fetch_add(1, Ordering::Relaxed);
        let lp = crate::simplex::relax(self)?.with_objective(costs);
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::SolveFailure(format!(
                "relaxation is {:?}",
                sol.status
            )));
        }
        cost_ranging(&lp, &sol)
    }

    pub fn counts(&self) -> SolveCounts {
        SolveCounts {
            solves: self.solves.load(Ordering::Relaxed),
            relaxed: self.relaxed.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counts(&self) {
        self.solves.store(0, Ordering::Relaxed);
        self.relaxed.store(0, Ordering::Relaxed);
    }
}
