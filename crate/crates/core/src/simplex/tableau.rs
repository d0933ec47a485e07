use super::{ConstraintKind, LinearProgram, BREAKDOWN_TOL, OPT_TOL, PIVOT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Terminal tableau of an optimal solve, kept for ranging.
#[derive(Debug, Clone)]
pub(crate) struct FinalTableau {
    /// `B^-1 A`, one row per retained constraint.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub basis: Vec<usize>,
    pub is_basic: Vec<bool>,
    /// Reduced costs of the internal maximization, all columns.
    pub reduced: Vec<f64>,
    /// Columns that may take nonzero values (artificials excluded).
    pub eligible: Vec<bool>,
    pub num_cols: usize,
    pub num_structural: usize,
}

pub(crate) enum Outcome {
    Optimal(FinalTableau),
    Unbounded,
}

pub(crate) struct StandardForm {
    /// Rows `[coefficients..., rhs]` with rhs >= 0.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    cost: Vec<f64>,
    num_structural: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl StandardForm {
    pub fn build(lp: &LinearProgram) -> Self {
        let d = lp.num_vars();
        // Rows in terms of y = x - lower, plus explicit upper-bound rows.
        let mut rows: Vec<(Vec<f64>, f64, ConstraintKind)> = Vec::new();
        for ((a, &b), &kind) in lp.constraints.iter().zip(&lp.rhs).zip(&lp.kinds) {
            let shift: f64 = a.iter().zip(&lp.lower).map(|(x, l)| x * l).sum();
            rows.push((a.clone(), b - shift, kind));
        }
        for j in 0..d {
            if lp.upper[j].is_finite() {
                let mut a = vec![0.0; d];
                a[j] = 1.0;
                rows.push((a, lp.upper[j] - lp.lower[j], ConstraintKind::Le));
            }
        }
        for (a, b, kind) in rows.iter_mut() {
            if *b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                *b = -*b;
                *kind = match *kind {
                    ConstraintKind::Le => ConstraintKind::Ge,
                    ConstraintKind::Ge => ConstraintKind::Le,
                    ConstraintKind::Eq => ConstraintKind::Eq,
                };
            }
        }

        let m = rows.len();
        let n_slack = rows.iter().filter(|r| r.2 != ConstraintKind::Eq).count();
        let n_art = rows.iter().filter(|r| r.2 != ConstraintKind::Le).count();
        let ncols = d + n_slack + n_art;
        let mut kinds = vec![ColKind::Structural; d];
        kinds.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
        kinds.extend(std::iter::repeat_n(ColKind::Artificial, n_art));

        let mut t = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (d, d + n_slack);
        for (i, (a, b, kind)) in rows.into_iter().enumerate() {
            t[i][..d].copy_from_slice(&a);
            t[i][ncols] = b;
            match kind {
                ConstraintKind::Le => {
                    t[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                ConstraintKind::Ge => {
                    t[i][next_slack] = -1.0;
                    next_slack += 1;
                    t[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                ConstraintKind::Eq => {
                    t[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        let sign = lp.sense.sign();
        let mut cost = vec![0.0; ncols];
        for j in 0..d {
            cost[j] = sign * lp.objective[j];
        }
        Self {
            t,
            basis,
            kinds,
            cost,
            num_structural: d,
        }
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    /// `None` when infeasible.
    pub fn solve(mut self) -> Result<Option<Outcome>> {
        let ncols = self.ncols();
        let has_art = self.kinds.contains(&ColKind::Artificial);
        if has_art {
            let phase1: Vec<f64> = self
                .kinds
                .iter()
                .map(|&k| if k == ColKind::Artificial { -1.0 } else { 0.0 })
                .collect();
            let all = vec![true; ncols];
            self.run(&phase1, &all)?;
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| self.kinds[b] == ColKind::Artificial)
                .map(|(i, _)| self.t[i][ncols])
                .sum();
            let scale = 1.0 + self.t.iter().map(|r| r[ncols]).fold(0.0, f64::max);
            if infeas > 1e-7 * scale {
                return Ok(None);
            }
            self.drive_out_artificials();
        }
        let eligible: Vec<bool> = self
            .kinds
            .iter()
            .map(|&k| k != ColKind::Artificial)
            .collect();
        let cost = self.cost.clone();
        match self.run(&cost, &eligible)? {
            Phase::Unbounded => Ok(Some(Outcome::Unbounded)),
            Phase::Optimal => {
                let reduced = self.reduced_costs(&cost);
                let mut is_basic = vec![false; ncols];
                for &b in &self.basis {
                    is_basic[b] = true;
                }
                let rhs = self.t.iter().map(|r| r[ncols]).collect();
                let rows = self.t.into_iter().map(|mut r| {
                    r.pop();
                    r
                });
                Ok(Some(Outcome::Optimal(FinalTableau {
                    rows: rows.collect(),
                    rhs,
                    basis: self.basis,
                    is_basic,
                    reduced,
                    eligible,
                    num_cols: ncols,
                    num_structural: self.num_structural,
                })))
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let ncols = self.ncols();
        let mut r = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, v) in self.t[i][..ncols].iter().enumerate() {
                    r[j] -= cb * v;
                }
            }
        }
        for &b in &self.basis {
            r[b] = 0.0;
        }
        r
    }

    fn run(&mut self, cost: &[f64], eligible: &[bool]) -> Result<Phase> {
        let m = self.t.len();
        let ncols = self.ncols();
        let degenerate_limit = 3 * (m + self.num_structural);
        let iteration_limit = 50 * (m + ncols) + 1000;
        let mut bland = false;
        let mut degenerate_run = 0;

        for _ in 0..iteration_limit {
            let reduced = self.reduced_costs(cost);
            let mut entering = None;
            let mut best = OPT_TOL;
            for j in 0..ncols {
                if !eligible[j] || reduced[j] <= OPT_TOL {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if reduced[j] > best {
                    best = reduced[j];
                    entering = Some(j);
                }
            }
            let Some(e) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            let mut tiny_candidate = false;
            for i in 0..m {
                let a = self.t[i][e];
                if a <= PIVOT_TOL {
                    if a > BREAKDOWN_TOL * 1e-2 {
                        tiny_candidate = true;
                    }
                    continue;
                }
                let ratio = self.t[i][ncols].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if ratio < best_ratio && !tie || tie && self.basis[i] < self.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best_ratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                if tiny_candidate {
                    return Err(Error::NumericalBreakdown(format!(
                        "column {e} has only near-zero pivot candidates"
                    )));
                }
                return Ok(Phase::Unbounded);
            };
            if self.t[r][e].abs() < BREAKDOWN_TOL {
                return Err(Error::NumericalBreakdown(format!(
                    "pivot {:e} in row {r}, column {e}",
                    self.t[r][e]
                )));
            }
            if ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
        }
        Err(Error::NumericalBreakdown("iteration limit reached".into()))
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let width = self.t[r].len();
        let p = self.t[r][e];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.t[r][e] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f == 0.0 {
                continue;
            }
            for c in 0..width {
                row[c] -= f * prow[c];
                if row[c].abs() < 1e-14 {
                    row[c] = 0.0;
                }
            }
            row[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// After phase one, replace basic artificials (all at zero) by real columns,
    /// dropping rows that turn out to be redundant.
    fn drive_out_artificials(&mut self) {
        let ncols = self.ncols();
        let mut i = 0;
        while i < self.t.len() {
            if self.kinds[self.basis[i]] != ColKind::Artificial {
                i += 1;
                continue;
            }
            let col = (0..ncols)
                .filter(|&j| self.kinds[j] != ColKind::Artificial)
                .filter(|&j| self.t[i][j].abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.t[i][a].abs().total_cmp(&self.t[i][b].abs()));
            match col {
                Some(j) => {
                    self.t[i][ncols] = 0.0;
                    self.pivot(i, j);
                    i += 1;
                }
                None => {
                    self.t.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}
