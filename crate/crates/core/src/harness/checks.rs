//! Self-check of objective-coefficient ranging on random LPs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simplex::{cost_ranging, solve_lp, LinearProgram};
use crate::types::{dot, Sense};

const DECISION_TOL: f64 = 1e-7;

/// Bounded random LP with `m, d <= max_dim`: nonnegative constraint rows, every
/// column covered by some row, optional finite upper bounds.
pub fn random_lp<R: Rng>(rng: &mut R, max_dim: usize) -> LinearProgram {
    let m = rng.random_range(1..=max_dim);
    let d = rng.random_range(1..=max_dim);
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if rng.random_bool(0.25) {
                        0.0
                    } else {
                        rng.random_range(0.1..2.0)
                    }
                })
                .collect()
        })
        .collect();
    for j in 0..d {
        if a.iter().all(|row| row[j] == 0.0) {
            let i = rng.random_range(0..m);
            a[i][j] = rng.random_range(0.1..2.0);
        }
    }
    let b = (0..m).map(|_| rng.random_range(1.0..10.0)).collect();
    let c = (0..d).map(|_| rng.random_range(-2.0..5.0)).collect();
    let sense = if rng.random_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let upper = (0..d)
        .map(|_| {
            if rng.random_bool(0.3) {
                rng.random_range(0.5..3.0)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    LinearProgram::new(a, b, sense, c).with_bounds(vec![0.0; d], upper)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCheck {
    pub lps: usize,
    pub coordinates: usize,
    pub endpoints: usize,
    /// Endpoint re-solves returning the original decision.
    pub identical: usize,
    /// Endpoint re-solves returning another vertex with the original
    /// decision still optimal.
    pub tied: usize,
    /// Re-solves just inside an endpoint, all required to be identical.
    pub interior: usize,
    pub failures: Vec<String>,
}

impl SensitivityCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.lps > 0
    }
}

/// Solves `count` random LPs, ranges every objective coefficient and re-solves
/// with each finite endpoint substituted, one coordinate at a time.
pub fn sensitivity_check(count: usize, max_dim: usize, seed: u64) -> Result<SensitivityCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SensitivityCheck::default();
    while out.lps < count {
        let lp = random_lp(&mut rng, max_dim);
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            continue;
        }
        out.lps += 1;
        let ranges = cost_ranging(&lp, &sol)?;
        let x = &sol.decision.values;
        let c = &lp.objective;
        for j in 0..lp.num_vars() {
            out.coordinates += 1;
            let (lo, hi) = (ranges.lower[j], ranges.upper[j]);
            if !(lo <= c[j] + 1e-9 && c[j] <= hi + 1e-9) {
                out.failures.push(format!(
                    "lp {}: c_{j} = {} outside [{lo}, {hi}]",
                    out.lps, c[j]
                ));
                continue;
            }
            for e in [lo, hi].into_iter().filter(|e| e.is_finite()) {
                out.endpoints += 1;
                let mut probe = c.clone();
                probe[j] = e;
                let got = solve_lp(&lp.with_objective(&probe))?;
                if !got.is_optimal() {
                    out.failures
                        .push(format!("lp {}: endpoint {e} of c_{j} not optimal", out.lps));
                    continue;
                }
                let same = got
                    .decision
                    .values
                    .iter()
                    .zip(x)
                    .all(|(a, b)| (a - b).abs() <= DECISION_TOL);
                let gap = (dot(&probe, x) - got.objective_value).abs();
                if same {
                    out.identical += 1;
                } else if gap <= DECISION_TOL * (1.0 + got.objective_value.abs()) {
                    out.tied += 1;
                } else {
                    out.failures.push(format!(
                        "lp {}: endpoint {e} of c_{j} moves the optimum by {gap:e}",
                        out.lps
                    ));
                }

                let step = (1e-4 * (1.0 + e.abs())).min((c[j] - e).abs() / 2.0);
                if step <= 1e-9 {
                    continue;
                }
                probe[j] = e + step * (c[j] - e).signum();
                out.interior += 1;
                let inner = solve_lp(&lp.with_objective(&probe))?;
                let same = inner.is_optimal()
                    && inner
                        .decision
                        .values
                        .iter()
                        .zip(x)
                        .all(|(a, b)| (a - b).abs() <= DECISION_TOL);
                if !same {
                    out.failures.push(format!(
                        "lp {}: c_{j} = {} inside the range changes the decision",
                        out.lps, probe[j]
                    ));
                }
            }
        }
    }
    Ok(out)
}
