//! Monotone shortest path on a `rows x cols` node grid.
//!
//! Arcs point east and south; the source is the top-left node and the sink the
//! bottom-right one. Arc indices are fixed: all east arcs row-major first
//! (`r * (cols - 1) + c`), then all south arcs row-major
//! (`rows * (cols - 1) + r * cols + c`).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::simplex::{ConstraintKind, LinearProgram};
use crate::types::{Decision, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(
            rows >= 1 && cols >= 1 && rows * cols >= 2,
            "grid needs two nodes"
        );
        Self { rows, cols }
    }

    pub fn num_arcs(&self) -> usize {
        self.rows * (self.cols - 1) + self.cols * (self.rows - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn east_arc(&self, r: usize, c: usize) -> usize {
        r * (self.cols - 1) + c
    }

    pub fn south_arc(&self, r: usize, c: usize) -> usize {
        self.rows * (self.cols - 1) + r * self.cols + c
    }

    /// `(tail, head)` node ids per arc, in arc-index order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut arcs = Vec::with_capacity(self.num_arcs());
        for r in 0..self.rows {
            for c in 0..self.cols - 1 {
                let u = r * self.cols + c;
                arcs.push((u, u + 1));
            }
        }
        for r in 0..self.rows - 1 {
            for c in 0..self.cols {
                let u = r * self.cols + c;
                arcs.push((u, u + self.cols));
            }
        }
        arcs
    }

    /// Flow conservation at every node except the sink (whose row is implied).
    pub fn lp_form(&self) -> LinearProgram {
        let arcs = self.arcs();
        let d = arcs.len();
        let sink = self.num_nodes() - 1;
        let mut rows = Vec::with_capacity(sink);
        let mut rhs = Vec::with_capacity(sink);
        for v in 0..sink {
            let row: Vec<f64> = arcs
                .iter()
                .map(|&(t, h)| {
                    if t == v {
                        1.0
                    } else if h == v {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            rows.push(row);
            rhs.push(if v == 0 { 1.0 } else { 0.0 });
        }
        let m = rows.len();
        LinearProgram::new(rows, rhs, Sense::Minimize, vec![0.0; d])
            .with_kinds(vec![ConstraintKind::Eq; m])
            .with_bounds(vec![0.0; d], vec![1.0; d])
    }

    pub fn is_path(&self, x: &[f64]) -> bool {
        let arcs = self.arcs();
        let mut balance = vec![0.0; self.num_nodes()];
        for (&(t, h), &v) in arcs.iter().zip(x) {
            if v != 0.0 && v != 1.0 {
                return false;
            }
            balance[t] += v;
            balance[h] -= v;
        }
        let sink = self.num_nodes() - 1;
        // On a DAG a unit flow with these balances is a single path.
        balance.iter().enumerate().all(|(v, &b)| match v {
            0 => b == 1.0,
            v if v == sink => b == -1.0,
            _ => b == 0.0,
        })
    }
}

type Bits = Vec<u64>;

fn set_bit(bits: &mut Bits, i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

/// `true` when indicator vector `a` is lexicographically smaller than `b`
/// (index 0 most significant).
fn lex_less(a: &Bits, b: &Bits) -> bool {
    for (wa, wb) in a.iter().zip(b) {
        let diff = wa ^ wb;
        if diff != 0 {
            let low = diff.trailing_zeros();
            return wb >> low & 1 == 1;
        }
    }
    false
}

/// Minimum-cost source-to-sink path by backward dynamic programming in
/// topological order. Arc costs may be negative.
pub fn solve_shortest_path(spec: &GridSpec, costs: &[f64]) -> Result<Decision> {
    let d = spec.num_arcs();
    check_len("grid costs", d, costs.len())?;
    let words = d.div_ceil(64).max(1);
    let n = spec.num_nodes();
    let mut best: Vec<(f64, Bits)> = vec![(0.0, vec![0; words]); n];
    for u in (0..n - 1).rev() {
        let (r, c) = (u / spec.cols, u % spec.cols);
        let mut choice: Option<(f64, Bits)> = None;
        let mut consider = |arc: usize, v: usize| {
            let cost = costs[arc] + best[v].0;
            let mut bits = best[v].1.clone();
            set_bit(&mut bits, arc);
            let take = match &choice {
                None => true,
                Some((bc, bb)) => {
                    let tol = 1e-12 * (1.0 + bc.abs().max(cost.abs()));
                    if (cost - bc).abs() <= tol {
                        lex_less(&bits, bb)
                    } else {
                        cost < *bc
                    }
                }
            };
            if take {
                choice = Some((cost, bits));
            }
        };
        if c + 1 < spec.cols {
            consider(spec.east_arc(r, c), u + 1);
        }
        if r + 1 < spec.rows {
            consider(spec.south_arc(r, c), u + spec.cols);
        }
        best[u] = choice.expect("every non-sink node has an outgoing arc");
    }
    let bits = &best[0].1;
    let x: Vec<f64> = (0..d)
        .map(|i| (bits[i / 64] >> (i % 64) & 1) as f64)
        .collect();
    debug_assert!(spec.is_path(&x));
    Ok(Decision::binary(x))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::types::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every monotone path as an indicator vector.
    pub(crate) fn all_paths(spec: &GridSpec) -> Vec<Vec<f64>> {
        fn walk(spec: &GridSpec, r: usize, c: usize, x: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
            if r == spec.rows - 1 && c == spec.cols - 1 {
                out.push(x.clone());
                return;
            }
            if c + 1 < spec.cols {
                let a = spec.east_arc(r, c);
                x[a] = 1.0;
                walk(spec, r, c + 1, x, out);
                x[a] = 0.0;
            }
            if r + 1 < spec.rows {
                let a = spec.south_arc(r, c);
                x[a] = 1.0;
                walk(spec, r + 1, c, x, out);
                x[a] = 0.0;
            }
        }
        let mut out = Vec::new();
        walk(spec, 0, 0, &mut vec![0.0; spec.num_arcs()], &mut out);
        out
    }

    pub(crate) fn brute_force(spec: &GridSpec, c: &[f64]) -> Vec<f64> {
        let mut paths = all_paths(spec);
        paths.sort_by(|a, b| {
            dot(c, a)
                .total_cmp(&dot(c, b))
                .then_with(|| a.partial_cmp(b).unwrap())
        });
        paths.swap_remove(0)
    }

    #[test]
    fn arc_count_and_layout() {
        let g = GridSpec::new(5, 5);
        assert_eq!(g.num_arcs(), 40);
        assert_eq!(all_paths(&g).len(), 70);
        let arcs = g.arcs();
        assert_eq!(arcs[g.east_arc(1, 2)], (7, 8));
        assert_eq!(arcs[g.south_arc(3, 4)], (19, 24));
    }

    #[test]
    fn two_by_two_prefers_east_then_south() {
        let g = GridSpec::new(2, 2);
        // east top, east bottom, south left, south right
        let c = [1.0, 5.0, 2.0, 1.0];
        let x = solve_shortest_path(&g, &c).unwrap();
        assert_eq!(x.values, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(dot(&c, &x.values), 2.0);
    }

    #[test]
    fn equal_costs_pick_lexicographically_smallest_path() {
        let g = GridSpec::new(3, 3);
        let c = vec![1.0; g.num_arcs()];
        let x = solve_shortest_path(&g, &c).unwrap();
        assert_eq!(x.values, brute_force(&g, &c));
        // Down the left column, then along the bottom row.
        let mut expected = vec![0.0; g.num_arcs()];
        for a in [
            g.south_arc(0, 0),
            g.south_arc(1, 0),
            g.east_arc(2, 0),
            g.east_arc(2, 1),
        ] {
            expected[a] = 1.0;
        }
        assert_eq!(x.values, expected);
    }

    #[test]
    fn negative_costs_on_random_grids_match_enumeration() {
        let g = GridSpec::new(5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..3.0)).collect();
            let x = solve_shortest_path(&g, &c).unwrap();
            assert_eq!(x.values, brute_force(&g, &c));
        }
    }

    #[test]
    fn lp_form_has_one_row_per_nonsink_node() {
        let lp = GridSpec::new(2, 3).lp_form();
        assert_eq!(lp.num_constraints(), 5);
        assert_eq!(lp.num_vars(), 7);
        assert_eq!(lp.sense, Sense::Minimize);
    }
}
