//! Symmetric TSP over a complete graph with edge-indicator decisions.
//!
//! Edge `(i, j)`, `i < j`, has index `i * n - i * (i + 1) / 2 + (j - i - 1)`.
//! Small instances are solved exactly with Held-Karp; larger ones with
//! nearest-neighbour construction followed by 2-opt, which is not guaranteed
//! optimal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::simplex::{ConstraintKind, LinearProgram};
use crate::types::{Decision, Sense};

pub const MAX_EXACT_NODES: usize = 13;
const HEURISTIC_RESTARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TspMode {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TspSpec {
    pub nodes: usize,
    pub mode: TspMode,
    /// Seeds the restart starting nodes of the heuristic.
    pub seed: u64,
}

impl TspSpec {
    /// Exact for `n <= 13`, heuristic otherwise.
    pub fn new(nodes: usize) -> Self {
        assert!(nodes >= 3, "a tour needs at least three nodes");
        let mode = if nodes <= MAX_EXACT_NODES {
            TspMode::Exact
        } else {
            TspMode::Heuristic
        };
        Self {
            nodes,
            mode,
            seed: 0,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.nodes * (self.nodes - 1) / 2
    }

    pub fn edge_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.nodes - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Degree-2 constraints over edges in `[0, 1]`. Subtours are not excluded,
    /// so this is a loose relaxation.
    pub fn lp_form(&self) -> LinearProgram {
        let n = self.nodes;
        let d = self.num_edges();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|v| {
                let mut row = vec![0.0; d];
                for u in (0..n).filter(|&u| u != v) {
                    row[self.edge_index(u, v)] = 1.0;
                }
                row
            })
            .collect();
        LinearProgram::new(rows, vec![2.0; n], Sense::Minimize, vec![0.0; d])
            .with_kinds(vec![ConstraintKind::Eq; n])
            .with_bounds(vec![0.0; d], vec![1.0; d])
    }

    pub fn tour_to_decision(&self, tour: &[usize]) -> Decision {
        let mut x = vec![0.0; self.num_edges()];
        for w in 0..tour.len() {
            x[self.edge_index(tour[w], tour[(w + 1) % tour.len()])] = 1.0;
        }
        Decision::binary(x)
    }

    pub fn is_tour(&self, x: &[f64]) -> bool {
        let n = self.nodes;
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                match x[self.edge_index(i, j)] {
                    1.0 => {
                        adj[i].push(j);
                        adj[j].push(i);
                    }
                    0.0 => {}
                    _ => return false,
                }
            }
        }
        if adj.iter().any(|a| a.len() != 2) {
            return false;
        }
        let (mut prev, mut cur, mut steps) = (0, adj[0][0], 1);
        while cur != 0 {
            let next = if adj[cur][0] == prev {
                adj[cur][1]
            } else {
                adj[cur][0]
            };
            prev = cur;
            cur = next;
            steps += 1;
        }
        steps == n
    }

    fn matrix(&self, costs: &[f64]) -> Vec<Vec<f64>> {
        let n = self.nodes;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let c = costs[self.edge_index(i, j)];
                m[i][j] = c;
                m[j][i] = c;
            }
        }
        m
    }
}

pub fn solve_tsp(spec: &TspSpec, costs: &[f64]) -> Result<Decision> {
    check_len("tsp costs", spec.num_edges(), costs.len())?;
    let dist = spec.matrix(costs);
    let tour = match spec.mode {
        TspMode::Exact => {
            if spec.nodes > MAX_EXACT_NODES {
                return Err(Error::ModeMismatch {
                    nodes: spec.nodes,
                    max: MAX_EXACT_NODES,
                });
            }
            held_karp(&dist)
        }
        TspMode::Heuristic => heuristic(&dist, spec.seed),
    };
    let x = spec.tour_to_decision(&tour);
    debug_assert!(spec.is_tour(&x.values));
    Ok(x)
}

fn tour_cost(dist: &[Vec<f64>], tour: &[usize]) -> f64 {
    (0..tour.len())
        .map(|w| dist[tour[w]][tour[(w + 1) % tour.len()]])
        .sum()
}

/// Held-Karp over subsets of nodes `1..n`, tour anchored at node 0.
fn held_karp(dist: &[Vec<f64>]) -> Vec<usize> {
    let n = dist.len();
    let m = n - 1;
    let full = 1usize << m;
    let mut g = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for e in 0..m {
        g[(1 << e) * m + e] = dist[0][e + 1];
    }
    for mask in 1..full {
        for e in 0..m {
            if mask >> e & 1 == 0 {
                continue;
            }
            let prev_mask = mask ^ (1 << e);
            if prev_mask == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for p in 0..m {
                if prev_mask >> p & 1 == 0 {
                    continue;
                }
                let v = g[prev_mask * m + p] + dist[p + 1][e + 1];
                if v < best {
                    best = v;
                    arg = p;
                }
            }
            g[mask * m + e] = best;
            parent[mask * m + e] = arg;
        }
    }
    let last_mask = full - 1;
    let mut best = f64::INFINITY;
    let mut end = 0;
    for e in 0..m {
        let v = g[last_mask * m + e] + dist[e + 1][0];
        if v < best {
            best = v;
            end = e;
        }
    }
    let mut tour = Vec::with_capacity(n);
    let (mut mask, mut e) = (last_mask, end);
    while e != usize::MAX {
        tour.push(e + 1);
        let p = parent[mask * m + e];
        mask ^= 1 << e;
        e = p;
    }
    tour.push(0);
    tour.reverse();
    tour
}

fn nearest_neighbour(dist: &[Vec<f64>], start: usize) -> Vec<usize> {
    let n = dist.len();
    let mut visited = vec![false; n];
    let mut tour = vec![start];
    visited[start] = true;
    let mut cur = start;
    for _ in 1..n {
        let next = (0..n)
            .filter(|&v| !visited[v])
            .min_by(|&a, &b| dist[cur][a].total_cmp(&dist[cur][b]).then(a.cmp(&b)))
            .expect("unvisited node remains");
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    tour
}

fn two_opt(dist: &[Vec<f64>], tour: &mut [usize]) {
    let n = tour.len();
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[j], tour[(j + 1) % n]);
                let delta = dist[a][c] + dist[b][d] - dist[a][b] - dist[c][d];
                if delta < -1e-12 {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

fn heuristic(dist: &[Vec<f64>], seed: u64) -> Vec<usize> {
    let n = dist.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![0];
    starts.extend((0..HEURISTIC_RESTARTS).map(|_| rng.random_range(0..n)));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in starts {
        let mut tour = nearest_neighbour(dist, start);
        two_opt(dist, &mut tour);
        let pos = tour.iter().position(|&v| v == 0).unwrap();
        tour.rotate_left(pos);
        let cost = tour_cost(dist, &tour);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, tour));
        }
    }
    best.unwrap().1
}
