//! Fixtures shared by the criterion benches.

use cosdfl_core::problems::{GridSpec, KnapsackSpec, TspSpec};
use cosdfl_core::simplex::LinearProgram;
use cosdfl_core::{DataInstance, ProblemOracle, ProblemSpec, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn costs(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.5..5.0)).collect()
}

pub fn knapsack(items: usize) -> ProblemSpec {
    ProblemSpec::Knapsack(KnapsackSpec::random(items, 2, 20.0, 3, 8, 0))
}

pub fn grid(size: usize) -> ProblemSpec {
    ProblemSpec::Grid(GridSpec::new(size, size))
}

pub fn tsp(nodes: usize) -> ProblemSpec {
    ProblemSpec::Tsp(TspSpec::new(nodes))
}

/// Dense packing LP with `m` rows and `d` columns.
pub fn packing_lp(rng: &mut ChaCha8Rng, m: usize, d: usize) -> LinearProgram {
    let a = (0..m)
        .map(|_| (0..d).map(|_| rng.random_range(0.1..2.0)).collect())
        .collect();
    let b = (0..m).map(|_| rng.random_range(5.0..20.0)).collect();
    let c = (0..d).map(|_| rng.random_range(-1.0..5.0)).collect();
    LinearProgram::new(a, b, Sense::Maximize, c)
}

/// Instances with optimal decisions, cost-range vectors and unit instance costs.
pub fn instances(oracle: &ProblemOracle, count: usize, seed: u64) -> Vec<DataInstance> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let c = costs(&mut rng, oracle.dim());
            let mut inst = DataInstance::new(vec![], c.clone());
            inst.optimal_decision = Some(oracle.solve(&c).expect("solvable"));
            inst.sensitivity_ranges = Some(oracle.sensitivity_ranges(&c).expect("ranges"));
            inst.instance_cost = Some(1.0);
            inst
        })
        .collect()
}
