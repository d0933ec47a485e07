//! Synthetic feature/cost data with a polynomial link and multiplicative noise.
//!
//! For features `z ~ N(0, I_k)` and a fixed 0/1 matrix `B` (`d x k`),
//!
//! ```text
//! c_j = (scale * ((B z)_j / sqrt(k) + shift)^deg + offset) * eps_j,
//! eps_j ~ U[1 - noise, 1 + noise]
//! ```
//!
//! `scale` defaults to 1; PyEPO divides by `3.5^deg` instead, which keeps
//! costs of order one for high degrees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemOracle;
use crate::types::{DataInstance, Dataset, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub k: usize,
    pub deg: u32,
    /// Half-width of the multiplicative noise.
    pub noise: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
    pub shift: f64,
    pub offset: f64,
    /// Probability of a one in `B`.
    pub density: f64,
    /// Multiplier of the polynomial term.
    pub scale: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            k: 5,
            deg: 6,
            noise: 0.5,
            n_train: 1000,
            n_val: 400,
            n_test: 600,
            seed: 0,
            shift: 3.0,
            offset: 1.0,
            density: 0.5,
            scale: 1.0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.deg < 1 {
            return bad("degree must be at least 1");
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise half-width must lie in [0, 1)");
        }
        if self.k == 0 || self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return bad("k and split sizes must be positive");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    /// PyEPO's scaling, `3.5^-deg`.
    pub fn pyepo_scale(&self) -> f64 {
        3.5f64.powi(-(self.deg as i32))
    }
}

/// Noise-multiplied costs for features `z` under latent matrix `b`.
pub(crate) fn link(spec: &GenSpec, b: &[Vec<f64>], z: &[f64], eps: &[f64]) -> Vec<f64> {
    let root_k = (spec.k as f64).sqrt();
    let scale = spec.scale;
    b.iter()
        .zip(eps)
        .map(|(row, e)| {
            let bz: f64 = row.iter().zip(z).map(|(a, x)| a * x).sum();
            (scale * (bz / root_k + spec.shift).powi(spec.deg as i32) + spec.offset) * e
        })
        .collect()
}

/// Draws `B` and every instance from one seeded stream, then caches optimal
/// decisions for the training and validation instances (counted on `problem`).
/// Splits are contiguous: train, then validation, then test.
pub fn generate(spec: &GenSpec, problem: &ProblemOracle) -> Result<Dataset> {
    spec.validate()?;
    let (k, d) = (spec.k, problem.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bern = Bernoulli::new(spec.density).expect("density validated");
    let b: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            (0..k)
                .map(|_| f64::from(u8::from(bern.sample(&mut rng))))
                .collect()
        })
        .collect();
    let mut instances = Vec::with_capacity(spec.total());
    for _ in 0..spec.total() {
        let z: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let eps: Vec<f64> = (0..d)
            .map(|_| {
                if spec.noise > 0.0 {
                    rng.random_range(1.0 - spec.noise..=1.0 + spec.noise)
                } else {
                    1.0
                }
            })
            .collect();
        let c = link(spec, &b, &z, &eps);
        instances.push(DataInstance::new(z, c));
    }

    let n_known = spec.n_train + spec.n_val;
    let decisions = instances[..n_known]
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            problem
                .solve(&inst.true_costs)
                .map_err(|e| e.at_instance(i))
        })
        .collect::<Result<Vec<_>>>()?;
    for (inst, x) in instances.iter_mut().zip(decisions) {
        inst.optimal_decision = Some(x);
    }

    let split = Split {
        train: (0..spec.n_train).collect(),
        val: (spec.n_train..n_known).collect(),
        test: (n_known..spec.total()).collect(),
    };
    let ds = Dataset {
        instances,
        split,
        k,
        d,
        seed: spec.seed,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{GridSpec, ProblemSpec};

    fn grid() -> ProblemOracle {
        ProblemOracle::new(ProblemSpec::Grid(GridSpec::new(3, 3)))
    }

    fn small(seed: u64) -> GenSpec {
        GenSpec {
            n_train: 20,
            n_val: 5,
            n_test: 10,
            seed,
            ..GenSpec::default()
        }
    }

    #[test]
    fn origin_features_give_constant_costs() {
        let spec = GenSpec {
            noise: 0.0,
            ..small(1)
        };
        let b = vec![vec![1.0, 0.0, 1.0, 1.0, 0.0], vec![0.0; 5], vec![1.0; 5]];
        let c = link(&spec, &b, &[0.0; 5], &[1.0; 3]);
        assert_eq!(c, vec![3f64.powi(6) + 1.0; 3]);
        let pyepo = GenSpec {
            scale: spec.pyepo_scale(),
            ..spec
        };
        let c = link(&pyepo, &b, &[0.0; 5], &[1.0; 3]);
        assert!((c[0] - ((3.0f64 / 3.5).powi(6) + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate(&small(3), &grid()).unwrap();
        let b = generate(&small(3), &grid()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate(&small(4), &grid()).unwrap());
    }

    #[test]
    fn splits_and_caches() {
        let p = grid();
        let ds = generate(&small(5), &p).unwrap();
        assert_eq!(ds.split.train, (0..20).collect::<Vec<_>>());
        assert_eq!(ds.split.val, (20..25).collect::<Vec<_>>());
        assert_eq!(ds.split.test, (25..35).collect::<Vec<_>>());
        assert!(ds.instances[..25]
            .iter()
            .all(|i| i.optimal_decision.is_some()));
        assert!(ds.instances[25..]
            .iter()
            .all(|i| i.optimal_decision.is_none()));
        assert_eq!(p.counts().solves, 25);
    }

    #[test]
    fn even_degree_costs_are_positive() {
        let ds = generate(
            &GenSpec {
                noise: 0.9,
                ..small(6)
            },
            &grid(),
        )
        .unwrap();
        assert!(ds
            .instances
            .iter()
            .flat_map(|i| &i.true_costs)
            .all(|&c| c > 0.0));
    }

    #[test]
    fn degree_one_costs_are_affine_in_features() {
        // Without noise c = B z / sqrt(k) + shift + offset, so least squares
        // recovers B / sqrt(k) and an intercept of 4.
        let spec = GenSpec {
            deg: 1,
            noise: 0.0,
            n_train: 200,
            ..small(7)
        };
        let ds = generate(&spec, &grid()).unwrap();
        let k = spec.k;
        // Normal equations for output 0.
        let n = ds.instances.len();
        let mut ata = vec![vec![0.0; k + 1]; k + 1];
        let mut atb = vec![0.0; k + 1];
        for inst in &ds.instances {
            let mut row = inst.features.clone();
            row.push(1.0);
            for a in 0..=k {
                atb[a] += row[a] * inst.true_costs[0];
                for b in 0..=k {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        let coef = solve_dense(ata, atb);
        for w in &coef[..k] {
            let scaled = w * (k as f64).sqrt();
            assert!(
                (scaled - scaled.round()).abs() < 1e-8 && (0.0..=1.0).contains(&scaled.round())
            );
        }
        assert!(
            (coef[k] - 4.0).abs() < 1e-8,
            "intercept {} from {n} rows",
            coef[k]
        );
    }

    fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        (0..n).map(|i| b[i] / a[i][i]).collect()
    }

    #[test]
    fn rejects_bad_specs() {
        for bad in [
            GenSpec {
                noise: 1.0,
                ..small(0)
            },
            GenSpec { deg: 0, ..small(0) },
            GenSpec {
                n_test: 0,
                ..small(0)
            },
        ] {
            assert!(generate(&bad, &grid()).is_err());
        }
    }
}
