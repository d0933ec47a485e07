//! Linear cost predictor `c_hat = W z + b` and its training loop.

mod train;

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use train::{train, Optimizer, TrainConfig, TrainTrace};

use crate::error::{check_len, Error, Result};
use crate::types::CostVector;

/// Anything that maps features to predicted costs.
pub trait Predictor: Sync {
    fn predict(&self, z: &[f64]) -> Result<CostVector>;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn predict(&self, z: &[f64]) -> Result<CostVector> {
        (**self).predict(z)
    }
}

const MAGIC: &[u8; 8] = b"COSDFLLM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `d x k`, row-major.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(k: usize, d: usize) -> Self {
        Self {
            weights: vec![vec![0.0; k]; d],
            bias: vec![0.0; d],
        }
    }

    /// Weights uniform in `(-1/sqrt(k), 1/sqrt(k))`, zero bias.
    pub fn init(k: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = 1.0 / (k.max(1) as f64).sqrt();
        let weights = (0..d)
            .map(|_| (0..k).map(|_| rng.random_range(-a..a)).collect())
            .collect();
        Self {
            weights,
            bias: vec![0.0; d],
        }
    }

    pub fn k(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn d(&self) -> usize {
        self.bias.len()
    }

    pub fn num_params(&self) -> usize {
        self.d() * (self.k() + 1)
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .flatten()
            .chain(&self.bias)
            .all(|v| v.is_finite())
    }

    /// Parameter-wise mean; predicts the mean of the members' predictions.
    pub fn average(models: &[LinearModel]) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidConfig("cannot average zero models".into()))?;
        let (k, d) = (first.k(), first.d());
        let mut out = Self::zeros(k, d);
        let n = models.len() as f64;
        for m in models {
            check_len("model outputs", d, m.d())?;
            check_len("model inputs", k, m.k())?;
            for (ro, rm) in out.weights.iter_mut().zip(&m.weights) {
                for (o, v) in ro.iter_mut().zip(rm) {
                    *o += v / n;
                }
            }
            for (o, v) in out.bias.iter_mut().zip(&m.bias) {
                *o += v / n;
            }
        }
        Ok(out)
    }

    /// Binary checkpoint: 8-byte magic, `k` and `d` as little-endian `u32`, then
    /// the weights row by row and the bias as little-endian `f64`.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.k() as u32).to_le_bytes())?;
        w.write_all(&(self.d() as u32).to_le_bytes())?;
        for v in self.weights.iter().flatten().chain(&self.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[..8] != MAGIC {
            return Err(Error::Parse("not a model checkpoint".into()));
        }
        let k = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        let d = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
        let mut next = || -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let mut m = Self::zeros(k, d);
        for row in m.weights.iter_mut() {
            for v in row.iter_mut() {
                *v = next()?;
            }
        }
        for v in m.bias.iter_mut() {
            *v = next()?;
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::to_writer_pretty(file, self)?;
            Ok(())
        } else {
            self.write_checkpoint(file)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_reader(file)?)
        } else {
            Self::read_checkpoint(file)
        }
    }
}

impl Predictor for LinearModel {
    fn predict(&self, z: &[f64]) -> Result<CostVector> {
        check_len("features", self.k(), z.len())?;
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_identity_predictions() {
        let mut m = LinearModel::zeros(3, 2);
        m.bias = vec![4.0, -1.0];
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, -1.0]);

        let mut id = LinearModel::zeros(3, 3);
        for j in 0..3 {
            id.weights[j][j] = 1.0;
        }
        assert_eq!(id.predict(&[0.5, 1.5, 2.5]).unwrap(), vec![0.5, 1.5, 2.5]);
        assert!(matches!(
            id.predict(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prediction_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let (k, d) = (rng.random_range(1..8), rng.random_range(1..8));
            let mut m = LinearModel::init(k, d, rng.random());
            m.bias = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            let out = m.predict(&z).unwrap();
            for j in 0..d {
                let mut acc = m.bias[j];
                for i in 0..k {
                    acc += m.weights[j][i] * z[i];
                }
                assert!((out[j] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_respects_bounds_and_seed() {
        let m = LinearModel::init(4, 10, 3);
        assert!(m.weights.iter().flatten().all(|w| w.abs() < 0.5));
        assert!(m.bias.iter().all(|&b| b == 0.0));
        assert_eq!(m, LinearModel::init(4, 10, 3));
        assert_ne!(m, LinearModel::init(4, 10, 4));
    }

    #[test]
    fn average_predicts_mean() {
        let a = LinearModel::init(3, 2, 1);
        let b = LinearModel::init(3, 2, 2);
        let avg = LinearModel::average(&[a.clone(), b.clone()]).unwrap();
        let z = [0.3, -1.0, 2.0];
        let (pa, pb, pm) = (
            a.predict(&z).unwrap(),
            b.predict(&z).unwrap(),
            avg.predict(&z).unwrap(),
        );
        for j in 0..2 {
            assert!((pm[j] - 0.5 * (pa[j] + pb[j])).abs() < 1e-12);
        }
        assert_eq!(LinearModel::average(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn checkpoint_round_trips() {
        let mut m = LinearModel::init(5, 3, 9);
        m.bias = vec![1.5, -2.0, 1e-300];
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 18);
        assert_eq!(&buf[..8], b"COSDFLLM");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 5);
        assert_eq!(LinearModel::read_checkpoint(&buf[..]).unwrap(), m);

        let dir = tempfile::tempdir().unwrap();
        for name in ["m.bin", "m.json"] {
            let path = dir.path().join(name);
            m.save(&path).unwrap();
            assert_eq!(LinearModel::load(&path).unwrap(), m);
        }
        assert!(LinearModel::read_checkpoint(&b"NOTMAGICxxxxxxxx"[..]).is_err());
    }
}
