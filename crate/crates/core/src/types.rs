//! Domain types shared by every module: senses, decisions, instances and datasets.
//!
//! A [`Dataset`] round-trips through a single JSON file:
//!
//! ```text
//! {"k": 5, "d": 40, "seed": 7,
//!  "split": {"train": [..], "val": [..], "test": [..]},
//!  "instances": [{"z": [..], "c": [..], "x_star": [..]}, ..]}
//! ```
//!
//! `x_star` is omitted when the optimal decision has not been computed.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Feature vector `z` (length `k`).
pub type FeatureVector = Vec<f64>;

/// Objective coefficients (length `d`): true costs, predictions, or normalized costs.
pub type CostVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// `true` when `a` is a strictly better objective value than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }

    /// +1 for maximization, -1 for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub values: Vec<f64>,
    pub kind: DecisionKind,
}

impl Decision {
    pub fn binary(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 0.0 || v == 1.0));
        Self {
            values,
            kind: DecisionKind::Binary,
        }
    }

    pub fn continuous(values: Vec<f64>) -> Self {
        Self {
            values,
            kind: DecisionKind::Continuous,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        Self::binary(bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn objective(&self, costs: &[f64]) -> f64 {
        dot(&self.values, costs)
    }
}

/// Per-coordinate objective-coefficient ranges `[lower_j, upper_j]` over which
/// an optimal basis stays optimal. Entries may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRangeVector {
    #[serde(with = "inf_vec")]
    pub lower: Vec<f64>,
    #[serde(with = "inf_vec")]
    pub upper: Vec<f64>,
}

impl CostRangeVector {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    /// Ranges of `alpha * c` for `alpha > 0`: the optimal basis is unchanged, so
    /// every endpoint scales by the same factor.
    pub fn scaled(&self, alpha: f64) -> Self {
        debug_assert!(alpha > 0.0);
        Self {
            lower: self.lower.iter().map(|v| v * alpha).collect(),
            upper: self.upper.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn contains(&self, costs: &[f64], tol: f64) -> bool {
        costs
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&c, (&lo, &hi))| lo - tol <= c && c <= hi + tol)
    }
}

/// One training/evaluation record together with the caches the losses need.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataInstance {
    pub features: FeatureVector,
    pub true_costs: CostVector,
    pub optimal_decision: Option<Decision>,
    /// Ranges computed on the raw (unnormalized) true costs.
    pub sensitivity_ranges: Option<CostRangeVector>,
    /// Instance-based cost, strictly positive when present.
    pub instance_cost: Option<f64>,
    /// Regret of the baseline prediction, used by the reweighting comparison loss.
    pub baseline_regret: Option<f64>,
}

impl DataInstance {
    pub fn new(features: FeatureVector, true_costs: CostVector) -> Self {
        Self {
            features,
            true_costs,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<DataInstance>,
    pub split: Split,
    pub k: usize,
    pub d: usize,
    pub seed: u64,
}

impl Dataset {
    /// Checks shared dimensions and that the split indices are in range and disjoint.
    pub fn validate(&self) -> Result<()> {
        for inst in &self.instances {
            check_len("features", self.k, inst.features.len())?;
            check_len("costs", self.d, inst.true_costs.len())?;
            if let Some(x) = &inst.optimal_decision {
                check_len("optimal decision", self.d, x.len())?;
            }
            if !inst
                .features
                .iter()
                .chain(&inst.true_costs)
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidConfig("non-finite feature or cost".into()));
            }
        }
        let mut seen = vec![false; self.instances.len()];
        for &i in self
            .split
            .train
            .iter()
            .chain(&self.split.val)
            .chain(&self.split.test)
        {
            if i >= self.instances.len() {
                return Err(Error::InvalidConfig(format!(
                    "split index {i} out of range"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig(format!(
                    "split index {i} appears twice"
                )));
            }
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Vec<DataInstance> {
        indices.iter().map(|&i| self.instances[i].clone()).collect()
    }

    pub fn train(&self) -> Vec<DataInstance> {
        self.subset(&self.split.train)
    }

    pub fn val(&self) -> Vec<DataInstance> {
        self.subset(&self.split.val)
    }

    pub fn test(&self) -> Vec<DataInstance> {
        self.subset(&self.split.test)
    }

    pub fn to_json_writer<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &DatasetFile::from(self))?;
        Ok(())
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let file: DatasetFile = serde_json::from_reader(reader)?;
        let ds = Dataset::try_from(file)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.to_json_writer(file)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::from_json_reader(file)
    }

    /// One row per instance: `z_0..z_{k-1}, c_0..c_{d-1}`.
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (0..self.k)
            .map(|i| format!("z_{i}"))
            .chain((0..self.d).map(|j| format!("c_{j}")))
            .collect();
        w.write_record(&header)?;
        for inst in &self.instances {
            let row: Vec<String> = inst
                .features
                .iter()
                .chain(&inst.true_costs)
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    z: Vec<f64>,
    c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_star: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    k: usize,
    d: usize,
    seed: u64,
    split: Split,
    instances: Vec<InstanceRecord>,
}

impl From<&Dataset> for DatasetFile {
    fn from(ds: &Dataset) -> Self {
        DatasetFile {
            k: ds.k,
            d: ds.d,
            seed: ds.seed,
            split: ds.split.clone(),
            instances: ds
                .instances
                .iter()
                .map(|i| InstanceRecord {
                    z: i.features.clone(),
                    c: i.true_costs.clone(),
                    x_star: i.optimal_decision.as_ref().map(|x| x.values.clone()),
                })
                .collect(),
        }
    }
}

impl TryFrom<DatasetFile> for Dataset {
    type Error = Error;

    fn try_from(file: DatasetFile) -> Result<Self> {
        let instances = file
            .instances
            .into_iter()
            .map(|r| {
                let optimal_decision = r.x_star.map(|v| {
                    if v.iter().all(|&x| x == 0.0 || x == 1.0) {
                        Decision::binary(v)
                    } else {
                        Decision::continuous(v)
                    }
                });
                DataInstance {
                    optimal_decision,
                    ..DataInstance::new(r.z, r.c)
                }
            })
            .collect();
        Ok(Dataset {
            instances,
            split: file.split,
            k: file.k,
            d: file.d,
            seed: file.seed,
        })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Serde helper writing infinite endpoints as the strings `"inf"` / `"-inf"`.
pub(crate) mod inf_vec {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = values
            .iter()
            .map(|&v| {
                if v == f64::INFINITY {
                    Entry::Text("inf".into())
                } else if v == f64::NEG_INFINITY {
                    Entry::Text("-inf".into())
                } else {
                    Entry::Num(v)
                }
            })
            .collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Entry>::deserialize(d)?
            .into_iter()
            .map(|e| match e {
                Entry::Num(v) => Ok(v),
                Entry::Text(t) => match t.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(D::Error::custom(format!("bad range endpoint `{other}`"))),
                },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let mut a = DataInstance::new(vec![0.5, -1.0], vec![1.0, 2.0, 3.0]);
        a.optimal_decision = Some(Decision::binary(vec![0.0, 1.0, 1.0]));
        let b = DataInstance::new(vec![1.25, 0.0], vec![0.1, 0.2, 0.3]);
        Dataset {
            instances: vec![a, b],
            split: Split {
                train: vec![0],
                val: vec![],
                test: vec![1],
            },
            k: 2,
            d: 3,
            seed: 9,
        }
    }

    #[test]
    fn json_round_trip_keeps_cached_decision() {
        let ds = toy();
        let mut buf = Vec::new();
        ds.to_json_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"x_star\":[0.0,1.0,1.0]"));
        assert_eq!(text.matches("x_star").count(), 1);
        let back = Dataset::from_json_reader(buf.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn overlapping_split_is_rejected() {
        let mut ds = toy();
        ds.split.test = vec![0];
        assert!(matches!(ds.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn wrong_cost_length_is_rejected() {
        let mut ds = toy();
        ds.instances[1].true_costs.pop();
        assert!(matches!(
            ds.validate(),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn csv_export_has_feature_then_cost_columns() {
        let mut buf = Vec::new();
        toy().to_csv_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "z_0,z_1,c_0,c_1,c_2");
        assert_eq!(lines.next().unwrap(), "0.5,-1,1,2,3");
    }

    #[test]
    fn infinite_ranges_serialize_as_strings() {
        let r = CostRangeVector {
            lower: vec![f64::NEG_INFINITY, 1.0],
            upper: vec![2.5, f64::INFINITY],
        };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(text, r#"{"lower":["-inf",1.0],"upper":[2.5,"inf"]}"#);
        let back: CostRangeVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
