//! JSON instance files.
//!
//! ```json
//! {
//!   "marginals": [
//!     {"atoms": [-1, 1], "weights": [0.5, 0.5]},
//!     {"lognormal": {"location": 0.0, "scale": 0.2, "m": 15}}
//!   ],
//!   "cost": {"form": "basket", "strike": 1.0},
//!   "options": {"variant": "proposition", "target_gap": 1e-4}
//! }
//! ```
//!
//! A tabulated cost is given inline as `{"form": "custom_table", "values": [...]}`
//! or as `{"form": "custom_table", "path": "cost.csv"}`; relative paths are
//! resolved against the instance file. The CSV's last column holds the values
//! in row-major order; any leading columns are the coordinates `x_1..x_n` and
//! must match the product grid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::Variant;
use crate::cost::{CostSpec, CostTensor};
use crate::error::{MotError, Result};
use crate::grid::ProductGrid;
use crate::measures::{MarginalSequence, MeasureSpec};
use crate::optimizer::StepRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableTag {
    CustomTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostEntry {
    /// Tensor CSV on disk.
    File {
        form: TableTag,
        path: PathBuf,
    },
    Spec(CostSpec),
}

/// Solver settings stored with an instance; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceOptions {
    pub variant: Option<Variant>,
    pub target_gap: Option<f64>,
    pub max_iters: Option<usize>,
    pub initial_step: Option<f64>,
    pub step_rule: Option<StepRule>,
    pub seed: Option<u64>,
    pub max_variables: Option<usize>,
    pub max_pivots: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub marginals: Vec<MeasureSpec>,
    pub cost: CostEntry,
    #[serde(default)]
    pub options: InstanceOptions,
}

/// A parsed instance with its cost tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInstance {
    pub marginals: MarginalSequence,
    pub cost: CostTensor,
    pub options: InstanceOptions,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            MotError::Input(format!("instance line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MotError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds the marginals and tabulates the cost; `base` resolves relative
    /// tensor paths.
    pub fn load(&self, base: Option<&Path>) -> Result<LoadedInstance> {
        let marginals = self
            .marginals
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.build().map_err(|e| MotError::Input(format!("marginals[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let marginals = MarginalSequence::new(marginals)?;
        let cost = match &self.cost {
            CostEntry::Spec(spec) => spec
                .tabulate(&marginals)
                .map_err(|e| MotError::Input(format!("cost: {e}")))?,
            CostEntry::File { path, .. } => {
                let full = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                read_cost_csv(&full, &marginals)?
            }
        };
        Ok(LoadedInstance {
            marginals,
            cost,
            options: self.options.clone(),
        })
    }
}

/// Reads and loads an instance file.
pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    InstanceFile::read(path)?.load(path.parent())
}

/// Reads a cost tensor CSV (with a header row) for `ms`.
pub fn read_cost_csv(path: &Path, ms: &MarginalSequence) -> Result<CostTensor> {
    let err = |line: usize, msg: String| MotError::Input(format!("{}:{line}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| MotError::Input(format!("{}: {e}", path.display())))?;
    let grid = ProductGrid::new(ms.shape());
    let n = ms.len();
    let mut idx = vec![0; n];
    let mut values = Vec::with_capacity(grid.num_paths());
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| err(line, e.to_string()))?;
        let fields: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| err(line, format!("{f:?}: {e}"))))
            .collect::<Result<_>>()?;
        let value = *fields.last().ok_or_else(|| err(line, "empty row".into()))?;
        let coords = &fields[..fields.len() - 1];
        if !coords.is_empty() {
            if coords.len() != n {
                return Err(err(line, format!("expected {n} coordinates, found {}", coords.len())));
            }
            if row >= grid.num_paths() {
                return Err(err(line, "more rows than grid paths".into()));
            }
            grid.unravel_into(n, row, &mut idx);
            for (d, (&x, &i)) in coords.iter().zip(&idx).enumerate() {
                let want = ms.get(d).atoms()[i];
                if (x - want).abs() > 1e-9 * (1.0 + want.abs()) {
                    return Err(err(line, format!("x_{} = {x}, grid has {want}", d + 1)));
                }
            }
        }
        values.push(value);
    }
    CostTensor::new(ms, values).map_err(|e| MotError::Input(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const HAND: &str = r#"{
        "marginals": [
            {"atoms": [-1, 1], "weights": [0.5, 0.5]},
            {"atoms": [-2, 2], "weights": [0.5, 0.5]}
        ],
        "cost": {"form": "squared_increment"}
    }"#;

    #[test]
    fn parses_named_cost() {
        let inst = InstanceFile::parse(HAND).unwrap().load(None).unwrap();
        assert_eq!(inst.cost.values(), &[1.0, 9.0, 9.0, 1.0]);
        assert_eq!(inst.options, InstanceOptions::default());
    }

    #[test]
    fn errors_carry_position() {
        let err = InstanceFile::parse("{\n  \"marginals\": [,]\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let bad_weights = HAND.replace("[0.5, 0.5]}\n", "[0.5, 0.6]}\n");
        assert!(InstanceFile::parse(&bad_weights).is_err());
    }

    #[test]
    fn lognormal_and_options() {
        let text = r#"{
            "marginals": [
                {"lognormal": {"location": 0.0, "scale": 0.0, "m": 3}},
                {"lognormal": {"location": -0.02, "scale": 0.2, "m": 4}}
            ],
            "cost": {"form": "terminal_call", "strike": 1.0},
            "options": {"variant": "remark_b", "max_iters": 10}
        }"#;
        let inst = InstanceFile::parse(text).unwrap().load(None).unwrap();
        assert_eq!(inst.marginals.shape(), vec![1, 4]);
        assert_eq!(inst.options.variant, Some(Variant::Stepwise));
        assert_eq!(inst.options.max_iters, Some(10));
    }

    #[test]
    fn cost_from_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("c.csv")).unwrap();
        writeln!(f, "x_1,x_2,c\n-1,-2,1\n-1,2,9\n1,-2,9\n1,2,1").unwrap();
        let text = HAND.replace(
            r#"{"form": "squared_increment"}"#,
            r#"{"form": "custom_table", "path": "c.csv"}"#,
        );
        let path = dir.path().join("inst.json");
        std::fs::write(&path, text).unwrap();
        let inst = load_instance(&path).unwrap();
        assert_eq!(inst.cost.values(), &[1.0, 9.0, 9.0, 1.0]);

        let mut f = std::fs::File::create(dir.path().join("c.csv")).unwrap();
        writeln!(f, "x_1,x_2,c\n-1,-2,1\n-1,3,9\n1,-2,9\n1,2,1").unwrap();
        assert!(load_instance(&path).unwrap_err().to_string().contains("c.csv:3"));
    }
}
