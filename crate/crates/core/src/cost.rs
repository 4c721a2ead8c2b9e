//! Payoff functions `c(x_1, …, x_n)` and their tabulation on the product grid.

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};
use crate::grid::ProductGrid;
use crate::measures::MarginalSequence;

/// An `n`-variate cost: a named closed form or an explicit tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CostSpec {
    /// `Σ (x_{i+1} − x_i)²`
    SquaredIncrement,
    /// `Σ |x_{i+1} − x_i|`
    AbsIncrement,
    /// `(x_n − K)⁺`
    TerminalCall { strike: f64 },
    /// `((1/n) Σ x_i − K)⁺`
    Basket { strike: f64 },
    Constant { value: f64 },
    /// Row-major values on the product grid (last coordinate fastest).
    CustomTable { values: Vec<f64> },
}

impl CostSpec {
    /// Pointwise value of a closed form; `None` for tables.
    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        let n = x.len() as f64;
        Some(match self {
            CostSpec::SquaredIncrement => x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum(),
            CostSpec::AbsIncrement => x.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
            CostSpec::TerminalCall { strike } => (x[x.len() - 1] - strike).max(0.0),
            CostSpec::Basket { strike } => (x.iter().sum::<f64>() / n - strike).max(0.0),
            CostSpec::Constant { value } => *value,
            CostSpec::CustomTable { .. } => return None,
        })
    }

    pub fn tabulate(&self, ms: &MarginalSequence) -> Result<CostTensor> {
        match self {
            CostSpec::CustomTable { values } => CostTensor::new(ms, values.clone()),
            form => Ok(CostTensor::from_fn(ms, |x| form.eval(x).expect("closed form"))),
        }
    }
}

/// Cost values on `supp μ_1 × … × supp μ_n`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTensor {
    grid: ProductGrid,
    values: Vec<f64>,
}

impl CostTensor {
    pub fn new(ms: &MarginalSequence, values: Vec<f64>) -> Result<Self> {
        let grid = ProductGrid::new(ms.shape());
        if values.len() != grid.num_paths() {
            return Err(MotError::ShapeMismatch(format!(
                "cost table has {} entries, product grid has {}",
                values.len(),
                grid.num_paths()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(MotError::InvalidParameter(format!("non-finite cost {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(ms: &MarginalSequence, f: impl Fn(&[f64]) -> f64) -> Self {
        let grid = ProductGrid::new(ms.shape());
        let n = grid.ndim();
        let mut idx = vec![0; n];
        let mut x = vec![0.0; n];
        let values = (0..grid.num_paths())
            .map(|flat| {
                grid.unravel_into(n, flat, &mut idx);
                for (d, &i) in idx.iter().enumerate() {
                    x[d] = ms.get(d).atoms()[i];
                }
                f(&x)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.map(|v| -v)
    }

    /// Smallest `K ≥ 0` with `c(x) ≥ −K(1 + Σ|x_i|)` on the grid.
    pub fn growth_constant(&self, ms: &MarginalSequence) -> f64 {
        let n = self.grid.ndim();
        let mut idx = vec![0; n];
        self.values
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                self.grid.unravel_into(n, flat, &mut idx);
                let norm: f64 = 1.0
                    + idx
                        .iter()
                        .enumerate()
                        .map(|(d, &i)| ms.get(d).atoms()[i].abs())
                        .sum::<f64>();
                (-c / norm).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Checks the declared linear-growth bound from below.
    pub fn check_growth(&self, ms: &MarginalSequence, k_growth: f64) -> Result<()> {
        let needed = self.growth_constant(ms);
        if needed > k_growth {
            return Err(MotError::InvalidParameter(format!(
                "cost needs growth constant {needed}, declared {k_growth}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;

    fn ms() -> MarginalSequence {
        MarginalSequence::new(vec![
            DiscreteMeasure::dirac(0.0),
            DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn named_forms() {
        let x = [1.0, 3.0, 2.0];
        assert_eq!(CostSpec::SquaredIncrement.eval(&x), Some(5.0));
        assert_eq!(CostSpec::AbsIncrement.eval(&x), Some(3.0));
        assert_eq!(CostSpec::TerminalCall { strike: 1.5 }.eval(&x), Some(0.5));
        assert_eq!(CostSpec::Basket { strike: 1.0 }.eval(&x), Some(1.0));
        assert_eq!(CostSpec::Basket { strike: 3.0 }.eval(&x), Some(0.0));
        assert_eq!(CostSpec::Constant { value: 4.0 }.eval(&x), Some(4.0));
    }

    #[test]
    fn tabulation_layout() {
        let t = CostSpec::SquaredIncrement.tabulate(&ms()).unwrap();
        assert_eq!(t.values(), &[1.0, 1.0]);
        let custom = CostSpec::CustomTable { values: vec![1.0] };
        assert!(matches!(custom.tabulate(&ms()), Err(MotError::ShapeMismatch(_))));
    }

    #[test]
    fn growth_scan() {
        let t = CostTensor::new(&ms(), vec![-4.0, 0.0]).unwrap();
        // path (0, -1): -4 >= -K(1 + 0 + 1)
        assert_eq!(t.growth_constant(&ms()), 2.0);
        assert!(t.check_growth(&ms(), 2.0).is_ok());
        assert!(t.check_growth(&ms(), 1.0).is_err());
    }

    #[test]
    fn json_forms() {
        let c: CostSpec = serde_json::from_str(r#"{"form": "basket", "strike": 1.0}"#).unwrap();
        assert_eq!(c, CostSpec::Basket { strike: 1.0 });
        let c: CostSpec = serde_json::from_str(r#"{"form": "squared_increment"}"#).unwrap();
        assert_eq!(c, CostSpec::SquaredIncrement);
    }
}
