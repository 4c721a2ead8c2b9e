//! Finitely supported marginals, lognormal quantization and the convex-order
//! feasibility test.
//!
//! A martingale coupling of `μ_1, …, μ_n` exists iff every consecutive pair is
//! in convex order. For finitely supported measures this reduces to equal means
//! plus pointwise dominance of the potential functions `U_μ(k) = ∫|x − k| dμ`,
//! which only needs to be checked at the atoms (the potentials are piecewise
//! linear with kinks there).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{MotError, Result};

/// Absolute tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;
/// Absolute tolerance when comparing means.
pub const MEAN_TOL: f64 = 1e-9;
/// Absolute slack allowed when comparing potentials.
pub const POTENTIAL_TOL: f64 = 1e-12;

/// Probability measure with finitely many atoms, kept in canonical form:
/// atoms strictly increasing, weights positive, duplicates merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from raw atoms and weights.
    ///
    /// Input order does not matter. Equal atoms are merged and zero-weight
    /// atoms are dropped. Weights must be nonnegative and sum to one within
    /// [`MASS_TOL`].
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(MotError::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(MotError::InvalidMeasure("no atoms".into()));
        }
        if let Some(x) = atoms.iter().find(|x| !x.is_finite()) {
            return Err(MotError::InvalidMeasure(format!("non-finite atom {x}")));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(MotError::InvalidMeasure(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(MotError::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }

        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if w == 0.0 {
                continue;
            }
            match atoms.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    atoms.push(x);
                    weights.push(w);
                }
            }
        }
        if atoms.is_empty() {
            return Err(MotError::InvalidMeasure("all weights are zero".into()));
        }
        Ok(Self { atoms, weights })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Self {
        Self {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    /// Equal-weight measure on the given points.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let mut weights = vec![w; points.len()];
        // exact unit mass regardless of rounding in 1/m
        if let Some(last) = weights.last_mut() {
            *last = 1.0 - w * (points.len() - 1) as f64;
        }
        Self::new(points.to_vec(), weights)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }

    /// `∫ f dμ`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&x, w)| w * f(x))
            .sum()
    }

    /// Smallest and largest atom.
    pub fn support_hull(&self) -> (f64, f64) {
        (self.atoms[0], *self.atoms.last().unwrap())
    }

    /// Splits the atom at `index` into `x − h` and `x + h`, each carrying half
    /// its weight. The result dominates `self` in convex order.
    pub fn mean_preserving_spread(&self, index: usize, h: f64) -> Result<Self> {
        if index >= self.len() {
            return Err(MotError::InvalidParameter(format!(
                "atom index {index} out of range"
            )));
        }
        if !(h.is_finite() && h >= 0.0) {
            return Err(MotError::InvalidParameter(format!("spread {h} must be >= 0")));
        }
        let x = self.atoms[index];
        let w = self.weights[index];
        let mut atoms = self.atoms.clone();
        let mut weights = self.weights.clone();
        atoms[index] = x - h;
        weights[index] = 0.5 * w;
        atoms.push(x + h);
        weights.push(0.5 * w);
        Self::new(atoms, weights)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            atoms: Vec<f64>,
            weights: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        DiscreteMeasure::new(raw.atoms, raw.weights).map_err(serde::de::Error::custom)
    }
}

/// Potential function `U_μ(k) = Σ_j w_j |x_j − k|`.
pub fn potential(mu: &DiscreteMeasure, k: f64) -> f64 {
    mu.expect(|x| (x - k).abs())
}

/// Why a pair failed the convex-order test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderWitness {
    MeanMismatch { left: f64, right: f64 },
    PotentialViolation { k: f64, excess: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderCheck {
    pub ordered: bool,
    pub witness: Option<OrderWitness>,
}

/// Decides `μ ≤_c ν`: equal means and `U_μ ≤ U_ν` at every atom of either
/// measure. The witness reports the first violation found, preferring the
/// largest potential excess.
pub fn convex_order_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> ConvexOrderCheck {
    let (m1, m2) = (mu.mean(), nu.mean());
    if (m1 - m2).abs() > MEAN_TOL {
        return ConvexOrderCheck {
            ordered: false,
            witness: Some(OrderWitness::MeanMismatch {
                left: m1,
                right: m2,
            }),
        };
    }
    let mut worst: Option<(f64, f64)> = None;
    for &k in mu.atoms().iter().chain(nu.atoms()) {
        let excess = potential(mu, k) - potential(nu, k);
        if excess > POTENTIAL_TOL && worst.is_none_or(|(_, e)| excess > e) {
            worst = Some((k, excess));
        }
    }
    match worst {
        None => ConvexOrderCheck {
            ordered: true,
            witness: None,
        },
        Some((k, excess)) => ConvexOrderCheck {
            ordered: false,
            witness: Some(OrderWitness::PotentialViolation { k, excess }),
        },
    }
}

/// Equal-probability conditional-mean quantization of `Lognormal(location, scale)`.
///
/// Slice `k` covers the quantiles `(k/m, (k+1)/m)`; its atom is the conditional
/// mean `m · e^{location + scale²/2} · (Φ(z_{k+1} − scale) − Φ(z_k − scale))`.
/// The slice probabilities telescope, so the quantized mean equals the
/// lognormal mean up to rounding.
pub fn quantize_lognormal(location: f64, scale: f64, m: usize) -> Result<DiscreteMeasure> {
    if m == 0 {
        return Err(MotError::InvalidParameter("m must be positive".into()));
    }
    if !(scale.is_finite() && scale >= 0.0) || !location.is_finite() {
        return Err(MotError::InvalidParameter(format!(
            "lognormal({location}, {scale}) is not a valid law"
        )));
    }
    if scale == 0.0 {
        return Ok(DiscreteMeasure::dirac(location.exp()));
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let z = |k: usize| -> f64 {
        if k == 0 {
            f64::NEG_INFINITY
        } else if k == m {
            f64::INFINITY
        } else {
            std.inverse_cdf(k as f64 / m as f64)
        }
    };
    // Φ(b) − Φ(a), using the upper tail when both points are positive
    let mass = |a: f64, b: f64| -> f64 {
        if a > 0.0 {
            std.sf(a) - std.sf(b)
        } else {
            std.cdf(b) - std.cdf(a)
        }
    };
    let scale_factor = (location + 0.5 * scale * scale).exp();
    let atoms: Vec<f64> = (0..m)
        .map(|k| m as f64 * scale_factor * mass(z(k) - scale, z(k + 1) - scale))
        .collect();
    DiscreteMeasure::uniform(&atoms)
}

/// JSON description of a marginal: explicit atoms/weights or a lognormal
/// quantization request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Lognormal { lognormal: LognormalSpec },
    Explicit(DiscreteMeasure),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalSpec {
    pub location: f64,
    pub scale: f64,
    pub m: usize,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Explicit(m) => Ok(m.clone()),
            MeasureSpec::Lognormal { lognormal: l } => quantize_lognormal(l.location, l.scale, l.m),
        }
    }
}

/// Ordered marginals `μ_1, …, μ_n` with `n ≥ 2`.
///
/// Construction only checks the structure; [`MarginalSequence::validate`]
/// runs the feasibility checks and solvers refuse instances that fail them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalSequence {
    marginals: Vec<DiscreteMeasure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStatus {
    /// Zero-based position of the left marginal of the pair.
    pub index: usize,
    pub convex_order: ConvexOrderCheck,
    pub hull_nested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub passed: bool,
    pub pairs: Vec<PairStatus>,
}

impl SequenceReport {
    pub fn first_failure(&self) -> Option<&PairStatus> {
        self.pairs
            .iter()
            .find(|p| !p.convex_order.ordered || !p.hull_nested)
    }
}

impl MarginalSequence {
    pub fn new(marginals: Vec<DiscreteMeasure>) -> Result<Self> {
        if marginals.len() < 2 {
            return Err(MotError::InvalidParameter(format!(
                "need at least two marginals, got {}",
                marginals.len()
            )));
        }
        Ok(Self { marginals })
    }

    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    pub fn marginals(&self) -> &[DiscreteMeasure] {
        &self.marginals
    }

    pub fn get(&self, i: usize) -> &DiscreteMeasure {
        &self.marginals[i]
    }

    /// Atom counts per marginal (the product-grid shape).
    pub fn shape(&self) -> Vec<usize> {
        self.marginals.iter().map(DiscreteMeasure::len).collect()
    }

    /// Number of paths in the product grid, saturating on overflow.
    pub fn num_paths(&self) -> usize {
        self.marginals
            .iter()
            .fold(1usize, |acc, m| acc.saturating_mul(m.len()))
    }

    /// Convex order and hull nesting for every consecutive pair.
    pub fn validate(&self) -> SequenceReport {
        let pairs: Vec<PairStatus> = self
            .marginals
            .windows(2)
            .enumerate()
            .map(|(index, w)| {
                let (lo1, hi1) = w[0].support_hull();
                let (lo2, hi2) = w[1].support_hull();
                PairStatus {
                    index,
                    convex_order: convex_order_check(&w[0], &w[1]),
                    hull_nested: lo2 <= lo1 && hi1 <= hi2,
                }
            })
            .collect();
        let passed = pairs
            .iter()
            .all(|p| p.convex_order.ordered && p.hull_nested);
        SequenceReport { passed, pairs }
    }

    /// Fails with [`MotError::NotInConvexOrder`] unless [`validate`](Self::validate) passes.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.first_failure() {
            None => Ok(()),
            Some(p) => Err(MotError::NotInConvexOrder(format!(
                "pair ({}, {}): {:?}, hull nested: {}",
                p.index + 1,
                p.index + 2,
                p.convex_order.witness,
                p.hull_nested
            ))),
        }
    }
}
