//! Convex and concave envelopes of functions tabulated on a sorted grid.
//!
//! A tabulated function is read as `+∞` off its grid, so its convex envelope
//! is the piecewise-linear interpolant of the lower convex hull of the graph
//! points. The hull is found with a single monotone-chain scan because the grid
//! is already sorted. [`biconjugate_eval`] recomputes the same value through the
//! Legendre–Fenchel biconjugate and exists as an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};

/// Consecutive hull slopes closer than this are treated as collinear and the
/// middle knot is dropped.
pub const SLOPE_TOL: f64 = 1e-12;
/// Relative clamp tolerance for evaluation just outside the hull.
pub const CLAMP_REL_TOL: f64 = 1e-9;

/// A real function tabulated on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(MotError::InvalidGrid("empty grid".into()));
        }
        if grid.len() != values.len() {
            return Err(MotError::InvalidGrid(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(MotError::InvalidGrid("non-finite entry".into()));
        }
        if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(MotError::InvalidGrid(format!(
                "grid not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Vec<f64>) -> Result<Self> {
        let values = vec![0.0; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Piecewise-linear interpolation, clamped like envelope evaluation.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = clamp_into(&self.grid, t)?;
        let k = self.grid.partition_point(|&x| x < t);
        if self.grid[k] == t {
            return Ok(self.values[k]);
        }
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let lambda = (x1 - t) / (x1 - x0);
        Ok(lambda * self.values[k - 1] + (1.0 - lambda) * self.values[k])
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            grid: Vec<f64>,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        GridFunction::new(raw.grid, raw.values).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Convex envelope (largest convex minorant).
    Lower,
    /// Concave envelope (smallest concave majorant).
    Upper,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Lower => 1.0,
            Orientation::Upper => -1.0,
        }
    }
}

/// Hull knots of a tabulated function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    pub hull_grid: Vec<f64>,
    pub hull_values: Vec<f64>,
    /// Position of each knot in the source grid.
    pub indices: Vec<usize>,
    pub orientation: Orientation,
}

/// Two-knot convex-combination representation of an envelope value:
/// `t = λ·x_left + (1 − λ)·x_right`. Indices refer to the source grid; a
/// knot hit has `left == right` and `λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeWeights {
    pub left: usize,
    pub right: usize,
    pub lambda: f64,
}

/// Monotone-chain hull scan. Writes the knot indices into `out`.
pub(crate) fn hull_indices(xs: &[f64], ys: &[f64], orientation: Orientation, out: &mut Vec<usize>) {
    debug_assert_eq!(xs.len(), ys.len());
    let s = orientation.sign();
    out.clear();
    for j in 0..xs.len() {
        while out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            let s1 = (ys[b] - ys[a]) / (xs[b] - xs[a]);
            let s2 = (ys[j] - ys[b]) / (xs[j] - xs[b]);
            if s * (s2 - s1) < SLOPE_TOL {
                out.pop();
            } else {
                break;
            }
        }
        out.push(j);
    }
}

fn clamp_tolerance(lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span > 0.0 {
        CLAMP_REL_TOL * span
    } else {
        // single knot: only rounding-level excursions are accepted
        1e-12 * (1.0 + lo.abs())
    }
}

fn clamp_into(grid: &[f64], t: f64) -> Result<f64> {
    let lo = grid[0];
    let hi = *grid.last().unwrap();
    let eps = clamp_tolerance(lo, hi);
    if t < lo - eps || t > hi + eps || t.is_nan() {
        return Err(MotError::OutOfDomain { t, lo, hi });
    }
    Ok(t.clamp(lo, hi))
}

/// Locates `t` on the knots `hull` (indices into `xs`) and returns the
/// envelope value together with its two-knot weights.
pub(crate) fn locate_on_hull(
    xs: &[f64],
    ys: &[f64],
    hull: &[usize],
    t: f64,
) -> Result<(f64, EnvelopeWeights)> {
    let lo = xs[hull[0]];
    let hi = xs[*hull.last().unwrap()];
    let eps = clamp_tolerance(lo, hi);
    if t < lo - eps || t > hi + eps || t.is_nan() {
        return Err(MotError::OutOfDomain { t, lo, hi });
    }
    let t = t.clamp(lo, hi);
    let k = hull.partition_point(|&j| xs[j] < t);
    let right = hull[k];
    if xs[right] == t {
        return Ok((
            ys[right],
            EnvelopeWeights {
                left: right,
                right,
                lambda: 1.0,
            },
        ));
    }
    let left = hull[k - 1];
    let lambda = (xs[right] - t) / (xs[right] - xs[left]);
    Ok((
        lambda * ys[left] + (1.0 - lambda) * ys[right],
        EnvelopeWeights {
            left,
            right,
            lambda,
        },
    ))
}

fn envelope(f: &GridFunction, orientation: Orientation) -> EnvelopeResult {
    let mut indices = Vec::with_capacity(f.len());
    hull_indices(&f.grid, &f.values, orientation, &mut indices);
    EnvelopeResult {
        hull_grid: indices.iter().map(|&j| f.grid[j]).collect(),
        hull_values: indices.iter().map(|&j| f.values[j]).collect(),
        indices,
        orientation,
    }
}

/// Largest convex function below `f` (lower hull of the graph points).
pub fn convex_envelope(f: &GridFunction) -> EnvelopeResult {
    envelope(f, Orientation::Lower)
}

/// Smallest concave function above `f` (upper hull of the graph points).
pub fn concave_envelope(f: &GridFunction) -> EnvelopeResult {
    envelope(f, Orientation::Upper)
}

impl EnvelopeResult {
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.weights_and_value(t).map(|(v, _)| v)
    }

    /// Envelope weights with indices into the hull knots themselves.
    pub fn weights(&self, t: f64) -> Result<EnvelopeWeights> {
        self.weights_and_value(t).map(|(_, w)| w)
    }

    fn weights_and_value(&self, t: f64) -> Result<(f64, EnvelopeWeights)> {
        let knots: Vec<usize> = (0..self.hull_grid.len()).collect();
        locate_on_hull(&self.hull_grid, &self.hull_values, &knots, t)
    }

    /// Segment slopes between consecutive knots.
    pub fn slopes(&self) -> Vec<f64> {
        self.hull_grid
            .windows(2)
            .zip(self.hull_values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction {
            grid: self.hull_grid.clone(),
            values: self.hull_values.clone(),
        }
    }
}

/// Piecewise-linear evaluation of the envelope at `t`.
pub fn eval_envelope(e: &EnvelopeResult, t: f64) -> Result<f64> {
    e.eval(t)
}

/// Convex-combination weights of the envelope at `t`; `left`/`right` index
/// the hull knots.
pub fn envelope_weights(e: &EnvelopeResult, t: f64) -> Result<EnvelopeWeights> {
    e.weights(t)
}

/// `f**(t) = sup_m { m·t − f*(m) }` with `f*(m) = max_j (x_j·m − f(x_j))`.
///
/// The outer supremum runs over the hull segment slopes, where the concave
/// piecewise-linear map `m ↦ m·t − f*(m)` attains its maximum.
pub fn biconjugate_eval(f: &GridFunction, t: f64) -> Result<f64> {
    let t = clamp_into(&f.grid, t)?;
    let slopes = convex_envelope(f).slopes();
    if slopes.is_empty() {
        return Ok(f.values[0]);
    }
    let conjugate = |m: f64| -> f64 {
        f.grid
            .iter()
            .zip(&f.values)
            .map(|(x, y)| x * m - y)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(slopes
        .iter()
        .map(|&m| m * t - conjugate(m))
        .fold(f64::NEG_INFINITY, f64::max))
}
