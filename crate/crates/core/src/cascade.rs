//! Inductive convex-envelope cascade and the dual objective it defines.
//!
//! Starting from `c_n = c − Σ_{i≥2} u_i(x_i)`, each level takes the envelope of
//! the last coordinate's section and evaluates it at the previous coordinate:
//! `c_i(x_1..x_i) = (c_{i+1}(x_1..x_i, ·))**(x_i)`. The dual value is
//! `E_{μ_1}[c_1] + Σ_{i≥2} E_{μ_i}[u_i]`. Three variants are supported:
//!
//! * [`Variant::Lower`]: convex envelopes, lower bound for the infimum problem;
//! * [`Variant::Upper`]: concave envelopes, upper bound for the supremum problem;
//! * [`Variant::Stepwise`]: starts from `c` itself and subtracts `u_{i+1}` from
//!   each section just before taking its convex envelope.
//!
//! Each level tensor is stored on the prefix product grid `supp μ_1 × … × supp μ_i`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostTensor;
use crate::envelope::{hull_indices, locate_on_hull, EnvelopeWeights, GridFunction, Orientation};
use crate::error::{MotError, Result};
use crate::grid::ProductGrid;
use crate::measures::MarginalSequence;
use crate::primal::Coupling;

/// Sections per level above which the level is evaluated in parallel.
const PAR_THRESHOLD: usize = 1 << 14;

/// Slack allowed in the conditional sub-hedging inequality.
pub const SUBHEDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Convex-envelope cascade; lower bound on the minimal price.
    #[serde(rename = "proposition", alias = "lower")]
    Lower,
    /// Concave-envelope cascade; upper bound on the maximal price.
    #[serde(rename = "remark_a", alias = "upper")]
    Upper,
    /// Convex-envelope cascade that subtracts each `u_{i+1}` one level at a time.
    #[serde(rename = "remark_b", alias = "stepwise")]
    Stepwise,
}

impl Variant {
    pub fn orientation(self) -> Orientation {
        match self {
            Variant::Upper => Orientation::Upper,
            Variant::Lower | Variant::Stepwise => Orientation::Lower,
        }
    }

    /// True for the variants that bound the minimal price from below.
    pub fn is_lower(self) -> bool {
        !matches!(self, Variant::Upper)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Lower => "proposition",
            Variant::Upper => "remark_a",
            Variant::Stepwise => "remark_b",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = MotError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposition" | "lower" => Ok(Variant::Lower),
            "remark_a" | "upper" => Ok(Variant::Upper),
            "remark_b" | "stepwise" => Ok(Variant::Stepwise),
            other => Err(MotError::InvalidParameter(format!("unknown variant {other:?}"))),
        }
    }
}

/// The functions `u_2, …, u_n`, each tabulated on the atoms of its marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVariables {
    u: Vec<GridFunction>,
}

impl DualVariables {
    pub fn new(ms: &MarginalSequence, u: Vec<GridFunction>) -> Result<Self> {
        let dv = Self { u };
        dv.check_shape(ms)?;
        Ok(dv)
    }

    pub fn zeros(ms: &MarginalSequence) -> Self {
        let u = ms.marginals()[1..]
            .iter()
            .map(|m| GridFunction::zeros(m.atoms().to_vec()).expect("atoms are a valid grid"))
            .collect();
        Self { u }
    }

    /// Builds `u_i(x) = f(i, x)` for `i = 2..n` (one-based marginal index).
    pub fn from_fn(ms: &MarginalSequence, f: impl Fn(usize, f64) -> f64) -> Self {
        let u = ms.marginals()[1..]
            .iter()
            .enumerate()
            .map(|(k, m)| {
                GridFunction::from_fn(m.atoms().to_vec(), |x| f(k + 2, x))
                    .expect("atoms are a valid grid")
            })
            .collect();
        Self { u }
    }

    /// Checks that `u_i` lives exactly on the atoms of `μ_i`.
    pub fn check_shape(&self, ms: &MarginalSequence) -> Result<()> {
        if self.u.len() + 1 != ms.len() {
            return Err(MotError::ShapeMismatch(format!(
                "{} dual functions for {} marginals",
                self.u.len(),
                ms.len()
            )));
        }
        for (k, (u, m)) in self.u.iter().zip(&ms.marginals()[1..]).enumerate() {
            if u.grid() != m.atoms() {
                return Err(MotError::ShapeMismatch(format!(
                    "u_{} grid does not match the atoms of marginal {}",
                    k + 2,
                    k + 2
                )));
            }
        }
        Ok(())
    }

    pub fn tables(&self) -> &[GridFunction] {
        &self.u
    }

    /// Table of `u_i` for the zero-based marginal index `d ≥ 1`.
    pub fn table(&self, d: usize) -> &GridFunction {
        &self.u[d - 1]
    }

    pub fn table_mut(&mut self, d: usize) -> &mut GridFunction {
        &mut self.u[d - 1]
    }

    /// Total number of tabulated values.
    pub fn dim(&self) -> usize {
        self.u.iter().map(GridFunction::len).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.u.iter().flat_map(|g| g.values().iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for g in &mut self.u {
            for v in g.values_mut() {
                *v = *it.next().expect("flat vector too short");
            }
        }
    }

    /// Subtracts the `μ_i`-mean from every `u_i`. The dual objective is
    /// invariant under this shift.
    pub fn project_zero_mean(&mut self, ms: &MarginalSequence) {
        for (g, m) in self.u.iter_mut().zip(&ms.marginals()[1..]) {
            let mean: f64 = g.values().iter().zip(m.weights()).map(|(v, w)| v * w).sum();
            for v in g.values_mut() {
                *v -= mean;
            }
        }
    }

    /// `Σ_{i≥2} E_{μ_i}[u_i]`.
    pub fn expectation(&self, ms: &MarginalSequence) -> f64 {
        self.u
            .iter()
            .zip(&ms.marginals()[1..])
            .map(|(g, m)| g.values().iter().zip(m.weights()).map(|(v, w)| v * w).sum::<f64>())
            .sum()
    }
}

/// Level tensors `T_n, …, T_1` of one cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeTensors {
    pub variant: Variant,
    grid: ProductGrid,
    /// `levels[i - 1]` holds `T_i`.
    levels: Vec<Vec<f64>>,
}

impl CascadeTensors {
    /// `T_i` for one-based level `i`.
    pub fn level(&self, i: usize) -> &[f64] {
        &self.levels[i - 1]
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }
}

/// `T_n(x) = c(x) − Σ_{i≥2} u_i(x_i)` on the full product grid.
pub fn build_cn(cost: &CostTensor, ms: &MarginalSequence, u: &DualVariables) -> Result<Vec<f64>> {
    if cost.grid().shape() != ms.shape().as_slice() {
        return Err(MotError::ShapeMismatch(
            "cost tensor does not match the marginals".into(),
        ));
    }
    u.check_shape(ms)?;
    let mut t = cost.values().to_vec();
    subtract_duals(&mut t, cost.grid(), u);
    Ok(t)
}

fn subtract_duals(t: &mut [f64], grid: &ProductGrid, u: &DualVariables) {
    let shape = grid.shape();
    for d in 1..shape.len() {
        let inner: usize = shape[d + 1..].iter().product();
        let m = shape[d];
        let vals = u.table(d).values();
        for (block, chunk) in t.chunks_mut(inner).enumerate() {
            let v = vals[block % m];
            for x in chunk {
                *x -= v;
            }
        }
    }
}

/// Per-section scratch space for the hull scan.
#[derive(Default)]
struct Scratch {
    hull: Vec<usize>,
    section: Vec<f64>,
}

/// One descent step: fills `out[p]` (and `weights[p]`) from the sections of
/// `upper` for every prefix `p` of length `level`.
#[allow(clippy::too_many_arguments)]
fn descend_level(
    ms: &MarginalSequence,
    level: usize,
    upper: &[f64],
    shift: Option<&[f64]>,
    orientation: Orientation,
    out: &mut [f64],
    weights: &mut [EnvelopeWeights],
) -> Result<()> {
    let eval_atoms = ms.get(level - 1).atoms();
    let xs = ms.get(level).atoms();
    let m = xs.len();
    let m_eval = eval_atoms.len();

    let work = |scratch: &mut Scratch, p: usize, slot: (&mut f64, &mut EnvelopeWeights)| -> Result<()> {
        let raw = &upper[p * m..(p + 1) * m];
        let ys: &[f64] = match shift {
            Some(s) => {
                scratch.section.clear();
                scratch.section.extend(raw.iter().zip(s).map(|(a, b)| a - b));
                &scratch.section
            }
            None => raw,
        };
        hull_indices(xs, ys, orientation, &mut scratch.hull);
        let (v, w) = locate_on_hull(xs, ys, &scratch.hull, eval_atoms[p % m_eval])?;
        *slot.0 = v;
        *slot.1 = w;
        Ok(())
    };

    if out.len() * m >= PAR_THRESHOLD {
        out.par_iter_mut()
            .zip(weights.par_iter_mut())
            .enumerate()
            .try_for_each_init(Scratch::default, |scratch, (p, slot)| work(scratch, p, slot))
    } else {
        let mut scratch = Scratch::default();
        out.iter_mut()
            .zip(weights.iter_mut())
            .enumerate()
            .try_for_each(|(p, slot)| work(&mut scratch, p, slot))
    }
}

/// Reusable evaluator of the dual objective and its supergradient.
///
/// Holds the level tensors and envelope weights so that repeated evaluations
/// (as in the optimizer) do not reallocate.
pub struct DualEvaluator<'a> {
    cost: &'a CostTensor,
    ms: &'a MarginalSequence,
    variant: Variant,
    levels: Vec<Vec<f64>>,
    weights: Vec<Vec<EnvelopeWeights>>,
    mass: Vec<f64>,
    next_mass: Vec<f64>,
}

impl<'a> DualEvaluator<'a> {
    pub fn new(variant: Variant, cost: &'a CostTensor, ms: &'a MarginalSequence) -> Result<Self> {
        if cost.grid().shape() != ms.shape().as_slice() {
            return Err(MotError::ShapeMismatch(
                "cost tensor does not match the marginals".into(),
            ));
        }
        let grid = cost.grid();
        let n = ms.len();
        let levels = (1..=n).map(|i| vec![0.0; grid.level_len(i)]).collect();
        let blank = EnvelopeWeights {
            left: 0,
            right: 0,
            lambda: 1.0,
        };
        let weights = (1..n).map(|i| vec![blank; grid.level_len(i)]).collect();
        Ok(Self {
            cost,
            ms,
            variant,
            levels,
            weights,
            mass: Vec::new(),
            next_mass: Vec::new(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Runs the cascade for `u`, filling all level tensors.
    fn run(&mut self, u: &DualVariables) -> Result<()> {
        u.check_shape(self.ms)?;
        let n = self.ms.len();
        let top = &mut self.levels[n - 1];
        top.copy_from_slice(self.cost.values());
        if self.variant != Variant::Stepwise {
            subtract_duals(top, self.cost.grid(), u);
        }
        let orientation = self.variant.orientation();
        for level in (1..n).rev() {
            let (lower, upper) = self.levels.split_at_mut(level);
            let shift = match self.variant {
                Variant::Stepwise => Some(u.table(level).values()),
                _ => None,
            };
            descend_level(
                self.ms,
                level,
                &upper[0],
                shift,
                orientation,
                &mut lower[level - 1],
                &mut self.weights[level - 1],
            )?;
        }
        Ok(())
    }

    fn value_from_levels(&self, u: &DualVariables) -> f64 {
        let mu1 = self.ms.get(0);
        let head: f64 = self.levels[0]
            .iter()
            .zip(mu1.weights())
            .map(|(t, w)| t * w)
            .sum();
        head + u.expectation(self.ms)
    }

    pub fn value(&mut self, u: &DualVariables) -> Result<f64> {
        self.run(u)?;
        Ok(self.value_from_levels(u))
    }

    /// Dual value and one element of its super- (lower variants) or
    /// sub-differential (upper variant), as tables on the atoms of `μ_2..μ_n`.
    ///
    /// The gradient pushes the `μ_1` mass down the cascade through the
    /// two-knot envelope weights; `g_i(a) = μ_i(a) − (pushed mass with x_i = a)`.
    pub fn value_and_gradient(&mut self, u: &DualVariables) -> Result<(f64, Vec<Vec<f64>>)> {
        self.run(u)?;
        let value = self.value_from_levels(u);
        let n = self.ms.len();
        self.mass.clear();
        self.mass.extend_from_slice(self.ms.get(0).weights());
        let mut grad = Vec::with_capacity(n - 1);
        for level in 1..n {
            let m = self.ms.get(level).len();
            self.next_mass.clear();
            self.next_mass.resize(self.mass.len() * m, 0.0);
            for (p, (&w, &mass)) in self.weights[level - 1].iter().zip(&self.mass).enumerate() {
                self.next_mass[p * m + w.left] += w.lambda * mass;
                self.next_mass[p * m + w.right] += (1.0 - w.lambda) * mass;
            }
            let mut g = self.ms.get(level).weights().to_vec();
            for (q, &mass) in self.next_mass.iter().enumerate() {
                g[q % m] -= mass;
            }
            grad.push(g);
            std::mem::swap(&mut self.mass, &mut self.next_mass);
        }
        Ok((value, grad))
    }

    /// Snapshot of the level tensors from the last evaluation.
    pub fn tensors(&self) -> CascadeTensors {
        CascadeTensors {
            variant: self.variant,
            grid: self.cost.grid().clone(),
            levels: self.levels.clone(),
        }
    }

    /// Mass distribution on full paths implied by the last gradient
    /// evaluation: a martingale coupling with first marginal `μ_1`.
    pub fn pushed_mass(&self) -> &[f64] {
        &self.mass
    }
}

/// Descends from a prebuilt `T_n` with convex ([`Variant::Lower`]) or concave
/// ([`Variant::Upper`]) envelopes.
pub fn cascade_down(tn: Vec<f64>, ms: &MarginalSequence, variant: Variant) -> Result<CascadeTensors> {
    if variant == Variant::Stepwise {
        return Err(MotError::InvalidParameter(
            "the stepwise cascade starts from the cost; use cascade_down_tilde".into(),
        ));
    }
    let grid = ProductGrid::new(ms.shape());
    if tn.len() != grid.num_paths() {
        return Err(MotError::ShapeMismatch(format!(
            "T_n has {} entries, product grid has {}",
            tn.len(),
            grid.num_paths()
        )));
    }
    let n = ms.len();
    let mut levels: Vec<Vec<f64>> = (1..n).map(|i| vec![0.0; grid.level_len(i)]).collect();
    levels.push(tn);
    let orientation = variant.orientation();
    for level in (1..n).rev() {
        let mut weights = vec![
            EnvelopeWeights {
                left: 0,
                right: 0,
                lambda: 1.0
            };
            grid.level_len(level)
        ];
        let (lower, upper) = levels.split_at_mut(level);
        descend_level(ms, level, &upper[0], None, orientation, &mut lower[level - 1], &mut weights)?;
    }
    Ok(CascadeTensors {
        variant,
        grid,
        levels,
    })
}

/// Stepwise cascade: `T_n = c`, and `u_{i+1}` is subtracted from each section
/// before its convex envelope is taken.
pub fn cascade_down_tilde(
    cost: &CostTensor,
    ms: &MarginalSequence,
    u: &DualVariables,
) -> Result<CascadeTensors> {
    let mut ev = DualEvaluator::new(Variant::Stepwise, cost, ms)?;
    ev.run(u)?;
    Ok(ev.tensors())
}

/// `E_{μ_1}[T_1] + Σ_{i≥2} E_{μ_i}[u_i]` for the chosen variant.
pub fn dual_objective(
    variant: Variant,
    cost: &CostTensor,
    ms: &MarginalSequence,
    u: &DualVariables,
) -> Result<f64> {
    DualEvaluator::new(variant, cost, ms)?.value(u)
}

/// Per-atom gradient tables for `u_2, …, u_n`.
pub fn dual_subgradient(
    variant: Variant,
    cost: &CostTensor,
    ms: &MarginalSequence,
    u: &DualVariables,
) -> Result<Vec<Vec<f64>>> {
    DualEvaluator::new(variant, cost, ms)?
        .value_and_gradient(u)
        .map(|(_, g)| g)
}

/// Dual functions together with the value they attain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub variant: Variant,
    #[serde(rename = "u")]
    pub dual_variables: DualVariables,
    pub dual_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_vs_primal: Option<f64>,
}

impl DualCertificate {
    /// Re-evaluates the dual objective for the stored functions.
    pub fn recompute(&self, cost: &CostTensor, ms: &MarginalSequence) -> Result<f64> {
        dual_objective(self.variant, cost, ms, &self.dual_variables)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| MotError::Input(format!("certificate: {e}")))
    }
}

/// Conditional sub-hedging check at one atom of `μ_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubhedgeAtom {
    pub atom: f64,
    pub mass: f64,
    /// `E_Q[c_1(S_1) + Σ u_i(S_i) | S_1 = atom]`
    pub hedge: f64,
    /// `E_Q[c(S) | S_1 = atom]`
    pub payoff: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubhedgeReport {
    pub atoms: Vec<SubhedgeAtom>,
    pub min_slack: f64,
    pub passed: bool,
}

/// Checks `E_Q[c_1(S_1) + Σ u_i(S_i) | S_1] ≤ E_Q[c(S) | S_1]` at every atom of
/// `μ_1` carrying positive mass under `q`.
pub fn verify_subhedge(
    cost: &CostTensor,
    ms: &MarginalSequence,
    u: &DualVariables,
    q: &Coupling,
) -> Result<SubhedgeReport> {
    q.validate(ms)?;
    let mut ev = DualEvaluator::new(Variant::Lower, cost, ms)?;
    ev.run(u)?;
    let c1 = &ev.levels[0];
    let grid = cost.grid();
    let n = ms.len();
    let tail = grid.num_paths() / grid.shape()[0];
    let mut idx = vec![0; n];
    let mut atoms = Vec::new();
    for (j, &x1) in ms.get(0).atoms().iter().enumerate() {
        let mut mass = 0.0;
        let mut hedge = 0.0;
        let mut payoff = 0.0;
        for flat in j * tail..(j + 1) * tail {
            let w = q.mass()[flat];
            if w == 0.0 {
                continue;
            }
            grid.unravel_into(n, flat, &mut idx);
            let static_part: f64 = (1..n).map(|d| u.table(d).values()[idx[d]]).sum();
            mass += w;
            hedge += w * static_part;
            payoff += w * cost.values()[flat];
        }
        if mass <= 1e-12 {
            continue;
        }
        let hedge = c1[j] + hedge / mass;
        let payoff = payoff / mass;
        atoms.push(SubhedgeAtom {
            atom: x1,
            mass,
            hedge,
            payoff,
            slack: payoff - hedge,
        });
    }
    let min_slack = atoms.iter().map(|a| a.slack).fold(f64::INFINITY, f64::min);
    Ok(SubhedgeReport {
        passed: min_slack >= -SUBHEDGE_TOL,
        atoms,
        min_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::measures::DiscreteMeasure;

    fn sym(a: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![-a, a], vec![0.5, 0.5]).unwrap()
    }

    fn unique_coupling() -> MarginalSequence {
        MarginalSequence::new(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]).unwrap()
    }

    fn three_quarter() -> MarginalSequence {
        MarginalSequence::new(vec![sym(1.0), sym(2.0)]).unwrap()
    }

    #[test]
    fn build_cn_examples() {
        let ms = unique_coupling();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        assert_eq!(build_cn(&cost, &ms, &DualVariables::zeros(&ms)).unwrap(), cost.values());

        let u = DualVariables::from_fn(&ms, |_, y| y);
        assert_eq!(build_cn(&cost, &ms, &u).unwrap(), vec![2.0, 0.0]);

        let shifted = DualVariables::from_fn(&ms, |_, y| y + 0.75);
        let t = build_cn(&cost, &ms, &shifted).unwrap();
        assert_eq!(t, vec![1.25, -0.75]);
    }

    #[test]
    fn cascade_down_examples() {
        let ms = unique_coupling();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let t = cascade_down(cost.values().to_vec(), &ms, Variant::Lower).unwrap();
        assert_eq!(t.level(1), &[1.0]);

        let ms = three_quarter();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let t = cascade_down(cost.values().to_vec(), &ms, Variant::Lower).unwrap();
        assert_eq!(t.level(1), &[3.0, 3.0]);
    }

    #[test]
    fn knot_hit_returns_section_value() {
        // section y -> (y - x)^2 is convex; x = 0 is an atom of the next marginal
        let ms = MarginalSequence::new(vec![
            DiscreteMeasure::dirac(0.0),
            DiscreteMeasure::new(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap(),
        ])
        .unwrap();
        let cost = CostTensor::from_fn(&ms, |x| (x[1] - x[0]).powi(2) + 5.0 * x[1]);
        let t = cascade_down(cost.values().to_vec(), &ms, Variant::Lower).unwrap();
        assert_eq!(t.level(1), &[cost.values()[1]]);
    }

    #[test]
    fn dual_objective_examples() {
        let ms = unique_coupling();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let zero = DualVariables::zeros(&ms);
        assert_eq!(dual_objective(Variant::Lower, &cost, &ms, &zero).unwrap(), 1.0);

        let ms = three_quarter();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let zero = DualVariables::zeros(&ms);
        assert_eq!(dual_objective(Variant::Lower, &cost, &ms, &zero).unwrap(), 3.0);

        let u = DualVariables::from_fn(&ms, |_, y| 0.3 * y * y - y);
        let base = dual_objective(Variant::Lower, &cost, &ms, &u).unwrap();
        let kappa = DualVariables::from_fn(&ms, |_, y| 0.3 * y * y - y + 2.5);
        let shifted = dual_objective(Variant::Lower, &cost, &ms, &kappa).unwrap();
        assert!((base - shifted).abs() < 1e-12);
    }

    #[test]
    fn stepwise_matches_nested_at_two_marginals() {
        let ms = three_quarter();
        let cost = CostSpec::AbsIncrement.tabulate(&ms).unwrap();
        let u = DualVariables::from_fn(&ms, |_, y| y.sin());
        let a = cascade_down(build_cn(&cost, &ms, &u).unwrap(), &ms, Variant::Lower).unwrap();
        let b = cascade_down_tilde(&cost, &ms, &u).unwrap();
        assert_eq!(a.level(1), b.level(1));
        assert_eq!(b.level(2), cost.values());
    }

    #[test]
    fn gradient_sums_to_zero() {
        let ms = three_quarter();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let u = DualVariables::from_fn(&ms, |_, y| 0.1 * y * y * y);
        for variant in [Variant::Lower, Variant::Upper, Variant::Stepwise] {
            let g = dual_subgradient(variant, &cost, &ms, &u).unwrap();
            for gi in g {
                assert!(gi.iter().sum::<f64>().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn shape_errors() {
        let ms = three_quarter();
        let other = unique_coupling();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let u = DualVariables::zeros(&other);
        assert!(matches!(
            dual_objective(Variant::Lower, &cost, &ms, &u),
            Err(MotError::ShapeMismatch(_))
        ));
        assert!(cascade_down(vec![0.0; 3], &ms, Variant::Lower).is_err());
        assert!(cascade_down(vec![0.0; 4], &ms, Variant::Stepwise).is_err());
    }

    #[test]
    fn unnested_supports_are_out_of_domain() {
        let ms = MarginalSequence::new(vec![sym(2.0), sym(1.0)]).unwrap();
        let cost = CostSpec::SquaredIncrement.tabulate(&ms).unwrap();
        let err = dual_objective(Variant::Lower, &cost, &ms, &DualVariables::zeros(&ms));
        assert!(matches!(err, Err(MotError::OutOfDomain { .. })));
    }

    #[test]
    fn variant_names() {
        for v in [Variant::Lower, Variant::Upper, Variant::Stepwise] {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<Variant>(&json).unwrap(), v);
        }
        assert_eq!("stepwise".parse::<Variant>().unwrap(), Variant::Stepwise);
        assert!("other".parse::<Variant>().is_err());
    }

    #[test]
    fn certificate_json_shape() {
        let ms = unique_coupling();
        let cert = DualCertificate {
            variant: Variant::Lower,
            dual_variables: DualVariables::from_fn(&ms, |_, y| y),
            dual_value: 1.0,
            gap_vs_primal: None,
        };
        let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        assert_eq!(v["variant"], "proposition");
        assert_eq!(v["u"][0]["grid"], serde_json::json!([-1.0, 1.0]));
        assert_eq!(v["u"][0]["values"], serde_json::json!([-1.0, 1.0]));
        assert_eq!(v["dual_value"], 1.0);
        assert_eq!(DualCertificate::from_json(&cert.to_json()).unwrap(), cert);
    }
}
