//! The discretized primal problem: optimize `Σ q·c` over martingale couplings
//! `q` of `μ_1, …, μ_n` on the product grid, as a linear program.
//!
//! Constraint rows come in two blocks:
//!
//! * marginal rows `(i, a)`: `Σ_{x_i = a} q(x) = μ_i(a)`;
//! * martingale rows `(i, x_1..x_i)` for `i < n`: `Σ_{tails} q(x)(x_{i+1} − x_i) = 0`.
//!
//! The marginal blocks repeat the unit-mass condition `n` times; the simplex
//! copes with the redundant rows. The LP row duals are exactly a semi-static
//! hedge `(u_i, Δ_j)`, which [`semistatic_value_check`] consumes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cost::CostTensor;
use crate::error::{MotError, Result};
use crate::grid::ProductGrid;
use crate::lp::{self, LinearProgram, LpStatus, SimplexOptions};
use crate::measures::MarginalSequence;
use crate::vertex;

/// Default cap on the number of LP variables (product-grid paths).
pub const DEFAULT_MAX_VARIABLES: usize = 200_000;
/// Path cap for [`brute_force_value`].
pub const BRUTE_FORCE_MAX_PATHS: usize = 64;
/// Ray cap of the first, cheap enumeration attempts in [`brute_force_value`].
const BRUTE_FORCE_FIRST_CAP: usize = 20_000;
/// Tolerance on `Ψ ≤ c` in [`semistatic_value_check`].
pub const HEDGE_TOL: f64 = 1e-9;

/// Probability mass per path of the product grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    grid: ProductGrid,
    q: Vec<f64>,
}

impl Coupling {
    pub fn new(ms: &MarginalSequence, q: Vec<f64>) -> Result<Self> {
        let grid = ProductGrid::new(ms.shape());
        if q.len() != grid.num_paths() {
            return Err(MotError::ShapeMismatch(format!(
                "coupling has {} entries, product grid has {}",
                q.len(),
                grid.num_paths()
            )));
        }
        Ok(Self { grid, q })
    }

    pub fn mass(&self) -> &[f64] {
        &self.q
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    /// `Σ_x q(x) f(x)` over all paths.
    pub fn expect(&self, values: &[f64]) -> f64 {
        self.q.iter().zip(values).map(|(q, v)| q * v).sum()
    }

    /// Marginal of coordinate `d` (zero-based).
    pub fn marginal(&self, d: usize) -> Vec<f64> {
        let shape = self.grid.shape();
        let inner: usize = shape[d + 1..].iter().product();
        let mut out = vec![0.0; shape[d]];
        for (block, chunk) in self.q.chunks(inner).enumerate() {
            out[block % shape[d]] += chunk.iter().sum::<f64>();
        }
        out
    }

    /// Checks nonnegativity, total mass, marginals and the martingale property.
    pub fn validate(&self, ms: &MarginalSequence) -> Result<()> {
        if self.grid.shape() != ms.shape().as_slice() {
            return Err(MotError::InvalidCoupling("shape does not match marginals".into()));
        }
        if let Some(v) = self.q.iter().find(|v| !(v.is_finite() && **v >= -1e-12)) {
            return Err(MotError::InvalidCoupling(format!("negative or non-finite mass {v}")));
        }
        let total: f64 = self.q.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(MotError::InvalidCoupling(format!("total mass {total}")));
        }
        for d in 0..ms.len() {
            for (a, (got, want)) in self.marginal(d).iter().zip(ms.get(d).weights()).enumerate() {
                if (got - want).abs() > 1e-8 {
                    return Err(MotError::InvalidCoupling(format!(
                        "marginal {} atom {a}: {got} vs {want}",
                        d + 1
                    )));
                }
            }
        }
        let span = grid_span(ms);
        let shape = self.grid.shape();
        for d in 0..ms.len() - 1 {
            let tail: usize = shape[d + 1..].iter().product();
            let step: usize = shape[d + 2..].iter().product();
            let next = ms.get(d + 1).atoms();
            let here = ms.get(d).atoms();
            for (p, block) in self.q.chunks(tail).enumerate() {
                let x = here[p % shape[d]];
                let mass: f64 = block.iter().sum();
                if mass <= 1e-12 {
                    continue;
                }
                let drift: f64 = block
                    .chunks(step)
                    .zip(next)
                    .map(|(c, &y)| c.iter().sum::<f64>() * (y - x))
                    .sum();
                if drift.abs() > (1e-8 * mass * span).max(1e-14) {
                    return Err(MotError::InvalidCoupling(format!(
                        "martingale drift {drift:e} at level {} prefix {p}",
                        d + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV with one row `x_1,…,x_n,q` per positive-mass path.
    pub fn write_csv<W: Write>(&self, ms: &MarginalSequence, out: W) -> Result<()> {
        let n = ms.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        header.push("q".into());
        let io = |e: csv::Error| MotError::Input(format!("csv: {e}"));
        w.write_record(&header).map_err(io)?;
        let mut idx = vec![0; n];
        for (flat, &q) in self.q.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            self.grid.unravel_into(n, flat, &mut idx);
            let mut row: Vec<String> = idx
                .iter()
                .enumerate()
                .map(|(d, &i)| ms.get(d).atoms()[i].to_string())
                .collect();
            row.push(q.to_string());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| MotError::Input(format!("csv: {e}")))?;
        Ok(())
    }
}

fn grid_span(ms: &MarginalSequence) -> f64 {
    let lo = ms.marginals().iter().map(|m| m.support_hull().0).fold(f64::INFINITY, f64::min);
    let hi = ms.marginals().iter().map(|m| m.support_hull().1).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Static positions `u_1..u_n` (on the atoms of each marginal) and dynamic
/// positions `Δ_1..Δ_{n−1}` (`Δ_j` on the prefix grid of length `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiStaticHedge {
    pub u: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
}

impl SemiStaticHedge {
    /// `Σ_i u_i(x_i) + Σ_j Δ_j(x_1..x_j)(x_{j+1} − x_j)` at a path index.
    pub fn eval(&self, ms: &MarginalSequence, grid: &ProductGrid, idx: &[usize]) -> f64 {
        let n = ms.len();
        let mut v: f64 = (0..n).map(|d| self.u[d][idx[d]]).sum();
        let mut prefix = 0;
        for j in 0..n - 1 {
            prefix = prefix * grid.shape()[j] + idx[j];
            let x = ms.get(j).atoms()[idx[j]];
            let y = ms.get(j + 1).atoms()[idx[j + 1]];
            v += self.delta[j][prefix] * (y - x);
        }
        v
    }

    /// `Σ_i E_{μ_i}[u_i]`.
    pub fn static_value(&self, ms: &MarginalSequence) -> f64 {
        self.u
            .iter()
            .zip(ms.marginals())
            .map(|(u, m)| u.iter().zip(m.weights()).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpStats {
    pub rows: usize,
    pub columns: usize,
    pub pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub status: PrimalStatus,
    /// Optimal value; `NaN` unless `status` is optimal.
    pub value: f64,
    pub coupling: Option<Coupling>,
    /// LP duals as a semi-static hedge: a sub-hedge (`Ψ ≤ c`) for the
    /// minimization, a super-hedge (`Ψ ≥ c`) for the maximization.
    pub hedge: Option<SemiStaticHedge>,
    pub stats: LpStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalOptions {
    pub max_variables: usize,
    pub simplex: SimplexOptions,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        Self {
            max_variables: DEFAULT_MAX_VARIABLES,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Row layout of the assembled program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowLayout {
    /// First row of marginal block `i`.
    pub marginal_offsets: Vec<usize>,
    /// First row of martingale block `i` (prefixes of length `i + 1`).
    pub martingale_offsets: Vec<usize>,
    pub marginal_rows: usize,
    pub martingale_rows: usize,
}

/// The assembled LP together with its row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MotProgram {
    pub lp: LinearProgram,
    pub layout: RowLayout,
}

/// Builds the coupling LP for `min Σ q·c`.
pub fn assemble_lp(cost: &CostTensor, ms: &MarginalSequence, max_variables: usize) -> Result<MotProgram> {
    let paths = ms.num_paths();
    if paths > max_variables {
        return Err(MotError::SizeCap {
            what: "LP variables",
            actual: paths,
            cap: max_variables,
        });
    }
    if cost.grid().shape() != ms.shape().as_slice() {
        return Err(MotError::ShapeMismatch("cost tensor does not match the marginals".into()));
    }
    let grid = ProductGrid::new(ms.shape());
    let n = ms.len();
    let shape = grid.shape();

    let mut marginal_offsets = Vec::with_capacity(n);
    let mut rows = 0;
    for &m in shape {
        marginal_offsets.push(rows);
        rows += m;
    }
    let marginal_rows = rows;
    let mut martingale_offsets = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        martingale_offsets.push(rows);
        rows += grid.level_len(i + 1);
    }
    let martingale_rows = rows - marginal_rows;

    let mut a = vec![0.0; rows * paths];
    let mut b = vec![0.0; rows];
    for (d, m) in ms.marginals().iter().enumerate() {
        b[marginal_offsets[d]..marginal_offsets[d] + m.len()].copy_from_slice(m.weights());
    }
    let mut idx = vec![0; n];
    for flat in 0..paths {
        grid.unravel_into(n, flat, &mut idx);
        for d in 0..n {
            a[(marginal_offsets[d] + idx[d]) * paths + flat] = 1.0;
        }
        let mut prefix = 0;
        for i in 0..n - 1 {
            prefix = prefix * shape[i] + idx[i];
            let step = ms.get(i + 1).atoms()[idx[i + 1]] - ms.get(i).atoms()[idx[i]];
            a[(martingale_offsets[i] + prefix) * paths + flat] = step;
        }
    }
    Ok(MotProgram {
        lp: LinearProgram::new(rows, paths, a, b, cost.values().to_vec()),
        layout: RowLayout {
            marginal_offsets,
            martingale_offsets,
            marginal_rows,
            martingale_rows,
        },
    })
}

fn hedge_from_duals(ms: &MarginalSequence, layout: &RowLayout, y: &[f64], sign: f64) -> SemiStaticHedge {
    let grid = ProductGrid::new(ms.shape());
    let u = ms
        .marginals()
        .iter()
        .enumerate()
        .map(|(d, m)| {
            let o = layout.marginal_offsets[d];
            y[o..o + m.len()].iter().map(|v| sign * v).collect()
        })
        .collect();
    let delta = (0..ms.len() - 1)
        .map(|i| {
            let o = layout.martingale_offsets[i];
            y[o..o + grid.level_len(i + 1)].iter().map(|v| sign * v).collect()
        })
        .collect();
    SemiStaticHedge { u, delta }
}

fn solve_with_sign(cost: &CostTensor, ms: &MarginalSequence, opts: &PrimalOptions, sign: f64) -> Result<PrimalSolution> {
    let program = assemble_lp(cost, ms, opts.max_variables)?;
    let lp = if sign < 0.0 {
        program.lp.with_objective(cost.values().iter().map(|v| -v).collect())
    } else {
        program.lp.clone()
    };
    let sol = lp::solve(&lp, &opts.simplex);
    let stats = LpStats {
        rows: lp.rows(),
        columns: lp.cols(),
        pivots: sol.pivots,
    };
    let status = match sol.status {
        LpStatus::Optimal => PrimalStatus::Optimal,
        LpStatus::Infeasible => PrimalStatus::Infeasible,
        LpStatus::IterationLimit => PrimalStatus::IterationLimit,
        // the feasible set is bounded by the unit-mass rows
        LpStatus::Unbounded => unreachable!("coupling polytope is bounded"),
    };
    if status != PrimalStatus::Optimal {
        return Ok(PrimalSolution {
            status,
            value: f64::NAN,
            coupling: None,
            hedge: None,
            stats,
        });
    }
    let coupling = Coupling::new(ms, sol.x)?;
    let value = coupling.expect(cost.values());
    Ok(PrimalSolution {
        status,
        value,
        hedge: Some(hedge_from_duals(ms, &program.layout, &sol.duals, sign)),
        coupling: Some(coupling),
        stats,
    })
}

/// Minimal expected cost over martingale couplings.
pub fn solve_primal(cost: &CostTensor, ms: &MarginalSequence, opts: &PrimalOptions) -> Result<PrimalSolution> {
    solve_with_sign(cost, ms, opts, 1.0)
}

/// Maximal expected cost over martingale couplings.
pub fn solve_primal_max(cost: &CostTensor, ms: &MarginalSequence, opts: &PrimalOptions) -> Result<PrimalSolution> {
    solve_with_sign(cost, ms, opts, -1.0)
}

/// Minimal price by exhaustive vertex enumeration, independent of the
/// simplex code: the minimum of `Σ q·c` over every vertex of the coupling
/// polytope, or equivalently the maximum of the dual objective over every
/// vertex of the dual region. Limited to [`BRUTE_FORCE_MAX_PATHS`] paths.
pub fn brute_force_value(cost: &CostTensor, ms: &MarginalSequence) -> Result<f64> {
    let paths = ms.num_paths();
    if paths > BRUTE_FORCE_MAX_PATHS {
        return Err(MotError::SizeCap {
            what: "brute-force paths",
            actual: paths,
            cap: BRUTE_FORCE_MAX_PATHS,
        });
    }
    let program = assemble_lp(cost, ms, BRUTE_FORCE_MAX_PATHS)?;
    let lp = &program.lp;
    // the primal and dual polytopes differ wildly in size from one instance
    // to the next, so try each with a small cap before the full one
    let mut last = None;
    for cap in [BRUTE_FORCE_FIRST_CAP, vertex::MAX_RAYS] {
        match vertex::enumerate_vertices_capped(lp, cap) {
            Ok(vertices) => {
                return vertices
                    .iter()
                    .map(|x| x.iter().zip(cost.values()).map(|(q, c)| q * c).sum::<f64>())
                    .min_by(f64::total_cmp)
                    .ok_or(MotError::Infeasible);
            }
            Err(MotError::SizeCap { .. }) => {}
            Err(e) => return Err(e),
        }
        match vertex::enumerate_dual_vertices(lp, cap) {
            Ok(dual) => return dual.max_value(lp).ok_or(MotError::Infeasible),
            Err(e @ MotError::SizeCap { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Verifies `Ψ ≤ c` on every path (within [`HEDGE_TOL`]) and returns the
/// static hedge cost `Σ_i E_{μ_i}[u_i]`, a lower bound on the minimal price.
pub fn semistatic_value_check(
    cost: &CostTensor,
    ms: &MarginalSequence,
    hedge: &SemiStaticHedge,
) -> Result<f64> {
    let grid = ProductGrid::new(ms.shape());
    let n = ms.len();
    if hedge.u.len() != n || hedge.delta.len() != n - 1 {
        return Err(MotError::ShapeMismatch("hedge has the wrong number of tables".into()));
    }
    for d in 0..n {
        if hedge.u[d].len() != ms.get(d).len() {
            return Err(MotError::ShapeMismatch(format!("u_{} has the wrong length", d + 1)));
        }
    }
    for j in 0..n - 1 {
        if hedge.delta[j].len() != grid.level_len(j + 1) {
            return Err(MotError::ShapeMismatch(format!("Δ_{} has the wrong length", j + 1)));
        }
    }
    let mut idx = vec![0; n];
    for (flat, &c) in cost.values().iter().enumerate() {
        grid.unravel_into(n, flat, &mut idx);
        let excess = hedge.eval(ms, &grid, &idx) - c;
        if excess > HEDGE_TOL {
            return Err(MotError::HedgeViolation {
                path: idx.clone(),
                excess,
            });
        }
    }
    Ok(hedge.static_value(ms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostSpec;
    use crate::measures::DiscreteMeasure;

    fn sym(a: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![-a, a], vec![0.5, 0.5]).unwrap()
    }

    fn ms(v: Vec<DiscreteMeasure>) -> MarginalSequence {
        MarginalSequence::new(v).unwrap()
    }

    #[test]
    fn row_counts() {
        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let p = assemble_lp(&cost, &m, 100).unwrap();
        assert_eq!(p.lp.cols(), 2);
        assert_eq!(p.layout.marginal_rows, 3);
        assert_eq!(p.layout.martingale_rows, 1);

        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0), sym(2.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let p = assemble_lp(&cost, &m, 100).unwrap();
        assert_eq!(p.lp.cols(), 4);
        assert_eq!(p.layout.marginal_rows, 5);
        assert_eq!(p.layout.martingale_rows, 3);
        assert!(matches!(assemble_lp(&cost, &m, 3), Err(MotError::SizeCap { .. })));
    }

    #[test]
    fn unique_coupling() {
        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let sol = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        assert_eq!(sol.status, PrimalStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
        let q = sol.coupling.unwrap();
        assert!((q.mass()[0] - 0.5).abs() < 1e-12 && (q.mass()[1] - 0.5).abs() < 1e-12);
        assert!((brute_force_value(&cost, &m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_quarter_transitions() {
        let m = ms(vec![sym(1.0), sym(2.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let sol = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-12);
        let q = sol.coupling.unwrap();
        for (got, want) in q.mass().iter().zip([0.375, 0.125, 0.125, 0.375]) {
            assert!((got - want).abs() < 1e-12);
        }
        q.validate(&m).unwrap();
    }

    #[test]
    fn infeasible_order() {
        let m = ms(vec![sym(1.0), DiscreteMeasure::dirac(0.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let sol = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        assert_eq!(sol.status, PrimalStatus::Infeasible);
        assert!(sol.coupling.is_none());
        assert!(matches!(brute_force_value(&cost, &m), Err(MotError::Infeasible)));
    }

    #[test]
    fn lp_duals_are_a_tight_subhedge() {
        let m = ms(vec![sym(1.0), sym(2.0), sym(3.0)]);
        let cost = CostSpec::AbsIncrement.tabulate(&m).unwrap();
        let sol = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        let v = semistatic_value_check(&cost, &m, sol.hedge.as_ref().unwrap()).unwrap();
        assert!((v - sol.value).abs() < 1e-8);
    }

    #[test]
    fn zero_hedge_and_violations() {
        let m = ms(vec![sym(1.0), sym(2.0)]);
        let cost = CostSpec::SquaredIncrement.tabulate(&m).unwrap();
        let zero = SemiStaticHedge {
            u: vec![vec![0.0; 2], vec![0.0; 2]],
            delta: vec![vec![0.0; 2]],
        };
        assert_eq!(semistatic_value_check(&cost, &m, &zero).unwrap(), 0.0);
        let too_big = SemiStaticHedge {
            u: vec![vec![5.0; 2], vec![0.0; 2]],
            delta: vec![vec![0.0; 2]],
        };
        assert!(matches!(
            semistatic_value_check(&cost, &m, &too_big),
            Err(MotError::HedgeViolation { .. })
        ));
    }

    #[test]
    fn three_period_variance() {
        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0), sym(2.0)]);
        let cost = CostTensor::from_fn(&m, |x| (x[2] - x[1]).powi(2));
        let sol = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        assert!((sol.value - 3.0).abs() < 1e-12);
        let max = solve_primal_max(&cost, &m, &PrimalOptions::default()).unwrap();
        assert!((max.value - 3.0).abs() < 1e-12);
        assert!((brute_force_value(&cost, &m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_and_zero_costs() {
        let m = ms(vec![sym(1.0), DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0]).unwrap()]);
        let kappa = CostSpec::Constant { value: 2.5 }.tabulate(&m).unwrap();
        for sol in [
            solve_primal(&kappa, &m, &PrimalOptions::default()).unwrap(),
            solve_primal_max(&kappa, &m, &PrimalOptions::default()).unwrap(),
        ] {
            assert!((sol.value - 2.5).abs() < 1e-12);
        }
        let zero = CostSpec::Constant { value: 0.0 }.tabulate(&m).unwrap();
        assert_eq!(brute_force_value(&zero, &m).unwrap(), 0.0);
    }

    #[test]
    fn max_dominates_min() {
        let m = ms(vec![sym(1.0), DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0]).unwrap()]);
        let cost = CostSpec::AbsIncrement.tabulate(&m).unwrap();
        let lo = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap();
        let hi = solve_primal_max(&cost, &m, &PrimalOptions::default()).unwrap();
        assert!(hi.value >= lo.value - 1e-12);
        let hedge = hi.hedge.unwrap();
        // a super-hedge of c is a sub-hedge of −c
        let neg = SemiStaticHedge {
            u: hedge.u.iter().map(|t| t.iter().map(|v| -v).collect()).collect(),
            delta: hedge.delta.iter().map(|t| t.iter().map(|v| -v).collect()).collect(),
        };
        let v = semistatic_value_check(&cost.negated(), &m, &neg).unwrap();
        assert!((v + hi.value).abs() < 1e-8);
    }

    #[test]
    fn growth_minorant_hedge() {
        let m = ms(vec![sym(1.0), sym(2.0)]);
        let cost = CostTensor::from_fn(&m, |x| x[1] - x[0].abs());
        let k = cost.growth_constant(&m);
        let hedge = SemiStaticHedge {
            u: vec![m.get(0).atoms().iter().map(|x| -k * (1.0 + x.abs() + 2.0)).collect(), vec![0.0; 2]],
            delta: vec![vec![0.0; 2]],
        };
        let v = semistatic_value_check(&cost, &m, &hedge).unwrap();
        let primal = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap().value;
        assert!(v <= primal + 1e-8);
    }

    #[test]
    fn affine_shift_moves_value() {
        let m = ms(vec![sym(1.0), DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0]).unwrap()]);
        let cost = CostSpec::AbsIncrement.tabulate(&m).unwrap();
        let shifted = CostTensor::from_fn(&m, |x| (x[1] - x[0]).abs() + 0.7 - 1.3 * x[1]);
        let a = solve_primal(&cost, &m, &PrimalOptions::default()).unwrap().value;
        let b = solve_primal(&shifted, &m, &PrimalOptions::default()).unwrap().value;
        // every marginal has mean 0
        assert!((b - (a + 0.7)).abs() < 1e-8);
    }

    #[test]
    fn atom_order_does_not_matter() {
        let a = ms(vec![sym(1.0), DiscreteMeasure::new(vec![2.0, 0.0, -2.0], vec![0.25, 0.5, 0.25]).unwrap()]);
        let b = ms(vec![sym(1.0), DiscreteMeasure::new(vec![-2.0, 2.0, 0.0], vec![0.25, 0.25, 0.5]).unwrap()]);
        let va = solve_primal(&CostSpec::AbsIncrement.tabulate(&a).unwrap(), &a, &PrimalOptions::default()).unwrap();
        let vb = solve_primal(&CostSpec::AbsIncrement.tabulate(&b).unwrap(), &b, &PrimalOptions::default()).unwrap();
        assert!((va.value - vb.value).abs() < 1e-12);
    }

    #[test]
    fn coupling_csv() {
        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]);
        let q = Coupling::new(&m, vec![0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        q.write_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x_1,x_2,q\n0,-1,0.5\n0,1,0.5\n");
    }

    #[test]
    fn coupling_validation_errors() {
        let m = ms(vec![DiscreteMeasure::dirac(0.0), sym(1.0)]);
        assert!(Coupling::new(&m, vec![1.0]).is_err());
        let skewed = Coupling::new(&m, vec![0.25, 0.75]).unwrap();
        assert!(skewed.validate(&m).is_err());
    }
}
