//! Dense two-phase primal simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Artificial columns are kept in the tableau through phase 2 (barred from
//! re-entering) so that redundant equality rows need no special handling:
//! their artificial simply stays basic at level zero. Pricing is Dantzig's
//! rule, falling back to Bland's rule after a streak of degenerate pivots.
//! Every few hundred pivots the tableau is recomputed from the original data
//! for the current basis, and on termination the basic solution and the row
//! duals are recomputed from the original columns with an LU solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols` constraint matrix.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LinearProgram {
    /// Panics if the dimensions are inconsistent.
    pub fn new(rows: usize, cols: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Self {
        assert_eq!(a.len(), rows * cols, "constraint matrix size");
        assert_eq!(b.len(), rows, "rhs length");
        assert_eq!(c.len(), cols, "objective length");
        Self { rows, cols, a, b, c }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn entry(&self, r: usize, j: usize) -> f64 {
        self.a[r * self.cols + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn with_objective(&self, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), self.cols);
        Self { c, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Smallest admissible pivot magnitude, relative to the column's largest entry.
    pub pivot_tol: f64,
    /// Reduced-cost optimality tolerance, relative to `1 + max|c|`.
    pub optimality_tol: f64,
    /// Phase-1 residual above which the program is declared infeasible,
    /// relative to `1 + Σ|b|`.
    pub feasibility_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: 1_000_000,
            pivot_tol: 1e-9,
            optimality_tol: 1e-10,
            feasibility_tol: 1e-9,
            degenerate_streak: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row multipliers `y` with `Aᵀy ≤ c` at optimality.
    pub duals: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    t: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    /// The initial tableau, kept for periodic reinversion.
    t0: Vec<f64>,
}

/// Pivots between recomputations of the tableau from the original data.
const REINVERT_EVERY: usize = 200;

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let (m, n) = (lp.rows, lp.cols);
        let width = n + m + 1;
        let mut t = vec![0.0; m * width];
        for r in 0..m {
            let sign = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut t[r * width..(r + 1) * width];
            for j in 0..n {
                row[j] = sign * lp.a[r * n + j];
            }
            row[n + r] = 1.0;
            row[width - 1] = sign * lp.b[r];
        }
        Self {
            m,
            n,
            width,
            t0: t.clone(),
            t,
            d: vec![0.0; width],
            basis: (n..n + m).collect(),
            pivots: 0,
        }
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.width - 1]
    }

    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.width + j]
    }

    /// Reduced-cost row for `cost` (length `n + m`), objective in the last slot.
    fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        self.d[..w - 1].copy_from_slice(cost);
        self.d[w - 1] = 0.0;
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * w..(r + 1) * w];
                for (dj, &tj) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tj;
                }
            }
        }
    }

    /// Rebuilds the tableau as `B⁻¹·T₀` for the current basis and reprices,
    /// discarding the rounding error accumulated by elimination steps.
    fn reinvert(&mut self, cost: &[f64]) {
        let (m, w) = (self.m, self.width);
        let b = DMatrix::from_fn(m, m, |r, k| self.t0[r * w + self.basis[k]]);
        let Some(inv) = b.try_inverse() else {
            return;
        };
        let t0 = DMatrix::from_row_slice(m, w, &self.t0);
        let t = inv * t0;
        for r in 0..m {
            for j in 0..w {
                self.t[r * w + j] = t[(r, j)];
            }
            self.t[r * w + self.basis[r]] = 1.0;
        }
        self.price(cost);
    }

    fn objective(&self) -> f64 {
        -self.d[self.width - 1]
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let w = self.width;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let inv = 1.0 / prow[s];
        for v in prow.iter_mut() {
            *v *= inv;
        }
        prow[s] = 1.0;
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[s];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[s] = 0.0;
            }
        }
        let f = self.d[s];
        if f != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            self.d[s] = 0.0;
        }
        self.basis[r] = s;
        self.pivots += 1;
    }

    /// Only structural columns may enter; artificials never return.
    fn choose_entering(&self, tol: f64, bland: bool) -> Option<usize> {
        let mut candidates = self.d[..self.n]
            .iter()
            .enumerate()
            .filter(|(_, &dj)| dj < -tol);
        if bland {
            candidates.next().map(|(j, _)| j)
        } else {
            candidates.min_by(|a, b| a.1.total_cmp(b.1)).map(|(j, _)| j)
        }
    }

    fn choose_leaving(&self, s: usize, pivot_tol: f64, bland: bool) -> Option<usize> {
        let col_max = (0..self.m).map(|r| self.at(r, s).abs()).fold(0.0, f64::max);
        let tol = pivot_tol * col_max.max(1.0);
        let mut best: Option<(usize, f64, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, s);
            if a <= tol {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            let better = match best {
                None => true,
                Some((br, bratio, ba)) => {
                    if (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs()) {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > ba
                        }
                    } else {
                        ratio < bratio
                    }
                }
            };
            if better {
                best = Some((r, ratio, a));
            }
        }
        best.map(|(r, _, _)| r)
    }

    fn optimize(&mut self, cost: &[f64], opts: &SimplexOptions, opt_tol: f64) -> Outcome {
        let mut streak = 0usize;
        let mut last = self.objective();
        loop {
            let bland = streak >= opts.degenerate_streak;
            let Some(s) = self.choose_entering(opt_tol, bland) else {
                return Outcome::Optimal;
            };
            let Some(r) = self.choose_leaving(s, opts.pivot_tol, bland) else {
                return Outcome::Unbounded;
            };
            if self.pivots >= opts.max_pivots {
                return Outcome::IterationLimit;
            }
            self.pivot(r, s);
            if self.pivots.is_multiple_of(REINVERT_EVERY) {
                self.reinvert(cost);
            }
            let obj = self.objective();
            if (obj - last).abs() <= 1e-13 * (1.0 + obj.abs()) {
                streak += 1;
            } else {
                streak = 0;
            }
            last = obj;
        }
    }

    /// Pivots basic artificials out of every row that still has a usable
    /// structural entry. Rows without one are redundant.
    fn drive_out_artificials(&mut self, pivot_tol: f64) {
        for r in 0..self.m {
            if self.basis[r] < self.n {
                continue;
            }
            let (j, a) = (0..self.n)
                .map(|j| (j, self.at(r, j).abs()))
                .fold((usize::MAX, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if j != usize::MAX && a > pivot_tol {
                self.pivot(r, j);
            }
        }
    }
}

/// Recomputes `x_B` and `y` from the original columns of the final basis.
fn refine(lp: &LinearProgram, basis: &[usize], cost: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (lp.rows, lp.cols);
    let bmat = DMatrix::from_fn(m, m, |r, k| {
        let j = basis[k];
        if j < n {
            lp.a[r * n + j]
        } else if j - n == r {
            1.0
        } else {
            0.0
        }
    });
    let lu = bmat.clone().lu();
    let xb = lu.solve(&DVector::from_column_slice(&lp.b))?;
    let cb = DVector::from_iterator(m, basis.iter().map(|&j| if j < n { cost[j] } else { 0.0 }));
    let y = bmat.transpose().lu().solve(&cb)?;
    if xb.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    Some((x, y.iter().copied().collect()))
}

/// Solves `min cᵀx, Ax = b, x ≥ 0`.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
    let (m, n) = (lp.rows, lp.cols);
    let mut tab = Tableau::new(lp);
    let fail = |status: LpStatus, pivots: usize| LpSolution {
        status,
        x: vec![0.0; n],
        duals: vec![0.0; m],
        value: f64::NAN,
        pivots,
    };

    // phase 1: minimize the sum of artificials
    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.price(&phase1);
    let b_scale = 1.0 + lp.b.iter().map(|v| v.abs()).sum::<f64>();
    match tab.optimize(&phase1, opts, opts.optimality_tol) {
        Outcome::IterationLimit => return fail(LpStatus::IterationLimit, tab.pivots),
        Outcome::Unbounded | Outcome::Optimal => {}
    }
    if tab.objective() > opts.feasibility_tol * b_scale {
        return fail(LpStatus::Infeasible, tab.pivots);
    }
    tab.drive_out_artificials(opts.pivot_tol);

    // phase 2
    let mut cost = lp.c.clone();
    cost.extend(std::iter::repeat_n(0.0, m));
    tab.price(&cost);
    let c_scale = 1.0 + lp.c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    match tab.optimize(&cost, opts, opts.optimality_tol * c_scale) {
        Outcome::IterationLimit => return fail(LpStatus::IterationLimit, tab.pivots),
        Outcome::Unbounded => return fail(LpStatus::Unbounded, tab.pivots),
        Outcome::Optimal => {}
    }

    let (x, duals) = refine(lp, &tab.basis, &cost).unwrap_or_else(|| {
        let mut x = vec![0.0; n];
        for (r, &j) in tab.basis.iter().enumerate() {
            if j < n {
                x[j] = tab.rhs(r).max(0.0);
            }
        }
        // y_r = −(reduced cost of artificial r) when artificials cost zero
        let duals = (0..m).map(|r| -tab.d[n + r]).collect();
        (x, duals)
    });
    let value = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    LpSolution {
        status: LpStatus::Optimal,
        x,
        duals,
        value,
        pivots: tab.pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x1 - 2x2  s.t. x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6
        let lp = LinearProgram::new(
            2,
            4,
            vec![1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0],
            vec![4.0, 6.0],
            vec![-1.0, -2.0, 0.0, 0.0],
        );
        let sol = solve(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 5.0).abs() < 1e-12);
        assert!((sol.x[0] - 3.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        // strong duality
        let dual_value: f64 = sol.duals.iter().zip(lp.b()).map(|(y, b)| y * b).sum();
        assert!((dual_value - sol.value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_redundant_rows() {
        // x1 + x2 = 1 twice (redundant), x1 - x2 = 3 with x >= 0 infeasible
        let lp = LinearProgram::new(
            3,
            2,
            vec![1.0, 1.0, 1.0, 1.0, 1.0, -1.0],
            vec![1.0, 1.0, 3.0],
            vec![0.0, 0.0],
        );
        assert_eq!(solve(&lp, &SimplexOptions::default()).status, LpStatus::Infeasible);

        let lp = LinearProgram::new(2, 2, vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]);
        let sol = solve(&lp, &SimplexOptions::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_pivot_cap() {
        // min -x1  s.t. x1 - x2 = 0
        let lp = LinearProgram::new(1, 2, vec![1.0, -1.0], vec![0.0], vec![-1.0, 0.0]);
        assert_eq!(solve(&lp, &SimplexOptions::default()).status, LpStatus::Unbounded);

        let lp = LinearProgram::new(
            2,
            4,
            vec![1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0],
            vec![4.0, 6.0],
            vec![-1.0, -2.0, 0.0, 0.0],
        );
        let opts = SimplexOptions {
            max_pivots: 1,
            ..Default::default()
        };
        assert_eq!(solve(&lp, &opts).status, LpStatus::IterationLimit);
    }
}
