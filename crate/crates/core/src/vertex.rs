//! Exhaustive vertex enumeration of `{x ≥ 0 : Ax = b}` by the double
//! description method.
//!
//! The polytope is homogenized into the cone `{(x, t) ≥ 0 : Ax − bt = 0}`,
//! parameterized over a null-space basis, and its extreme rays are built by
//! adding the nonnegativity constraints one at a time. Adjacency of rays is
//! decided combinatorially from their zero sets, which are kept as bitsets.
//! Rays with `t > 0` are the vertices. No pivoting rule or objective is
//! involved, so the result is independent of the simplex solver.
//!
//! The dual region `{y : Aᵀy ≤ c}` is enumerated the same way, in `(t, y)`
//! coordinates after dropping dependent rows of `A`. For transport-type
//! programs it often has far fewer vertices than the primal polytope.

use crate::error::{MotError, Result};
use crate::lp::LinearProgram;
use rayon::prelude::*;

/// Largest number of columns (plus the homogenizing one) a bitset can hold.
pub const MAX_COLUMNS: usize = 127;

/// Default cap on the number of rays of an intermediate cone.
pub const MAX_RAYS: usize = 400_000;

const ZERO_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

/// Null-space basis of a row-major `rows × cols` matrix via reduced row
/// echelon form. Returns column vectors of length `cols`.
fn null_space(rows: usize, cols: usize, m: &[f64]) -> Vec<Vec<f64>> {
    let mut a = m.to_vec();
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, a[i * cols + c].abs()))
            .fold((r, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if val <= RANK_TOL * scale {
            continue;
        }
        if best != r {
            for j in 0..cols {
                a.swap(best * cols + j, r * cols + j);
            }
        }
        let inv = 1.0 / a[r * cols + c];
        for j in 0..cols {
            a[r * cols + j] *= inv;
        }
        for i in 0..rows {
            if i != r {
                let f = a[i * cols + c];
                if f != 0.0 {
                    for j in 0..cols {
                        a[i * cols + j] -= f * a[r * cols + j];
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let is_pivot: Vec<bool> = (0..cols).map(|c| pivot_cols.contains(&c)).collect();
    (0..cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![0.0; cols];
            v[free] = 1.0;
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = -a[row * cols + free];
            }
            v
        })
        .collect()
}

struct Ray {
    lambda: Vec<f64>,
    z: Vec<f64>,
    zeros: u128,
}

fn normalize(lambda: &mut [f64], z: &mut [f64]) {
    let m = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if m > 0.0 {
        for v in lambda.iter_mut().chain(z.iter_mut()) {
            *v /= m;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy row echelon: indices of a maximal independent subset of `rows`,
/// in order, stopping once `limit` rows are found.
fn independent_rows(rows: &[Vec<f64>], limit: usize) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut reduced: Vec<(usize, Vec<f64>)> = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        if chosen.len() == limit {
            break;
        }
        let mut row = row.clone();
        for (lead, prev) in &reduced {
            let f = row[*lead] / prev[*lead];
            for (a, b) in row.iter_mut().zip(prev) {
                *a -= f * b;
            }
        }
        let scale = rows[j].iter().map(|v| v.abs()).fold(1.0, f64::max);
        let (lead, norm) = row
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if norm > 1e-8 * scale {
            chosen.push(j);
            reduced.push((lead, row));
        }
    }
    chosen
}

/// Extreme rays of the pointed cone `{λ ∈ ℝ^d : g_j·λ ≥ 0}`, each returned
/// as `(λ, Gλ)` scaled so that `max_j |g_j·λ| = 1`.
fn extreme_rays(g: &[Vec<f64>], d: usize, max_rays: usize) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let m = g.len();
    if m > MAX_COLUMNS + 1 {
        return Err(MotError::SizeCap {
            what: "vertex enumeration constraints",
            actual: m,
            cap: MAX_COLUMNS + 1,
        });
    }
    let chosen = independent_rows(g, d);
    if chosen.len() < d {
        return Err(MotError::InvalidParameter(
            "cone is not pointed; cannot enumerate vertices".into(),
        ));
    }
    let s = nalgebra::DMatrix::from_fn(d, d, |r, c| g[chosen[r]][c]);
    let inv = s.try_inverse().ok_or_else(|| {
        MotError::InvalidParameter("singular initial cone in vertex enumeration".into())
    })?;

    let mut processed: u128 = chosen.iter().fold(0, |acc, &j| acc | (1u128 << j));
    let mut rays: Vec<Ray> = (0..d)
        .map(|k| {
            let mut lambda: Vec<f64> = inv.column(k).iter().copied().collect();
            let mut z: Vec<f64> = g.iter().map(|row| dot(row, &lambda)).collect();
            normalize(&mut lambda, &mut z);
            let zeros = (0..m)
                .filter(|&j| processed & (1u128 << j) != 0 && z[j].abs() <= ZERO_TOL)
                .fold(0u128, |acc, j| acc | (1u128 << j));
            Ray { lambda, z, zeros }
        })
        .collect();

    while processed.count_ones() as usize != m {
        // most cut rays first keeps the intermediate cones small
        let h = (0..m)
            .filter(|&h| processed & (1u128 << h) == 0)
            .max_by_key(|&h| rays.iter().filter(|r| r.z[h] < -ZERO_TOL).count())
            .expect("an unprocessed constraint remains");
        let bit = 1u128 << h;
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (k, r) in rays.iter_mut().enumerate() {
            let v = r.z[h];
            if v > ZERO_TOL {
                plus.push(k);
            } else if v < -ZERO_TOL {
                minus.push(k);
            } else {
                r.zeros |= bit;
            }
        }
        // for each processed constraint, the set of rays tight at it
        let words = rays.len().div_ceil(64);
        let mut tight = vec![0u64; m * words];
        for (k, r) in rays.iter().enumerate() {
            let mut z = r.zeros & processed;
            while z != 0 {
                let j = z.trailing_zeros() as usize;
                tight[j * words + k / 64] |= 1 << (k % 64);
                z &= z - 1;
            }
        }
        let adjacent = |p: usize, q: usize, acc: &mut Vec<u64>| -> Option<Ray> {
            let common = rays[p].zeros & rays[q].zeros;
            if (common.count_ones() as usize) + 2 < d {
                return None;
            }
            // adjacent iff no third ray is tight at every common constraint
            acc.fill(!0);
            let mut rest = common;
            let mut others = rays.len();
            while rest != 0 && others > 2 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                others = 0;
                for (a, t) in acc.iter_mut().zip(&tight[j * words..(j + 1) * words]) {
                    *a &= t;
                    others += a.count_ones() as usize;
                }
            }
            if others > 2 {
                return None;
            }
            let (sp, sq) = (rays[p].z[h], rays[q].z[h]);
            let combine = |a: &[f64], b: &[f64]| -> Vec<f64> {
                b.iter().zip(a).map(|(vq, vp)| sp * vq - sq * vp).collect()
            };
            let mut lambda = combine(&rays[p].lambda, &rays[q].lambda);
            let mut z = combine(&rays[p].z, &rays[q].z);
            z[h] = 0.0;
            normalize(&mut lambda, &mut z);
            Some(Ray {
                lambda,
                z,
                zeros: common | bit,
            })
        };
        let fresh: Vec<Ray> = plus
            .par_iter()
            .map_init(
                || vec![0u64; words],
                |acc, &p| minus.iter().filter_map(|&q| adjacent(p, q, acc)).collect::<Vec<_>>(),
            )
            .flatten()
            .collect();
        let total = rays.len() - minus.len() + fresh.len();
        if total > max_rays {
            return Err(MotError::SizeCap {
                what: "vertex enumeration rays",
                actual: total,
                cap: max_rays,
            });
        }
        let mut keep: Vec<bool> = vec![true; rays.len()];
        for &q in &minus {
            keep[q] = false;
        }
        let mut it = keep.iter();
        rays.retain(|_| *it.next().unwrap());
        rays.extend(fresh);
        processed |= bit;
    }
    Ok(rays.into_iter().map(|r| (r.lambda, r.z)).collect())
}

/// All vertices of `{x ≥ 0 : Ax = b}`, giving up once an intermediate cone
/// has more than `max_rays` rays.
pub fn enumerate_vertices_capped(lp: &LinearProgram, max_rays: usize) -> Result<Vec<Vec<f64>>> {
    let (rows, n) = (lp.rows(), lp.cols());
    if n > MAX_COLUMNS {
        return Err(MotError::SizeCap {
            what: "vertex enumeration columns",
            actual: n,
            cap: MAX_COLUMNS,
        });
    }
    let cols = n + 1;
    let mut m = vec![0.0; rows * cols];
    for r in 0..rows {
        for j in 0..n {
            m[r * cols + j] = lp.entry(r, j);
        }
        m[r * cols + n] = -lp.b()[r];
    }
    let basis = null_space(rows, cols, &m);
    let dim = basis.len();
    if dim == 0 {
        return Ok(Vec::new());
    }
    // z_j = Σ_k basis[k][j] λ_k must be nonnegative
    let g: Vec<Vec<f64>> = (0..cols).map(|j| basis.iter().map(|v| v[j]).collect()).collect();
    let rays = extreme_rays(&g, dim, max_rays)?;
    Ok(rays
        .into_iter()
        .filter(|(_, z)| z[n] > ZERO_TOL)
        .map(|(_, z)| {
            let t = z[n];
            z[..n].iter().map(|v| (v / t).max(0.0)).collect()
        })
        .collect())
}

/// [`enumerate_vertices_capped`] with [`MAX_RAYS`].
pub fn enumerate_vertices(lp: &LinearProgram) -> Result<Vec<Vec<f64>>> {
    enumerate_vertices_capped(lp, MAX_RAYS)
}

/// Vertices of the dual feasible region `{y : Aᵀy ≤ c}`, restricted to a
/// maximal set of independent rows of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVertices {
    /// Rows of `A` kept; the others are linear combinations of these.
    pub rows: Vec<usize>,
    /// Vertices, with one entry per kept row.
    pub vertices: Vec<Vec<f64>>,
    /// Directions of unboundedness of the region.
    pub directions: Vec<Vec<f64>>,
    /// `false` if `b` is not consistent with the dropped rows.
    pub consistent: bool,
}

impl DualVertices {
    /// `max bᵀy` over the region, or `None` when the primal `{x ≥ 0 : Ax = b}`
    /// is empty (the maximum is unbounded, the region is empty, or the
    /// equations are inconsistent).
    pub fn max_value(&self, lp: &LinearProgram) -> Option<f64> {
        if !self.consistent || self.vertices.is_empty() {
            return None;
        }
        let b: Vec<f64> = self.rows.iter().map(|&r| lp.b()[r]).collect();
        let b_scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if self.directions.iter().any(|d| {
            let norm = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            dot(d, &b) > 1e-9 * b_scale * norm
        }) {
            return None;
        }
        self.vertices.iter().map(|y| dot(y, &b)).max_by(f64::total_cmp)
    }
}

/// Enumerates the vertices of `{y : Aᵀy ≤ c}` for an LP in standard form.
pub fn enumerate_dual_vertices(lp: &LinearProgram, max_rays: usize) -> Result<DualVertices> {
    let (rows, n) = (lp.rows(), lp.cols());
    let a_rows: Vec<Vec<f64>> = (0..rows).map(|r| (0..n).map(|j| lp.entry(r, j)).collect()).collect();
    let kept = independent_rows(&a_rows, rows);
    let augmented: Vec<Vec<f64>> = a_rows
        .iter()
        .zip(lp.b())
        .map(|(row, &b)| row.iter().copied().chain([b]).collect())
        .collect();
    let consistent = independent_rows(&augmented, rows).len() == kept.len();
    let d = kept.len() + 1;
    // coordinates (t, y): c_j t − a_jᵀy ≥ 0 and t ≥ 0
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            std::iter::once(lp.c()[j])
                .chain(kept.iter().map(|&r| -lp.entry(r, j)))
                .collect()
        })
        .collect();
    let mut t_row = vec![0.0; d];
    t_row[0] = 1.0;
    g.push(t_row);
    let rays = extreme_rays(&g, d, max_rays)?;
    let mut vertices = Vec::new();
    let mut directions = Vec::new();
    for (lambda, z) in rays {
        let t = z[n];
        if t > ZERO_TOL {
            vertices.push(lambda[1..].iter().map(|v| v / lambda[0]).collect());
        } else {
            directions.push(lambda[1..].to_vec());
        }
    }
    Ok(DualVertices {
        rows: kept,
        vertices,
        directions,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_vertices() {
        // x1 + x2 + s1 = 1, x1 + s2 = 1 in x >= 0: triangle-ish polytope
        let lp = LinearProgram::new(
            2,
            4,
            vec![1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0; 4],
        );
        let mut v = enumerate_vertices(&lp).unwrap();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // vertices in (x1, x2): (0,0), (0,1), (1,0)
        assert_eq!(v.len(), 3);
        for x in &v {
            assert!((x[0] + x[1] + x[2] - 1.0).abs() < 1e-12);
            assert!((x[0] + x[3] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_vertices() {
        // x1 + x2 + x3 = 1
        let lp = LinearProgram::new(1, 3, vec![1.0; 3], vec![1.0], vec![0.0; 3]);
        assert_eq!(enumerate_vertices(&lp).unwrap().len(), 3);
    }

    #[test]
    fn empty_polytope() {
        // x1 + x2 = -1 has no nonnegative solution
        let lp = LinearProgram::new(1, 2, vec![1.0, 1.0], vec![-1.0], vec![0.0; 2]);
        assert!(enumerate_vertices(&lp).unwrap().is_empty());
    }

    #[test]
    fn single_point() {
        let lp = LinearProgram::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.25, 0.75], vec![0.0; 2]);
        let v = enumerate_vertices(&lp).unwrap();
        assert_eq!(v, vec![vec![0.25, 0.75]]);
    }

    #[test]
    fn dual_matches_primal_minimum() {
        // min x1 + 2 x2 + 3 x3 over the simplex
        let lp = LinearProgram::new(1, 3, vec![1.0; 3], vec![1.0], vec![1.0, 2.0, 3.0]);
        let dv = enumerate_dual_vertices(&lp, MAX_RAYS).unwrap();
        assert_eq!(dv.vertices.len(), 1);
        assert!((dv.max_value(&lp).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_detects_empty_primal() {
        let lp = LinearProgram::new(1, 2, vec![1.0, 1.0], vec![-1.0], vec![1.0, 1.0]);
        let dv = enumerate_dual_vertices(&lp, MAX_RAYS).unwrap();
        assert_eq!(dv.max_value(&lp), None);
        // duplicated row with a conflicting right-hand side
        let lp = LinearProgram::new(2, 2, vec![1.0, 1.0, 1.0, 1.0], vec![1.0, 2.0], vec![0.0; 2]);
        let dv = enumerate_dual_vertices(&lp, MAX_RAYS).unwrap();
        assert!(!dv.consistent);
        assert_eq!(dv.rows, vec![0]);
        assert_eq!(dv.max_value(&lp), None);
    }

    #[test]
    fn ray_cap_is_reported() {
        let lp = LinearProgram::new(1, 6, vec![1.0; 6], vec![1.0], vec![0.0; 6]);
        assert!(matches!(
            enumerate_vertices_capped(&lp, 3),
            Err(MotError::SizeCap { .. })
        ));
    }
}
