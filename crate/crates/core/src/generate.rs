//! Random feasible instances built from mean-preserving spreads.
//!
//! `μ_1` is drawn on a coarse lattice; each later marginal is obtained from
//! the previous one by repeatedly moving part of an atom's mass to two points
//! on either side while keeping its barycenter. Every step preserves the mean
//! and increases the measure in convex order, so the sequence is feasible by
//! construction.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostSpec, CostTensor};
use crate::error::{MotError, Result};
use crate::measures::{DiscreteMeasure, MarginalSequence};

/// Lattice spacing of generated atoms.
pub const LATTICE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceConfig {
    /// Number of marginals.
    pub n: usize,
    /// Smallest and largest support size per marginal.
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Largest spread half-width, in lattice steps.
    pub max_spread: u32,
    /// Cost forms to pick from.
    pub costs: Vec<CostSpec>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            n: 2,
            min_atoms: 3,
            max_atoms: 15,
            max_spread: 6,
            costs: named_costs(),
        }
    }
}

/// The named cost forms with moderate parameters.
pub fn named_costs() -> Vec<CostSpec> {
    vec![
        CostSpec::SquaredIncrement,
        CostSpec::AbsIncrement,
        CostSpec::TerminalCall { strike: 0.25 },
        CostSpec::Basket { strike: 0.0 },
    ]
}

/// A generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub marginals: MarginalSequence,
    pub cost_spec: CostSpec,
    pub cost: CostTensor,
}

fn lattice(k: i64) -> f64 {
    k as f64 * LATTICE
}

/// Moves a fraction of the mass at `index` to `x − a·L` and `x + b·L` with
/// barycenter `x`.
pub fn partial_spread(
    mu: &DiscreteMeasure,
    index: usize,
    a: u32,
    b: u32,
    fraction: f64,
) -> Result<DiscreteMeasure> {
    if index >= mu.len() || a == 0 || b == 0 || !(fraction > 0.0 && fraction <= 1.0) {
        return Err(MotError::InvalidParameter("invalid spread".into()));
    }
    let x = mu.atoms()[index];
    let w = mu.weights()[index];
    let moved = w * fraction;
    let (a, b) = (a as f64, b as f64);
    let mut atoms = mu.atoms().to_vec();
    let mut weights = mu.weights().to_vec();
    weights[index] = w - moved;
    atoms.push(x - a * LATTICE);
    weights.push(moved * b / (a + b));
    atoms.push(x + b * LATTICE);
    weights.push(moved * a / (a + b));
    DiscreteMeasure::new(atoms, weights)
}

fn random_measure(rng: &mut ChaCha8Rng, m: usize) -> Result<DiscreteMeasure> {
    let mut ks: Vec<i64> = (-8..=8).collect();
    let chosen: Vec<f64> = {
        let (picked, _) = ks.partial_shuffle(rng, m.min(17));
        picked.iter().map(|&k| lattice(k)).collect()
    };
    let weights: Vec<f64> = chosen.iter().map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = weights.iter().sum();
    DiscreteMeasure::new(chosen, weights.iter().map(|w| w / total).collect())
}

/// Spreads `mu` until it has at least `target` atoms (or a step cap is hit).
fn spread_to(
    rng: &mut ChaCha8Rng,
    mu: &DiscreteMeasure,
    target: usize,
    max_atoms: usize,
    max_spread: u32,
) -> Result<DiscreteMeasure> {
    let mut cur = mu.clone();
    // at least one strict spread so consecutive marginals differ
    let mut steps = 0;
    while steps == 0 || (cur.len() < target && steps < 200) {
        let i = rng.random_range(0..cur.len());
        let a = rng.random_range(1..=max_spread);
        let b = rng.random_range(1..=max_spread);
        let f = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.3..0.9) };
        let next = partial_spread(&cur, i, a, b, f)?;
        steps += 1;
        if next.len() <= max_atoms {
            cur = next;
        }
    }
    Ok(cur)
}

/// Draws one feasible instance.
pub fn random_instance(rng: &mut ChaCha8Rng, cfg: &InstanceConfig) -> Result<Instance> {
    if cfg.n < 2 || cfg.min_atoms == 0 || cfg.min_atoms > cfg.max_atoms || cfg.costs.is_empty() {
        return Err(MotError::InvalidParameter("invalid instance config".into()));
    }
    let mut targets: Vec<usize> = (0..cfg.n)
        .map(|_| rng.random_range(cfg.min_atoms..=cfg.max_atoms))
        .collect();
    targets.sort_unstable();
    let first = random_measure(rng, targets[0].min(cfg.max_atoms.saturating_sub(2)).max(1))?;
    let mut marginals = vec![first];
    for &t in &targets[1..] {
        let prev = marginals.last().unwrap();
        marginals.push(spread_to(rng, prev, t, cfg.max_atoms, cfg.max_spread)?);
    }
    let marginals = MarginalSequence::new(marginals)?;
    let cost_spec = cfg.costs.choose(rng).expect("nonempty").clone();
    let cost = cost_spec.tabulate(&marginals)?;
    Ok(Instance {
        marginals,
        cost_spec,
        cost,
    })
}

/// `count` instances from a seeded stream.
pub fn suite(seed: u64, count: usize, cfg: &InstanceConfig) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, cfg)).collect()
}

/// Random dual tables with entries in `[-scale, scale]`.
pub fn random_duals(
    rng: &mut ChaCha8Rng,
    ms: &MarginalSequence,
    scale: f64,
) -> crate::cascade::DualVariables {
    let mut u = crate::cascade::DualVariables::zeros(ms);
    let flat: Vec<f64> = (0..u.dim()).map(|_| rng.random_range(-scale..=scale)).collect();
    u.set_flat(&flat);
    u
}
