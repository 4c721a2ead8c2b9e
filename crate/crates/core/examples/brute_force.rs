//! Exhaustive vertex enumeration of small coupling polytopes, compared with
//! the simplex solution.
//!
//! Run with `cargo run --release --example brute_force`.

use mot_cascade::generate::{random_instance, InstanceConfig};
use mot_cascade::primal::{assemble_lp, brute_force_value, solve_primal, PrimalOptions};
use mot_cascade::vertex::{enumerate_dual_vertices, enumerate_vertices, MAX_RAYS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mot_cascade::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut shown = 0;
    while shown < 8 {
        let cfg = InstanceConfig {
            n: 2 + shown % 2,
            min_atoms: 2,
            max_atoms: 5,
            ..InstanceConfig::default()
        };
        let inst = random_instance(&mut rng, &cfg)?;
        let (ms, cost) = (&inst.marginals, &inst.cost);
        if ms.num_paths() > 40 {
            continue;
        }
        shown += 1;
        let lp = assemble_lp(cost, ms, 64)?.lp;
        let count = |r: mot_cascade::Result<usize>| r.map_or_else(|e| e.to_string(), |n| n.to_string());
        let primal_vertices = count(enumerate_vertices(&lp).map(|v| v.len()));
        let dual_vertices = count(enumerate_dual_vertices(&lp, MAX_RAYS).map(|d| d.vertices.len()));
        let exhaustive = brute_force_value(cost, ms)?;
        let simplex = solve_primal(cost, ms, &PrimalOptions::default())?.value;
        println!(
            "{:?}: {primal_vertices} couplings, {dual_vertices} dual vertices, enumeration {exhaustive:.10}, simplex {simplex:.10}",
            ms.shape()
        );
    }
    Ok(())
}
