//! Dual ascent with the three step rules on a random instance, with and
//! without the primal value as a target.
//!
//! Run with `cargo run --release --example ascent [seed]`.

use mot_cascade::generate::{random_instance, InstanceConfig};
use mot_cascade::optimizer::{ascend, relative_gap, AscentConfig, StepRule};
use mot_cascade::primal::{solve_primal, PrimalOptions};
use mot_cascade::CostSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mot_cascade::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg = InstanceConfig {
        n: 3,
        max_atoms: 8,
        costs: vec![CostSpec::AbsIncrement],
        ..InstanceConfig::default()
    };
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &cfg)?;
    let (ms, cost) = (&inst.marginals, &inst.cost);
    println!("shape {:?}, cost {:?}", ms.shape(), inst.cost_spec);
    let primal = solve_primal(cost, ms, &PrimalOptions::default())?.value;
    println!("primal {primal:.8}");

    let rules = [
        ("adaptive", StepRule::default(), None),
        ("diminishing", StepRule::Diminishing, None),
        ("polyak", StepRule::Polyak, Some(primal)),
    ];
    for (name, rule, target) in rules {
        let config = AscentConfig {
            step_rule: rule,
            max_iters: 20_000,
            primal_value: target,
            ..AscentConfig::default()
        };
        let (cert, trace) = ascend(cost, ms, &config)?;
        println!(
            "{name:<12} dual {:.8}  gap {:.2e}  {:?} after {} iterations (best at {})",
            cert.dual_value,
            relative_gap(primal, cert.dual_value),
            trace.status,
            trace.rows.len(),
            trace.best_iter
        );
    }
    Ok(())
}
