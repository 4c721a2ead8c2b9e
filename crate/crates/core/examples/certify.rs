//! Full certification of a generated instance: both primal prices, the two
//! lower cascades, the upper cascade and the sub-hedging checks.
//!
//! Run with `cargo run --release --example certify [seed]`.

use mot_cascade::generate::{random_instance, InstanceConfig};
use mot_cascade::optimizer::{certify, AscentConfig, StepRule};
use mot_cascade::primal::PrimalOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mot_cascade::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let cfg = InstanceConfig {
        n: 3,
        ..InstanceConfig::default()
    };
    let inst = random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &cfg)?;
    println!("shape {:?}, cost {:?}", inst.marginals.shape(), inst.cost_spec);
    let config = AscentConfig {
        step_rule: StepRule::Polyak,
        max_iters: 200_000,
        target_gap: 1e-4,
        ..AscentConfig::default()
    };
    let r = certify(&inst.cost, &inst.marginals, &config, &PrimalOptions::default())?;
    println!("primal min {:.8}  max {:.8}", r.primal_min, r.primal_max);
    for b in [&r.lower, &r.stepwise, &r.upper] {
        println!("{:<12} {:.8}  gap {:.2e}  {} iterations", b.variant.as_str(), b.value, b.gap, b.iterations);
    }
    println!(
        "sub-hedge slack: u = 0 {:.2e}, optimized {:.2e}",
        r.subhedge_zero.min_slack, r.subhedge_optimized.min_slack
    );
    println!("passed {} in {:.0} ms", r.passed, r.elapsed_ms);
    Ok(())
}
