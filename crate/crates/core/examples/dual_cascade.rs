//! The dual cascade: level tensors, the dual objective for each variant and
//! its supergradient, on a three-period instance.
//!
//! Run with `cargo run --example dual_cascade`.

use mot_cascade::cascade::{dual_objective, dual_subgradient, DualEvaluator};
use mot_cascade::{CostSpec, DiscreteMeasure, DualVariables, MarginalSequence, Variant};

fn main() -> mot_cascade::Result<()> {
    let ms = MarginalSequence::new(vec![
        DiscreteMeasure::dirac(0.0),
        DiscreteMeasure::uniform(&[-1.0, 1.0])?,
        DiscreteMeasure::uniform(&[-2.0, 0.0, 2.0])?,
    ])?;
    let cost = CostSpec::AbsIncrement.tabulate(&ms)?;

    let zero = DualVariables::zeros(&ms);
    let mut ev = DualEvaluator::new(Variant::Lower, &cost, &ms)?;
    ev.value(&zero)?;
    let tensors = ev.tensors();
    for i in (1..=tensors.num_levels()).rev() {
        println!("T_{i} = {:?}", tensors.level(i));
    }

    let u = DualVariables::from_fn(&ms, |i, x| if i == 3 { 0.3 * x * x } else { -0.1 * x });
    for variant in [Variant::Lower, Variant::Stepwise, Variant::Upper] {
        let value = dual_objective(variant, &cost, &ms, &u)?;
        let grad = dual_subgradient(variant, &cost, &ms, &u)?;
        println!("{:<12} value {value:.6}  supergradient {grad:?}", variant.as_str());
    }
    Ok(())
}
