//! The discretized primal: minimal and maximal prices, the optimal coupling
//! and the semi-static hedge read off the LP duals.
//!
//! Run with `cargo run --example primal_lp`.

use mot_cascade::primal::{semistatic_value_check, solve_primal, solve_primal_max, PrimalOptions};
use mot_cascade::{CostSpec, DiscreteMeasure, MarginalSequence};

fn main() -> mot_cascade::Result<()> {
    let ms = MarginalSequence::new(vec![
        DiscreteMeasure::uniform(&[-1.0, 1.0])?,
        DiscreteMeasure::uniform(&[-2.0, 2.0])?,
    ])?;
    let cost = CostSpec::SquaredIncrement.tabulate(&ms)?;
    let opts = PrimalOptions::default();

    let min = solve_primal(&cost, &ms, &opts)?;
    let max = solve_primal_max(&cost, &ms, &opts)?;
    println!("price range [{}, {}]", min.value, max.value);
    println!("lp: {:?}", min.stats);

    let q = min.coupling.expect("optimal");
    let mut csv = Vec::new();
    q.write_csv(&ms, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));

    let hedge = min.hedge.expect("optimal");
    println!("static parts {:?}", hedge.u);
    println!("dynamic parts {:?}", hedge.delta);
    println!("hedge cost {}", semistatic_value_check(&cost, &ms, &hedge)?);

    let call = CostSpec::TerminalCall { strike: 0.0 }.tabulate(&ms)?;
    let three = MarginalSequence::new(vec![DiscreteMeasure::dirac(0.0), ms.get(0).clone(), ms.get(1).clone()])?;
    let call3 = CostSpec::TerminalCall { strike: 0.0 }.tabulate(&three)?;
    println!(
        "terminal call: two periods {}, three periods {}",
        solve_primal(&call, &ms, &opts)?.value,
        solve_primal(&call3, &three, &opts)?.value
    );
    Ok(())
}
