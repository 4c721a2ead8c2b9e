//! Feasibility of a marginal sequence: convex order and support nesting.
//!
//! Run with `cargo run --example convex_order`.

use mot_cascade::measures::{convex_order_check, potential};
use mot_cascade::{DiscreteMeasure, MarginalSequence};

fn main() -> mot_cascade::Result<()> {
    let mu = DiscreteMeasure::uniform(&[-1.0, 0.0, 1.0])?;
    // splitting the middle atom keeps the mean and widens the law
    let nu = mu.mean_preserving_spread(1, 1.5)?;
    println!("mu atoms {:?}", mu.atoms());
    println!("nu atoms {:?} weights {:?}", nu.atoms(), nu.weights());

    for k in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!("U_mu({k:>4}) = {:.4}   U_nu({k:>4}) = {:.4}", potential(&mu, k), potential(&nu, k));
    }
    println!("mu <= nu: {:?}", convex_order_check(&mu, &nu));
    println!("nu <= mu: {:?}", convex_order_check(&nu, &mu));

    let ms = MarginalSequence::new(vec![DiscreteMeasure::dirac(0.0), mu, nu])?;
    let report = ms.validate();
    println!("sequence passes: {}", report.passed);

    let backwards = MarginalSequence::new(vec![
        DiscreteMeasure::uniform(&[-2.0, 2.0])?,
        DiscreteMeasure::uniform(&[-1.0, 1.0])?,
    ])?;
    match backwards.ensure_valid() {
        Ok(()) => println!("unexpected: reversed pair passed"),
        Err(e) => println!("reversed pair: {e}"),
    }
    Ok(())
}
