//! Convex and concave envelopes of a tabulated function, their two-knot
//! weights, and the biconjugate evaluation path.
//!
//! Run with `cargo run --example envelope`.

use mot_cascade::envelope::{biconjugate_eval, concave_envelope, convex_envelope};
use mot_cascade::GridFunction;

fn main() -> mot_cascade::Result<()> {
    let f = GridFunction::new(vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![1.0, -1.0, 3.0, 0.0, 2.0])?;
    let lower = convex_envelope(&f);
    let upper = concave_envelope(&f);
    println!("lower hull knots {:?} -> {:?}", lower.hull_grid, lower.hull_values);
    println!("upper hull knots {:?} -> {:?}", upper.hull_grid, upper.hull_values);
    println!("lower slopes {:?}", lower.slopes());

    println!("{:>5} {:>8} {:>8} {:>11} {:>8}", "t", "f**", "hull", "biconj", "f^");
    for k in 0..=8 {
        let t = k as f64 * 0.5;
        let w = lower.weights(t)?;
        println!(
            "{t:>5.1} {:>8.4} {:>8.4} {:>11.4} {:>8.4}   knots ({}, {}) lambda {:.3}",
            lower.eval(t)?,
            lower.hull_values[w.left] * w.lambda + lower.hull_values[w.right] * (1.0 - w.lambda),
            biconjugate_eval(&f, t)?,
            upper.eval(t)?,
            w.left,
            w.right,
            w.lambda
        );
    }
    Ok(())
}
