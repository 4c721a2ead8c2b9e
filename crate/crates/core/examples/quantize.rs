//! Equal-probability quantization of lognormal laws.
//!
//! Run with `cargo run --example quantize`.

use mot_cascade::measures::quantize_lognormal;

fn main() -> mot_cascade::Result<()> {
    for m in [1, 3, 7, 15, 50] {
        let mu = quantize_lognormal(-0.02, 0.2, m)?;
        let var = mu.expect(|x| (x - 1.0).powi(2));
        println!("m = {m:>2}: mean {:.12}  variance {var:.6}", mu.mean());
    }
    let mu = quantize_lognormal(0.0, 0.3, 5)?;
    for (x, w) in mu.atoms().iter().zip(mu.weights()) {
        println!("{x:.6}  {w:.3}");
    }
    println!("degenerate: {:?}", quantize_lognormal(0.0, 0.0, 4)?.atoms());
    Ok(())
}
