//! Homogenized amplitude coefficients for stochastic Burgers: truncated sums and the limit.
//!
//! ```text
//! cargo run --example coefficients
//! ```

use hmm_spde::amplitude::{burgers_homog_coeffs, homog_coeffs_limit, homog_coeffs_model, Truncation};
use hmm_spde::spectral::{ModelKind, ModelSpec, NoiseRule, Scaling, Basis};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = NoiseRule::Constant(1.0);
    println!("pair series (modes 2..=M+1)");
    println!("{:>4} {:>16} {:>16}", "M", "A", "C");
    for m in 1..=6 {
        let c = burgers_homog_coeffs(&q, 0.0, Truncation::Modes(m))?;
        println!("{m:>4} {:>16.12} {:>16.12}", c.a, c.c);
    }
    let inf = burgers_homog_coeffs(&q, 0.0, Truncation::Infinite)?;
    println!("{:>4} {:>16.12} {:>16.12}  (tail bound {:.1e})", "inf", inf.a, inf.c, inf.tail_bound);

    println!("\ngeneral series over the fast modes of a truncated system");
    for m in 1..=4 {
        let model = ModelSpec::burgers_default(m + 1, 0.0)?;
        let c = homog_coeffs_model(&model, m)?;
        println!("{m:>4} A={:.12} B={:.12} C={:.12} D={:.12}", c.a, c.b, c.c, c.d);
    }

    let ks = ModelSpec::builtin(ModelKind::Ks, Basis::Sine, 5, q, 0.0, Scaling::Diffusive, 0.05)?;
    let c = homog_coeffs_limit(&ks)?;
    println!("\nKuramoto-Sivashinsky limit: A={:.12} B={:.12} C={:.12} D={:.12}", c.a, c.b, c.c, c.d);
    Ok(())
}
