//! Advective HMM on a model whose averaged equation is `dx/dt = x^2 + 1`, compared with `tan(t)`.
//!
//! ```text
//! cargo run --release --example advective_tangent
//! ```

use hmm_spde::amplitude::{averaged_closed_form, averaged_coeffs};
use hmm_spde::hmm::{hmm_macro_run_advective, HmmParams};
use hmm_spde::sde::RngFactory;
use hmm_spde::spectral::{build_truncated_system, ModelSpec, Scaling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.01;
    let model = ModelSpec::custom(
        vec![0.0, 2.0, 5.0],
        1,
        &[(1, 1, 1, 1.0), (2, 2, 1, 10.0 / 3.0), (3, 3, 1, 5.0 / 3.0)],
        vec![0.0, 1.0, 1.0],
        0.0,
        Scaling::Advective,
        eps,
    )?;
    let avg = averaged_coeffs(&model, 2)?;
    println!("averaged equation: dx/dt = {} x^2 + {}", avg.d, avg.e);
    let system = build_truncated_system(&model, 2)?;
    for p in 4..=7 {
        let params = HmmParams::from_p(p).with_epsilon(eps).with_macro(0.01, 100);
        let run = hmm_macro_run_advective(&system, &params, RngFactory::new(2024), 0.0)?;
        let mut worst: f64 = 0.0;
        for (x, t) in run.states.iter().zip(run.times()) {
            worst = worst.max((x - averaged_closed_form(&avg, 0.0, t)?).abs());
        }
        println!("p = {p}: max |X_n - tan(t_n)| = {worst:.4}");
    }
    Ok(())
}
