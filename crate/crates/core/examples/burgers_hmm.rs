//! One HMM run for the two-fast-mode Burgers truncation, printing the macro path and the
//! estimated drift and diffusion next to their exact values.
//!
//! ```text
//! cargo run --release --example burgers_hmm -- 5
//! ```

use hmm_spde::amplitude::homog_coeffs_model;
use hmm_spde::harness::macro_path;
use hmm_spde::hmm::{hmm_macro_run_diffusive, HmmEstimator, HmmParams};
use hmm_spde::sde::RngFactory;
use hmm_spde::spectral::{build_truncated_system, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: u32 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(5);
    let model = ModelSpec::burgers_default(3, 0.0)?;
    let system = build_truncated_system(&model, 2)?;
    let exact = homog_coeffs_model(&model, 2)?;
    let mut params = HmmParams::from_p(p).with_macro(0.1, 10);
    params.h /= 4.0;
    let factory = RngFactory::new(11);
    let path = macro_path(factory, params.dt_macro, params.n_macro)?;
    let mut est = HmmEstimator::new(&system, &params, factory)?;
    let run = hmm_macro_run_diffusive(&mut est, &path, 1.0)?;
    println!("p={p} h={} L={} L'={}", params.h, params.l, params.lp);
    println!("{:>5} {:>10} {:>12} {:>12} {:>12} {:>12}", "t", "X", "abar", "a_M", "sigbar", "sig_M");
    for ((t, x), e) in run.times().iter().zip(&run.states).zip(&run.estimates) {
        println!(
            "{t:>5.2} {x:>10.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            e.drift(),
            exact.drift(*x),
            e.diffusion(),
            exact.diffusion(*x)
        );
    }
    println!("clamped estimates: {:.0}%", 100.0 * run.clamped_fraction());
    Ok(())
}
