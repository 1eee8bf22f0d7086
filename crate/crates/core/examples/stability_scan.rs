//! Largest stable micro step per truncation, and what happens on either side of it.
//!
//! ```text
//! cargo run --release --example stability_scan
//! ```

use hmm_spde::hmm::{stability_max_step, HmmEstimator, HmmParams};
use hmm_spde::sde::RngFactory;
use hmm_spde::spectral::{build_truncated_system, burgers_spectrum, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for m in 1..=6 {
        let spectrum = burgers_spectrum(m)?;
        let h_max = stability_max_step(&spectrum, m)?;
        let system = build_truncated_system(&ModelSpec::burgers_default(m + 1, 0.0)?, m)?;
        let mut verdicts = Vec::new();
        for p in 1..=5u32 {
            let params = HmmParams::from_p(p).with_macro(0.1, 1);
            let ok = HmmEstimator::new(&system, &params, RngFactory::new(0)).is_ok();
            verdicts.push(format!("p={p}:{}", if ok { "ok" } else { "unstable" }));
        }
        println!("M={m} lambda_max={:>3} h_max={h_max:.5}  {}", spectrum.lambdas().last().unwrap(), verdicts.join(" "));
    }
    Ok(())
}
