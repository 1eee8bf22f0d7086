//! Brute-force integration of the two-fast-mode Burgers system at `eps = 0.05` against the
//! amplitude SDE of the same truncation, compared through `E[X_T^2]`.
//!
//! ```text
//! cargo run --release --example direct_vs_amplitude -- 200
//! ```

use hmm_spde::amplitude::homog_coeffs_model;
use hmm_spde::direct::{run_amplitude_em, run_direct_stiff, DirectSettings};
use hmm_spde::harness::mean_se;
use hmm_spde::sde::{BrownianPath, Purpose, RngFactory, StreamId};
use hmm_spde::spectral::{build_truncated_system, ModelSpec};
use rayon::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let replicas: u32 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(200);
    let model = ModelSpec::burgers_default(3, 0.0)?;
    let system = build_truncated_system(&model, 2)?;
    let settings = DirectSettings::new(1.0, 1.0);
    let factory = RngFactory::new(77);

    let direct: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|j| run_direct_stiff(&system, &settings, factory, j).map(|r| r.slow.last().unwrap().powi(2)))
        .collect::<Result<_, _>>()?;

    let coeffs = homog_coeffs_model(&model, 2)?;
    let amp: Vec<f64> = (0..20_000u32)
        .into_par_iter()
        .map(|j| {
            let mut s = factory.stream(StreamId::new(Purpose::Aux, j, 0));
            let path = BrownianPath::generate(&mut s, 1e-3, 1000)?;
            run_amplitude_em(&coeffs, 1.0, &path).map(|x| x.last().unwrap().powi(2))
        })
        .collect::<Result<_, hmm_spde::error::Error>>()?;

    let (md, sd) = mean_se(&direct);
    let (ma, sa) = mean_se(&amp);
    println!("direct    E[X_T^2] = {md:.5} +- {sd:.5} ({replicas} replicas)");
    println!("amplitude E[X_T^2] = {ma:.5} +- {sa:.5}");
    println!("difference {:.5}, two combined standard errors {:.5}", (md - ma).abs(), 2.0 * (sd * sd + sa * sa).sqrt());
    Ok(())
}
