//! The auxiliary chain of a single fast mode is a discretized Ornstein-Uhlenbeck process;
//! its sample variance approaches `q^2 / (lambda (2 - lambda h))`.
//!
//! ```text
//! cargo run --release --example ou_micro_chain
//! ```

use hmm_spde::amplitude::ou_stationary_variance;
use hmm_spde::hmm::{micro_solve_diffusive, HmmParams, MicroState};
use hmm_spde::sde::{Purpose, RngFactory, StreamId};
use hmm_spde::spectral::{build_truncated_system, ModelSpec, Scaling};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::custom(vec![0.0, 3.0], 1, &[], vec![0.0, 1.0], 0.0, Scaling::Diffusive, 0.05)?;
    let system = build_truncated_system(&model, 1)?;
    for h in [0.25, 0.125, 0.0625] {
        let mut params = HmmParams::from_p(3);
        (params.h, params.lt, params.l, params.lp) = (h, 0, 1_000_000, 0);
        let mut stream = RngFactory::new(8).stream(StreamId::new(Purpose::Aux, 0, 0));
        let (paths, _) = micro_solve_diffusive(&system, &[0.0], &params, &MicroState::zeros(1), &mut stream)?;
        let n = paths.y1_len();
        let xs: Vec<f64> = (100..n).map(|l| paths.y1(l)[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        println!("h={h:<7} sample variance {var:.6}  exact {:.6}", ou_stationary_variance(3.0, 1.0, Some(h))?);
    }
    Ok(())
}
