//! HMM, truncated amplitude and limit amplitude trajectories on one Brownian path, with the
//! sup-distance of the HMM path to the truncated one as `p` grows.
//!
//! ```text
//! cargo run --release --example trajectory_compare
//! ```

use hmm_spde::harness::trajectory_compare;
use hmm_spde::hmm::HmmParams;
use hmm_spde::spectral::ModelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = ModelSpec::burgers_default(3, 0.0)?;
    let seed = 21;
    for p in 2..=5 {
        let mut params = HmmParams::from_p(p).with_macro(0.1, 100);
        params.h /= 4.0;
        let t = trajectory_compare(&model, 2, &params, seed, 1.0)?;
        let (hmm, hom, inf) = (t.x_hmm.unwrap(), t.x_hom.unwrap(), t.x_inf.unwrap());
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!(
            "p={p}: sup|X_hmm - X_hom| = {:.4}  sup|X_hom - X_inf| = {:.4}  X_T = ({:.4}, {:.4}, {:.4})",
            sup(&hmm, &hom),
            sup(&hom, &inf),
            hmm.last().unwrap(),
            hom.last().unwrap(),
            inf.last().unwrap()
        );
    }
    Ok(())
}
