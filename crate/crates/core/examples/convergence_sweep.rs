//! Estimator error against the accuracy index `p` for several truncations.
//!
//! ```text
//! cargo run --release --example convergence_sweep -- 2 1 6
//! ```

use hmm_spde::harness::{convergence_sweep, log2_slope, SweepOptions};
use hmm_spde::spectral::ModelSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let m = args.first().copied().unwrap_or(2);
    let (lo, hi) = (args.get(1).copied().unwrap_or(1) as u32, args.get(2).copied().unwrap_or(5) as u32);
    let model = ModelSpec::burgers_default(m + 1, 0.0)?;
    let ps: Vec<u32> = (lo..=hi).collect();
    let seeds: Vec<u64> = (0..8).collect();
    let opts = SweepOptions {
        h_scale: std::env::var("H_SCALE").ok().and_then(|v| v.parse().ok()).unwrap_or(1.0),
        ..SweepOptions::default()
    };
    let table = convergence_sweep(&model, m, &ps, &seeds, &opts)?;
    print!("{}", table.to_csv().render());
    let ok: Vec<_> = table.ok_rows().collect();
    if ok.len() >= 2 {
        let x: Vec<f64> = ok.iter().map(|r| r.p as f64).collect();
        let y: Vec<f64> = ok.iter().map(|r| r.e_p).collect();
        println!("log2 slope of E_p over stable rows: {:.3}", log2_slope(&x, &y));
    }
    Ok(())
}
