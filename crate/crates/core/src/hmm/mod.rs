//! Heterogeneous multiscale micro-macro solver.
//!
//! Diffusive scaling: an auxiliary pair `(Y1, Y2)` is run with the slow state frozen, time
//! averages along it estimate the effective drift and diffusion, and one Euler-Maruyama macro
//! step follows. Everything is written in the dimensionless micro step `h`, so no `eps` is
//! needed. Advective scaling: the fast chain is run directly and the averaged slow drift
//! drives an explicit Euler macro step.

mod micro;
mod params;

pub use micro::{estimate_effective_coeffs, micro_solve_advective, micro_solve_diffusive, EffectiveCoeffs, MicroPaths, MicroState};
pub use params::{stability_max_step, HmmParams};

use micro::{advective_chain, EstimatorSums};

use crate::error::{Error, Result};
use crate::sde::{BrownianPath, Purpose, RngFactory, StreamId};
use crate::spectral::TruncatedSystem;

/// Anything that yields effective coefficients at a macro state.
pub trait CoeffSource {
    /// `step` is the macro step index; sources use it to pick their random streams.
    fn estimate(&mut self, x: &[f64], step: usize) -> Result<EffectiveCoeffs>;
}

/// Constant coefficients, for tests and reference runs.
#[derive(Debug, Clone)]
pub struct FixedCoeffs(pub EffectiveCoeffs);

impl CoeffSource for FixedCoeffs {
    fn estimate(&mut self, _x: &[f64], _step: usize) -> Result<EffectiveCoeffs> {
        Ok(self.0.clone())
    }
}

/// Diffusive HMM estimator with `K` warm-restarted micro samples.
///
/// Sample `j` at macro step `n` draws from stream `(Micro, j, n)`.
#[derive(Debug, Clone)]
pub struct HmmEstimator<'a> {
    system: &'a TruncatedSystem,
    params: &'a HmmParams,
    factory: RngFactory,
    states: Vec<MicroState>,
}

impl<'a> HmmEstimator<'a> {
    pub fn new(system: &'a TruncatedSystem, params: &'a HmmParams, factory: RngFactory) -> Result<Self> {
        params.validate(system)?;
        Ok(Self {
            system,
            params,
            factory,
            states: vec![MicroState::zeros(system.fast_dim()); params.k],
        })
    }

    pub fn states(&self) -> &[MicroState] {
        &self.states
    }
}

impl CoeffSource for HmmEstimator<'_> {
    fn estimate(&mut self, x: &[f64], step: usize) -> Result<EffectiveCoeffs> {
        let mut sums = EstimatorSums::new(self.system.slow_dim());
        for (j, state) in self.states.iter_mut().enumerate() {
            let mut stream = self.factory.stream(StreamId::new(Purpose::Micro, j as u32, step as u32));
            let (paths, next) = micro_solve_diffusive(self.system, x, self.params, state, &mut stream)
                .map_err(|e| restep(e, step))?;
            sums.add(self.system, x, self.params, &paths)?;
            *state = next;
        }
        Ok(sums.finish(self.params))
    }
}

fn restep(e: Error, step: usize) -> Error {
    match e {
        Error::Diverged { stage, .. } => Error::Diverged { stage, step },
        other => other,
    }
}

/// Macro trajectory together with the estimate taken at every macro state.
#[derive(Debug, Clone)]
pub struct MacroRun {
    pub dt: f64,
    /// `X_0, ..., X_N`.
    pub states: Vec<f64>,
    /// Estimates at `X_0, ..., X_N`; the last one is not used for stepping.
    pub estimates: Vec<EffectiveCoeffs>,
}

impl MacroRun {
    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len()).map(|n| n as f64 * self.dt).collect()
    }

    /// Fraction of estimates whose variance was clamped at zero.
    pub fn clamped_fraction(&self) -> f64 {
        self.estimates.iter().filter(|e| e.clamped).count() as f64 / self.estimates.len().max(1) as f64
    }
}

/// `X_{n+1} = X_n + dt abar_n + sqrt(sigbar2_n) dW_n` for a scalar slow variable.
pub fn hmm_macro_run_diffusive(source: &mut dyn CoeffSource, path: &BrownianPath, x0: f64) -> Result<MacroRun> {
    if !x0.is_finite() {
        return Err(Error::Invalid("initial state must be finite".into()));
    }
    let n = path.len();
    let mut states = Vec::with_capacity(n + 1);
    let mut estimates = Vec::with_capacity(n + 1);
    let mut x = x0;
    states.push(x);
    for (step, dw) in path.increments.iter().enumerate() {
        let e = source.estimate(&[x], step)?;
        if e.abar.len() != 1 {
            return Err(Error::Invalid("the macro solver handles a scalar slow variable only".into()));
        }
        x += path.dt * e.drift() + e.diffusion() * dw;
        if !x.is_finite() {
            return Err(Error::Diverged { stage: "macro", step });
        }
        states.push(x);
        estimates.push(e);
    }
    estimates.push(source.estimate(&[x], n)?);
    Ok(MacroRun {
        dt: path.dt,
        states,
        estimates,
    })
}

/// Advective HMM: `X_{n+1} = X_n + dt abar_n`, where `abar_n` averages `a = a0 + eps a1` over
/// the window of `K` warm-restarted fast chains.
pub fn hmm_macro_run_advective(system: &TruncatedSystem, params: &HmmParams, factory: RngFactory, x0: f64) -> Result<MacroRun> {
    params.validate(system)?;
    let eps = params
        .epsilon
        .ok_or_else(|| Error::Invalid("the advective solver needs epsilon".into()))?;
    if system.slow_dim() != 1 {
        return Err(Error::Invalid("the macro solver handles a scalar slow variable only".into()));
    }
    let mut y = vec![vec![0.0; system.fast_dim()]; params.k];
    let mut x = x0;
    let mut states = vec![x];
    let mut estimates = Vec::with_capacity(params.n_macro + 1);
    for step in 0..=params.n_macro {
        let mut sum = 0.0;
        for (j, yj) in y.iter_mut().enumerate() {
            let mut stream = factory.stream(StreamId::new(Purpose::Micro, j as u32, step as u32));
            let form = &system.slow_forms()[0];
            let nu = system.nu();
            *yj = advective_chain(system, &[x], params, yj, &mut stream, |l, u| {
                if l >= params.lt {
                    sum += form.eval(u) + eps * nu * u[0];
                }
            })
            .map_err(|e| restep(e, step))?;
        }
        let abar = sum / (params.k * params.l) as f64;
        estimates.push(EffectiveCoeffs::scalar(abar, 0.0));
        if step == params.n_macro {
            break;
        }
        x += params.dt_macro * abar;
        if !x.is_finite() {
            return Err(Error::Diverged { stage: "macro", step });
        }
        states.push(x);
    }
    Ok(MacroRun {
        dt: params.dt_macro,
        states,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::homog_coeffs_model;
    use crate::sde::RngStream;
    use crate::spectral::{build_truncated_system, ModelSpec, Scaling};

    fn macro_path(seed: u64, dt: f64, n: usize) -> BrownianPath {
        let mut s: RngStream = RngFactory::new(seed).stream(StreamId::new(Purpose::Macro, 0, 0));
        BrownianPath::generate(&mut s, dt, n).unwrap()
    }

    #[test]
    fn zero_coefficients_freeze_the_state() {
        let mut src = FixedCoeffs(EffectiveCoeffs::scalar(0.0, 0.0));
        let run = hmm_macro_run_diffusive(&mut src, &macro_path(1, 0.1, 10), 0.4).unwrap();
        assert!(run.states.iter().all(|&x| x == 0.4));
        assert_eq!(run.states.len(), 11);
        assert_eq!(run.estimates.len(), 11);
    }

    #[test]
    fn replay_is_bitwise_identical() {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let p = HmmParams::from_p(3);
        let run = |seed| {
            let mut est = HmmEstimator::new(&sys, &p, RngFactory::new(seed)).unwrap();
            hmm_macro_run_diffusive(&mut est, &macro_path(seed, 0.1, 10), 1.0).unwrap().states
        };
        let (a, b) = (run(5), run(5));
        assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_ne!(a, run(6));
    }

    #[test]
    fn estimate_near_truncated_coefficients() {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let exact = homog_coeffs_model(&model, 2).unwrap();
        let x = 1.0;
        let p = HmmParams::from_p(5);
        let mut est = HmmEstimator::new(&sys, &p, RngFactory::new(3)).unwrap();
        let e = est.estimate(&[x], 0).unwrap();
        let err = (e.drift() - exact.drift(x)).abs() + (e.diffusion() - exact.diffusion(x)).abs();
        assert!(err < 0.1 * exact.diffusion(x), "error {err}");
    }

    #[test]
    fn constant_slow_drift_advective() {
        // a0 = 0 and a1 = nu x with x frozen at 0 gives zero drift; with nu and x0 the
        // drift is eps nu x and the Euler recursion is geometric
        let model = ModelSpec::custom(vec![0.0, 2.0], 1, &[], vec![0.0, 1.0], 0.5, Scaling::Advective, 0.2).unwrap();
        let sys = build_truncated_system(&model, 1).unwrap();
        let p = HmmParams::from_p(2).with_epsilon(0.2).with_macro(0.1, 5);
        let run = hmm_macro_run_advective(&sys, &p, RngFactory::new(1), 1.0).unwrap();
        for (n, x) in run.states.iter().enumerate() {
            assert!((x - 1.01f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn advective_burgers_stays_put_on_average() {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let drift = |p: u32| {
            let params = HmmParams::from_p(p).with_epsilon(0.05).with_macro(0.1, 10);
            let run = hmm_macro_run_advective(&sys, &params, RngFactory::new(9), 0.5).unwrap();
            (run.states.last().unwrap() - 0.5).abs()
        };
        assert!(drift(4) < 0.05);
    }

    #[test]
    fn unstable_step_is_refused() {
        let model = ModelSpec::burgers_default(5, 0.0).unwrap();
        let sys = build_truncated_system(&model, 4).unwrap();
        let p = HmmParams::from_p(3);
        assert!(matches!(HmmEstimator::new(&sys, &p, RngFactory::new(1)), Err(Error::Unstable { .. })));
    }
}
