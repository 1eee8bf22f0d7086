//! Reference solvers: the amplitude SDE, brute-force integration of the full fast-slow
//! system at explicit `eps`, and reconstruction of the spatial field.

use std::f64::consts::PI;

use crate::amplitude::AmplitudeCoeffs;
use crate::error::{Error, Result};
use crate::output::{fmt_num, CsvTable};
use crate::sde::{BrownianPath, Purpose, RngFactory, StreamId};
use crate::spectral::{Basis, Scaling, TruncatedSystem};

/// Euler-Maruyama for `dX = (A X - B X^3) dt + sqrt(2C + D X^2) dW` along `path`.
pub fn run_amplitude_em(coeffs: &AmplitudeCoeffs, x0: f64, path: &BrownianPath) -> Result<Vec<f64>> {
    let mut x = x0;
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(x);
    for (step, dw) in path.increments.iter().enumerate() {
        x += path.dt * coeffs.drift(x) + coeffs.diffusion(x) * dw;
        if !x.is_finite() {
            return Err(Error::Diverged { stage: "amplitude", step });
        }
        out.push(x);
    }
    Ok(out)
}

/// Default cap on `steps * (N + M)` for [`run_direct_stiff`].
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// Settings of one brute-force run.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSettings {
    pub epsilon: f64,
    pub dt_micro: f64,
    pub t_end: f64,
    /// Output spacing; must be a whole multiple of `dt_micro`.
    pub dt_out: f64,
    pub x0: f64,
    pub budget: u128,
}

impl DirectSettings {
    /// `eps = 0.05`, `dt_micro = eps^2 / 64`, output every `0.1`.
    pub fn new(t_end: f64, x0: f64) -> Self {
        let epsilon = 0.05;
        Self {
            epsilon,
            dt_micro: epsilon * epsilon / 64.0,
            t_end,
            dt_out: 0.1,
            x0,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Slow path (and fast modes) sampled on the output grid.
#[derive(Debug, Clone)]
pub struct DirectRun {
    pub times: Vec<f64>,
    pub slow: Vec<f64>,
    /// Fast state at each output time, indexed like `TruncatedSystem::fast_modes`.
    pub fast: Vec<Vec<f64>>,
}

/// Euler-Maruyama on the full truncated system with explicit `eps`.
///
/// Diffusive: `dx = (a0/eps + nu x) dt`, `dy = (-Lambda y/eps^2 + b0/eps + nu y) dt + Q dW/eps`.
/// Advective: `dx = (a0 + eps nu x) dt`, `dy = (-Lambda y/eps + b0 + eps nu y) dt + Q dW/sqrt(eps)`.
/// Fast modes start at zero. Noise comes from stream `(Direct, replica, 0)`.
pub fn run_direct_stiff(system: &TruncatedSystem, settings: &DirectSettings, factory: RngFactory, replica: u32) -> Result<DirectRun> {
    let s = settings;
    if !(s.epsilon > 0.0 && s.dt_micro > 0.0 && s.t_end >= 0.0 && s.dt_out > 0.0) {
        return Err(Error::Invalid("epsilon, steps and horizon must be positive".into()));
    }
    if system.slow_dim() != 1 {
        return Err(Error::Invalid("direct runs handle a scalar slow variable only".into()));
    }
    let eps = s.epsilon;
    let rate_scale = match system.scaling() {
        Scaling::Diffusive => eps * eps,
        Scaling::Advective => eps,
    };
    let (mode, lmax) = system.lambda_max();
    let product = s.dt_micro * lmax / rate_scale;
    if product >= 2.0 {
        return Err(Error::Unstable {
            h: s.dt_micro / rate_scale,
            eigenvalue: lmax,
            mode,
            product,
        });
    }
    let per_out = (s.dt_out / s.dt_micro).round();
    if per_out < 1.0 || (per_out * s.dt_micro - s.dt_out).abs() > 1e-9 * s.dt_out {
        return Err(Error::Invalid("output spacing must be a multiple of the micro step".into()));
    }
    let per_out = per_out as u128;
    let n_out = (s.t_end / s.dt_out).round() as u128;
    let (m, n) = (system.fast_dim(), system.slow_dim());
    let requested = n_out * per_out * (n + m) as u128;
    if requested > s.budget {
        return Err(Error::Budget {
            requested,
            budget: s.budget,
        });
    }
    let (slow_scale, fast_quad, fast_noise) = match system.scaling() {
        Scaling::Diffusive => (1.0 / eps, 1.0 / eps, 1.0 / eps),
        Scaling::Advective => (1.0, 1.0, 1.0 / eps.sqrt()),
    };
    let lin = match system.scaling() {
        Scaling::Diffusive => system.nu(),
        Scaling::Advective => eps * system.nu(),
    };
    let dt = s.dt_micro;
    let sq = dt.sqrt();
    let decay: Vec<f64> = system.lambdas().iter().map(|l| 1.0 - dt * l / rate_scale + dt * lin).collect();
    let kick: Vec<f64> = system.noise().iter().map(|q| sq * q * fast_noise).collect();
    let mut stream = factory.stream(StreamId::new(Purpose::Direct, replica, 0));
    let mut u = vec![0.0; n + m];
    u[0] = s.x0;
    let mut next = vec![0.0; n + m];
    let mut times = vec![0.0];
    let mut slow = vec![s.x0];
    let mut fast = vec![u[n..].to_vec()];
    let mut step = 0usize;
    for out in 1..=n_out {
        for _ in 0..per_out {
            next[0] = u[0] + dt * (slow_scale * system.slow_forms()[0].eval(&u) + lin * u[0]);
            for (i, f) in system.fast_forms().iter().enumerate() {
                next[n + i] = decay[i] * u[n + i] + dt * fast_quad * f.eval(&u) + kick[i] * stream.gaussian();
            }
            std::mem::swap(&mut u, &mut next);
            step += 1;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { stage: "direct", step });
        }
        times.push(out as f64 * s.dt_out);
        slow.push(u[0]);
        fast.push(u[n..].to_vec());
    }
    Ok(DirectRun { times, slow, fast })
}

/// Space-time samples `u(x_i, t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub times: Vec<f64>,
    pub grid: Vec<f64>,
    /// `values[n][i] = u(grid[i], times[n])`.
    pub values: Vec<Vec<f64>>,
}

impl Field {
    /// Long-form table `t,x,u`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["t", "x", "u"]);
        for (tn, row) in self.times.iter().zip(&self.values) {
            for (x, u) in self.grid.iter().zip(row) {
                t.push(vec![fmt_num(*tn), fmt_num(*x), fmt_num(*u)]);
            }
        }
        t
    }
}

/// Fast-mode amplitudes to add to the slow reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct FastModes<'a> {
    /// Global mode index of each column.
    pub modes: &'a [usize],
    pub values: &'a [Vec<f64>],
}

/// `u(x, t_n) = X_n e_1(x) + sum_k Y_{n,k} e_k(x)` on a grid inside `[0, pi]`.
pub fn reconstruct_field(times: &[f64], slow: &[f64], fast: Option<FastModes<'_>>, basis: Basis, grid: &[f64]) -> Result<Field> {
    if times.len() != slow.len() {
        return Err(Error::GridMismatch(format!("{} times for {} states", times.len(), slow.len())));
    }
    if let Some(x) = grid.iter().find(|&&x| !(0.0..=PI).contains(&x)) {
        return Err(Error::Invalid(format!("grid point {x} outside [0, pi]")));
    }
    if let Some(f) = &fast {
        if f.values.len() != slow.len() || f.values.iter().any(|r| r.len() != f.modes.len()) {
            return Err(Error::GridMismatch("fast-mode table does not match the slow series".into()));
        }
    }
    let values = slow
        .iter()
        .enumerate()
        .map(|(n, &x_n)| {
            grid.iter()
                .map(|&x| {
                    let mut u = x_n * basis.eval(1, x);
                    if let Some(f) = &fast {
                        for (&k, y) in f.modes.iter().zip(&f.values[n]) {
                            u += y * basis.eval(k, x);
                        }
                    }
                    u
                })
                .collect()
        })
        .collect();
    Ok(Field {
        times: times.to_vec(),
        grid: grid.to_vec(),
        values,
    })
}

/// `n` equally spaced points covering `[0, pi]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}
