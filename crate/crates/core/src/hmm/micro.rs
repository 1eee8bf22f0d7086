use serde::Serialize;

use super::HmmParams;
use crate::error::{Error, Result};
use crate::sde::RngStream;
use crate::spectral::TruncatedSystem;

/// Final micro states carried from one macro step to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroState {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl MicroState {
    pub fn zeros(m: usize) -> Self {
        Self {
            y1: vec![0.0; m],
            y2: vec![0.0; m],
        }
    }
}

/// Micro paths stored row-major, one row of `m` values per micro step.
#[derive(Debug, Clone)]
pub struct MicroPaths {
    m: usize,
    y1: Vec<f64>,
    y2: Vec<f64>,
}

impl MicroPaths {
    pub fn fast_dim(&self) -> usize {
        self.m
    }
    pub fn y1_len(&self) -> usize {
        self.y1.len() / self.m
    }
    pub fn y2_len(&self) -> usize {
        self.y2.len() / self.m
    }
    pub fn y1(&self, l: usize) -> &[f64] {
        &self.y1[l * self.m..(l + 1) * self.m]
    }
    pub fn y2(&self, l: usize) -> &[f64] {
        &self.y2[l * self.m..(l + 1) * self.m]
    }
}

fn diverged(stage: &'static str, step: usize) -> Error {
    Error::Diverged { stage, step }
}

/// Runs the auxiliary pair with the slow state frozen at `x`:
///
/// `Y1 <- Y1 - h Lambda Y1 + sqrt(h) Q J` for `lT + L + L' - 1` steps and
/// `Y2 <- Y2 - h Lambda Y2 + h b0(x, Y1)` for `lT + L - 1` steps, starting from `state`.
/// Returns the paths and the warm-restart state (the last entry of each path).
pub fn micro_solve_diffusive(
    system: &TruncatedSystem,
    x: &[f64],
    params: &HmmParams,
    state: &MicroState,
    stream: &mut RngStream,
) -> Result<(MicroPaths, MicroState)> {
    let m = system.fast_dim();
    let n = system.slow_dim();
    if x.len() != n || state.y1.len() != m || state.y2.len() != m {
        return Err(Error::Invalid("micro state dimensions do not match the system".into()));
    }
    let h = params.h;
    let decay: Vec<f64> = system.lambdas().iter().map(|l| 1.0 - h * l).collect();
    let kick: Vec<f64> = system.noise().iter().map(|q| h.sqrt() * q).collect();
    let b1_weight = if params.include_b1 {
        h * params.epsilon.unwrap_or(0.0) * system.nu()
    } else {
        0.0
    };
    let (len1, len2) = (params.y1_len(), params.y2_len());
    let mut y1 = Vec::with_capacity(len1 * m);
    let mut y2 = Vec::with_capacity(len2 * m);
    y1.extend_from_slice(&state.y1);
    y2.extend_from_slice(&state.y2);
    let mut u = Vec::with_capacity(n + m);
    u.extend_from_slice(x);
    u.extend_from_slice(&state.y1);
    for step in 1..len1 {
        let prev = (step - 1) * m;
        if step < len2 {
            for (i, f) in system.fast_forms().iter().enumerate() {
                let v = decay[i] * y2[prev + i] + h * f.eval(&u) + b1_weight * u[n + i];
                y2.push(v);
            }
        }
        for i in 0..m {
            let v = decay[i] * y1[prev + i] + kick[i] * stream.gaussian();
            y1.push(v);
            u[n + i] = v;
        }
        if u[n..].iter().any(|v| !v.is_finite()) || (step < len2 && y2[step * m..].iter().any(|v| !v.is_finite())) {
            return Err(diverged("micro", step));
        }
    }
    let next = MicroState {
        y1: y1[(len1 - 1) * m..].to_vec(),
        y2: y2[(len2 - 1) * m..].to_vec(),
    };
    Ok((MicroPaths { m, y1, y2 }, next))
}

/// Estimated effective drift and squared diffusion at one macro state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveCoeffs {
    pub abar: Vec<f64>,
    /// Symmetrized `N x N` estimate of the squared diffusion.
    pub sigbar2: Vec<Vec<f64>>,
    /// True when a negative diagonal variance estimate was raised to zero.
    pub clamped: bool,
}

impl EffectiveCoeffs {
    pub fn scalar(abar: f64, sigbar2: f64) -> Self {
        Self {
            abar: vec![abar],
            sigbar2: vec![vec![sigbar2]],
            clamped: false,
        }
    }

    pub fn drift(&self) -> f64 {
        self.abar[0]
    }

    /// `sqrt(sigbar2)` for a scalar slow variable.
    pub fn diffusion(&self) -> f64 {
        self.sigbar2[0][0].sqrt()
    }
}

/// Unnormalized window sums accumulated over micro samples.
#[derive(Debug, Clone)]
pub(crate) struct EstimatorSums {
    n: usize,
    linear: Vec<f64>,
    correction: Vec<f64>,
    lagged_drift: Vec<f64>,
    lagged_cov: Vec<f64>,
    samples: usize,
}

impl EstimatorSums {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            linear: vec![0.0; n],
            correction: vec![0.0; n],
            lagged_drift: vec![0.0; n],
            lagged_cov: vec![0.0; n * n],
            samples: 0,
        }
    }

    pub(crate) fn add(&mut self, system: &TruncatedSystem, x: &[f64], params: &HmmParams, paths: &MicroPaths) -> Result<()> {
        let (n, m) = (self.n, system.fast_dim());
        let (lt, l, lp) = (params.lt, params.l, params.lp);
        if paths.y1_len() < lt + l + lp || paths.y2_len() < lt + l {
            return Err(Error::Invalid(format!(
                "micro paths of length {}/{} are too short for window {lt}+{l} with lag {lp}",
                paths.y1_len(),
                paths.y2_len()
            )));
        }
        let len1 = lt + l + lp;
        // prefix sums of a0 and d a0/dx along the Y1 path
        let mut pa = vec![0.0; (len1 + 1) * n];
        let mut pg = vec![0.0; (len1 + 1) * n * n];
        let mut a0 = vec![0.0; len1 * n];
        let mut u = vec![0.0; n + m];
        u[..n].copy_from_slice(x);
        for s in 0..len1 {
            u[n..].copy_from_slice(paths.y1(s));
            for (r, f) in system.slow_forms().iter().enumerate() {
                let v = f.eval(&u);
                a0[s * n + r] = v;
                pa[(s + 1) * n + r] = pa[s * n + r] + v;
                for c in 0..n {
                    let idx = r * n + c;
                    pg[(s + 1) * n * n + idx] = pg[s * n * n + idx] + f.partial(&u, c);
                }
            }
        }
        let mut dir = vec![0.0; n + m];
        let a1 = system.a1(x, paths.y1(lt));
        for s in lt..lt + l {
            u[n..].copy_from_slice(paths.y1(s));
            dir[n..].copy_from_slice(paths.y2(s));
            let (lo, hi) = (s, s + lp + 1);
            for (r, f) in system.slow_forms().iter().enumerate() {
                self.linear[r] += a1[r];
                self.correction[r] += f.directional(&u, &dir);
                let mut g = 0.0;
                for c in 0..n {
                    let idx = r * n + c;
                    g += (pg[hi * n * n + idx] - pg[lo * n * n + idx]) * a0[s * n + c];
                }
                self.lagged_drift[r] += g;
                let sa = pa[hi * n + r] - pa[lo * n + r];
                for c in 0..n {
                    self.lagged_cov[r * n + c] += sa * a0[s * n + c];
                }
            }
        }
        self.samples += 1;
        Ok(())
    }

    pub(crate) fn finish(&self, params: &HmmParams) -> EffectiveCoeffs {
        let n = self.n;
        let kl = (self.samples * params.l) as f64;
        let h = params.h;
        let abar = (0..n)
            .map(|r| (self.linear[r] + self.correction[r]) / kl + h * self.lagged_drift[r] / kl)
            .collect();
        let mut clamped = false;
        let mut sig = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..n {
                sig[r][c] = h * (self.lagged_cov[r * n + c] + self.lagged_cov[c * n + r]) / kl;
            }
            if sig[r][r] < 0.0 {
                sig[r][r] = 0.0;
                clamped = true;
            }
        }
        EffectiveCoeffs {
            abar,
            sigbar2: sig,
            clamped,
        }
    }
}

/// Time-ensemble estimates of the effective drift and squared diffusion at `x`.
///
/// With window `l in [lT, lT+L-1]` and lags `l' in 0..=L'`, per sample:
/// drift `= avg a1 + avg d_y a0(Y1_l) Y2_l + (h/L) sum_l sum_l' d_x a0(Y1_{l+l'}) a0(Y1_l)` and
/// squared diffusion `= (2h/L) sum_l sum_l' a0(Y1_{l+l'}) a0(Y1_l)`, averaged over samples.
pub fn estimate_effective_coeffs(
    system: &TruncatedSystem,
    x: &[f64],
    params: &HmmParams,
    samples: &[MicroPaths],
) -> Result<EffectiveCoeffs> {
    if samples.is_empty() {
        return Err(Error::Invalid("at least one micro sample is required".into()));
    }
    let mut sums = EstimatorSums::new(system.slow_dim());
    for s in samples {
        sums.add(system, x, params, s)?;
    }
    Ok(sums.finish(params))
}

/// Advective fast chain `Y <- Y - h Lambda Y + eps h b(x, Y) + sqrt(h) Q J` with `b = b0 + eps b1`.
///
/// Runs `lT + L - 1` steps from `y0` and hands every state (including `y0`) to `visit`.
/// Returns the final state.
pub(crate) fn advective_chain(
    system: &TruncatedSystem,
    x: &[f64],
    params: &HmmParams,
    y0: &[f64],
    stream: &mut RngStream,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<Vec<f64>> {
    let eps = params
        .epsilon
        .ok_or_else(|| Error::Invalid("the advective micro solver needs epsilon".into()))?;
    let (n, m) = (system.slow_dim(), system.fast_dim());
    if x.len() != n || y0.len() != m {
        return Err(Error::Invalid("micro state dimensions do not match the system".into()));
    }
    let h = params.h;
    let decay: Vec<f64> = system.lambdas().iter().map(|l| 1.0 - h * l).collect();
    let kick: Vec<f64> = system.noise().iter().map(|q| h.sqrt() * q).collect();
    let nu = system.nu();
    let mut u = Vec::with_capacity(n + m);
    u.extend_from_slice(x);
    u.extend_from_slice(y0);
    let mut next = vec![0.0; m];
    visit(0, &u);
    for step in 1..params.y2_len() {
        for (i, f) in system.fast_forms().iter().enumerate() {
            let y = u[n + i];
            let b = f.eval(&u) + eps * nu * y;
            next[i] = decay[i] * y + eps * h * b + kick[i] * stream.gaussian();
        }
        u[n..].copy_from_slice(&next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(diverged("micro", step));
        }
        visit(step, &u);
    }
    Ok(u[n..].to_vec())
}

/// Advective micro path: `lT + L` states starting at `y0` (row-major), plus the final state.
pub fn micro_solve_advective(
    system: &TruncatedSystem,
    x: &[f64],
    params: &HmmParams,
    y0: &[f64],
    stream: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = system.slow_dim();
    let mut path = Vec::with_capacity(params.y2_len() * system.fast_dim());
    let last = advective_chain(system, x, params, y0, stream, |_, u| path.extend_from_slice(&u[n..]))?;
    Ok((path, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{Purpose, RngFactory, StreamId};
    use crate::spectral::{build_truncated_system, ModelSpec, Scaling};

    fn stream(seed: u64) -> RngStream {
        RngFactory::new(seed).stream(StreamId::new(Purpose::Micro, 0, 0))
    }

    fn single_mode(q: f64, coupling: f64) -> TruncatedSystem {
        let model = ModelSpec::custom(
            vec![0.0, 3.0],
            1,
            &[(1, 2, 1, coupling), (1, 1, 2, coupling)],
            vec![0.0, q],
            0.0,
            Scaling::Diffusive,
            0.1,
        )
        .unwrap();
        build_truncated_system(&model, 1).unwrap()
    }

    #[test]
    fn null_dynamics_stay_zero() {
        let sys = single_mode(0.0, 0.0);
        let p = HmmParams::from_p(2);
        let (paths, next) = micro_solve_diffusive(&sys, &[0.7], &p, &MicroState::zeros(1), &mut stream(1)).unwrap();
        assert!((0..paths.y1_len()).all(|l| paths.y1(l)[0] == 0.0));
        assert!((0..paths.y2_len()).all(|l| paths.y2(l)[0] == 0.0));
        assert_eq!(next, MicroState::zeros(1));
    }

    #[test]
    fn path_lengths_and_warm_restart() {
        let sys = single_mode(1.0, 0.5);
        let p = HmmParams::from_p(2);
        let (paths, next) = micro_solve_diffusive(&sys, &[0.3], &p, &MicroState::zeros(1), &mut stream(2)).unwrap();
        assert_eq!(paths.y1_len(), 16 + 64 + 8);
        assert_eq!(paths.y2_len(), 16 + 64);
        assert_eq!(next.y1, paths.y1(paths.y1_len() - 1));
        assert_eq!(next.y2, paths.y2(paths.y2_len() - 1));
        let (again, _) = micro_solve_diffusive(&sys, &[0.3], &p, &next, &mut stream(3)).unwrap();
        assert_eq!(again.y1(0), next.y1.as_slice());
        assert_eq!(again.y2(0), next.y2.as_slice());
    }

    #[test]
    fn leading_process_has_discrete_ou_variance() {
        let sys = single_mode(1.0, 0.0);
        let mut p = HmmParams::from_p(3);
        p.l = 1_000_000;
        p.lp = 1;
        let (paths, _) = micro_solve_diffusive(&sys, &[0.0], &p, &MicroState::zeros(1), &mut stream(4)).unwrap();
        let vals: Vec<f64> = (1000..paths.y1_len()).map(|l| paths.y1(l)[0]).collect();
        let nn = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / nn;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nn;
        assert!((var - 1.0 / 4.875).abs() < 3e-3, "{var}");
    }

    #[test]
    fn pure_linear_drift() {
        let model = ModelSpec::custom(vec![0.0, 3.0], 1, &[], vec![0.0, 1.0], 0.4, Scaling::Diffusive, 0.1).unwrap();
        let sys = build_truncated_system(&model, 1).unwrap();
        let p = HmmParams::from_p(2);
        let (paths, _) = micro_solve_diffusive(&sys, &[1.5], &p, &MicroState::zeros(1), &mut stream(5)).unwrap();
        let e = estimate_effective_coeffs(&sys, &[1.5], &p, &[paths]).unwrap();
        assert!((e.drift() - 0.6).abs() < 1e-15);
        assert_eq!(e.sigbar2[0][0], 0.0);
        assert!(!e.clamped);
    }

    #[test]
    fn correction_terms_vanish_without_coupling() {
        // a0 = c y^2 depends on y only and b0 = 0: no x-derivative and Y2 = 0
        let model = ModelSpec::custom(vec![0.0, 3.0], 1, &[(2, 2, 1, 0.2)], vec![0.0, 1.0], 0.0, Scaling::Diffusive, 0.1).unwrap();
        let sys = build_truncated_system(&model, 1).unwrap();
        let p = HmmParams::from_p(2);
        let (paths, _) = micro_solve_diffusive(&sys, &[0.9], &p, &MicroState::zeros(1), &mut stream(6)).unwrap();
        assert!((0..paths.y2_len()).all(|l| paths.y2(l)[0] == 0.0));
        let e = estimate_effective_coeffs(&sys, &[0.9], &p, &[paths]).unwrap();
        assert_eq!(e.drift(), 0.0);
    }

    #[test]
    fn window_too_long_is_rejected() {
        let sys = single_mode(1.0, 0.5);
        let p = HmmParams::from_p(2);
        let (paths, _) = micro_solve_diffusive(&sys, &[0.3], &p, &MicroState::zeros(1), &mut stream(7)).unwrap();
        let mut longer = p.clone();
        longer.l += 1;
        assert!(estimate_effective_coeffs(&sys, &[0.3], &longer, &[paths]).is_err());
    }

    #[test]
    fn prefix_sums_match_direct_double_sum() {
        let model = ModelSpec::burgers_default(3, 0.2).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let mut p = HmmParams::from_p(2);
        p.l = 40;
        p.lp = 7;
        let x = [0.8];
        let (paths, _) = micro_solve_diffusive(&sys, &x, &p, &MicroState::zeros(2), &mut stream(8)).unwrap();
        let e = estimate_effective_coeffs(&sys, &x, &p, std::slice::from_ref(&paths)).unwrap();
        let a0 = |l: usize| sys.a0(&x, paths.y1(l))[0];
        let dx = |l: usize| sys.da0_dx(&x, paths.y1(l))[0][0];
        let (mut drift, mut sig) = (0.0, 0.0);
        for l in p.lt..p.lt + p.l {
            let dy = sys.da0_dy(&x, paths.y1(l))[0].iter().zip(paths.y2(l)).map(|(a, b)| a * b).sum::<f64>();
            drift += 0.2 * x[0] + dy;
            for lag in 0..=p.lp {
                drift += p.h * dx(l + lag) * a0(l);
                sig += 2.0 * p.h * a0(l + lag) * a0(l);
            }
        }
        let norm = p.l as f64;
        assert!((e.drift() - drift / norm).abs() < 1e-12);
        assert!((e.sigbar2[0][0] - (sig / norm).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn advective_chain_without_coupling_is_ou() {
        let sys = single_mode(1.0, 0.0);
        let mut p = HmmParams::from_p(3).with_epsilon(0.1);
        p.l = 400_000;
        let (path, last) = micro_solve_advective(&sys, &[0.0], &p, &[0.0], &mut stream(9)).unwrap();
        assert_eq!(path.len(), p.y2_len());
        assert_eq!(last[0], *path.last().unwrap());
        let vals = &path[1000..];
        let nn = vals.len() as f64;
        let var = vals.iter().map(|v| v * v).sum::<f64>() / nn;
        assert!((var - 1.0 / 4.875).abs() < 6e-3, "{var}");
    }

    #[test]
    fn advective_needs_epsilon() {
        let sys = single_mode(1.0, 0.0);
        let p = HmmParams::from_p(2);
        assert!(micro_solve_advective(&sys, &[0.0], &p, &[0.0], &mut stream(10)).is_err());
    }
}
