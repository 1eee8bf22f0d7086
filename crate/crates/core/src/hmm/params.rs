use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenSpectrum, TruncatedSystem};

/// Micro and macro parameters of one HMM run.
///
/// `h` is the dimensionless micro step: `dt_micro / eps^2` under the diffusive scaling and
/// `dt_micro / eps` under the advective one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pub p: u32,
    pub h: f64,
    /// Independent micro samples per macro step.
    pub k: usize,
    /// Averaging window length.
    pub l: usize,
    /// Largest lag in the correlation sums; lags run over `0..=lp`.
    pub lp: usize,
    /// Micro steps discarded before the window.
    pub lt: usize,
    pub dt_macro: f64,
    pub n_macro: usize,
    /// Scale separation; needed only for the advective scaling and the `include_b1` option.
    pub epsilon: Option<f64>,
    /// Adds `eps * b1` to the forcing of the correction process.
    pub include_b1: bool,
}

impl HmmParams {
    /// `h = 2^-p`, `L = 2^(3p)`, `L' = p 2^p`, `lT = 16`, `K = 1`, `dt = 0.1`, ten macro steps.
    pub fn from_p(p: u32) -> Self {
        assert!((1..=9).contains(&p), "accuracy index p = {p} outside 1..=9");
        Self {
            p,
            h: 0.5f64.powi(p as i32),
            k: 1,
            l: 1 << (3 * p),
            lp: p as usize * (1 << p),
            lt: 16,
            dt_macro: 0.1,
            n_macro: 10,
            epsilon: None,
            include_b1: false,
        }
    }

    pub fn with_macro(mut self, dt_macro: f64, n_macro: usize) -> Self {
        self.dt_macro = dt_macro;
        self.n_macro = n_macro;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    /// Number of stored states of the leading micro process: `lT + L + L'`.
    pub fn y1_len(&self) -> usize {
        self.lt + self.l + self.lp
    }

    /// Number of stored states of the correction process: `lT + L`.
    pub fn y2_len(&self) -> usize {
        self.lt + self.l
    }

    /// Final macro time.
    pub fn horizon(&self) -> f64 {
        self.dt_macro * self.n_macro as f64
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Invalid(format!("micro step h must be positive, got {}", self.h)));
        }
        if self.k == 0 || self.l == 0 || self.lp == 0 || self.lt == 0 {
            return Err(Error::Invalid("K, L, L' and lT must all be at least 1".into()));
        }
        if self.k > crate::sde::MAX_SAMPLE as usize + 1 {
            return Err(Error::Invalid(format!("K = {} exceeds the stream capacity", self.k)));
        }
        if !(self.dt_macro > 0.0 && self.dt_macro.is_finite()) {
            return Err(Error::Invalid(format!("macro step must be positive, got {}", self.dt_macro)));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Invalid(format!("epsilon must be positive, got {eps}")));
            }
        }
        if self.include_b1 && self.epsilon.is_none() {
            return Err(Error::Invalid("include_b1 needs epsilon".into()));
        }
        Ok(())
    }

    /// Parameter sanity plus the explicit-Euler stability guard `h lambda_max < 2`.
    pub fn validate(&self, system: &TruncatedSystem) -> Result<()> {
        self.check_shape()?;
        let (mode, lambda) = system.lambda_max();
        let product = self.h * lambda;
        if product >= 2.0 {
            return Err(Error::Unstable {
                h: self.h,
                eigenvalue: lambda,
                mode,
                product,
            });
        }
        Ok(())
    }
}

/// Largest stable micro step `2 / lambda_max` over fast modes `N+1..=N+m`.
pub fn stability_max_step(spectrum: &EigenSpectrum, m: usize) -> Result<f64> {
    let n = spectrum.null_dim();
    if m == 0 || n + m > spectrum.len() {
        return Err(Error::Truncation {
            needed: n + m,
            available: spectrum.len(),
        });
    }
    let lmax = (n + 1..=n + m).map(|k| spectrum.lambda(k)).fold(0.0, f64::max);
    Ok(2.0 / lmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_truncated_system, burgers_spectrum, ks_spectrum, ModelSpec};

    #[test]
    fn schedule() {
        let p = HmmParams::from_p(3);
        assert_eq!((p.h, p.l, p.lp, p.lt, p.k), (0.125, 512, 24, 16, 1));
        assert_eq!(p.y1_len(), 16 + 512 + 24);
        assert!((p.horizon() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn max_steps() {
        assert!((stability_max_step(&burgers_spectrum(4).unwrap(), 4).unwrap() - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(stability_max_step(&burgers_spectrum(2).unwrap(), 2).unwrap(), 0.25);
        assert!((stability_max_step(&ks_spectrum(2).unwrap(), 2).unwrap() - 2.0 / 72.0).abs() < 1e-16);
    }

    #[test]
    fn guard_names_the_eigenvalue() {
        let model = ModelSpec::burgers_default(5, 0.0).unwrap();
        let sys = build_truncated_system(&model, 4).unwrap();
        let err = HmmParams::from_p(3).validate(&sys).unwrap_err();
        match &err {
            Error::Unstable { eigenvalue, mode, .. } => assert_eq!((*eigenvalue, *mode), (24.0, 5)),
            e => panic!("unexpected {e}"),
        }
        assert!(err.to_string().contains("24"));
        assert!(HmmParams::from_p(4).validate(&sys).is_ok());
    }

    #[test]
    fn rejects_empty_windows() {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let sys = build_truncated_system(&model, 2).unwrap();
        let mut p = HmmParams::from_p(3);
        p.lt = 0;
        assert!(p.validate(&sys).is_err());
    }
}
