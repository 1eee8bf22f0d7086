//! Analytic coefficients of the scalar amplitude (homogenized) and averaged equations.
//!
//! The amplitude equation for a one-dimensional kernel reads
//! `dX = (A X - B X^3) dt + sqrt(2 C + D X^2) dW`.
//! `C` is stored in the convention where the diffusion is written
//! `sqrt(2 (D/2 X^2 + C))`; the general series for the additive part yields `2 C`.

mod averaged;

pub use averaged::{averaged_blow_up_time, averaged_closed_form, averaged_coeffs, AveragedCoeffs};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Basis, EigenSpectrum, InteractionTensor, ModelKind, ModelSpec, NoiseRule, NoiseSpectrum};

/// Number of fast modes kept in a coefficient series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Truncation {
    Modes(usize),
    Infinite,
}

/// Coefficients `(A, B, C, D)` of the scalar amplitude equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeCoeffs {
    /// Linear drift coefficient.
    pub a: f64,
    /// Cubic drift coefficient; the drift is `a X - b X^3`.
    pub b: f64,
    /// Additive noise coefficient.
    pub c: f64,
    /// Multiplicative noise coefficient.
    pub d: f64,
    pub truncation: Truncation,
    /// Bound on the neglected remainder of the series (zero for finite truncations).
    pub tail_bound: f64,
}

impl AmplitudeCoeffs {
    pub fn drift(&self, x: f64) -> f64 {
        self.a * x - self.b * x * x * x
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        let rad = 2.0 * self.c + self.d * x * x;
        assert!(rad >= 0.0, "negative diffusion radicand {rad}");
        rad.sqrt()
    }
}

/// `(drift, diffusion)` of the amplitude equation at `x`.
pub fn amplitude_drift_diffusion(coeffs: &AmplitudeCoeffs, x: f64) -> (f64, f64) {
    (coeffs.drift(x), coeffs.diffusion(x))
}

fn require_scalar_kernel(spectrum: &EigenSpectrum) -> Result<()> {
    if spectrum.null_dim() != 1 {
        return Err(Error::Invalid(format!(
            "scalar amplitude equation needs a one-dimensional kernel, got {}",
            spectrum.null_dim()
        )));
    }
    Ok(())
}

/// Evaluates the four homogenized-coefficient series with fast modes `2..=m+1`.
///
/// Requires a one-dimensional kernel and `B[k,k,1] = 0` for every kept mode.
pub fn homog_coeffs_general(
    spectrum: &EigenSpectrum,
    noise: &NoiseSpectrum,
    tensor: &InteractionTensor,
    nu: f64,
    m: usize,
) -> Result<AmplitudeCoeffs> {
    require_scalar_kernel(spectrum)?;
    let top = m + 1;
    if m == 0 || top > spectrum.len() {
        return Err(Error::Truncation {
            needed: top,
            available: spectrum.len(),
        });
    }
    for k in 1..=top {
        let v = tensor.get(k, k, 1);
        if v != 0.0 {
            return Err(Error::Centering { k, m: 1, value: v });
        }
    }
    for k in 2..=top {
        if spectrum.lambda(k) <= 0.0 {
            return Err(Error::Invalid(format!("fast eigenvalue lambda_{k} must be positive")));
        }
    }
    let lam = |k: usize| spectrum.lambda(k);
    let q2 = |k: usize| noise.q(k).powi(2);
    let b = |k: usize, l: usize, m: usize| tensor.get(k, l, m);

    let mut a = nu;
    let mut cubic = 0.0;
    let mut c2 = 0.0;
    let mut d = 0.0;
    for k in 2..=top {
        let bk11 = b(k, 1, 1);
        a += 2.0 * bk11 * bk11 * q2(k) / lam(k).powi(2);
        cubic -= 2.0 * bk11 * b(1, 1, k) / lam(k);
        d += 4.0 * bk11 * bk11 * q2(k) / lam(k).powi(2);
        for l in 2..=top {
            a += bk11 * b(l, l, k) * q2(l) / (lam(k) * lam(l));
            let bkl1 = b(k, l, 1);
            if bkl1 != 0.0 {
                a += 2.0 * bkl1 * b(k, 1, l) / (lam(k) + lam(l)) * q2(k) / lam(k);
                c2 += 2.0 * bkl1 * bkl1 * q2(k) * q2(l) / ((lam(k) + lam(l)).powi(2) * lam(k));
            }
        }
    }
    Ok(AmplitudeCoeffs {
        a,
        b: cubic,
        c: 0.5 * c2,
        d,
        truncation: Truncation::Modes(m),
        tail_bound: 0.0,
    })
}

/// [`homog_coeffs_general`] on the spectra of `model`.
pub fn homog_coeffs_model(model: &ModelSpec, m: usize) -> Result<AmplitudeCoeffs> {
    let model = if model.spectrum().len() < m + 1 {
        model.with_modes(m + 1)?
    } else {
        model.clone()
    };
    homog_coeffs_general(model.spectrum(), model.noise(), model.tensor(), model.nu(), m)
}

/// Target accuracy for tail-summed coefficients.
pub const TAIL_TOL: f64 = 1e-10;

/// Burgers coefficients in the plain sine basis (`lambda_k = k^2 - 1`), grouped pairwise
/// over neighbouring modes `(k, k+1)`.
///
/// `Modes(m)` sums the pair index `k = 2..=m+1`, so the last pair touches mode `m + 2`;
/// it therefore equals [`homog_coeffs_general`] with `m + 1` fast modes.
/// `Infinite` sums until the analytic tail bound drops below [`TAIL_TOL`].
pub fn burgers_homog_coeffs(q: &NoiseRule, nu: f64, truncation: Truncation) -> Result<AmplitudeCoeffs> {
    let lam = |k: usize| (k * k) as f64 - 1.0;
    let qq = |k: usize| q.q(k, 1).powi(2);
    let a_term = |k: usize| {
        let (lk, lk1) = (lam(k), lam(k + 1));
        0.125 * (k as f64 * lk * qq(k + 1) - lk1 * qq(k) * (k + 1) as f64) / ((lk1 + lk) * lk * lk1)
    };
    let c_term = |k: usize| {
        let (lk, lk1) = (lam(k), lam(k + 1));
        qq(k) * qq(k + 1) / (16.0 * lk * lk1 * (lk + lk1))
    };
    let (last, tail_bound) = match truncation {
        Truncation::Modes(0) => return Err(Error::Invalid("truncation must keep at least one mode".into())),
        Truncation::Modes(m) => (m + 1, 0.0),
        Truncation::Infinite => match q {
            NoiseRule::List(v) => (v.len().max(2), 0.0),
            NoiseRule::Constant(c) => {
                // |a_term(k)| <= 3 c^2 / (16 k^4) and c_term(k) <= c^4 / (21 k^6)
                let c2 = c * c;
                let bound = |k: usize| {
                    let k = k as f64;
                    (c2 / (16.0 * k.powi(3))).max(c2 * c2 / (105.0 * k.powi(5)))
                };
                let mut k = 2;
                while bound(k) >= TAIL_TOL {
                    k += 1;
                }
                (k, bound(k))
            }
        },
    };
    let mut a = nu + qq(2) / (8.0 * lam(2).powi(2));
    let mut c = 0.0;
    for k in 2..=last {
        a += a_term(k);
        c += c_term(k);
    }
    Ok(AmplitudeCoeffs {
        a,
        b: 1.0 / (4.0 * lam(2)),
        c,
        d: qq(2) / (4.0 * lam(2).powi(2)),
        truncation,
        tail_bound,
    })
}

/// Coefficients of the untruncated amplitude equation for `model`.
///
/// Burgers in the sine basis uses the closed-form pair sums; other built-in models sum the
/// general series with doubling truncation until successive values agree to `1e-13`;
/// custom models use every defined mode.
pub fn homog_coeffs_limit(model: &ModelSpec) -> Result<AmplitudeCoeffs> {
    match (model.kind(), model.basis()) {
        (ModelKind::Burgers, Basis::Sine) => burgers_homog_coeffs(model.noise_rule(), model.nu(), Truncation::Infinite),
        (ModelKind::Custom, _) => {
            let m = model.spectrum().len() - 1;
            let mut c = homog_coeffs_model(model, m)?;
            c.truncation = Truncation::Infinite;
            Ok(c)
        }
        _ => {
            let mut m = 8;
            let mut prev = homog_coeffs_model(model, m)?;
            loop {
                let next = homog_coeffs_model(model, 2 * m)?;
                let delta = (next.a - prev.a).abs().max((next.c - prev.c).abs());
                m *= 2;
                if delta < 1e-13 || m >= 1024 {
                    return Ok(AmplitudeCoeffs {
                        truncation: Truncation::Infinite,
                        tail_bound: delta,
                        ..next
                    });
                }
                prev = next;
            }
        }
    }
}

/// Stationary variance of an Ornstein-Uhlenbeck mode `dy = -lambda y dt + q dW`.
///
/// With `step = Some(h)` it is the variance of the Euler-Maruyama chain
/// `y' = (1 - lambda h) y + sqrt(h) q J`, which is `q^2 / (lambda (2 - lambda h))`.
pub fn ou_stationary_variance(lambda: f64, q: f64, step: Option<f64>) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("OU rate must be positive, got {lambda}")));
    }
    match step {
        None => Ok(q * q / (2.0 * lambda)),
        Some(h) => {
            if !(h > 0.0) {
                return Err(Error::Invalid(format!("micro step must be positive, got {h}")));
            }
            if h * lambda >= 2.0 {
                return Err(Error::Unstable {
                    h,
                    eigenvalue: lambda,
                    mode: 0,
                    product: h * lambda,
                });
            }
            Ok(q * q / (lambda * (2.0 - lambda * h)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{burgers_spectrum, burgers_tensor};

    fn burgers_general(m: usize, q: f64, nu: f64) -> AmplitudeCoeffs {
        let s = burgers_spectrum(m).unwrap();
        let mut qv = vec![q; m + 1];
        qv[0] = 0.0;
        let n = NoiseSpectrum::new(qv, 1).unwrap();
        let t = burgers_tensor(m, false).unwrap();
        homog_coeffs_general(&s, &n, &t, nu, m).unwrap()
    }

    #[test]
    fn pair_sum_at_second_mode_only() {
        // 1/72 - (1/8)(18/264) and (1/16)(1/264)
        let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(1)).unwrap();
        assert!((c.a - (1.0 / 72.0 - 18.0 / 264.0 / 8.0)).abs() < 1e-15);
        assert!((c.a - 0.0053661).abs() < 1e-7);
        assert!((c.c - 1.0 / (16.0 * 264.0)).abs() < 1e-15);
        assert!((c.c - 0.00023674).abs() < 1e-8);
    }

    #[test]
    fn published_three_term_values() {
        let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(2)).unwrap();
        assert!((c.a - 0.003735726834).abs() < 1e-12);
        assert!((c.c - 0.0002593873518).abs() < 1e-13);
        assert!((c.b - 1.0 / 12.0).abs() < 1e-16);
        assert!((c.d - 1.0 / 36.0).abs() < 1e-16);
    }

    #[test]
    fn general_matches_pair_sum_with_one_extra_mode() {
        for m in 1..=12 {
            let g = burgers_general(m + 1, 1.0, 0.0);
            let p = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(m)).unwrap();
            assert!((g.a - p.a).abs() < 1e-12, "m={m}: {} vs {}", g.a, p.a);
            assert!((g.c - p.c).abs() < 1e-12);
            assert!((g.b - p.b).abs() < 1e-12);
            assert!((g.d - p.d).abs() < 1e-12);
        }
    }

    #[test]
    fn general_at_same_truncation_differs_by_the_omitted_pair() {
        for m in 1..=10 {
            let g = burgers_general(m, 1.0, 0.0);
            let p = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(m)).unwrap();
            let k = (m + 1) as f64;
            let omitted = 3.0 / (16.0 * k.powi(4));
            assert!((g.a - p.a).abs() <= omitted + 1e-15);
        }
    }

    #[test]
    fn two_fast_modes_general() {
        let g = burgers_general(2, 1.0, 0.0);
        assert!((g.a - 0.005366161616161616).abs() < 1e-15);
        assert!((g.c - 1.0 / (16.0 * 264.0)).abs() < 1e-15);
    }

    #[test]
    fn second_mode_forcing_only() {
        let sigma: f64 = 0.7;
        let nu = 0.1;
        let q = NoiseRule::List(vec![0.0, sigma]);
        let c = burgers_homog_coeffs(&q, nu, Truncation::Infinite).unwrap();
        let (l2, l3) = (3.0, 8.0);
        let expected = nu + sigma.powi(2) / (8.0 * l2 * l2) - 3.0 * sigma.powi(2) / (8.0 * l2 * (l2 + l3));
        assert!((c.a - expected).abs() < 1e-15);
        assert_eq!(c.c, 0.0);
        // same through the general series
        let s = burgers_spectrum(5).unwrap();
        let n = NoiseSpectrum::new(vec![0.0, sigma, 0.0, 0.0, 0.0, 0.0], 1).unwrap();
        let t = burgers_tensor(5, false).unwrap();
        let g = homog_coeffs_general(&s, &n, &t, nu, 5).unwrap();
        assert!((g.a - expected).abs() < 1e-15);
        assert_eq!(g.c, 0.0);
    }

    #[test]
    fn noise_free_limit() {
        let g = burgers_general(4, 0.0, 0.3);
        assert_eq!(g.a, 0.3);
        assert_eq!(g.c, 0.0);
        assert_eq!(g.d, 0.0);
        assert!((g.b - 1.0 / 12.0).abs() < 1e-16);
        let p = burgers_homog_coeffs(&NoiseRule::Constant(0.0), 0.5, Truncation::Infinite).unwrap();
        assert_eq!(p.a, 0.5);
    }

    #[test]
    fn limit_values() {
        let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Infinite).unwrap();
        assert!((c.a - 0.0026744369).abs() < 1e-7);
        assert!((c.c - 0.00026592835).abs() < 1e-7);
        assert!(c.tail_bound < TAIL_TOL);
    }

    #[test]
    fn centering_violation_reported() {
        let model = ModelSpec::custom(
            vec![0.0, 2.0, 5.0],
            1,
            &[(2, 2, 1, 1.0)],
            vec![0.0, 1.0, 1.0],
            0.0,
            crate::spectral::Scaling::Diffusive,
            0.1,
        )
        .unwrap();
        assert!(matches!(homog_coeffs_model(&model, 2), Err(Error::Centering { k: 2, .. })));
    }

    #[test]
    fn diffusion_reconciles_both_displays() {
        let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(2)).unwrap();
        for x in [-2.0, -0.3, 0.0, 0.5, 1.7] {
            let display = (2.0 * (x * x / 72.0 + c.c)).sqrt();
            assert!((c.diffusion(x) - display).abs() < 1e-15);
        }
        let g = burgers_general(3, 1.0, 0.0);
        // general series: sigma^2 = C_gen + D X^2 with C_gen = 2 c
        for x in [0.0, 1.0, -1.3] {
            let general_display = (2.0 * g.c + g.d * x * x).sqrt();
            assert!((general_display - c.diffusion(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn drift_at_origin_and_balance() {
        let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(2)).unwrap();
        let (d0, s0) = amplitude_drift_diffusion(&c, 0.0);
        assert_eq!(d0, 0.0);
        assert!((s0 - (2.0 * c.c).sqrt()).abs() < 1e-16);
        let x0 = 0.8;
        assert!((c.drift(x0) - (c.a * x0 - x0.powi(3) / 12.0)).abs() < 1e-16);
        let unit = AmplitudeCoeffs { a: 1.0, b: 1.0, c: 0.0, d: 0.0, truncation: Truncation::Modes(1), tail_bound: 0.0 };
        assert_eq!(unit.drift(1.0), 0.0);
    }

    #[test]
    fn ou_variances() {
        assert!((ou_stationary_variance(3.0, 1.0, None).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        let v = ou_stationary_variance(3.0, 1.0, Some(0.125)).unwrap();
        assert!((v - 1.0 / 4.875).abs() < 1e-15);
        // fixed point of v = (1 - lambda h)^2 v + h q^2
        assert!((v - ((1.0 - 0.375f64).powi(2) * v + 0.125)).abs() < 1e-15);
        let tiny = ou_stationary_variance(3.0, 1.0, Some(1e-9)).unwrap();
        assert!((tiny - 1.0 / 6.0).abs() < 1e-8);
        assert!(ou_stationary_variance(3.0, 1.0, Some(2.0 / 3.0)).is_err());
    }

    #[test]
    fn cauchy_bound_in_truncation() {
        for m in 2..=20 {
            let a = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(m)).unwrap();
            let b = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(m + 1)).unwrap();
            assert!((b.a - a.a).abs() <= 3.0 / (16.0 * ((m + 1) as f64).powi(4)));
            assert!((b.c - a.c).abs() <= 3.0 / (16.0 * ((m + 1) as f64).powi(4)));
        }
    }
}
