use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::ModelSpec;

/// Averaged equation `dX/dt = d X^2 + linear X + e` for a scalar kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedCoeffs {
    /// `B[1,1,1]`.
    pub d: f64,
    /// `sum_k q_k^2 / (2 lambda_k) B[k,k,1]`.
    pub e: f64,
    /// Linear coefficient, `eps * nu` under the advective scaling.
    pub linear: f64,
}

impl AveragedCoeffs {
    pub fn drift(&self, x: f64) -> f64 {
        self.d * x * x + self.linear * x + self.e
    }
}

/// Averaged coefficients of `model` with fast modes `2..=m+1`.
pub fn averaged_coeffs(model: &ModelSpec, m: usize) -> Result<AveragedCoeffs> {
    if model.null_dim() != 1 {
        return Err(Error::Invalid("averaged coefficients need a one-dimensional kernel".into()));
    }
    let model = if model.spectrum().len() < m + 1 {
        model.with_modes(m + 1)?
    } else {
        model.clone()
    };
    let t = model.tensor();
    let e = (2..=m + 1)
        .map(|k| model.noise().q(k).powi(2) / (2.0 * model.spectrum().lambda(k)) * t.get(k, k, 1))
        .sum();
    Ok(AveragedCoeffs {
        d: t.get(1, 1, 1),
        e,
        linear: model.epsilon() * model.nu(),
    })
}

enum Flow {
    Affine { rate: f64, forcing: f64 },
    // shifted variable s = x + shift obeys ds/dt = d (s^2 + a^2)
    Tangent { d: f64, a: f64, shift: f64 },
    // ds/dt = d (s^2 - b^2)
    Hyperbolic { d: f64, b: f64, shift: f64 },
    // ds/dt = d s^2
    Square { d: f64, shift: f64 },
}

impl Flow {
    fn new(c: &AveragedCoeffs) -> Self {
        if c.d == 0.0 {
            return Flow::Affine {
                rate: c.linear,
                forcing: c.e,
            };
        }
        let shift = c.linear / (2.0 * c.d);
        let e = c.e - c.linear * c.linear / (4.0 * c.d);
        let ratio = e / c.d;
        if ratio > 0.0 {
            Flow::Tangent { d: c.d, a: ratio.sqrt(), shift }
        } else if ratio < 0.0 {
            Flow::Hyperbolic { d: c.d, b: (-ratio).sqrt(), shift }
        } else {
            Flow::Square { d: c.d, shift }
        }
    }

    fn blow_up(&self, x0: f64) -> f64 {
        match *self {
            Flow::Affine { .. } => f64::INFINITY,
            Flow::Tangent { d, a, shift } => {
                let phi = ((x0 + shift) / a).atan();
                let w = d * a;
                if w > 0.0 {
                    (FRAC_PI_2 - phi) / w
                } else {
                    (-FRAC_PI_2 - phi) / w
                }
            }
            Flow::Hyperbolic { d, b, shift } => {
                let s0 = x0 + shift;
                if s0 + b == 0.0 {
                    return f64::INFINITY;
                }
                let r0 = (s0 - b) / (s0 + b);
                if r0 <= 0.0 {
                    return f64::INFINITY;
                }
                let t = -r0.ln() / (2.0 * d * b);
                if t > 0.0 {
                    t
                } else {
                    f64::INFINITY
                }
            }
            Flow::Square { d, shift } => {
                let s0 = x0 + shift;
                if d * s0 > 0.0 {
                    1.0 / (d * s0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn eval(&self, x0: f64, t: f64) -> f64 {
        match *self {
            Flow::Affine { rate, forcing } => {
                if rate == 0.0 {
                    x0 + forcing * t
                } else {
                    (x0 + forcing / rate) * (rate * t).exp() - forcing / rate
                }
            }
            Flow::Tangent { d, a, shift } => {
                let phi = ((x0 + shift) / a).atan();
                a * (d * a * t + phi).tan() - shift
            }
            Flow::Hyperbolic { d, b, shift } => {
                let s0 = x0 + shift;
                if s0 + b == 0.0 {
                    return x0;
                }
                let r = (s0 - b) / (s0 + b) * (2.0 * d * b * t).exp();
                let s = if r.is_infinite() { -b } else { b * (1.0 + r) / (1.0 - r) };
                s - shift
            }
            Flow::Square { d, shift } => {
                let s0 = x0 + shift;
                s0 / (1.0 - d * s0 * t) - shift
            }
        }
    }
}

/// First time at which the averaged solution from `x0` leaves every bounded set; infinite if never.
pub fn averaged_blow_up_time(coeffs: &AveragedCoeffs, x0: f64) -> f64 {
    Flow::new(coeffs).blow_up(x0)
}

/// Exact solution of the averaged equation at time `t >= 0`.
///
/// With `linear = 0` and `d, e > 0` this is `sqrt(e/d) tan(sqrt(e d) t + atan(d x0 / sqrt(e d)))`.
pub fn averaged_closed_form(coeffs: &AveragedCoeffs, x0: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !x0.is_finite() {
        return Err(Error::Invalid(format!("need finite x0 and t >= 0, got x0 = {x0}, t = {t}")));
    }
    let flow = Flow::new(coeffs);
    let blow_up = flow.blow_up(x0);
    if t >= blow_up {
        return Err(Error::BlowUp { t, blow_up });
    }
    Ok(flow.eval(x0, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ModelSpec, Scaling};

    fn rk4(c: &AveragedCoeffs, x0: f64, t: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        let mut x = x0;
        for _ in 0..steps {
            let k1 = c.drift(x);
            let k2 = c.drift(x + 0.5 * h * k1);
            let k3 = c.drift(x + 0.5 * h * k2);
            let k4 = c.drift(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        x
    }

    fn check_against_rk4(c: AveragedCoeffs, x0: f64) {
        let tb = averaged_blow_up_time(&c, x0);
        let horizon = if tb.is_finite() { 0.9 * tb } else { 2.0 };
        for i in 0..=10 {
            let t = horizon * i as f64 / 10.0;
            let exact = averaged_closed_form(&c, x0, t).unwrap();
            let num = rk4(&c, x0, t, 20_000);
            assert!((exact - num).abs() < 1e-6 * (1.0 + num.abs()), "{c:?} x0={x0} t={t}: {exact} vs {num}");
        }
    }

    #[test]
    fn tangent_case() {
        let c = AveragedCoeffs { d: 1.0, e: 1.0, linear: 0.0 };
        for t in [0.1, 0.5, 1.0, 1.5] {
            assert!((averaged_closed_form(&c, 0.0, t).unwrap() - t.tan()).abs() < 1e-14);
        }
        assert!((averaged_blow_up_time(&c, 0.0) - FRAC_PI_2).abs() < 1e-15);
        assert!(matches!(averaged_closed_form(&c, 0.0, 1.6), Err(Error::BlowUp { .. })));
        assert_eq!(averaged_closed_form(&c, 0.3, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn all_regimes_match_numerical_integration() {
        let cases = [
            (AveragedCoeffs { d: 1.0, e: 1.0, linear: 0.0 }, 0.0),
            (AveragedCoeffs { d: 2.0, e: 0.5, linear: 0.3 }, -0.4),
            (AveragedCoeffs { d: -1.0, e: -2.0, linear: 0.0 }, 0.5),
            (AveragedCoeffs { d: 1.0, e: -1.0, linear: 0.0 }, 0.5),
            (AveragedCoeffs { d: 1.0, e: -1.0, linear: 0.0 }, 1.5),
            (AveragedCoeffs { d: -0.5, e: 2.0, linear: 0.1 }, -3.0),
            (AveragedCoeffs { d: 1.0, e: 0.25, linear: 1.0 }, 0.2),
            (AveragedCoeffs { d: 0.0, e: 0.7, linear: -0.4 }, 1.0),
            (AveragedCoeffs { d: 0.0, e: 0.7, linear: 0.0 }, 1.0),
        ];
        for (c, x0) in cases {
            check_against_rk4(c, x0);
        }
    }

    #[test]
    fn stable_equilibrium_never_blows_up() {
        let c = AveragedCoeffs { d: 1.0, e: -1.0, linear: 0.0 };
        assert!(averaged_blow_up_time(&c, 0.5).is_infinite());
        assert!(averaged_blow_up_time(&c, -1.0).is_infinite());
        assert!((averaged_closed_form(&c, 0.5, 50.0).unwrap() + 1.0).abs() < 1e-12);
        assert!((averaged_blow_up_time(&c, 3.0) - 0.5f64.ln().abs() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn burgers_average_vanishes() {
        let m = ModelSpec::burgers_default(6, 0.0).unwrap();
        let c = averaged_coeffs(&m, 5).unwrap();
        assert_eq!(c.d, 0.0);
        assert_eq!(c.e, 0.0);
    }

    #[test]
    fn two_term_forcing_sum() {
        let m = ModelSpec::custom(
            vec![0.0, 2.0, 5.0],
            1,
            &[(2, 2, 1, 1.0), (3, 3, 1, 0.5)],
            vec![0.0, 1.0, 1.0],
            0.0,
            Scaling::Advective,
            0.1,
        )
        .unwrap();
        assert!((averaged_coeffs(&m, 2).unwrap().e - 0.30).abs() < 1e-15);
        let quiet = ModelSpec::custom(
            vec![0.0, 2.0, 5.0],
            1,
            &[(2, 2, 1, 1.0), (3, 3, 1, 0.5)],
            vec![0.0, 0.0, 0.0],
            0.0,
            Scaling::Advective,
            0.1,
        )
        .unwrap();
        assert_eq!(averaged_coeffs(&quiet, 2).unwrap().e, 0.0);
    }
}
