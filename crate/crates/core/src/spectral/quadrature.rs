use super::InteractionTensor;
use crate::error::{Error, Result};

/// Orthogonal family of basis functions on an interval.
pub trait BasisFamily {
    fn domain(&self) -> (f64, f64);
    fn value(&self, k: usize, x: f64) -> f64;
    fn derivative(&self, k: usize, x: f64) -> f64;
}

/// Pointwise evaluation of a bilinear map `B(u, v)` that may involve first derivatives.
pub trait BilinearForm {
    fn apply(&self, u: f64, du: f64, v: f64, dv: f64) -> f64;
}

/// `sin(k x)` on `[0, pi]`, optionally scaled to unit `L^2` norm.
#[derive(Debug, Clone, Copy)]
pub struct SineBasis {
    pub normalized: bool,
}

impl SineBasis {
    fn factor(&self) -> f64 {
        if self.normalized {
            (2.0 / std::f64::consts::PI).sqrt()
        } else {
            1.0
        }
    }
}

impl BasisFamily for SineBasis {
    fn domain(&self) -> (f64, f64) {
        (0.0, std::f64::consts::PI)
    }
    fn value(&self, k: usize, x: f64) -> f64 {
        self.factor() * (k as f64 * x).sin()
    }
    fn derivative(&self, k: usize, x: f64) -> f64 {
        self.factor() * k as f64 * (k as f64 * x).cos()
    }
}

/// `B(u, v) = (1/2) d_x(u v)`.
#[derive(Debug, Clone, Copy)]
pub struct BurgersNonlinearity;

impl BilinearForm for BurgersNonlinearity {
    fn apply(&self, u: f64, du: f64, v: f64, dv: f64) -> f64 {
        0.5 * (du * v + u * dv)
    }
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Entries smaller than this are treated as exact zeros.
const ZERO_CUTOFF: f64 = 1e-13;
const CONVERGENCE_TOL: f64 = 1e-12;

fn quadrature_points(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let mut pts = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (&node, &w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            pts.push((mid - half * node, half * w));
            pts.push((mid + half * node, half * w));
        }
    }
    pts
}

fn assemble(
    basis: &impl BasisFamily,
    form: &impl BilinearForm,
    n: usize,
    panels: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = basis.domain();
    let pts = quadrature_points(a, b, panels);
    let mut norms = vec![0.0; n];
    let mut raw = vec![0.0; n * n * n];
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    for &(x, w) in &pts {
        for k in 0..n {
            vals[k] = basis.value(k + 1, x);
            ders[k] = basis.derivative(k + 1, x);
            norms[k] += w * vals[k] * vals[k];
        }
        for k in 0..n {
            for l in k..n {
                let bkl = form.apply(vals[k], ders[k], vals[l], ders[l]);
                for m in 0..n {
                    raw[(k * n + l) * n + m] += w * bkl * vals[m];
                }
            }
        }
    }
    (raw, norms)
}

/// Interaction tensor on modes `1..=m+1` by Gauss-Legendre quadrature of `<B(e_k, e_l), e_m> / <e_m, e_m>`.
///
/// The integral is evaluated with `panels` and `2 * panels` composite panels; if the two
/// disagree by more than `1e-12` the result is rejected.
pub fn tensor_by_quadrature(
    basis: &impl BasisFamily,
    form: &impl BilinearForm,
    m: usize,
    panels: usize,
) -> Result<InteractionTensor> {
    if m == 0 || panels == 0 {
        return Err(Error::Invalid("mode count and panel count must be positive".into()));
    }
    let n = m + 1;
    let (coarse, _) = assemble(basis, form, n, panels);
    let (fine, norms) = assemble(basis, form, n, 2 * panels);
    let residual = coarse
        .iter()
        .zip(&fine)
        .fold(0.0_f64, |acc, (c, f)| acc.max((c - f).abs()));
    if residual > CONVERGENCE_TOL {
        return Err(Error::Quadrature { residual });
    }
    let scale = norms.iter().map(|s| s.sqrt()).collect();
    let mut t = InteractionTensor::new(scale);
    for k in 0..n {
        for l in k..n {
            for mm in 0..n {
                let v = fine[(k * n + l) * n + mm] / norms[mm];
                if v.abs() > ZERO_CUTOFF {
                    t.insert(k + 1, l + 1, mm + 1, v)?;
                }
            }
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let pts = quadrature_points(0.0, 2.0, 1);
        let s: f64 = pts.iter().map(|&(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_panels_reports_residual() {
        let err = tensor_by_quadrature(&SineBasis { normalized: false }, &BurgersNonlinearity, 30, 1).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn plain_sine_231() {
        let t = tensor_by_quadrature(&SineBasis { normalized: false }, &BurgersNonlinearity, 3, 16).unwrap();
        assert!((t.get(2, 3, 1) + 0.25).abs() < 1e-12);
        assert!(t.get(1, 2, 2).abs() < 1e-12);
    }
}
