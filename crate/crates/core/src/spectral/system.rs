use super::{ModelSpec, Scaling};
use crate::error::{Error, Result};

/// One monomial `coef * u[i] * u[j]` of a quadratic form over the stacked state `u = (x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTerm {
    pub i: usize,
    pub j: usize,
    pub coef: f64,
}

/// Homogeneous quadratic polynomial in the stacked state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadForm {
    terms: Vec<QuadTerm>,
}

impl QuadForm {
    pub fn terms(&self) -> &[QuadTerm] {
        &self.terms
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coef * u[t.i] * u[t.j]).sum()
    }

    /// Directional derivative at `u` along `v`.
    #[inline]
    pub fn directional(&self, u: &[f64], v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * (v[t.i] * u[t.j] + u[t.i] * v[t.j]))
            .sum()
    }

    /// Partial derivative with respect to component `r` of `u`.
    #[inline]
    pub fn partial(&self, u: &[f64], r: usize) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            if t.i == r {
                s += t.coef * u[t.j];
            }
            if t.j == r {
                s += t.coef * u[t.i];
            }
        }
        s
    }
}

/// Fast-slow SDE system on `N` slow and `M` fast modes.
///
/// Diffusive form: `dx = (a0/eps + a1) dt`, `dy = (-Lambda y/eps^2 + b0/eps + b1) dt + Q dW/eps`,
/// with `a0, b0` quadratic and `a1 = nu x`, `b1 = nu y`.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    slow_dim: usize,
    fast_dim: usize,
    fast_modes: Vec<usize>,
    lambda: Vec<f64>,
    q: Vec<f64>,
    nu: f64,
    scaling: Scaling,
    slow_forms: Vec<QuadForm>,
    fast_forms: Vec<QuadForm>,
}

/// Keeps the slow modes and the first `m` fast modes of `model`.
pub fn build_truncated_system(model: &ModelSpec, m: usize) -> Result<TruncatedSystem> {
    if m == 0 {
        return Err(Error::Invalid("at least one fast mode is required".into()));
    }
    let n = model.null_dim();
    let total = n + m;
    if total > model.spectrum().len() || total > model.tensor().modes() {
        return Err(Error::Truncation {
            needed: total,
            available: model.spectrum().len().min(model.tensor().modes()),
        });
    }
    let mut forms = vec![QuadForm::default(); total];
    for (k, l, out, v) in model.tensor().iter() {
        if k > total || l > total || out > total {
            continue;
        }
        let coef = if k == l { v } else { 2.0 * v };
        forms[out - 1].terms.push(QuadTerm {
            i: k - 1,
            j: l - 1,
            coef,
        });
    }
    let fast_forms = forms.split_off(n);
    Ok(TruncatedSystem {
        slow_dim: n,
        fast_dim: m,
        fast_modes: (n + 1..=total).collect(),
        lambda: (n + 1..=total).map(|k| model.spectrum().lambda(k)).collect(),
        q: (n + 1..=total).map(|k| model.noise().q(k)).collect(),
        nu: model.nu(),
        scaling: model.scaling(),
        slow_forms: forms,
        fast_forms,
    })
}

impl TruncatedSystem {
    pub fn slow_dim(&self) -> usize {
        self.slow_dim
    }
    pub fn fast_dim(&self) -> usize {
        self.fast_dim
    }
    /// Global mode indices of the fast variables.
    pub fn fast_modes(&self) -> &[usize] {
        &self.fast_modes
    }
    /// Diagonal of `Lambda_M`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }
    /// Diagonal of `Q_M`.
    pub fn noise(&self) -> &[f64] {
        &self.q
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn scaling(&self) -> Scaling {
        self.scaling
    }
    pub fn slow_forms(&self) -> &[QuadForm] {
        &self.slow_forms
    }
    pub fn fast_forms(&self) -> &[QuadForm] {
        &self.fast_forms
    }

    pub fn lambda_max(&self) -> (usize, f64) {
        self.fast_modes
            .iter()
            .zip(&self.lambda)
            .fold((0, 0.0), |best, (&k, &l)| if l > best.1 { (k, l) } else { best })
    }

    /// Stacks `x` and `y` into one state vector.
    pub fn stack(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.slow_dim);
        debug_assert_eq!(y.len(), self.fast_dim);
        let mut u = Vec::with_capacity(self.slow_dim + self.fast_dim);
        u.extend_from_slice(x);
        u.extend_from_slice(y);
        u
    }

    pub fn a0(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let u = self.stack(x, y);
        self.slow_forms.iter().map(|f| f.eval(&u)).collect()
    }

    pub fn b0(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let u = self.stack(x, y);
        self.fast_forms.iter().map(|f| f.eval(&u)).collect()
    }

    pub fn a1(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.nu * v).collect()
    }

    pub fn b1(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| self.nu * v).collect()
    }

    /// `d a0 / d x` as an `N x N` matrix (row = output).
    pub fn da0_dx(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        let u = self.stack(x, y);
        self.slow_forms
            .iter()
            .map(|f| (0..self.slow_dim).map(|r| f.partial(&u, r)).collect())
            .collect()
    }

    /// `d a0 / d y` as an `N x M` matrix (row = output).
    pub fn da0_dy(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        let u = self.stack(x, y);
        self.slow_forms
            .iter()
            .map(|f| {
                (0..self.fast_dim)
                    .map(|r| f.partial(&u, self.slow_dim + r))
                    .collect()
            })
            .collect()
    }
}
