//! Spectral description of a multiscale SPDE with a quadratic nonlinearity.
//!
//! Modes are labelled by their global index `k = 1, 2, ...`; the first
//! `null_dim` modes span the kernel of the linear operator (the slow modes)
//! and every later mode is fast. Relabelling of fast modes as `y_1, y_2, ...`
//! happens only when results are written out.

mod quadrature;
mod system;
mod tensor;

pub use quadrature::{tensor_by_quadrature, BasisFamily, BilinearForm, BurgersNonlinearity, SineBasis};
pub use system::{build_truncated_system, QuadForm, QuadTerm, TruncatedSystem};
pub use tensor::{basis_rescale, burgers_entry, burgers_tensor, InteractionTensor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues `lambda_k` of `-A`, ordered by mode index.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    lambdas: Vec<f64>,
    null_dim: usize,
}

impl EigenSpectrum {
    pub fn new(lambdas: Vec<f64>, null_dim: usize) -> Result<Self> {
        if null_dim == 0 || null_dim > lambdas.len() {
            return Err(Error::Invalid(format!(
                "null dimension {null_dim} does not fit a spectrum of {} modes",
                lambdas.len()
            )));
        }
        for (i, &l) in lambdas.iter().enumerate() {
            let k = i + 1;
            if k <= null_dim && l != 0.0 {
                return Err(Error::Invalid(format!("kernel mode {k} has eigenvalue {l}, expected 0")));
            }
            if k > null_dim && !(l > 0.0 && l.is_finite()) {
                return Err(Error::Invalid(format!("fast mode {k} has non-positive eigenvalue {l}")));
            }
        }
        Ok(Self { lambdas, null_dim })
    }

    /// Eigenvalue of global mode `k` (1-based).
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambdas[k - 1]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn null_dim(&self) -> usize {
        self.null_dim
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// `lambda_k = k^2 - 1` for `k = 1..=m+1`: the Dirichlet Burgers operator `d_xx + 1` on `[0, pi]`.
pub fn burgers_spectrum(m: usize) -> Result<EigenSpectrum> {
    if m == 0 {
        return Err(Error::Invalid("mode count must be at least 1".into()));
    }
    let lambdas = (1..=m + 1).map(|k| (k * k) as f64 - 1.0).collect();
    EigenSpectrum::new(lambdas, 1)
}

/// `lambda_k = k^4 - k^2` for `k = 1..=m+1`: the Dirichlet Kuramoto-Sivashinsky operator.
pub fn ks_spectrum(m: usize) -> Result<EigenSpectrum> {
    if m == 0 {
        return Err(Error::Invalid("mode count must be at least 1".into()));
    }
    let lambdas = (1..=m + 1)
        .map(|k| {
            let k = k as f64;
            k.powi(4) - k * k
        })
        .collect();
    EigenSpectrum::new(lambdas, 1)
}

/// Per-mode white-noise amplitudes `q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    q: Vec<f64>,
}

impl NoiseSpectrum {
    /// Noise amplitudes must vanish on the first `null_dim` modes.
    pub fn new(q: Vec<f64>, null_dim: usize) -> Result<Self> {
        for (i, &v) in q.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("noise amplitude q_{} = {v} must be finite and >= 0", i + 1)));
            }
            if i < null_dim && v != 0.0 {
                return Err(Error::Invalid(format!(
                    "noise acts on kernel mode {} (q = {v}); it must act on fast modes only",
                    i + 1
                )));
            }
        }
        Ok(Self { q })
    }

    /// Amplitude of global mode `k`; zero beyond the stored range.
    pub fn q(&self, k: usize) -> f64 {
        self.q.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Which time rescaling produced the fast-slow system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    Diffusive,
    Advective,
}

/// Eigenfunction normalisation for the built-in Dirichlet models on `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Plain `sin(k x)`, scale factor `c_k = sqrt(pi / 2)` relative to the orthonormal basis.
    Sine,
    /// Orthonormal `sqrt(2 / pi) sin(k x)`.
    Normalized,
}

impl Basis {
    pub fn scale(self) -> f64 {
        match self {
            Basis::Sine => (std::f64::consts::PI / 2.0).sqrt(),
            Basis::Normalized => 1.0,
        }
    }

    /// Value of basis function `k` at `x`.
    pub fn eval(self, k: usize, x: f64) -> f64 {
        let s = (k as f64 * x).sin();
        match self {
            Basis::Sine => s,
            Basis::Normalized => s * (2.0 / std::f64::consts::PI).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Burgers,
    Ks,
    Custom,
}

/// How noise amplitudes extend to modes beyond an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseRule {
    /// `q_k = c` on every fast mode.
    Constant(f64),
    /// Explicit amplitudes by global mode index; zero past the end.
    List(Vec<f64>),
}

impl NoiseRule {
    pub fn q(&self, k: usize, null_dim: usize) -> f64 {
        if k <= null_dim {
            return 0.0;
        }
        match self {
            NoiseRule::Constant(c) => *c,
            NoiseRule::List(v) => v.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    /// Supremum of `|q_k|` over fast modes.
    pub fn max_q(&self) -> f64 {
        match self {
            NoiseRule::Constant(c) => c.abs(),
            NoiseRule::List(v) => v.iter().fold(0.0_f64, |a, &b| a.max(b.abs())),
        }
    }
}

/// Complete spectral description of one SPDE.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    kind: ModelKind,
    basis: Basis,
    spectrum: EigenSpectrum,
    tensor: InteractionTensor,
    noise: NoiseSpectrum,
    noise_rule: NoiseRule,
    nu: f64,
    scaling: Scaling,
    epsilon: f64,
}

impl ModelSpec {
    /// Built-in Burgers or Kuramoto-Sivashinsky model with `total_modes` modes (slow mode included).
    pub fn builtin(
        kind: ModelKind,
        basis: Basis,
        total_modes: usize,
        noise_rule: NoiseRule,
        nu: f64,
        scaling: Scaling,
        epsilon: f64,
    ) -> Result<Self> {
        if total_modes < 2 {
            return Err(Error::Invalid("a built-in model needs at least one fast mode".into()));
        }
        let spectrum = match kind {
            ModelKind::Burgers => burgers_spectrum(total_modes - 1)?,
            ModelKind::Ks => ks_spectrum(total_modes - 1)?,
            ModelKind::Custom => {
                return Err(Error::Invalid("use ModelSpec::custom for user-supplied models".into()))
            }
        };
        let tensor = burgers_tensor(total_modes - 1, basis == Basis::Normalized)?;
        let q = (1..=total_modes).map(|k| noise_rule.q(k, 1)).collect();
        let noise = NoiseSpectrum::new(q, 1)?;
        Self::assemble(kind, basis, spectrum, tensor, noise, noise_rule, nu, scaling, epsilon)
    }

    /// Burgers model in the plain sine basis with unit noise on every fast mode.
    pub fn burgers_default(total_modes: usize, nu: f64) -> Result<Self> {
        Self::builtin(
            ModelKind::Burgers,
            Basis::Sine,
            total_modes,
            NoiseRule::Constant(1.0),
            nu,
            Scaling::Diffusive,
            0.05,
        )
    }

    /// User-supplied spectrum, tensor and noise. Entries are `(k, l, m, value)` with 1-based global indices.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        lambdas: Vec<f64>,
        null_dim: usize,
        entries: &[(usize, usize, usize, f64)],
        q: Vec<f64>,
        nu: f64,
        scaling: Scaling,
        epsilon: f64,
    ) -> Result<Self> {
        let spectrum = EigenSpectrum::new(lambdas, null_dim)?;
        let n = spectrum.len();
        let mut tensor = InteractionTensor::new(vec![1.0; n]);
        for &(k, l, m, v) in entries {
            if k == 0 || l == 0 || m == 0 || k > n || l > n || m > n {
                return Err(Error::Invalid(format!(
                    "tensor entry ({k},{l},{m}) outside the {n} defined modes"
                )));
            }
            tensor.insert(k, l, m, v)?;
        }
        if q.len() > n {
            return Err(Error::Invalid(format!("{} noise amplitudes given for {n} modes", q.len())));
        }
        let mut qq = q.clone();
        qq.resize(n, 0.0);
        let noise = NoiseSpectrum::new(qq, null_dim)?;
        Self::assemble(
            ModelKind::Custom,
            Basis::Normalized,
            spectrum,
            tensor,
            noise,
            NoiseRule::List(q),
            nu,
            scaling,
            epsilon,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: ModelKind,
        basis: Basis,
        spectrum: EigenSpectrum,
        tensor: InteractionTensor,
        noise: NoiseSpectrum,
        noise_rule: NoiseRule,
        nu: f64,
        scaling: Scaling,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if !nu.is_finite() {
            return Err(Error::Invalid("nu must be finite".into()));
        }
        Ok(Self {
            kind,
            basis,
            spectrum,
            tensor,
            noise,
            noise_rule,
            nu,
            scaling,
            epsilon,
        })
    }

    /// Same model rebuilt with a different number of modes. Only built-in models can grow.
    pub fn with_modes(&self, total_modes: usize) -> Result<Self> {
        match self.kind {
            ModelKind::Custom => {
                if total_modes > self.spectrum.len() {
                    return Err(Error::Truncation {
                        needed: total_modes,
                        available: self.spectrum.len(),
                    });
                }
                Ok(self.clone())
            }
            kind => Self::builtin(
                kind,
                self.basis,
                total_modes,
                self.noise_rule.clone(),
                self.nu,
                self.scaling,
                self.epsilon,
            ),
        }
    }

    /// Modes available without rebuilding; `None` when the model can be extended indefinitely.
    pub fn mode_limit(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Custom => Some(self.spectrum.len()),
            _ => None,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn basis(&self) -> Basis {
        self.basis
    }
    pub fn spectrum(&self) -> &EigenSpectrum {
        &self.spectrum
    }
    pub fn tensor(&self) -> &InteractionTensor {
        &self.tensor
    }
    pub fn noise(&self) -> &NoiseSpectrum {
        &self.noise
    }
    pub fn noise_rule(&self) -> &NoiseRule {
        &self.noise_rule
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn scaling(&self) -> Scaling {
        self.scaling
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn null_dim(&self) -> usize {
        self.spectrum.null_dim()
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_scaling(mut self, scaling: Scaling, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        self.scaling = scaling;
        self.epsilon = epsilon;
        Ok(self)
    }
}
