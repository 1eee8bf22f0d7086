//! Run configuration (TOML) and the JSON manifest written next to every output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::LimitPoint;
use crate::hmm::HmmParams;
use crate::spectral::{Basis, ModelKind, ModelSpec, NoiseRule, Scaling};

/// Noise amplitudes: `"ones"`, a constant, or a list indexed by global mode (kernel entries 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseConfig {
    Word(String),
    Constant(f64),
    List(Vec<f64>),
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::Word("ones".into())
    }
}

impl NoiseConfig {
    pub fn rule(&self) -> Result<NoiseRule> {
        match self {
            NoiseConfig::Word(w) if w == "ones" => Ok(NoiseRule::Constant(1.0)),
            NoiseConfig::Word(w) => Err(Error::Config(format!("model.q: unknown keyword {w:?} (expected \"ones\" or numbers)"))),
            NoiseConfig::Constant(c) => Ok(NoiseRule::Constant(*c)),
            NoiseConfig::List(v) => Ok(NoiseRule::List(v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(default = "dirichlet")]
    pub boundary: String,
    #[serde(default = "sine")]
    pub basis: Basis,
    /// Number of fast modes.
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub q: NoiseConfig,
    /// Custom models: eigenvalues of every mode, kernel first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Custom models: `[k, l, m, value]` with 1-based global indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<Vec<[f64; 4]>>,
}

fn dirichlet() -> String {
    "dirichlet".into()
}

fn sine() -> Basis {
    Basis::Sine
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmConfig {
    #[serde(default = "diffusive")]
    pub scaling: Scaling,
    pub p: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(rename = "Lp", default, skip_serializing_if = "Option::is_none")]
    pub lp: Option<usize>,
    #[serde(rename = "lT", default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<usize>,
    #[serde(default = "dt_macro")]
    pub dt_macro: f64,
    #[serde(rename = "T", default = "horizon")]
    pub t: f64,
    #[serde(rename = "X0", default = "x0")]
    pub x0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub include_b1: bool,
}

fn diffusive() -> Scaling {
    Scaling::Diffusive
}
fn dt_macro() -> f64 {
    0.1
}
fn horizon() -> f64 {
    1.0
}
fn x0() -> f64 {
    1.0
}

/// Field output: which series to reconstruct and on how many grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSource {
    Hmm,
    Hom,
    Inf,
    /// Brute-force run of the full system (includes fast modes when requested).
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default = "seeds")]
    pub seeds: usize,
    #[serde(default = "p_min")]
    pub p_min: u32,
    #[serde(default = "p_max")]
    pub p_max: u32,
    /// Truncations listed by `coeffs`.
    #[serde(rename = "M_list", default = "m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "row_cap_s")]
    pub row_cap_s: f64,
    #[serde(default)]
    pub limit_point: LimitPointConfig,
    #[serde(default = "one")]
    pub h_scale: f64,
    #[serde(default = "grid")]
    pub grid: usize,
    #[serde(default = "field_source")]
    pub field_source: FieldSource,
    #[serde(default)]
    pub include_fast: bool,
}

/// Serializable mirror of [`LimitPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitPointConfig {
    #[default]
    Consistent,
    Mixed,
}

impl From<LimitPointConfig> for LimitPoint {
    fn from(v: LimitPointConfig) -> Self {
        match v {
            LimitPointConfig::Consistent => LimitPoint::Consistent,
            LimitPointConfig::Mixed => LimitPoint::Mixed,
        }
    }
}

fn seeds() -> usize {
    8
}
fn p_min() -> u32 {
    1
}
fn p_max() -> u32 {
    5
}
fn m_list() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn row_cap_s() -> f64 {
    600.0
}
fn one() -> f64 {
    1.0
}
fn grid() -> usize {
    33
}
fn field_source() -> FieldSource {
    FieldSource::Hmm
}

impl Default for HarnessConfig {
    fn default() -> Self {
        toml::from_str("").expect("harness defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    pub hmm: HmmConfig,
    #[serde(default)]
    pub harness: HarnessConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn check(&self) -> Result<()> {
        if self.model.boundary != "dirichlet" {
            return Err(Error::Config(format!("model.boundary: only \"dirichlet\" is supported, got {:?}", self.model.boundary)));
        }
        if self.model.m == 0 {
            return Err(Error::Config("model.M must be at least 1".into()));
        }
        if !(1..=9).contains(&self.hmm.p) {
            return Err(Error::Config(format!("hmm.p = {} outside 1..=9", self.hmm.p)));
        }
        if self.harness.p_min > self.harness.p_max {
            return Err(Error::Config(format!(
                "harness: empty p range {}..={}",
                self.harness.p_min, self.harness.p_max
            )));
        }
        if !(1..=9).contains(&self.harness.p_min) || !(1..=9).contains(&self.harness.p_max) {
            return Err(Error::Config("harness p range must lie in 1..=9".into()));
        }
        if self.harness.seeds == 0 {
            return Err(Error::Config("harness.seeds must be at least 1".into()));
        }
        if !(self.hmm.dt_macro > 0.0) || !(self.hmm.t >= 0.0) {
            return Err(Error::Config("hmm.dt_macro must be positive and hmm.T nonnegative".into()));
        }
        let steps = self.hmm.t / self.hmm.dt_macro;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Config(format!("hmm.T = {} is not a multiple of dt_macro = {}", self.hmm.t, self.hmm.dt_macro)));
        }
        if self.hmm.scaling == Scaling::Advective && self.hmm.epsilon.is_none() {
            return Err(Error::Config("hmm.epsilon is required for the advective scaling".into()));
        }
        if self.model.model == ModelKind::Custom && (self.model.lambda.is_none() || self.model.tensor.is_none()) {
            return Err(Error::Config("custom models need model.lambda and model.tensor".into()));
        }
        Ok(())
    }

    pub fn n_macro(&self) -> usize {
        (self.hmm.t / self.hmm.dt_macro).round() as usize
    }

    /// Scale separation used for model metadata and direct runs; defaults to `0.05`.
    pub fn epsilon(&self) -> f64 {
        self.hmm.epsilon.unwrap_or(0.05)
    }

    /// Model with the slow mode and `M` fast modes.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mc = &self.model;
        let rule = mc.q.rule()?;
        match mc.model {
            ModelKind::Custom => {
                let lambda = mc.lambda.clone().unwrap_or_default();
                let null_dim = lambda.iter().take_while(|&&l| l == 0.0).count();
                let entries = mc
                    .tensor
                    .as_ref()
                    .map(|t| {
                        t.iter()
                            .map(|e| {
                                let idx = |v: f64| {
                                    if v >= 1.0 && v.fract() == 0.0 {
                                        Ok(v as usize)
                                    } else {
                                        Err(Error::Config(format!("model.tensor: index {v} is not a positive integer")))
                                    }
                                };
                                Ok((idx(e[0])?, idx(e[1])?, idx(e[2])?, e[3]))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                let q = match rule {
                    NoiseRule::List(v) => v,
                    NoiseRule::Constant(c) => (0..lambda.len()).map(|i| if i < null_dim { 0.0 } else { c }).collect(),
                };
                ModelSpec::custom(lambda, null_dim, &entries, q, mc.nu, self.hmm.scaling, self.epsilon())
            }
            kind => ModelSpec::builtin(kind, mc.basis, mc.m + 1, rule, mc.nu, self.hmm.scaling, self.epsilon()),
        }
    }

    /// Schedule for accuracy index `p` with the configured overrides.
    pub fn hmm_params_for(&self, p: u32) -> HmmParams {
        let c = &self.hmm;
        let mut params = HmmParams::from_p(p).with_macro(c.dt_macro, self.n_macro());
        if let Some(h) = c.h {
            params.h = h;
        }
        if let Some(v) = c.k {
            params.k = v;
        }
        if let Some(v) = c.l {
            params.l = v;
        }
        if let Some(v) = c.lp {
            params.lp = v;
        }
        if let Some(v) = c.lt {
            params.lt = v;
        }
        params.epsilon = c.epsilon;
        params.include_b1 = c.include_b1;
        params
    }

    pub fn hmm_params(&self) -> HmmParams {
        self.hmm_params_for(self.hmm.p)
    }

    /// Content hash of the model block: SHA-256 over `"blob <len>\0"` followed by its JSON.
    pub fn model_hash(&self) -> String {
        let body = serde_json::to_string(&self.model).expect("model serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub generator: String,
    pub model_hash: String,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            seed: config.seed,
            generator: crate::sde::GENERATOR.into(),
            model_hash: config.model_hash(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        m.config.check()?;
        if m.model_hash != m.config.model_hash() {
            return Err(Error::Config("manifest: model hash does not match the stored model block".into()));
        }
        Ok(m)
    }

    /// Metadata line placed at the top of data files.
    pub fn comment(&self) -> String {
        format!("config={} seed={} generator={}", &self.model_hash[..16], self.seed, self.generator)
    }
}
