use thiserror::Error;

/// Errors raised by model construction, integrators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("truncation needs {needed} modes but only {available} are defined")]
    Truncation { needed: usize, available: usize },

    #[error(
        "unstable micro step: h = {h} with eigenvalue {eigenvalue} (mode {mode}) gives h*lambda = {product} >= 2"
    )]
    Unstable {
        h: f64,
        eigenvalue: f64,
        mode: usize,
        product: f64,
    },

    #[error("{stage} diverged at step {step}")]
    Diverged { stage: &'static str, step: usize },

    #[error("step budget exceeded: {requested} mode-steps requested, budget is {budget}; use the HMM solver instead")]
    Budget { requested: u128, budget: u128 },

    #[error("quadrature did not converge (residual estimate {residual:e})")]
    Quadrature { residual: f64 },

    #[error("centering condition violated: B[{k},{k},{m}] = {value}")]
    Centering { k: usize, m: usize, value: f64 },

    #[error("closed form requested at t = {t}, at or beyond blow-up time {blow_up}")]
    BlowUp { t: f64, blow_up: f64 },

    #[error("time grids do not match ({0})")]
    GridMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Unstable { .. } | Error::Diverged { .. } | Error::BlowUp { .. } => 2,
            Error::Budget { .. } => 3,
            _ => 1,
        }
    }

    /// True for instability and divergence events.
    pub fn is_instability(&self) -> bool {
        matches!(self, Error::Unstable { .. } | Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
