//! Heterogeneous multiscale (HMM) solver for fast-slow SDEs obtained from spectral Galerkin
//! truncations of stochastic PDEs with a quadratic nonlinearity (stochastic Burgers,
//! Kuramoto-Sivashinsky, or user-supplied models).
//!
//! Modules, bottom-up:
//!
//! - [`spectral`]: eigenvalues, noise amplitudes, interaction tensor, truncated systems.
//! - [`amplitude`]: exact coefficients of the homogenized and averaged amplitude equations.
//! - [`sde`]: seeded random streams, Brownian paths, Euler-Maruyama.
//! - [`hmm`]: micro solvers, coefficient estimator and macro integrators.
//! - [`direct`]: brute-force runs of the full system and field reconstruction.
//! - [`harness`]: coupled runs on shared noise, error metrics, convergence sweeps.
//! - [`config`], [`cli`]: TOML configs, manifests and the `hmm-spde` command.
//!
//! ```
//! use hmm_spde::amplitude::{burgers_homog_coeffs, Truncation};
//! use hmm_spde::spectral::NoiseRule;
//!
//! let c = burgers_homog_coeffs(&NoiseRule::Constant(1.0), 0.0, Truncation::Modes(2)).unwrap();
//! assert!((c.a - 0.003735726834).abs() < 1e-9);
//! ```

pub mod amplitude;
pub mod cli;
pub mod config;
pub mod direct;
pub mod error;
pub mod harness;
pub mod hmm;
pub mod output;
pub mod sde;
pub mod spectral;

pub use amplitude::{AmplitudeCoeffs, Truncation};
pub use config::{Manifest, RunConfig};
pub use error::{Error, Result};
pub use hmm::{EffectiveCoeffs, HmmParams};
pub use sde::RngFactory;
pub use spectral::{ModelSpec, TruncatedSystem};
