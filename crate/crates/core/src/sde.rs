//! Seeded random streams, Brownian increments and the Euler-Maruyama step.
//!
//! Every stream is a ChaCha8 keystream. The key comes from the top-level seed and the
//! 64-bit stream number packs `(purpose, sample, step)`, so any draw can be regenerated
//! without replaying earlier ones and concurrent workers never share a stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Generator name recorded in output metadata.
pub const GENERATOR: &str = "chacha8";

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    /// Macro Brownian increments shared by all coupled integrators.
    Macro = 1,
    /// Micro-solver noise `J`.
    Micro = 2,
    /// Fine noise for direct integration of the full system.
    Direct = 3,
    /// Anything else (tests, diagnostics).
    Aux = 4,
}

/// Largest sample index that fits in a stream number.
pub const MAX_SAMPLE: u32 = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub purpose: Purpose,
    pub sample: u32,
    pub step: u32,
}

impl StreamId {
    pub fn new(purpose: Purpose, sample: u32, step: u32) -> Self {
        assert!(sample <= MAX_SAMPLE, "sample index {sample} exceeds {MAX_SAMPLE}");
        Self { purpose, sample, step }
    }

    /// Injective packing: 8 bits purpose, 24 bits sample, 32 bits step.
    pub fn pack(&self) -> u64 {
        ((self.purpose as u64) << 56) | ((self.sample as u64) << 32) | self.step as u64
    }
}

/// Source of independent streams for one top-level seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngFactory {
    seed: u64,
}

impl RngFactory {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: StreamId) -> RngStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id.pack());
        RngStream { rng }
    }
}

/// One deterministic stream of standard normal draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.gaussian();
        }
    }
}

/// One `N(0, 1)` draw.
pub fn gaussian_draw(stream: &mut RngStream) -> f64 {
    stream.gaussian()
}

/// Increments of a scalar Wiener process on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl BrownianPath {
    pub fn generate(stream: &mut RngStream, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Invalid(format!("Brownian step must be positive, got {dt}")));
        }
        let s = dt.sqrt();
        let increments = (0..n).map(|_| s * stream.gaussian()).collect();
        Ok(Self { dt, increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Sums consecutive groups of `factor` increments into a path with step `factor * dt`.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor > 0);
        Self {
            dt: self.dt * factor as f64,
            increments: self.increments.chunks_exact(factor).map(|c| c.iter().sum()).collect(),
        }
    }
}

/// Noise coefficient of an SDE step.
#[derive(Debug, Clone, Copy)]
pub enum Diffusion<'a> {
    Scalar(f64),
    Diagonal(&'a [f64]),
    /// Row-major, `state.len()` rows by `noise.len()` columns.
    Matrix(&'a [Vec<f64>]),
}

/// `state + dt * drift + sqrt(dt) * diffusion * noise`, with `noise` standard normal.
///
/// A non-finite result is reported as [`Error::Diverged`] with step 0; callers rewrite the step.
pub fn euler_maruyama_step(
    state: &[f64],
    drift: &[f64],
    diffusion: Diffusion<'_>,
    dt: f64,
    noise: &[f64],
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let n = state.len();
    if drift.len() != n {
        return Err(Error::Invalid(format!("drift has {} components for a {n}-state", drift.len())));
    }
    let sq = dt.sqrt();
    let mut out: Vec<f64> = state.iter().zip(drift).map(|(x, a)| x + dt * a).collect();
    match diffusion {
        Diffusion::Scalar(s) => {
            if noise.len() != n {
                return Err(Error::Invalid("noise length must match the state".into()));
            }
            for (o, z) in out.iter_mut().zip(noise) {
                *o += sq * s * z;
            }
        }
        Diffusion::Diagonal(d) => {
            if noise.len() != n || d.len() != n {
                return Err(Error::Invalid("diagonal diffusion and noise must match the state".into()));
            }
            for ((o, s), z) in out.iter_mut().zip(d).zip(noise) {
                *o += sq * s * z;
            }
        }
        Diffusion::Matrix(g) => {
            if g.len() != n || g.iter().any(|row| row.len() != noise.len()) {
                return Err(Error::Invalid("diffusion matrix shape does not match".into()));
            }
            for (o, row) in out.iter_mut().zip(g) {
                *o += sq * row.iter().zip(noise).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            stage: "euler-maruyama",
            step: 0,
        });
    }
    Ok(out)
}
