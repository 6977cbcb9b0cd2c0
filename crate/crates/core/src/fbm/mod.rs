//! Exact-in-law fractional Brownian motion on uniform grids, and the trended
//! process `X_t = B_H(t) - t^{2H}/2 + mu t`.

mod cholesky;
mod circulant;
pub mod rng;
mod sampler;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use cholesky::{sample_fbm_cholesky, CholeskyFbm, DEFAULT_CHOLESKY_CAP};
pub use circulant::{fgn_autocovariance, sample_fbm_circulant, CirculantFbm};
pub use sampler::{PathSampler, SamplerChoice, SamplerScratch};

/// Model triple `(H, mu, T)` with unit volatility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    hurst: f64,
    mu: f64,
    horizon: f64,
}

impl ModelParams {
    pub fn new(hurst: f64, mu: f64, horizon: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if !mu.is_finite() {
            return Err(invalid(format!("drift must be finite, got {mu}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon T must be positive, got {horizon}")));
        }
        Ok(Self { hurst, mu, horizon })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Volatility is fixed to one.
    pub fn sigma(&self) -> f64 {
        1.0
    }

    /// Deterministic part of `X_t`: `-t^{2H}/2 + mu t`.
    pub fn trend_at(&self, t: f64) -> f64 {
        -0.5 * t.powf(2.0 * self.hurst) + self.mu * t
    }
}

pub(crate) fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("Hurst index must lie in (0,1), got {hurst}")))
    }
}

/// Uniform grid `t_k = k T / n_steps`, `k = 0..=n_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_steps: usize,
    horizon: f64,
}

impl GridSpec {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon T must be positive, got {horizon}")));
        }
        Ok(Self { n_steps, horizon })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.t(k)).collect()
    }

    /// Same horizon, twice the steps.
    pub fn refined(&self) -> Self {
        Self { n_steps: 2 * self.n_steps, horizon: self.horizon }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    RawFbm,
    Trended,
}

/// A sampled trajectory on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FbmPath {
    values: Vec<f64>,
    grid: GridSpec,
    hurst: f64,
    seed: u64,
    kind: PathKind,
}

impl FbmPath {
    pub fn new(values: Vec<f64>, grid: GridSpec, hurst: f64, seed: u64, kind: PathKind) -> Result<Self> {
        check_hurst(hurst)?;
        if values.len() != grid.n_steps() + 1 {
            return Err(invalid(format!(
                "path has {} values, grid expects {}",
                values.len(),
                grid.n_steps() + 1
            )));
        }
        if values[0] != 0.0 {
            return Err(invalid("path must start at 0"));
        }
        Ok(Self { values, grid, hurst, seed, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    /// Writes `t,value` rows, one per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.17e},{:.17e}", self.grid.t(k), v)?;
        }
        Ok(())
    }
}

/// `Cov(B_H(s), B_H(t)) = (s^{2H} + t^{2H} - |s-t|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if !(s >= 0.0 && t >= 0.0) {
        return Err(invalid(format!("times must be nonnegative, got s={s}, t={t}")));
    }
    Ok(covariance_unchecked(s, t, hurst))
}

pub(crate) fn covariance_unchecked(s: f64, t: f64, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (s - t).abs().powf(h2))
}

/// Adds `-t^{2H}/2 + mu t` to a raw fBm path.
pub fn apply_trend(path: FbmPath, params: &ModelParams) -> Result<FbmPath> {
    if path.kind != PathKind::RawFbm {
        return Err(invalid("trend can only be applied to a raw fBm path"));
    }
    if path.hurst != params.hurst() || path.grid.horizon() != params.horizon() {
        return Err(Error::Mismatch(format!(
            "path (H={}, T={}) does not match params (H={}, T={})",
            path.hurst,
            path.grid.horizon(),
            params.hurst(),
            params.horizon()
        )));
    }
    let trend = trend_values(&path.grid, params);
    let mut values = path.values;
    for (v, d) in values.iter_mut().zip(&trend) {
        *v += d;
    }
    Ok(FbmPath { values, kind: PathKind::Trended, ..path })
}

/// Deterministic part of `X` at each grid point.
pub fn trend_values(grid: &GridSpec, params: &ModelParams) -> Vec<f64> {
    (0..=grid.n_steps()).map(|k| params.trend_at(grid.t(k))).collect()
}
