//! Exact sampler via the Cholesky factor of the covariance matrix of
//! `(B_H(t_1), ..., B_H(t_n))`. O(n^3) setup, O(n^2) per path.

use crate::error::{invalid, Error, Result};

use super::rng::{fill_normals, stream_rng, StreamRng};
use super::{check_hurst, covariance_unchecked, FbmPath, GridSpec, PathKind};

pub const DEFAULT_CHOLESKY_CAP: usize = 2048;

/// Lower-triangular factor stored row-packed: row `i` holds `i + 1` entries.
#[derive(Clone, Debug)]
pub struct CholeskyFbm {
    grid: GridSpec,
    hurst: f64,
    lower: Vec<f64>,
    jittered: bool,
}

impl CholeskyFbm {
    pub fn new(grid: GridSpec, hurst: f64) -> Result<Self> {
        Self::with_cap(grid, hurst, DEFAULT_CHOLESKY_CAP)
    }

    pub fn with_cap(grid: GridSpec, hurst: f64, cap: usize) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.n_steps();
        if n > cap {
            return Err(invalid(format!("Cholesky sampler capped at {cap} steps, got {n}")));
        }
        let times: Vec<f64> = (1..=n).map(|k| grid.t(k)).collect();
        let cov = |i: usize, j: usize| covariance_unchecked(times[i], times[j], hurst);

        match factorize(n, cov, 0.0) {
            Ok(lower) => Ok(Self { grid, hurst, lower, jittered: false }),
            Err(_) => {
                let jitter = 1e-12 * grid.horizon().powf(2.0 * hurst);
                let lower = factorize(n, cov, jitter)?;
                Ok(Self { grid, hurst, lower, jittered: true })
            }
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// True when the factorization needed diagonal jitter.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// Fills `out[0..=n]` with one path; `normals` is scratch of length `n`.
    pub fn sample_into(&self, rng: &mut StreamRng, normals: &mut [f64], out: &mut [f64]) {
        let n = self.grid.n_steps();
        fill_normals(rng, &mut normals[..n]);
        out[0] = 0.0;
        let mut offset = 0;
        for i in 0..n {
            let row = &self.lower[offset..offset + i + 1];
            out[i + 1] = row.iter().zip(&normals[..=i]).map(|(l, z)| l * z).sum();
            offset += i + 1;
        }
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        let n = self.grid.n_steps();
        let mut normals = vec![0.0; n];
        let mut values = vec![0.0; n + 1];
        self.sample_into(&mut stream_rng(seed, 0), &mut normals, &mut values);
        FbmPath { values, grid: self.grid, hurst: self.hurst, seed, kind: PathKind::RawFbm }
    }
}

fn factorize(n: usize, cov: impl Fn(usize, usize) -> f64, jitter: f64) -> Result<Vec<f64>> {
    let mut lower = vec![0.0; n * (n + 1) / 2];
    let start = |i: usize| i * (i + 1) / 2;
    for i in 0..n {
        let ri = start(i);
        for j in 0..=i {
            let rj = start(j);
            let dot: f64 = lower[ri..ri + j].iter().zip(&lower[rj..rj + j]).map(|(a, b)| a * b).sum();
            let mut a = cov(i, j) - dot;
            if i == j {
                a += jitter;
                if !(a > 0.0) {
                    return Err(Error::Factorization(format!(
                        "covariance not positive definite at pivot {i} (value {a:e})"
                    )));
                }
                lower[ri + i] = a.sqrt();
            } else {
                lower[ri + j] = a / lower[rj + j];
            }
        }
    }
    Ok(lower)
}

/// One raw fBm path from a fresh factorization.
pub fn sample_fbm_cholesky(grid: GridSpec, hurst: f64, seed: u64) -> Result<FbmPath> {
    Ok(CholeskyFbm::new(grid, hurst)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_covariance() {
        let grid = GridSpec::new(16, 2.0).unwrap();
        let h = 0.8;
        let chol = CholeskyFbm::new(grid, h).unwrap();
        let n = 16;
        let row = |i: usize| &chol.lower[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = row(i)[..=j].iter().zip(row(j)).map(|(a, b)| a * b).sum();
                let c = covariance_unchecked(grid.t(i + 1), grid.t(j + 1), h);
                assert!((dot - c).abs() < 1e-12, "({i},{j}) {dot} vs {c}");
            }
        }
        assert!(!chol.jittered());
    }

    #[test]
    fn cap_is_enforced() {
        let grid = GridSpec::new(65, 1.0).unwrap();
        assert!(CholeskyFbm::with_cap(grid, 0.5, 64).is_err());
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let bad = |i: usize, j: usize| if i == j { 1.0 } else { 2.0 };
        assert!(matches!(factorize(3, bad, 0.0), Err(Error::Factorization(_))));
    }

    #[test]
    fn single_step_variance() {
        let grid = GridSpec::new(1, 1.0).unwrap();
        let chol = CholeskyFbm::new(grid, 0.3).unwrap();
        let n = 100_000;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for seed in 0..n {
            let x = chol.sample(seed).values()[1];
            sum2 += x * x;
            sum4 += x * x * x * x;
        }
        let var = sum2 / n as f64;
        let se = ((sum4 / n as f64 - var * var) / n as f64).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var {var} se {se}");
    }

    #[test]
    fn deterministic_given_seed() {
        let grid = GridSpec::new(32, 1.0).unwrap();
        let a = sample_fbm_cholesky(grid, 0.3, 9).unwrap();
        let b = sample_fbm_cholesky(grid, 0.3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values().len(), 33);
    }
}
