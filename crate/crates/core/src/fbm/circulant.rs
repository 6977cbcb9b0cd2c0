//! Davies-Harte circulant embedding of fractional Gaussian noise.
//!
//! One FFT of `m` complex normals yields two independent fGn samples (real
//! and imaginary parts), each cumulative-summed into a path.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::rng::{stream_rng, StreamRng};
use super::{check_hurst, FbmPath, GridSpec, PathKind};
use rand::Rng;
use rand_distr::StandardNormal;

const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

/// `gamma(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2` for unit steps.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

#[derive(Clone)]
pub struct CirculantFbm {
    grid: GridSpec,
    hurst: f64,
    /// `sqrt(lambda_k / m)`
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    step_scale: f64,
}

impl std::fmt::Debug for CirculantFbm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantFbm")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .field("embedding", &self.weights.len())
            .finish()
    }
}

impl CirculantFbm {
    pub fn new(grid: GridSpec, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.n_steps();
        let mut planner = FftPlanner::new();
        let first = (2 * n).next_power_of_two();
        let (m, eig) = match embedding_eigenvalues(&mut planner, first, hurst) {
            Ok(eig) => (first, eig),
            Err(_) => {
                let m = 2 * first;
                (m, embedding_eigenvalues(&mut planner, m, hurst)?)
            }
        };
        let weights = eig.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self {
            grid,
            hurst,
            weights,
            fft: planner.plan_fft_forward(m),
            step_scale: grid.dt().powf(hurst),
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn embedding_size(&self) -> usize {
        self.weights.len()
    }

    pub fn buffer(&self) -> Vec<Complex<f64>> {
        vec![Complex::new(0.0, 0.0); self.weights.len()]
    }

    pub fn fft_scratch(&self) -> Vec<Complex<f64>> {
        vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()]
    }

    /// Fills two independent paths of length `n + 1`.
    pub fn sample_pair_into(
        &self,
        rng: &mut StreamRng,
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
        first: &mut [f64],
        second: &mut [f64],
    ) {
        for (w, &a) in buf.iter_mut().zip(&self.weights) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *w = Complex::new(a * re, a * im);
        }
        self.fft.process_with_scratch(buf, scratch);
        let n = self.grid.n_steps();
        first[0] = 0.0;
        second[0] = 0.0;
        let (mut x, mut y) = (0.0, 0.0);
        for k in 0..n {
            x += self.step_scale * buf[k].re;
            y += self.step_scale * buf[k].im;
            first[k + 1] = x;
            second[k + 1] = y;
        }
    }

    /// The pair of paths generated by stream `(seed, 0)`.
    pub fn sample_pair(&self, seed: u64) -> (FbmPath, FbmPath) {
        let n = self.grid.n_steps();
        let mut buf = self.buffer();
        let mut scratch = self.fft_scratch();
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        self.sample_pair_into(&mut stream_rng(seed, 0), &mut buf, &mut scratch, &mut a, &mut b);
        let wrap = |values| FbmPath { values, grid: self.grid, hurst: self.hurst, seed, kind: PathKind::RawFbm };
        (wrap(a), wrap(b))
    }
}

fn embedding_eigenvalues(planner: &mut FftPlanner<f64>, m: usize, hurst: f64) -> Result<Vec<f64>> {
    let half = m / 2;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let k = if j <= half { j } else { m - j };
            Complex::new(fgn_autocovariance(k, hurst), 0.0)
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut row);
    let eig: Vec<f64> = row.iter().map(|c| c.re).collect();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVE_EIGEN_TOL * max {
        return Err(Error::Embedding(format!(
            "negative circulant eigenvalue {min:e} (max {max:e}) at embedding size {m}"
        )));
    }
    Ok(eig)
}

/// One raw fBm path: the real-part sample of stream `(seed, 0)`.
pub fn sample_fbm_circulant(grid: GridSpec, hurst: f64, seed: u64) -> Result<FbmPath> {
    Ok(CirculantFbm::new(grid, hurst)?.sample_pair(seed).0)
}
