//! Batch-oriented front end over the exact samplers.
//!
//! A run is a sequence of draws; draw `i` uses stream `(seed, i)` and yields
//! `paths_per_draw()` raw paths, so path `j` of a run is reproducible on its
//! own regardless of how the run is split across threads.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::rng::{fill_normals, stream_rng};
use super::{check_hurst, CholeskyFbm, CirculantFbm, GridSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    /// Independent increments when `H == 0.5` exactly, circulant otherwise.
    #[default]
    Auto,
    Cholesky,
    Circulant,
}

#[derive(Clone, Debug)]
enum Engine {
    Brownian { step_sd: f64 },
    Cholesky(CholeskyFbm),
    Circulant(CirculantFbm),
}

#[derive(Clone, Debug)]
pub struct PathSampler {
    grid: GridSpec,
    hurst: f64,
    engine: Engine,
}

/// Per-worker buffers; `paths[..paths_per_draw()]` hold the latest draw.
pub struct SamplerScratch {
    pub paths: [Vec<f64>; 2],
    normals: Vec<f64>,
    buf: Vec<Complex<f64>>,
    fft: Vec<Complex<f64>>,
}

impl PathSampler {
    pub fn new(grid: GridSpec, hurst: f64, choice: SamplerChoice) -> Result<Self> {
        check_hurst(hurst)?;
        let engine = match choice {
            SamplerChoice::Auto if hurst == 0.5 => Engine::Brownian { step_sd: grid.dt().sqrt() },
            SamplerChoice::Auto | SamplerChoice::Circulant => Engine::Circulant(CirculantFbm::new(grid, hurst)?),
            SamplerChoice::Cholesky => Engine::Cholesky(CholeskyFbm::new(grid, hurst)?),
        };
        Ok(Self { grid, hurst, engine })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn name(&self) -> &'static str {
        match self.engine {
            Engine::Brownian { .. } => "brownian",
            Engine::Cholesky(_) => "cholesky",
            Engine::Circulant(_) => "circulant",
        }
    }

    pub fn paths_per_draw(&self) -> usize {
        match self.engine {
            Engine::Circulant(_) => 2,
            _ => 1,
        }
    }

    /// Number of draws needed for `n_paths` paths.
    pub fn draws_for(&self, n_paths: usize) -> usize {
        n_paths.div_ceil(self.paths_per_draw())
    }

    pub fn scratch(&self) -> SamplerScratch {
        let n = self.grid.n_steps();
        let (buf, fft) = match &self.engine {
            Engine::Circulant(c) => (c.buffer(), c.fft_scratch()),
            _ => (Vec::new(), Vec::new()),
        };
        SamplerScratch {
            paths: [vec![0.0; n + 1], vec![0.0; n + 1]],
            normals: vec![0.0; n],
            buf,
            fft,
        }
    }

    /// Generates draw `index` of run `seed` into `scratch.paths`.
    pub fn draw(&self, seed: u64, index: u64, scratch: &mut SamplerScratch) {
        let mut rng = stream_rng(seed, index);
        let [first, second] = &mut scratch.paths;
        match &self.engine {
            Engine::Brownian { step_sd } => {
                fill_normals(&mut rng, &mut scratch.normals);
                first[0] = 0.0;
                let mut x = 0.0;
                for (v, z) in first[1..].iter_mut().zip(&scratch.normals) {
                    x += step_sd * z;
                    *v = x;
                }
            }
            Engine::Cholesky(c) => c.sample_into(&mut rng, &mut scratch.normals, first),
            Engine::Circulant(c) => c.sample_pair_into(&mut rng, &mut scratch.buf, &mut scratch.fft, first, second),
        }
    }

    /// Path `j` of run `seed`, as a fresh vector.
    pub fn path(&self, seed: u64, j: u64) -> Vec<f64> {
        let per = self.paths_per_draw() as u64;
        let mut scratch = self.scratch();
        self.draw(seed, j / per, &mut scratch);
        let [a, b] = scratch.paths;
        if j.is_multiple_of(per) {
            a
        } else {
            b
        }
    }
}
