//! Monte Carlo estimates of the drawdown/drawup tail probabilities.
//!
//! Paths are simulated once at `2n` steps; the `n`-step estimate reads the
//! even-indexed subgrid of the same paths, so both resolutions and both
//! functionals come from one sample and `p_hat(2n) >= p_hat(n)` path by path.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::fbm::{trend_values, GridSpec, ModelParams, PathSampler, SamplerChoice};
use crate::io::fmt_f64;
use crate::path_stats::{two_level_extremes, Functional, TailQuery, TwoLevelExtremes};
use crate::stats::{wilson, Z95};

/// Frequency of the event at one grid resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McLevel {
    pub n_steps: usize,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McLevel {
    fn new(n_steps: usize, hits: u64, n_paths: u64) -> Self {
        let (ci_low, ci_high) = wilson(hits, n_paths, Z95);
        Self { n_steps, hits, p_hat: hits as f64 / n_paths as f64, ci_low, ci_high }
    }

    /// Binomial standard error of `p_hat`.
    pub fn std_error(&self, n_paths: u64) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / n_paths as f64).sqrt()
    }
}

/// Tail-probability estimate at `n_steps` with its 95% Wilson interval, the
/// `2 n_steps` refinement, and a heuristic extrapolation to the continuum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub functional: Functional,
    pub u: f64,
    pub params: ModelParams,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: u64,
    pub n_paths: u64,
    pub n_steps: usize,
    pub refined: McLevel,
    /// `p(2n) + (p(2n) - p(n)) / (2^H - 1)`, clamped to `[0,1]`.
    pub extrapolated: Option<f64>,
    pub bias_note: String,
    pub sampler: String,
    pub seed: u64,
}

impl McEstimate {
    pub fn coarse(&self) -> McLevel {
        McLevel { n_steps: self.n_steps, hits: self.hits, p_hat: self.p_hat, ci_low: self.ci_low, ci_high: self.ci_high }
    }
}

/// Drawdown and drawup of every simulated path at `n` and `2n` steps.
#[derive(Clone, Debug)]
pub struct ExtremesSample {
    pub params: ModelParams,
    pub n_steps: usize,
    pub seed: u64,
    pub sampler: String,
    pub extremes: Vec<TwoLevelExtremes>,
}

impl ExtremesSample {
    pub fn simulate(
        params: &ModelParams,
        n_steps: usize,
        n_paths: u64,
        seed: u64,
        choice: SamplerChoice,
        exec: Execution,
    ) -> Result<Self> {
        if n_paths < 1000 {
            return Err(invalid(format!("at least 1000 paths required, got {n_paths}")));
        }
        let fine = GridSpec::new(n_steps, params.horizon())?.refined();
        let sampler = PathSampler::new(fine, params.hurst(), choice)?;
        let trend = trend_values(&fine, params);
        let per = sampler.paths_per_draw();
        let batches = exec.map_indexed(sampler.draws_for(n_paths as usize), || sampler.scratch(), |scratch, i| {
            sampler.draw(seed, i as u64, scratch);
            let mut out = [TwoLevelExtremes::default(); 2];
            for (slot, path) in out.iter_mut().zip(scratch.paths.iter_mut()).take(per) {
                for (v, d) in path.iter_mut().zip(&trend) {
                    *v += d;
                }
                *slot = two_level_extremes(path);
            }
            out
        });
        let mut extremes: Vec<TwoLevelExtremes> = batches.into_iter().flat_map(|b| b.into_iter().take(per)).collect();
        extremes.truncate(n_paths as usize);
        Ok(Self { params: *params, n_steps, seed, sampler: sampler.name().to_string(), extremes })
    }

    pub fn n_paths(&self) -> u64 {
        self.extremes.len() as u64
    }

    pub fn estimate(&self, functional: Functional, u: f64) -> McEstimate {
        let n_paths = self.n_paths();
        let count = |fine: bool| self.extremes.iter().filter(|e| e.get(functional, fine) > u).count() as u64;
        let coarse = McLevel::new(self.n_steps, count(false), n_paths);
        let refined = McLevel::new(2 * self.n_steps, count(true), n_paths);
        let h = self.params.hurst();
        let extrapolated = refined.p_hat + (refined.p_hat - coarse.p_hat) / (2f64.powf(h) - 1.0);
        McEstimate {
            functional,
            u,
            params: self.params,
            p_hat: coarse.p_hat,
            ci_low: coarse.ci_low,
            ci_high: coarse.ci_high,
            hits: coarse.hits,
            n_paths,
            n_steps: self.n_steps,
            refined,
            extrapolated: Some(extrapolated.clamp(0.0, 1.0)),
            bias_note: format!(
                "grid maxima underestimate the continuous supremum; extrapolation assumes an O(dt^H) bias with H={h} and is heuristic"
            ),
            sampler: self.sampler.clone(),
            seed: self.seed,
        }
    }

    /// Per-path CSV: `path,drawdown_n,drawup_n,drawdown_2n,drawup_2n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.n_steps;
        writeln!(out, "path,drawdown_{n},drawup_{n},drawdown_{},drawup_{}", 2 * n, 2 * n)?;
        for (i, e) in self.extremes.iter().enumerate() {
            writeln!(
                out,
                "{i},{},{},{},{}",
                fmt_f64(e.coarse[0]),
                fmt_f64(e.coarse[1]),
                fmt_f64(e.fine[0]),
                fmt_f64(e.fine[1])
            )?;
        }
        Ok(())
    }
}

/// Monte Carlo frequency of `query` at `n_steps` and `2 n_steps`.
pub fn mc_tail(query: &TailQuery, n_paths: u64, n_steps: usize, seed: u64, exec: Execution) -> Result<McEstimate> {
    let sample = ExtremesSample::simulate(&query.params, n_steps, n_paths, seed, SamplerChoice::Auto, exec)?;
    Ok(sample.estimate(query.functional, query.u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(h: f64, mu: f64, t: f64) -> ModelParams {
        ModelParams::new(h, mu, t).unwrap()
    }

    #[test]
    fn sentinel_thresholds() {
        let p = params(0.3, 0.1, 1.0);
        let q = TailQuery::new(Functional::Drawdown, 1e-12, p).unwrap();
        let e = mc_tail(&q, 2000, 64, 1, Execution::Sequential).unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert_eq!(e.ci_high, 1.0);
        let q = TailQuery::new(Functional::Drawup, 1e6, p).unwrap();
        let e = mc_tail(&q, 2000, 64, 1, Execution::Sequential).unwrap();
        assert_eq!(e.p_hat, 0.0);
        assert!(e.ci_high > 1.0 / 2000.0 && e.ci_high < 4.0 / 2000.0);
    }

    #[test]
    fn execution_modes_agree() {
        let p = params(0.7, 0.0, 1.0);
        let a = ExtremesSample::simulate(&p, 32, 3001, 9, SamplerChoice::Auto, Execution::Sequential).unwrap();
        let b = ExtremesSample::simulate(&p, 32, 3001, 9, SamplerChoice::Auto, Execution::Parallel).unwrap();
        assert_eq!(a.extremes, b.extremes);
        assert_eq!(a.n_paths(), 3001);
    }

    #[test]
    fn refinement_never_lowers_estimate() {
        let p = params(0.5, 0.0, 1.0);
        let s = ExtremesSample::simulate(&p, 64, 5000, 3, SamplerChoice::Auto, Execution::default()).unwrap();
        for f in [Functional::Drawdown, Functional::Drawup] {
            let e = s.estimate(f, 1.0);
            assert!(e.refined.p_hat >= e.p_hat);
            let x = e.extrapolated.unwrap();
            assert!(x >= e.refined.p_hat && x <= 1.0);
            assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        }
    }

    #[test]
    fn brownian_drawdown_frequency_is_bracketed_by_resolutions() {
        // mu = 0, H = 1/2, T = 1, u = 1: two independent runs at n and 2n;
        // the finer estimate may not fall below the coarser by more than 3 pooled SE.
        let p = params(0.5, 0.0, 1.0);
        let q = TailQuery::new(Functional::Drawdown, 1.0, p).unwrap();
        let coarse = mc_tail(&q, 20_000, 256, 11, Execution::default()).unwrap();
        let fine = mc_tail(&q, 20_000, 512, 12, Execution::default()).unwrap();
        let pooled = coarse.coarse().std_error(20_000).hypot(fine.coarse().std_error(20_000));
        assert!(fine.p_hat >= coarse.p_hat - 3.0 * pooled);
    }

    #[test]
    fn per_path_csv_shape() {
        let p = params(0.5, 0.0, 1.0);
        let s = ExtremesSample::simulate(&p, 8, 1000, 3, SamplerChoice::Auto, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "path,drawdown_8,drawup_8,drawdown_16,drawup_16");
        assert_eq!(text.lines().count(), 1001);
    }

    #[test]
    fn too_few_paths_rejected() {
        let q = TailQuery::new(Functional::Drawdown, 1.0, params(0.5, 0.0, 1.0)).unwrap();
        assert!(mc_tail(&q, 999, 8, 0, Execution::Sequential).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn estimates_are_probabilities(h in 0.1f64..0.9, mu in -1.0f64..1.0, u in 0.01f64..3.0, seed in any::<u64>()) {
            let p = params(h, mu, 1.0);
            let s = ExtremesSample::simulate(&p, 16, 1000, seed, SamplerChoice::Auto, Execution::Sequential).unwrap();
            for f in [Functional::Drawdown, Functional::Drawup] {
                let e = s.estimate(f, u);
                prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.p_hat && e.p_hat <= e.ci_high && e.ci_high <= 1.0);
                prop_assert!(e.refined.p_hat >= e.p_hat);
            }
        }
    }
}
