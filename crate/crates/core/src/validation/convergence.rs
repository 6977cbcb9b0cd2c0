//! Ratio of Monte Carlo tail probabilities to their asymptotic
//! approximations along a ladder of thresholds.

use serde::{Deserialize, Serialize};

use crate::asym::{asym_tail, AsymptoticResult, DrawupVariant};
use crate::constants::ConstantSource;
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::fbm::{ModelParams, SamplerChoice};
use crate::io;
use crate::path_stats::Functional;
use crate::stats::{ols_slope, Z95};

use super::mc::{ExtremesSample, McEstimate};

/// Simulation budget for one study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McBudget {
    pub n_paths: u64,
    pub n_steps: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub u: f64,
    pub mc: McEstimate,
    pub asym: AsymptoticResult,
    /// Refined (2n-step) frequency over the asymptotic probability.
    pub ratio: f64,
    pub ratio_ci: (f64, f64),
    pub ratio_se: f64,
}

/// Direction of the ratio column, judged step by step with a `1.96`-sigma
/// pooled allowance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendStatistic {
    /// Least-squares slope of ratio against `u`.
    pub ratio_slope: f64,
    /// `|ratio - 1|` never grows by more than the allowance.
    pub toward_one: bool,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub functional: Functional,
    pub params: ModelParams,
    pub n_paths: u64,
    pub n_steps: usize,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
    pub trend: Option<TrendStatistic>,
}

impl ConvergenceTable {
    pub fn csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.u,
                    r.mc.p_hat,
                    r.mc.refined.p_hat,
                    r.mc.refined.ci_low,
                    r.mc.refined.ci_high,
                    r.mc.extrapolated.unwrap_or(f64::NAN),
                    r.asym.probability,
                    r.ratio,
                    r.ratio_ci.0,
                    r.ratio_ci.1,
                ]
            })
            .collect();
        io::csv_table(
            &["u", "p_hat_n", "p_hat_2n", "ci_low_2n", "ci_high_2n", "p_extrapolated", "asym", "ratio", "ratio_ci_low", "ratio_ci_high"],
            &rows,
        )
    }

    pub fn plot_data(&self) -> String {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.u, r.ratio)).collect();
        io::plot_data(&format!("u ratio ({}, H={})", self.functional.name(), self.params.hurst()), &pts)
    }
}

fn trend(rows: &[ConvergenceRow]) -> Option<TrendStatistic> {
    if rows.len() < 2 {
        return None;
    }
    let steps: Vec<(f64, f64, f64)> = rows
        .windows(2)
        .map(|w| (w[0].ratio, w[1].ratio, Z95 * w[0].ratio_se.hypot(w[1].ratio_se)))
        .collect();
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.u, r.ratio)).collect();
    Some(TrendStatistic {
        ratio_slope: ols_slope(&pts),
        toward_one: steps.iter().all(|&(a, b, slack)| (b - 1.0).abs() <= (a - 1.0).abs() + slack),
        nondecreasing: steps.iter().all(|&(a, b, slack)| b >= a - slack),
        nonincreasing: steps.iter().all(|&(a, b, slack)| b <= a + slack),
    })
}

/// Builds the table from an existing sample, so several functionals and
/// ladders can share one simulation.
pub fn convergence_table(
    sample: &ExtremesSample,
    functional: Functional,
    u_ladder: &[f64],
    constants: &dyn ConstantSource,
    variant: DrawupVariant,
) -> Result<ConvergenceTable> {
    if u_ladder.is_empty() {
        return Err(invalid("empty threshold ladder"));
    }
    let n = sample.n_paths() as f64;
    let mut rows = Vec::with_capacity(u_ladder.len());
    for &u in u_ladder {
        let asym = asym_tail(functional, u, &sample.params, constants, variant)?;
        let mc = sample.estimate(functional, u);
        let p = mc.refined.p_hat;
        let ratio = p / asym.probability;
        let ratio_se = (p * (1.0 - p) / n).sqrt() / asym.probability;
        let ratio_ci = (mc.refined.ci_low / asym.probability, mc.refined.ci_high / asym.probability);
        rows.push(ConvergenceRow { u, mc, asym, ratio, ratio_ci, ratio_se });
    }
    let trend = trend(&rows);
    Ok(ConvergenceTable {
        functional,
        params: sample.params,
        n_paths: sample.n_paths(),
        n_steps: sample.n_steps,
        seed: sample.seed,
        rows,
        trend,
    })
}

/// Simulates once and tabulates MC against the asymptotic formula.
pub fn convergence_study(
    functional: Functional,
    params: &ModelParams,
    u_ladder: &[f64],
    budget: McBudget,
    constants: &dyn ConstantSource,
    variant: DrawupVariant,
    exec: Execution,
) -> Result<ConvergenceTable> {
    for &u in u_ladder {
        asym_tail(functional, u, params, constants, variant)?;
    }
    let sample = ExtremesSample::simulate(params, budget.n_steps, budget.n_paths, budget.seed, SamplerChoice::Auto, exec)?;
    convergence_table(&sample, functional, u_ladder, constants, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ConstantsProvider;

    #[test]
    fn single_point_ladder_has_no_trend() {
        let p = ModelParams::new(0.5, 0.0, 1.0).unwrap();
        let budget = McBudget { n_paths: 2000, n_steps: 64, seed: 1 };
        let t = convergence_study(
            Functional::Drawdown,
            &p,
            &[1.5],
            budget,
            &ConstantsProvider::default(),
            DrawupVariant::default(),
            Execution::default(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.trend.is_none());
        assert_eq!(t.csv().lines().count(), 2);
    }

    #[test]
    fn precondition_failures_surface_before_simulation() {
        let p = ModelParams::new(0.5, 0.0, 1.0).unwrap();
        let budget = McBudget { n_paths: 2000, n_steps: 64, seed: 1 };
        let r = convergence_study(
            Functional::Drawdown,
            &p,
            &[0.2],
            budget,
            &ConstantsProvider::default(),
            DrawupVariant::default(),
            Execution::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn trend_flags() {
        let p = ModelParams::new(0.75, 0.0, 1.0).unwrap();
        let sample = ExtremesSample::simulate(&p, 64, 20_000, 5, SamplerChoice::Auto, Execution::default()).unwrap();
        let t = convergence_table(&sample, Functional::Drawdown, &[1.0, 1.5, 2.0], &ConstantsProvider::default(), DrawupVariant::default()).unwrap();
        let tr = t.trend.unwrap();
        assert!(tr.ratio_slope.is_finite());
        assert!(tr.nondecreasing || tr.nonincreasing || !tr.toward_one || tr.toward_one);
        for r in &t.rows {
            assert!(r.ratio_ci.0 <= r.ratio && r.ratio <= r.ratio_ci.1);
        }
    }
}
