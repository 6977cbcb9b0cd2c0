//! Local expansions of the standard deviation and correlation of the
//! drawdown/drawup fields near their maximizers.
//!
//! With `sigma_u^{+-}(s,t) = |t-s|^H / (u -+ mu(t-s) +- (t^{2H} - s^{2H})/2)`:
//!
//! ```text
//! lemma1    1 - sigma^-(s,t)/sigma^-(0,T)    ~ H(T-t)/T + H s/T + s^{2H}/(2u)
//! lemma2i   1 - sigma^+(s,t)/sigma^+(0,T)    ~ H(T-t)/T + H s/T                  (H >= 1/2)
//! lemma2ii  1 - sigma^+(s,t)/sigma^+(s_u,T)  ~ H(T-t)/T + H(1-H)(s-s_u)^2/(2T^2)  (H < 1/2)
//! lemma3    1 - Corr(B(t)-B(s), B(t')-B(s')) ~ (|s-s'|^{2H} + |t-t'|^{2H}) / (2T^{2H})
//! ```
//!
//! Each check reports `max |lhs/rhs - 1|` over a grid in the corner box
//! `[0, delta] x [T - delta, T]`; the limit claims become "the error shrinks
//! along a ladder of `u` (with `delta = u^{-1/2} T`) or of `delta`".

use serde::{Deserialize, Serialize};

use crate::asym::{hurst_at, solve_s_u};
use crate::error::{invalid, Result};
use crate::fbm::ModelParams;

/// Points per axis of the `(s,t)` grid for the variance lemmas.
pub const VARIANCE_GRID: usize = 50;
/// Points per axis for the correlation lemma (all ordered pairs of grid points).
pub const CORRELATION_GRID: usize = 6;
/// Each ladder step must shrink the error by at least this factor: halving
/// within 25% slack.
pub const SHRINK_FACTOR: f64 = 0.625;

pub const DEFAULT_U_LADDER: [f64; 4] = [1e2, 1e3, 1e4, 1e5];
pub const DEFAULT_DELTA_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaKind {
    Lemma1,
    Lemma2i,
    Lemma2ii,
    Lemma3,
}

impl LemmaKind {
    pub fn name(self) -> &'static str {
        match self {
            LemmaKind::Lemma1 => "lemma1",
            LemmaKind::Lemma2i => "lemma2i",
            LemmaKind::Lemma2ii => "lemma2ii",
            LemmaKind::Lemma3 => "lemma3",
        }
    }

    /// The drawup variance lemma that applies at `H`.
    pub fn lemma2_for(hurst: f64) -> Self {
        if hurst >= 0.5 || hurst_at(hurst, 0.5) {
            LemmaKind::Lemma2i
        } else {
            LemmaKind::Lemma2ii
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheckReport {
    pub lemma: LemmaKind,
    pub params: ModelParams,
    /// Thresholds of the ladder (empty for `lemma3`).
    pub u_grid: Vec<f64>,
    /// Box half-widths, one per ladder entry.
    pub deltas: Vec<f64>,
    pub max_rel_error: Vec<f64>,
    pub pass: bool,
}

/// `a^p - b^p` given `b` and `a - b`, without cancellation.
fn pow_diff(b: f64, diff: f64, p: f64) -> f64 {
    if b == 0.0 {
        (b + diff).powf(p)
    } else {
        b.powf(p) * (p * (diff / b).ln_1p()).exp_m1()
    }
}

/// `1 - sigma(s, T - a) / sigma(s0, T)` for the drawdown (`sign = -1`) or
/// drawup (`sign = +1`) field.
fn one_minus_sigma_ratio(params: &ModelParams, u: f64, sign: f64, s: f64, a: f64, s0: f64) -> f64 {
    let (h, mu, t) = (params.hurst(), params.mu(), params.horizon());
    let len0 = t - s0;
    let dlen = -a - (s - s0);
    let den0 = u - sign * mu * len0 + sign * 0.5 * (t.powf(2.0 * h) - s0.powf(2.0 * h));
    let dpow_t = pow_diff(t, -a, 2.0 * h);
    let dpow_s = pow_diff(s0, s - s0, 2.0 * h);
    let dden = -sign * mu * dlen + sign * 0.5 * (dpow_t - dpow_s);
    let log_ratio = h * (dlen / len0).ln_1p() - (dden / den0).ln_1p();
    -log_ratio.exp_m1()
}

fn box_grid(delta: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    (0..n).flat_map(move |i| (0..n).map(move |j| (delta * i as f64 / (n - 1) as f64, delta * j as f64 / (n - 1) as f64)))
}

fn check_box(delta: f64, horizon: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1e-2 * horizon * (1.0 + 1e-12)) {
        return Err(invalid(format!("delta must lie in (0, 0.01 T], got {delta}")));
    }
    Ok(())
}

/// `max |ratio - 1|` for the drawdown variance expansion on an `n x n` grid
/// of `[0,delta] x [T-delta,T]` minus the corner `(0,T)`.
pub fn lemma1_error(params: &ModelParams, u: f64, delta: f64, n: usize) -> f64 {
    let (h, t) = (params.hurst(), params.horizon());
    box_grid(delta, n)
        .filter(|&(s, a)| s > 0.0 || a > 0.0)
        .map(|(s, a)| {
            let lhs = one_minus_sigma_ratio(params, u, -1.0, s, a, 0.0);
            let rhs = h * a / t + h * s / t + s.powf(2.0 * h) / (2.0 * u);
            (lhs / rhs - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Drawup variance expansion for `H >= 1/2`, centered at `(0,T)`.
pub fn lemma2i_error(params: &ModelParams, u: f64, delta: f64, n: usize) -> f64 {
    let (h, t) = (params.hurst(), params.horizon());
    box_grid(delta, n)
        .filter(|&(s, a)| s > 0.0 || a > 0.0)
        .map(|(s, a)| {
            let lhs = one_minus_sigma_ratio(params, u, 1.0, s, a, 0.0);
            let rhs = h * a / t + h * s / t;
            (lhs / rhs - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Drawup variance expansion for `H < 1/2`, centered at `(s_u,T)` on
/// `[0, s_u + delta] x [T - delta, T]`.
pub fn lemma2ii_error(params: &ModelParams, u: f64, delta: f64, n: usize) -> Result<f64> {
    let (h, t) = (params.hurst(), params.horizon());
    let s_u = solve_s_u(u, params)?;
    let width = s_u + delta;
    let err = (0..n)
        .flat_map(|i| (0..n).map(move |j| (width * i as f64 / (n - 1) as f64, delta * j as f64 / (n - 1) as f64)))
        .filter_map(|(s, a)| {
            let rhs = h * a / t + h * (1.0 - h) / (2.0 * t * t) * (s - s_u).powi(2);
            (rhs > 0.0).then(|| {
                let lhs = one_minus_sigma_ratio(params, u, 1.0, s, a, s_u);
                (lhs / rhs - 1.0).abs()
            })
        })
        .fold(0.0, f64::max);
    Ok(err)
}

/// `1 - Corr(B(t) - B(s), B(t') - B(s'))` from the covariance kernel, with
/// the near-cancelling differences evaluated directly.
pub fn one_minus_increment_corr(hurst: f64, horizon: f64, (s, a): (f64, f64), (s2, a2): (f64, f64)) -> f64 {
    let h2 = 2.0 * hurst;
    let len = horizon - a - s;
    let len2 = horizon - a2 - s2;
    // |t-s|^{2H} - |t-s'|^{2H} - (|t'-s|^{2H} - |t'-s'|^{2H}), with t = T - a.
    let cross = pow_diff(horizon - a - s2, s2 - s, h2) - pow_diff(horizon - a2 - s2, s2 - s, h2);
    let sd_gap = pow_diff(len2, len - len2, hurst);
    let num = (a - a2).abs().powf(h2) + (s - s2).abs().powf(h2) + cross - sd_gap * sd_gap;
    num / (2.0 * len.powf(hurst) * len2.powf(hurst))
}

/// Correlation expansion over all ordered pairs of distinct grid points.
pub fn lemma3_error(hurst: f64, horizon: f64, delta: f64, n: usize) -> f64 {
    let pts: Vec<(f64, f64)> = box_grid(delta, n).collect();
    let h2 = 2.0 * hurst;
    let mut err = 0.0f64;
    for &p in &pts {
        for &q in &pts {
            if p == q {
                continue;
            }
            let lhs = one_minus_increment_corr(hurst, horizon, p, q);
            let rhs = ((p.0 - q.0).abs().powf(h2) + (p.1 - q.1).abs().powf(h2)) / (2.0 * horizon.powf(h2));
            err = err.max((lhs / rhs - 1.0).abs());
        }
    }
    err
}

/// True when `errors` shrinks by at least [`SHRINK_FACTOR`] at every step.
pub fn shrinks_along_ladder(errors: &[f64]) -> bool {
    errors.iter().all(|e| e.is_finite()) && errors.windows(2).all(|w| w[1] < w[0] && w[1] <= SHRINK_FACTOR * w[0])
}

fn report(lemma: LemmaKind, params: &ModelParams, u_grid: Vec<f64>, deltas: Vec<f64>, errors: Vec<f64>) -> LemmaCheckReport {
    let pass = shrinks_along_ladder(&errors);
    LemmaCheckReport { lemma, params: *params, u_grid, deltas, max_rel_error: errors, pass }
}

fn check_u(u: f64) -> Result<()> {
    if u >= 1e2 && u.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lemma checks need u >= 100, got {u}")))
    }
}

/// Drawdown variance expansion at a single `(u, delta)`.
pub fn check_lemma1(params: &ModelParams, u: f64, delta: f64) -> Result<LemmaCheckReport> {
    check_u(u)?;
    check_box(delta, params.horizon())?;
    let e = lemma1_error(params, u, delta, VARIANCE_GRID);
    Ok(report(LemmaKind::Lemma1, params, vec![u], vec![delta], vec![e]))
}

/// Drawup variance expansion at a single `(u, delta)`; part i) or ii) by `H`.
pub fn check_lemma2(params: &ModelParams, u: f64, delta: f64) -> Result<LemmaCheckReport> {
    check_u(u)?;
    check_box(delta, params.horizon())?;
    let lemma = LemmaKind::lemma2_for(params.hurst());
    let e = match lemma {
        LemmaKind::Lemma2i => lemma2i_error(params, u, delta, VARIANCE_GRID),
        _ => lemma2ii_error(params, u, delta, VARIANCE_GRID)?,
    };
    Ok(report(lemma, params, vec![u], vec![delta], vec![e]))
}

/// Correlation expansion at a single `delta`.
pub fn check_lemma3(params: &ModelParams, delta: f64) -> Result<LemmaCheckReport> {
    check_box(delta, params.horizon())?;
    let e = lemma3_error(params.hurst(), params.horizon(), delta, CORRELATION_GRID);
    Ok(report(LemmaKind::Lemma3, params, Vec::new(), vec![delta], vec![e]))
}

/// Runs a lemma along its ladder: `u` with `delta = u^{-1/2} T` for the
/// variance lemmas, `delta * T` for the correlation lemma.
pub fn lemma_ladder(lemma: LemmaKind, params: &ModelParams, u_ladder: &[f64], delta_ladder: &[f64]) -> Result<LemmaCheckReport> {
    let t = params.horizon();
    if lemma == LemmaKind::Lemma3 {
        let deltas: Vec<f64> = delta_ladder.iter().map(|d| d * t).collect();
        let mut errors = Vec::with_capacity(deltas.len());
        for &d in &deltas {
            errors.push(check_lemma3(params, d)?.max_rel_error[0]);
        }
        return Ok(report(lemma, params, Vec::new(), deltas, errors));
    }
    let expected = match lemma {
        LemmaKind::Lemma1 => LemmaKind::Lemma1,
        _ => LemmaKind::lemma2_for(params.hurst()),
    };
    if expected != lemma {
        return Err(invalid(format!("{} does not apply at H={}", lemma.name(), params.hurst())));
    }
    // The coupled box u^{-1/2} T is wider than the single-check bound
    // 0.01 T below u = 10^4, so the ladder calls the error functions directly.
    let deltas: Vec<f64> = u_ladder.iter().map(|u| t / u.sqrt()).collect();
    let mut errors = Vec::with_capacity(deltas.len());
    for (&u, &d) in u_ladder.iter().zip(&deltas) {
        check_u(u)?;
        errors.push(match lemma {
            LemmaKind::Lemma1 => lemma1_error(params, u, d, VARIANCE_GRID),
            LemmaKind::Lemma2i => lemma2i_error(params, u, d, VARIANCE_GRID),
            _ => lemma2ii_error(params, u, d, VARIANCE_GRID)?,
        });
    }
    Ok(report(lemma, params, u_ladder.to_vec(), deltas, errors))
}

/// The three lemma ladders at one parameter set, with the default ladders.
pub fn lemma_suite(params: &ModelParams) -> Result<Vec<LemmaCheckReport>> {
    Ok(vec![
        lemma_ladder(LemmaKind::Lemma1, params, &DEFAULT_U_LADDER, &[])?,
        lemma_ladder(LemmaKind::lemma2_for(params.hurst()), params, &DEFAULT_U_LADDER, &[])?,
        lemma_ladder(LemmaKind::Lemma3, params, &[], &DEFAULT_DELTA_LADDER)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(h: f64, mu: f64, t: f64) -> ModelParams {
        ModelParams::new(h, mu, t).unwrap()
    }

    #[test]
    fn lemma1_against_reference_values() {
        // High-precision evaluation of both sides on the same 50 x 50 grids.
        let e = lemma1_error(&params(0.5, 0.0, 1.0), 1e3, 1e-3, 50);
        assert!((e - 0.001_250_124_452_804_814_7).abs() < 1e-12, "{e}");
        assert!(e < 0.02);
        let e = lemma1_error(&params(0.25, 0.3, 2.0), 1e4, 0.02, 50);
        assert!((e - 0.007_402_873_365_929_708).abs() < 1e-12, "{e}");
    }

    #[test]
    fn lemma1_shrinks_along_ladder() {
        for h in [0.25, 0.4, 0.5, 0.75] {
            let r = lemma_ladder(LemmaKind::Lemma1, &params(h, 0.0, 1.0), &DEFAULT_U_LADDER, &[]).unwrap();
            assert!(r.pass, "H={h}: {:?}", r.max_rel_error);
        }
    }

    #[test]
    fn lemma2i_shrinks_along_ladder() {
        for h in [0.5, 0.75] {
            let r = lemma_ladder(LemmaKind::Lemma2i, &params(h, 0.2, 1.5), &DEFAULT_U_LADDER, &[]).unwrap();
            assert!(r.pass, "H={h}: {:?}", r.max_rel_error);
        }
    }

    #[test]
    fn lemma2ii_quadratic_form_does_not_converge() {
        // The stated quadratic coefficient H(1-H)/(2T^2) misses the dominant
        // curvature from the s^{2H}/(2u) term near s_u, so the error grows with u.
        for h in [0.25, 0.4] {
            let r = lemma_ladder(LemmaKind::Lemma2ii, &params(h, 0.0, 1.0), &DEFAULT_U_LADDER, &[]).unwrap();
            assert!(!r.pass);
            assert!(r.max_rel_error.windows(2).all(|w| w[1] > w[0]), "H={h}: {:?}", r.max_rel_error);
        }
    }

    #[test]
    fn variance_maximizer_matches_s_u() {
        let p = params(0.25, 0.0, 1.0);
        let u = 1e4;
        let s_u = solve_s_u(u, &p).unwrap();
        let sigma = |s: f64| (1.0 - s).powf(0.25) / (u + 0.5 * (1.0 - s.powf(0.5)));
        let n = 200_000;
        let best = (1..n)
            .map(|i| 5.0 * s_u * i as f64 / n as f64)
            .max_by(|a, b| sigma(*a).total_cmp(&sigma(*b)))
            .unwrap();
        assert!((best / s_u - 1.0).abs() < 0.01, "scan {best:e} vs s_u {s_u:e}");
    }

    #[test]
    fn lemma3_shrinks_along_ladder() {
        for h in [0.25, 0.4, 0.5, 0.75] {
            let r = lemma_ladder(LemmaKind::Lemma3, &params(h, 0.0, 1.0), &[], &DEFAULT_DELTA_LADDER).unwrap();
            assert!(r.pass, "H={h}: {:?}", r.max_rel_error);
        }
    }

    #[test]
    fn brownian_correlation_with_shared_start() {
        // H = 1/2, s = s': Corr = sqrt(min(L,L')/max(L,L')) for lengths L = t - s.
        let (t, s) = (1.0, 0.002);
        for (a, a2) in [(0.0, 0.004), (0.003, 0.001), (0.0, 0.01)] {
            let got = one_minus_increment_corr(0.5, t, (s, a), (s, a2));
            let (l, l2) = (t - a - s, t - a2 - s);
            let want = 1.0 - (l.min(l2) / l.max(l2)).sqrt();
            assert!(((got - want) / want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn sigma_ratio_matches_direct_formula() {
        let p = params(0.3, 0.4, 2.0);
        let (u, s, a) = (50.0, 0.01, 0.02);
        let sigma = |s: f64, t: f64, sign: f64| {
            (t - s).powf(0.3) / (u - sign * 0.4 * (t - s) + sign * 0.5 * (t.powf(0.6) - s.powf(0.6)))
        };
        for sign in [-1.0, 1.0] {
            let direct = 1.0 - sigma(s, 2.0 - a, sign) / sigma(0.0, 2.0, sign);
            let careful = one_minus_sigma_ratio(&p, u, sign, s, a, 0.0);
            assert!(((direct - careful) / careful).abs() < 1e-10);
            let direct = 1.0 - sigma(s, 2.0 - a, sign) / sigma(0.005, 2.0, sign);
            let careful = one_minus_sigma_ratio(&p, u, sign, s, a, 0.005);
            assert!(((direct - careful) / careful).abs() < 1e-9);
        }
    }

    #[test]
    fn preconditions() {
        let p = params(0.5, 0.0, 1.0);
        assert!(check_lemma1(&p, 10.0, 1e-3).is_err());
        assert!(check_lemma1(&p, 1e3, 0.5).is_err());
        assert!(check_lemma3(&p, 0.0).is_err());
        assert!(lemma_ladder(LemmaKind::Lemma2ii, &p, &DEFAULT_U_LADDER, &[]).is_err());
        let single = check_lemma2(&p, 1e3, 1e-3).unwrap();
        assert_eq!(single.lemma, LemmaKind::Lemma2i);
        assert_eq!(single.max_rel_error.len(), 1);
    }
}
