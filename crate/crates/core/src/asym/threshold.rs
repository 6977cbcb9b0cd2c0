//! Normalized thresholds `m(u)`, `m1(u)`, `m2(u)` and the variance-maximizer
//! location `s_u`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbm::ModelParams;

use super::minimize::golden_section;

/// Upper end of the search interval for `m2`, as a fraction of `T`.
const S_MAX_FRACTION: f64 = 1.0 - 1e-9;
const SCAN_POINTS: usize = 400;

/// `m(u) = (u + mu T - T^{2H}/2) / T^H`.
pub fn threshold_m(u: f64, params: &ModelParams) -> Result<f64> {
    let (h, mu, t) = (params.hurst(), params.mu(), params.horizon());
    let num = u + mu * t - 0.5 * t.powf(2.0 * h);
    if !(num > 0.0) {
        return Err(Error::ThresholdTooSmall(format!(
            "u + mu T - T^(2H)/2 = {num:e} must be positive (u={u}, H={h}, mu={mu}, T={t})"
        )));
    }
    Ok(num / t.powf(h))
}

/// `m1(u) = (u - mu T + T^{2H}/2) / T^H`.
pub fn threshold_m1(u: f64, params: &ModelParams) -> Result<f64> {
    let (h, mu, t) = (params.hurst(), params.mu(), params.horizon());
    let num = u - mu * t + 0.5 * t.powf(2.0 * h);
    if !(num > 0.0) {
        return Err(Error::ThresholdTooSmall(format!(
            "u - mu T + T^(2H)/2 = {num:e} must be positive (u={u}, H={h}, mu={mu}, T={t})"
        )));
    }
    Ok(num / t.powf(h))
}

/// Objective of the `m2` infimum and its first two derivatives in `s`.
struct DrawupObjective {
    u: f64,
    h: f64,
    mu: f64,
    t: f64,
}

impl DrawupObjective {
    fn numerator(&self, s: f64) -> f64 {
        self.u - self.mu * (self.t - s) + 0.5 * (self.t.powf(2.0 * self.h) - s.powf(2.0 * self.h))
    }

    fn value(&self, s: f64) -> f64 {
        self.numerator(s) / (self.t - s).powf(self.h)
    }

    fn derivatives(&self, s: f64) -> (f64, f64) {
        let h = self.h;
        let n = self.numerator(s);
        let n1 = self.mu - h * s.powf(2.0 * h - 1.0);
        let n2 = -h * (2.0 * h - 1.0) * s.powf(2.0 * h - 2.0);
        let r = self.t - s;
        let d1 = n1 / r.powf(h) + h * n / r.powf(h + 1.0);
        let d2 = n2 / r.powf(h) + 2.0 * h * n1 / r.powf(h + 1.0) + h * (h + 1.0) * n / r.powf(h + 2.0);
        (d1, d2)
    }
}

/// `m2(u) = inf_{0<=s<T} (u - mu(T-s) + (T^{2H} - s^{2H})/2) / (T-s)^H`
/// and its minimizer. Returns `(value, s_star)`.
///
/// A log-spaced scan (which resolves minimizers of size `u^{-1/(1-2H)}`)
/// brackets the minimum, golden-section narrows it to `1e-12` in `s`, and one
/// Newton step polishes it if that lowers the objective.
pub fn threshold_m2(u: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let obj = DrawupObjective { u, h: params.hurst(), mu: params.mu(), t: params.horizon() };
    let t = obj.t;
    let s_max = t * S_MAX_FRACTION;

    let mut nodes: Vec<f64> = vec![0.0];
    let lo = (1e-18 * t).ln();
    let hi = s_max.ln();
    for i in 0..SCAN_POINTS {
        nodes.push((lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp());
    }
    if params.hurst() < 0.5 {
        if let Ok(guess) = solve_s_u(u, params) {
            nodes.push(guess);
        }
    }
    nodes.retain(|&s| s <= s_max);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();

    let values: Vec<f64> = nodes.iter().map(|&s| obj.value(s)).collect();
    if let Some(i) = nodes.iter().position(|&s| !(obj.numerator(s) > 0.0)) {
        return Err(Error::ThresholdTooSmall(format!(
            "drawup numerator nonpositive at s={} (u={u})",
            nodes[i]
        )));
    }
    let best = (0..values.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .ok_or_else(|| Error::Minimization("empty scan".into()))?;
    if !values[best].is_finite() {
        return Err(Error::Minimization(format!("objective not finite at s={}", nodes[best])));
    }
    let a = nodes[best.saturating_sub(1)];
    let b = nodes[(best + 1).min(nodes.len() - 1)];
    let (mut s, mut v) = if a < b {
        golden_section(|s| obj.value(s), a, b, 1e-12 * t)
    } else {
        (nodes[best], values[best])
    };
    if v > values[best] {
        s = nodes[best];
        v = values[best];
    }

    if s > 0.0 {
        let (d1, d2) = obj.derivatives(s);
        if d2 > 0.0 {
            let polished = s - d1 / d2;
            if polished > 0.0 && polished <= s_max {
                let pv = obj.value(polished);
                if pv < v {
                    s = polished;
                    v = pv;
                }
            }
        }
    }
    Ok((v, s))
}

/// Right-hand side of the fixed-point equation for `s_u` (H < 1/2).
fn s_u_map(s: f64, u: f64, params: &ModelParams) -> f64 {
    let (h, mu, t) = (params.hurst(), params.mu(), params.horizon());
    let bracket = u / t + 0.5 * t.powf(2.0 * h - 1.0) + mu * (1.0 - h) / h + s.powf(2.0 * h) / (2.0 * t)
        - mu * (1.0 - h) * s / (t * h);
    bracket.powf(1.0 / (2.0 * h - 1.0))
}

/// Location of the maximal standard deviation of the drawup field for
/// `H < 1/2`, solved by damped fixed-point iteration from
/// `T^{1/(1-2H)} u^{-1/(1-2H)}`.
pub fn solve_s_u(u: f64, params: &ModelParams) -> Result<f64> {
    let (h, t) = (params.hurst(), params.horizon());
    if !(h < 0.5) {
        return Err(invalid(format!("s_u is defined for H < 1/2, got {h}")));
    }
    let p = 1.0 / (1.0 - 2.0 * h);
    let mut s = t.powf(p) * u.powf(-p);
    let mut damping = 1.0;
    let mut last_step = f64::INFINITY;
    for _ in 0..200 {
        let target = s_u_map(s, u, params);
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::NoConvergence(format!(
                "s_u iteration left the domain at s={s:e} (u={u}, H={h})"
            )));
        }
        let step = target - s;
        if step.abs() > last_step {
            damping *= 0.5;
        }
        last_step = step.abs();
        let next = s + damping * step;
        if (next - s).abs() <= 1e-12 * next.abs() && (target - next).abs() <= 1e-12 * next.abs() {
            if !(next > 0.0 && next < t) {
                return Err(Error::NoConvergence(format!("s_u = {next:e} outside (0, T)")));
            }
            return Ok(next);
        }
        s = next;
    }
    Err(Error::NoConvergence(format!("s_u iteration did not converge in 200 steps (u={u}, H={h})")))
}

/// The threshold functions at one `u`; entries whose preconditions fail (or
/// that do not apply to `H`) are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFunctions {
    pub m: Option<f64>,
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub s_star: Option<f64>,
    pub s_u: Option<f64>,
}

impl ThresholdFunctions {
    pub fn evaluate(u: f64, params: &ModelParams) -> Self {
        let low_hurst = params.hurst() < 0.5;
        let m2 = if low_hurst { threshold_m2(u, params).ok() } else { None };
        Self {
            m: threshold_m(u, params).ok(),
            m1: threshold_m1(u, params).ok(),
            m2: m2.map(|x| x.0),
            s_star: m2.map(|x| x.1),
            s_u: if low_hurst { solve_s_u(u, params).ok() } else { None },
        }
    }
}
