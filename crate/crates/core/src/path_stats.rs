//! Maximum drawdown and drawup on grid paths, and the tail events built on
//! them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fbm::{FbmPath, ModelParams, PathKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Drawdown,
    Drawup,
}

impl Functional {
    pub fn name(self) -> &'static str {
        match self {
            Functional::Drawdown => "drawdown",
            Functional::Drawup => "drawup",
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drawdown" => Ok(Functional::Drawdown),
            "drawup" => Ok(Functional::Drawup),
            other => Err(invalid(format!("unknown functional {other:?} (expected drawdown or drawup)"))),
        }
    }
}

/// The event `sup_{0<=t<=T} D_t > u` (or `U_t`) under `params`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub functional: Functional,
    pub u: f64,
    pub params: ModelParams,
}

impl TailQuery {
    pub fn new(functional: Functional, u: f64, params: ModelParams) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(invalid(format!("threshold u must be positive and finite, got {u}")));
        }
        Ok(Self { functional, u, params })
    }
}

/// `max_k (max_{j<=k} x_j - x_k)`.
pub fn max_drawdown_of(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &x in values {
        if x >= peak {
            peak = x;
        }
        worst = worst.max(peak - x);
    }
    worst
}

/// `max_k (x_k - min_{j<=k} x_j)`.
pub fn max_drawup_of(values: &[f64]) -> f64 {
    let mut trough = f64::INFINITY;
    let mut best = 0.0f64;
    for &x in values {
        if x <= trough {
            trough = x;
        }
        best = best.max(x - trough);
    }
    best
}

pub fn max_drawdown(path: &FbmPath) -> f64 {
    max_drawdown_of(path.values())
}

pub fn max_drawup(path: &FbmPath) -> f64 {
    max_drawup_of(path.values())
}

/// Drawdown and drawup of one path, at full resolution and on the
/// even-indexed subgrid, in a single pass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoLevelExtremes {
    pub fine: [f64; 2],
    pub coarse: [f64; 2],
}

impl TwoLevelExtremes {
    pub fn get(&self, functional: Functional, fine: bool) -> f64 {
        let pair = if fine { self.fine } else { self.coarse };
        match functional {
            Functional::Drawdown => pair[0],
            Functional::Drawup => pair[1],
        }
    }
}

pub fn two_level_extremes(values: &[f64]) -> TwoLevelExtremes {
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut chi, mut clo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut out = TwoLevelExtremes::default();
    for (k, &x) in values.iter().enumerate() {
        if x >= hi {
            hi = x;
        }
        if x <= lo {
            lo = x;
        }
        out.fine[0] = out.fine[0].max(hi - x);
        out.fine[1] = out.fine[1].max(x - lo);
        if k % 2 == 0 {
            if x >= chi {
                chi = x;
            }
            if x <= clo {
                clo = x;
            }
            out.coarse[0] = out.coarse[0].max(chi - x);
            out.coarse[1] = out.coarse[1].max(x - clo);
        }
    }
    out
}

/// Grid indicator of the tail event for a trended path simulated under
/// `query.params`.
pub fn exceeds(query: &TailQuery, path: &FbmPath) -> Result<bool> {
    if path.kind() != PathKind::Trended {
        return Err(Error::Mismatch("tail events are defined on trended paths".into()));
    }
    let p = &query.params;
    if path.hurst() != p.hurst() || path.grid().horizon() != p.horizon() {
        return Err(Error::Mismatch(format!(
            "path (H={}, T={}) does not match query (H={}, T={})",
            path.hurst(),
            path.grid().horizon(),
            p.hurst(),
            p.horizon()
        )));
    }
    let value = match query.functional {
        Functional::Drawdown => max_drawdown(path),
        Functional::Drawup => max_drawup(path),
    };
    Ok(value > query.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{apply_trend, GridSpec};
    use proptest::prelude::*;

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown_of(&[0.0, 1.0, 2.0, 3.0]), 0.0);
        assert_eq!(max_drawdown_of(&[0.0, 1.0, 0.5, 2.0, -1.0]), 3.0);
        assert_eq!(max_drawdown_of(&[0.0, -1.0, -0.5]), 1.0);
    }

    #[test]
    fn drawup_examples() {
        assert_eq!(max_drawup_of(&[0.0, -1.0, -2.0]), 0.0);
        assert_eq!(max_drawup_of(&[0.0, -1.0, 2.0]), 3.0);
    }

    fn trended(values: Vec<f64>, params: &ModelParams) -> FbmPath {
        let grid = GridSpec::new(values.len() - 1, params.horizon()).unwrap();
        let raw = FbmPath::new(values, grid, params.hurst(), 0, PathKind::RawFbm).unwrap();
        apply_trend(raw, params).unwrap()
    }

    #[test]
    fn exceeds_extremes() {
        let params = ModelParams::new(0.5, 0.0, 1.0).unwrap();
        let path = trended(vec![0.0, 0.3, -0.2, 0.4, 0.1], &params);
        let tiny = TailQuery::new(Functional::Drawdown, f64::MIN_POSITIVE, params).unwrap();
        assert!(exceeds(&tiny, &path).unwrap());
        let huge = TailQuery::new(Functional::Drawup, 1e9, params).unwrap();
        assert!(!exceeds(&huge, &path).unwrap());
    }

    #[test]
    fn exceeds_checks_consistency() {
        let params = ModelParams::new(0.5, 0.0, 1.0).unwrap();
        let grid = GridSpec::new(2, 1.0).unwrap();
        let raw = FbmPath::new(vec![0.0, 1.0, 0.0], grid, 0.5, 0, PathKind::RawFbm).unwrap();
        let q = TailQuery::new(Functional::Drawdown, 0.5, params).unwrap();
        assert!(exceeds(&q, &raw).is_err());
        let other = ModelParams::new(0.3, 0.0, 1.0).unwrap();
        let path = trended(vec![0.0, 1.0, 0.0], &other);
        assert!(exceeds(&q, &path).is_err());
    }

    #[test]
    fn query_requires_positive_threshold() {
        let params = ModelParams::new(0.5, 0.0, 1.0).unwrap();
        assert!(TailQuery::new(Functional::Drawdown, 0.0, params).is_err());
        assert!(TailQuery::new(Functional::Drawdown, f64::INFINITY, params).is_err());
    }

    proptest! {
        #[test]
        fn nonnegative_and_dual(v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let dd = max_drawdown_of(&v);
            let du = max_drawup_of(&v);
            prop_assert!(dd >= 0.0 && du >= 0.0);
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            prop_assert_eq!(du, max_drawdown_of(&neg));
            prop_assert_eq!(dd, max_drawup_of(&neg));
        }

        #[test]
        fn two_level_matches_direct(v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let e = two_level_extremes(&v);
            let even: Vec<f64> = v.iter().step_by(2).copied().collect();
            prop_assert_eq!(e.fine, [max_drawdown_of(&v), max_drawup_of(&v)]);
            prop_assert_eq!(e.coarse, [max_drawdown_of(&even), max_drawup_of(&even)]);
            prop_assert!(e.coarse[0] <= e.fine[0] && e.coarse[1] <= e.fine[1]);
        }
    }
}
