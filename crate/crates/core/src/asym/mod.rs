//! Tail asymptotics of the maximum drawdown and drawup.
//!
//! Drawdown, with `m(u) = (u + mu T - T^{2H}/2) / T^H`:
//!
//! ```text
//! H > 1/2        Psi(m)
//! H = 1/2        4 Psi(m)
//! 1/4 < H < 1/2  (H^{-1} 2^{-1/(2H)} T^{2H-1} H_H)^2 u^{2/H-4} Psi(m)
//! H = 1/4        H_{1/4}^2 T^{-1} I(T) u^4 Psi(m),  I(T) = int_0^inf e^{-x - T^{1/4} sqrt(x)} dx
//! H < 1/4        H^{-1} 2^{-1/(2H)} T^{2H-2} Gamma(1/(2H)+1) H_H^2 u^{3/(2H)-2} Psi(m)
//! ```
//!
//! Drawup, with `m1(u) = (u - mu T + T^{2H}/2) / T^H` and `m2` the infimum
//! over the starting point:
//!
//! ```text
//! H > 1/2        Psi(m1)
//! H = 1/2        4 Psi(m1)
//! H < 1/2        C(H,T) H_H^2 u^{2/H-3} Psi(m2)
//! ```

mod minimize;
#[allow(clippy::excessive_precision)]
mod quad;
mod special;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::constants::{ConstantEstimate, ConstantSource};
use crate::error::{invalid, Result};
use crate::fbm::ModelParams;
use crate::path_stats::Functional;

pub use crate::constants::piterbarg_half;
pub use minimize::golden_section;
pub use quad::{integrate, quad_quarter_integral, QuadResult};
pub use special::{gamma_prefactor, log_psi, psi};
pub use threshold::{solve_s_u, threshold_m, threshold_m1, threshold_m2, ThresholdFunctions};

/// Half-width of the window around `H = 1/4` and `H = 1/2` that selects the
/// boundary regimes. Inputs `1/2 +- 1e-12` land outside it (in binary,
/// `0.5 - 1e-12` sits 9.9998e-13 below one half).
pub const BOUNDARY_WINDOW: f64 = 5e-13;

pub fn hurst_at(hurst: f64, boundary: f64) -> bool {
    (hurst - boundary).abs() < BOUNDARY_WINDOW
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    DdHGtHalf,
    DdHEqHalf,
    DdQuarterLtHLtHalf,
    DdHEqQuarter,
    DdHLtQuarter,
    DuHGtHalf,
    DuHEqHalf,
    DuHLtHalf,
}

impl Regime {
    pub fn select(functional: Functional, hurst: f64) -> Self {
        let half = hurst_at(hurst, 0.5);
        let quarter = hurst_at(hurst, 0.25);
        match functional {
            Functional::Drawdown if half => Regime::DdHEqHalf,
            Functional::Drawdown if hurst > 0.5 => Regime::DdHGtHalf,
            Functional::Drawdown if quarter => Regime::DdHEqQuarter,
            Functional::Drawdown if hurst > 0.25 => Regime::DdQuarterLtHLtHalf,
            Functional::Drawdown => Regime::DdHLtQuarter,
            Functional::Drawup if half => Regime::DuHEqHalf,
            Functional::Drawup if hurst > 0.5 => Regime::DuHGtHalf,
            Functional::Drawup => Regime::DuHLtHalf,
        }
    }

    /// Exponent of `u` in the prefactor.
    pub fn power_exponent(self, hurst: f64) -> f64 {
        match self {
            Regime::DdQuarterLtHLtHalf => 2.0 / hurst - 4.0,
            Regime::DdHEqQuarter => 4.0,
            Regime::DdHLtQuarter => 3.0 / (2.0 * hurst) - 2.0,
            Regime::DuHLtHalf => 2.0 / hurst - 3.0,
            _ => 0.0,
        }
    }
}

/// Power of `T` in the `H < 1/2` drawup constant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawupVariant {
    /// `2^{-1/H-1/2} T^{3H} sqrt(pi / (H^3 (1-H)))`.
    Statement,
    /// `2^{-1/H-1/2} T^{3H-2} sqrt(pi / (H^3 (1-H)))`, from recomposing
    /// `m2^{-3} Delta1^{-2}` with `Delta1 = 2^{1/(2H)} T m2^{-1/H}`.
    #[default]
    ProofDerived,
}

impl std::str::FromStr for DrawupVariant {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statement" => Ok(DrawupVariant::Statement),
            "proof_derived" => Ok(DrawupVariant::ProofDerived),
            other => Err(invalid(format!("unknown variant {other:?} (expected statement or proof_derived)"))),
        }
    }
}

impl DrawupVariant {
    pub fn constant(self, hurst: f64, horizon: f64) -> f64 {
        let t_power = match self {
            DrawupVariant::Statement => 3.0 * hurst,
            DrawupVariant::ProofDerived => 3.0 * hurst - 2.0,
        };
        let root = (std::f64::consts::PI / (hurst.powi(3) * (1.0 - hurst))).sqrt();
        2f64.powf(-1.0 / hurst - 0.5) * horizon.powf(t_power) * root
    }

    fn note(self) -> &'static str {
        match self {
            DrawupVariant::Statement => {
                "constant 2^(-1/H-1/2) T^(3H) sqrt(pi/(H^3(1-H))): (1-H) under the root; equals proof_derived times T^2"
            }
            DrawupVariant::ProofDerived => {
                "constant 2^(-1/H-1/2) T^(3H-2) sqrt(pi/(H^3(1-H))): recomposed from m2^-3 Delta1^-2; equals statement times T^-2"
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsUsed {
    pub pickands: Option<ConstantEstimate>,
    pub piterbarg: Option<ConstantEstimate>,
}

/// `probability = prefactor * u^power_exponent * Psi(threshold_value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub functional: Functional,
    pub u: f64,
    pub params: ModelParams,
    pub regime: Regime,
    pub threshold_value: f64,
    pub prefactor: f64,
    pub power_exponent: f64,
    pub probability: f64,
    /// `ln` of `probability`, finite even where `Psi` underflows.
    pub log_probability: f64,
    pub minimizer: Option<f64>,
    pub constants_used: ConstantsUsed,
    pub variant: Option<DrawupVariant>,
    pub variant_note: Option<String>,
}

impl AsymptoticResult {
    #[allow(clippy::too_many_arguments)]
    fn compose(
        functional: Functional,
        u: f64,
        params: ModelParams,
        regime: Regime,
        threshold_value: f64,
        prefactor: f64,
        constants_used: ConstantsUsed,
        minimizer: Option<f64>,
        variant: Option<DrawupVariant>,
    ) -> Self {
        let power_exponent = regime.power_exponent(params.hurst());
        let probability = compose_probability(prefactor, u, power_exponent, threshold_value);
        let log_probability = prefactor.ln() + power_exponent * u.ln() + log_psi(threshold_value);
        let result = Self {
            functional,
            u,
            params,
            regime,
            threshold_value,
            prefactor,
            power_exponent,
            probability,
            log_probability,
            minimizer,
            constants_used,
            variant,
            variant_note: variant.map(|v| v.note().to_string()),
        };
        assert_eq!(result.recomposed().to_bits(), result.probability.to_bits());
        assert!(result.probability.is_finite() && result.probability >= 0.0);
        result
    }

    /// Probability recomputed from this result's own fields.
    pub fn recomposed(&self) -> f64 {
        compose_probability(self.prefactor, self.u, self.power_exponent, self.threshold_value)
    }
}

fn compose_probability(prefactor: f64, u: f64, power: f64, m: f64) -> f64 {
    prefactor * u.powf(power) * psi(m)
}

fn check_u(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("threshold u must be positive and finite, got {u}")))
    }
}

/// Tail approximation of `P(sup D_t > u)`.
pub fn asym_drawdown(u: f64, params: &ModelParams, constants: &dyn ConstantSource) -> Result<AsymptoticResult> {
    check_u(u)?;
    let (h, t) = (params.hurst(), params.horizon());
    let m = threshold_m(u, params)?;
    let regime = Regime::select(Functional::Drawdown, h);
    let mut used = ConstantsUsed::default();
    let prefactor = match regime {
        Regime::DdHGtHalf => 1.0,
        Regime::DdHEqHalf => {
            let p = constants.piterbarg(0.5, 1.0)?;
            let v = p.value;
            used.piterbarg = Some(p);
            v * v
        }
        Regime::DdQuarterLtHLtHalf => {
            let c = constants.pickands(h)?;
            let base = 2f64.powf(-1.0 / (2.0 * h)) * t.powf(2.0 * h - 1.0) * c.value / h;
            used.pickands = Some(c);
            base * base
        }
        Regime::DdHEqQuarter => {
            let c = constants.pickands(h)?;
            let v = c.value * c.value / t * quad_quarter_integral(t)?;
            used.pickands = Some(c);
            v
        }
        Regime::DdHLtQuarter => {
            let c = constants.pickands(h)?;
            let v = 2f64.powf(-1.0 / (2.0 * h)) * t.powf(2.0 * h - 2.0) * gamma_prefactor(h)? * c.value * c.value / h;
            used.pickands = Some(c);
            v
        }
        _ => unreachable!("drawup regime selected for drawdown"),
    };
    Ok(AsymptoticResult::compose(Functional::Drawdown, u, *params, regime, m, prefactor, used, None, None))
}

/// Tail approximation of `P(sup U_t > u)`.
pub fn asym_drawup(
    u: f64,
    params: &ModelParams,
    constants: &dyn ConstantSource,
    variant: DrawupVariant,
) -> Result<AsymptoticResult> {
    check_u(u)?;
    let (h, t) = (params.hurst(), params.horizon());
    let regime = Regime::select(Functional::Drawup, h);
    let mut used = ConstantsUsed::default();
    let result = match regime {
        Regime::DuHGtHalf => {
            let m1 = threshold_m1(u, params)?;
            AsymptoticResult::compose(Functional::Drawup, u, *params, regime, m1, 1.0, used, None, None)
        }
        Regime::DuHEqHalf => {
            let m1 = threshold_m1(u, params)?;
            let p = constants.piterbarg(0.5, 1.0)?;
            let v = p.value;
            used.piterbarg = Some(p);
            AsymptoticResult::compose(Functional::Drawup, u, *params, regime, m1, v * v, used, None, None)
        }
        Regime::DuHLtHalf => {
            let (m2, s_star) = threshold_m2(u, params)?;
            let c = constants.pickands(h)?;
            let prefactor = variant.constant(h, t) * c.value * c.value;
            used.pickands = Some(c);
            AsymptoticResult::compose(
                Functional::Drawup,
                u,
                *params,
                regime,
                m2,
                prefactor,
                used,
                Some(s_star),
                Some(variant),
            )
        }
        _ => unreachable!("drawdown regime selected for drawup"),
    };
    Ok(result)
}

/// Dispatches on the functional.
pub fn asym_tail(
    functional: Functional,
    u: f64,
    params: &ModelParams,
    constants: &dyn ConstantSource,
    variant: DrawupVariant,
) -> Result<AsymptoticResult> {
    match functional {
        Functional::Drawdown => asym_drawdown(u, params, constants),
        Functional::Drawup => asym_drawup(u, params, constants, variant),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ConstantKind, ConstantsProvider, Provenance};
    use crate::error::Error;
    use proptest::prelude::*;

    fn params(h: f64, mu: f64, t: f64) -> ModelParams {
        ModelParams::new(h, mu, t).unwrap()
    }

    /// Provider with fixed Pickands values for the Hurst indices used below.
    fn provider() -> ConstantsProvider {
        let p = ConstantsProvider::default();
        for (h, v) in [(0.35, 1.7), (0.25, 2.5), (0.2, 3.1), (0.1, 8.0), (0.3, 2.0), (0.45, 1.2)] {
            p.insert(ConstantEstimate {
                kind: ConstantKind::Pickands,
                hurst: h,
                nu: None,
                b: Some(4.0),
                b_ladder: Some(vec![1.0, 2.0, 4.0]),
                eta: Some(1.0 / 256.0),
                n_sim: 1000,
                seed: Some(0),
                value: v,
                std_error: 0.01,
                provenance: Provenance::Simulated,
                note: None,
            });
        }
        p
    }

    #[test]
    fn regime_selection() {
        use Functional::*;
        assert_eq!(Regime::select(Drawdown, 0.5), Regime::DdHEqHalf);
        assert_eq!(Regime::select(Drawdown, 0.5 + 1e-12), Regime::DdHGtHalf);
        assert_eq!(Regime::select(Drawdown, 0.5 - 1e-12), Regime::DdQuarterLtHLtHalf);
        assert_eq!(Regime::select(Drawdown, 0.25), Regime::DdHEqQuarter);
        assert_eq!(Regime::select(Drawdown, 0.25 + 1e-12), Regime::DdQuarterLtHLtHalf);
        assert_eq!(Regime::select(Drawdown, 0.25 - 1e-12), Regime::DdHLtQuarter);
        assert_eq!(Regime::select(Drawup, 0.5), Regime::DuHEqHalf);
        assert_eq!(Regime::select(Drawup, 0.5 + 1e-12), Regime::DuHGtHalf);
        assert_eq!(Regime::select(Drawup, 0.5 - 1e-12), Regime::DuHLtHalf);
    }

    #[test]
    fn brownian_drawdown_is_four_psi() {
        let r = asym_drawdown(2.0, &params(0.5, 0.0, 1.0), &provider()).unwrap();
        assert_eq!(r.regime, Regime::DdHEqHalf);
        assert!((r.probability - 0.267_228_805_075_432_3).abs() < 1e-15);
        assert_eq!(r.constants_used.piterbarg.unwrap().provenance, Provenance::ClosedForm);
    }

    #[test]
    fn brownian_drawup_is_four_psi() {
        let r = asym_drawup(2.0, &params(0.5, 0.0, 1.0), &provider(), DrawupVariant::default()).unwrap();
        assert!((r.probability - 0.024_838_661_303_104_54).abs() < 1e-16);
        assert!(r.variant_note.is_none());
    }

    #[test]
    fn smooth_regimes_are_plain_psi() {
        let r = asym_drawdown(2.0, &params(0.75, 0.0, 1.0), &provider()).unwrap();
        assert_eq!(r.probability, psi(1.5));
        let r = asym_drawup(3.0, &params(0.75, 0.3, 1.0), &provider(), DrawupVariant::default()).unwrap();
        assert!((r.threshold_value - 3.2).abs() < 1e-15);
        assert_eq!(r.probability, psi(r.threshold_value));
    }

    #[test]
    fn intermediate_drawdown_recomposes() {
        let (h, u) = (0.35, 10.0);
        let r = asym_drawdown(u, &params(h, 0.0, 1.0), &provider()).unwrap();
        let base = 1.7 / h * 2f64.powf(-1.0 / (2.0 * h));
        assert!((r.prefactor - base * base).abs() < 1e-14 * r.prefactor);
        let independent = base * base * u.powf(2.0 / h - 4.0) * psi((u - 0.5) / 1.0);
        assert!((r.probability - independent).abs() < 1e-13 * independent);
        assert_eq!(r.constants_used.pickands.unwrap().provenance, Provenance::Cached);
    }

    #[test]
    fn quarter_and_low_regimes_recompose() {
        let t = 2.0;
        let r = asym_drawdown(10.0, &params(0.25, 0.1, t), &provider()).unwrap();
        let want = 2.5 * 2.5 / t * quad_quarter_integral(t).unwrap();
        assert!((r.prefactor - want).abs() < 1e-14 * want);
        assert_eq!(r.power_exponent, 4.0);

        let h = 0.2;
        let r = asym_drawdown(10.0, &params(h, 0.1, t), &provider()).unwrap();
        let want = 2f64.powf(-2.5) * t.powf(0.4 - 2.0) * 3.323_350_970_447_842_6 * 3.1 * 3.1 / h;
        assert!((r.prefactor - want).abs() < 1e-12 * want);
        assert!((r.power_exponent - 5.5).abs() < 1e-15);
    }

    #[test]
    fn drawup_variants_differ_by_t_squared() {
        for (t, ratio) in [(1.0, 1.0), (2.0, 4.0)] {
            let p = params(0.3, 0.0, t);
            let s = asym_drawup(5.0, &p, &provider(), DrawupVariant::Statement).unwrap();
            let d = asym_drawup(5.0, &p, &provider(), DrawupVariant::ProofDerived).unwrap();
            assert!((s.probability / d.probability - ratio).abs() < 1e-13);
            assert!(d.variant_note.is_some());
            assert_eq!(d.variant, Some(DrawupVariant::ProofDerived));
        }
    }

    #[test]
    fn missing_constant_and_bad_threshold_propagate() {
        let strict = ConstantsProvider::default();
        assert!(matches!(
            asym_drawdown(10.0, &params(0.4, 0.0, 1.0), &strict),
            Err(Error::ConstantUnavailable(_))
        ));
        let err = asym_drawdown(0.1, &params(0.5, 0.0, 1.0), &strict).unwrap_err();
        assert!(matches!(err, Error::ThresholdTooSmall(_)));
        assert!(asym_drawdown(-1.0, &params(0.7, 0.0, 1.0), &strict).is_err());
    }

    #[test]
    fn log_probability_survives_underflow() {
        let r = asym_drawdown(60.0, &params(0.7, 0.0, 1.0), &provider()).unwrap();
        assert_eq!(r.probability, 0.0);
        assert!((r.log_probability - log_psi(59.5)).abs() < 1e-12 * r.log_probability.abs());
    }

    fn assert_decreasing(h: f64, mu: f64, t: f64, us: &[f64]) {
        let p = params(h, mu, t);
        let prov = provider();
        for f in [Functional::Drawdown, Functional::Drawup] {
            let probs: Vec<f64> = us
                .iter()
                .map(|&u| asym_tail(f, u, &p, &prov, DrawupVariant::default()).unwrap().log_probability)
                .collect();
            assert!(probs.windows(2).all(|w| w[1] < w[0]), "H={h} {f:?}: {probs:?}");
        }
    }

    #[test]
    fn monotone_in_u() {
        let us: Vec<f64> = (0..40).map(|i| 3.0 + 0.5 * i as f64).collect();
        for h in [0.75, 0.5, 0.45, 0.35] {
            assert_decreasing(h, 0.0, 1.0, &us);
        }
        let wide: Vec<f64> = (0..40).map(|i| 8.0 + i as f64).collect();
        for h in [0.3, 0.25, 0.2, 0.1] {
            assert_decreasing(h, 0.2, 1.0, &wide);
        }
    }

    proptest! {
        #[test]
        fn results_recompose_from_fields(
            idx in 0usize..6, mu in -0.5f64..0.5, t in 0.5f64..2.0, u in 3.0f64..40.0, statement in any::<bool>(),
        ) {
            let h = [0.1, 0.25, 0.35, 0.5, 0.45, 0.75][idx];
            let p = params(h, mu, t);
            let variant = if statement { DrawupVariant::Statement } else { DrawupVariant::ProofDerived };
            for f in [Functional::Drawdown, Functional::Drawup] {
                if let Ok(r) = asym_tail(f, u, &p, &provider(), variant) {
                    prop_assert_eq!(r.recomposed().to_bits(), r.probability.to_bits());
                    prop_assert!(r.probability >= 0.0 && r.prefactor > 0.0);
                }
            }
        }
    }
}
