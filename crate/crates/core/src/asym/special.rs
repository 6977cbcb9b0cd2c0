//! Normal tail and Gamma prefactor.

use crate::error::{invalid, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Upper standard normal tail `P(N > x)`. Underflows to 0 past x ~ 38.5.
pub fn psi(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `ln P(N > x)`, finite for every finite `x`.
pub fn log_psi(x: f64) -> f64 {
    if x <= 5.0 {
        if x < -5.0 {
            (-psi(-x)).ln_1p()
        } else {
            psi(x).ln()
        }
    } else {
        -0.5 * x * x - LN_SQRT_2PI - x.ln() + mills_ratio_scaled(x).ln()
    }
}

/// `x * R(x)` where `R(x) = Psi(x) / phi(x)`, from the continued fraction
/// `R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))`.
fn mills_ratio_scaled(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=120).rev() {
        tail = x + k as f64 / tail;
    }
    x / tail
}

/// `Gamma(1/(2H) + 1)`.
pub fn gamma_prefactor(hurst: f64) -> Result<f64> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(invalid(format!("Hurst index must lie in (0,1), got {hurst}")));
    }
    Ok(libm::tgamma(1.0 / (2.0 * hurst) + 1.0))
}
