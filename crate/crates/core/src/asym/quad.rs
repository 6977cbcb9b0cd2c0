//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{invalid, Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights at `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub segments: usize,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Integrates `f` over `[a, b]` until the summed error estimate falls below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid(format!("bad integration interval [{a}, {b}]")));
    }
    let (v, e) = kronrod(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    loop {
        let value: f64 = segs.iter().map(|s| s.2).sum();
        let error: f64 = segs.iter().map(|s| s.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, segments: segs.len() });
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::NoConvergence(format!(
                "quadrature error {error:e} after {MAX_SEGMENTS} segments"
            )));
        }
        let worst = (0..segs.len()).max_by(|&i, &j| segs[i].3.total_cmp(&segs[j].3)).unwrap();
        let (lo, hi, _, _) = segs.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
}

/// `int_0^inf exp(-x - T^{1/4} sqrt(x)) dx`, computed as
/// `int_0^inf 2y exp(-y^2 - T^{1/4} y) dy`. The integrand is below
/// `e^{-1600}` past `y = 40`.
pub fn quad_quarter_integral(horizon: f64) -> Result<f64> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon T must be positive, got {horizon}")));
    }
    let c = horizon.powf(0.25);
    let r = integrate(|y| 2.0 * y * (-y * y - c * y).exp(), 0.0, 40.0, 1e-13, 0.0)?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x + 1.0, -1.0, 2.0, 1e-14, 0.0).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0) + 3.0;
        assert!((r.value - exact).abs() < 1e-13);
        assert_eq!(r.segments, 1);
    }

    #[test]
    fn adapts_to_peaks() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(((r.value - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn quarter_integral_against_reference() {
        let table = [
            (0.5, 0.508_996_011_872_794_173_1),
            (1.0, 0.454_358_639_234_952_957_9),
            (2.0, 0.399_034_879_180_135_323_3),
        ];
        for (t, want) in table {
            let got = quad_quarter_integral(t).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "T={t}: {got}");
        }
    }

    #[test]
    fn quarter_integral_limits() {
        assert!((quad_quarter_integral(1e-60).unwrap() - 1.0).abs() < 1e-10);
        assert!(quad_quarter_integral(2.0).unwrap() < quad_quarter_integral(1.0).unwrap());
        assert!(quad_quarter_integral(0.0).is_err());
    }
}
