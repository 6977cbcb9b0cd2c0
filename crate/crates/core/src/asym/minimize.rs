//! One-dimensional minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimizer of a unimodal `f` on `[a, b]`,
/// stopping when the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (c, fc), (d, fd), (b, f(b))];
    candidates.into_iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap()
}
