//! One-dimensional search helpers.

/// `1/phi`, the golden-section shrink factor.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns the best abscissa seen and its value. Stops once the bracket is
/// narrower than `tol` (or after `max_iter` shrinks).
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (b - a) > tol && iter < max_iter {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `n` points spaced evenly in `ln` between `from` and `to` (both positive),
/// endpoints included.
pub fn log_grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    assert!(from > 0.0 && to > 0.0 && n >= 2);
    let (lf, lt) = (from.ln(), to.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                to
            } else {
                (lf + (lt - lf) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
