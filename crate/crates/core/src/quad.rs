//! Adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` to roughly `tol` absolute error.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `int_a^b g(q) dq` for positive `a < b` on a logarithmic scale
/// (`q = e^u`), which suits integrands decaying like powers of `q`.
pub fn integrate_log_scale<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, tol: f64) -> f64 {
    let h = |u: f64| {
        let q = u.exp();
        q * g(q)
    };
    // split by decades so the recursion sees smooth pieces
    let (lo, hi) = (a.ln(), b.ln());
    let pieces = ((hi - lo) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    let width = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let u0 = lo + i as f64 * width;
            adaptive_simpson(&h, u0, u0 + width, tol / pieces as f64)
        })
        .sum()
}
