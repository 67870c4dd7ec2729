//! Test-side oracles that share no code with the library: a direct mixing
//! density and adaptive Simpson quadrature.

#![allow(dead_code)]

/// Mixing density written out from `F(x) = (x/a)(1 − e^{−λx})` on `[0, a]`.
pub fn density(a: f64, l: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x <= a {
        (1.0 - (-l * x).exp() + l * x * (-l * x).exp()) / a
    } else {
        l * (-l * x).exp()
    }
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, flo: f64, fmid: f64, fhi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (lm, rm) = (0.5 * (lo + mid), 0.5 * (mid + hi));
    let (flm, frm) = (f(lm), f(rm));
    let left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    let right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    let diff = left + right - whole;
    let floor = 8.0 * f64::EPSILON * (left.abs() + right.abs());
    if depth == 0 || diff.abs() <= 15.0 * tol.max(floor) {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, lo, mid, flo, flm, fmid, left, tol / 2.0, depth - 1)
        + simpson_rec(f, mid, hi, fmid, frm, fhi, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson on `[lo, hi]`, pre-split into 64 panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let panels = 64;
    let h = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| {
            let (a, b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_rec(&f, a, b, fa, fm, fb, whole, tol / panels as f64, 30)
        })
        .sum()
}

/// `E g(ξ)`, split at `a` and truncated where the exponential tail is
/// below double precision.
pub fn expect(a: f64, l: f64, g: impl Fn(f64) -> f64) -> f64 {
    let h = |x: f64| if x > 0.0 { g(x) * density(a, l, x) } else { 0.0 };
    let far = a + 80.0 / l;
    simpson(&h, 0.0, a, 1e-12) + simpson(&h, a, far, 1e-12)
}

/// Relative-or-absolute deviation `|v − r| / max(1, |r|)`.
pub fn dev(v: f64, r: f64) -> f64 {
    (v - r).abs() / r.abs().max(1.0)
}

pub fn rel(v: f64, r: f64) -> f64 {
    ((v - r) / r).abs()
}
