//! Waiting-time laws of the mixed Poisson process.
//!
//! Given `ξ = x`, inter-arrival times are i.i.d. `Exp(x)`. Mixing over `ξ`
//! gives the Exp-Max-U-Exp law of `τ = η/ξ`, the joint law of `(τ, ξ)`, the
//! exchangeable multivariate law of `(τ₁, …, τ_k)`, and the Erlang-Max-U-Exp
//! law of the `n`-th arrival `T_n = Γ(n, 1)/ξ`.
//!
//! `τ` has a Pareto-like tail, `P(τ > t) ~ 2λ/(a t²)`, so `E τ^q` is finite
//! exactly for `q < 2`.

use crate::error::{domain, Error, Result};
use crate::maxuexp::Params;
use crate::numeric::{
    gamma2_over_square, integrate_with, ln_gamma_unchecked, one_minus_exp_over, Interval,
    QuadOptions, RandomStream,
};

/// Density of `τ`:
/// `(1 − e^{−at} − at e^{−at})/(at²) + (λ−t)(1 − e^{−a(λ+t)})/(a(λ+t)³) + t e^{−a(λ+t)}/(λ+t)²`.
pub fn emue_pdf(p: &Params, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (a, l) = (p.a(), p.lambda());
    let big = l + t;
    a * gamma2_over_square(a * t)
        + (l - t) / (big * big) * one_minus_exp_over(a * big)
        + t / (big * big) * (-a * big).exp()
}

/// `1 − (1 − e^{−z})/z`, with a series for small `z`.
fn one_minus_u(z: f64) -> f64 {
    if z < 1e-4 {
        z / 2.0 - z * z / 6.0 + z * z * z / 24.0
    } else {
        1.0 - one_minus_exp_over(z)
    }
}

/// CDF of `τ`: `1 − (1 − e^{−at})/(at) + t(1 − e^{−a(λ+t)})/(a(λ+t)²)`.
pub fn emue_cdf(p: &Params, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (a, l) = (p.a(), p.lambda());
    let big = l + t;
    one_minus_u(a * t) + (t / big) * one_minus_exp_over(a * big)
}

/// Survival function `P(τ > t)`, which equals the transform `E e^{−tξ}`.
pub fn emue_sf(p: &Params, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    p.lst(t).expect("t > 0")
}

/// One draw of `τ = η/ξ`: `ξ` is drawn first, then the unit exponential `η`.
pub fn emue_sample(p: &Params, s: &mut RandomStream) -> f64 {
    let xi = p.sample(s);
    let eta = s.exp(1.0);
    eta / xi
}

/// `E τ^q = Γ(q+1) E ξ^{−q}`, finite for `q ∈ (0, 2)`.
pub fn emue_moment(p: &Params, q: f64) -> Result<f64> {
    if q >= 2.0 {
        return Err(Error::Divergence { order: q });
    }
    Ok(ln_gamma_unchecked(q + 1.0).exp() * p.neg_moment(q)?)
}

/// Joint density of `(τ, ξ)`: `x e^{−tx} f_ξ(x)` on the positive quadrant.
pub fn biv_pdf(p: &Params, t: f64, x: f64) -> f64 {
    if t <= 0.0 || x <= 0.0 {
        return 0.0;
    }
    let (a, l) = (p.a(), p.lambda());
    if x <= a {
        let y = l * x;
        x * (-t * x).exp() / a * (-(-y).exp_m1() + y * (-y).exp())
    } else {
        l * x * (-(l + t) * x).exp()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive, got {v}")))
    }
}

/// Conditional density of `ξ` given `τ = t`, by Bayes' rule.
pub fn cond_density_xi_given_tau(p: &Params, t: f64, x: f64) -> Result<f64> {
    check_positive("t", t)?;
    Ok(biv_pdf(p, t, x) / emue_pdf(p, t))
}

/// `E(τ | ξ = x) = 1/x`.
pub fn regress_tau_on_xi(x: f64) -> Result<f64> {
    check_positive("x", x)?;
    Ok(1.0 / x)
}

/// `E(ξ | τ = t)`, integrating `x` against the conditional density.
pub fn regress_xi_on_tau(p: &Params, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    let norm = emue_pdf(p, t);
    let r = integrate_with(
        |x| x * biv_pdf(p, t, x),
        Interval::semi_infinite(0.0)?,
        &[p.a()],
        QuadOptions::new(1e-13),
    )?;
    Ok(r.value / norm)
}

/// Joint density of `(τ₁, …, τ_k)` (multivariate kind II). Depends on the
/// arguments only through their sum `S`; equals `T(S, k) = E[ξ^k e^{−Sξ}]`.
pub fn mvar2_pdf(p: &Params, ts: &[f64]) -> Result<f64> {
    if ts.is_empty() {
        return Err(domain("multivariate density needs at least one coordinate"));
    }
    if ts.iter().any(|&t| !(t > 0.0)) {
        return Ok(0.0);
    }
    let sum: f64 = ts.iter().sum();
    p.tilted_moment(sum, ts.len() as f64)
}

/// Density of the `n`-th arrival time `T_n`.
///
/// Equal to `t^{n−1} T(t, n)/(n−1)!`, evaluated as `(n/t)·tⁿT(t, n)/n!` so
/// that it shares the Poisson-weighted kernel with the count probabilities.
pub fn erlang_pdf(p: &Params, n: u32, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("Erlang order must be at least 1"));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(n as f64 / t * p.poisson_weight(t, n as u64)?)
}

/// CDF of `T_n` by quadrature of [`erlang_pdf`].
pub fn erlang_cdf(p: &Params, n: u32, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("Erlang order must be at least 1"));
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let mut failure = None;
    let r = integrate_with(
        |s| match erlang_pdf(p, n, s) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        Interval::new(0.0, t)?,
        &[],
        QuadOptions::new(1e-12),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r.value.min(1.0)),
    }
}

/// One draw of `T_n = (η₁ + … + η_n)/ξ` with a single shared `ξ`.
pub fn erlang_sample(p: &Params, n: u32, s: &mut RandomStream) -> f64 {
    let xi = p.sample(s);
    s.gamma_int(n) / xi
}

/// `E T_n^q = Γ(q+n)/Γ(n) · E ξ^{−q}`, finite for `q ∈ (0, 2)`.
pub fn erlang_moment(p: &Params, n: u32, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("Erlang order must be at least 1"));
    }
    if q >= 2.0 {
        return Err(Error::Divergence { order: q });
    }
    let nf = n as f64;
    let ratio = (ln_gamma_unchecked(q + nf) - ln_gamma_unchecked(nf)).exp();
    Ok(ratio * p.neg_moment(q)?)
}
