//! The Max-U-Exp(a, λ) distribution: the law of `max(θ, η)` with
//! `θ ~ U(0, a)` and `η ~ Exp(λ)` independent.
//!
//! ```text
//! F(x) = (x/a)(1 − e^{−λx})            0 < x ≤ a
//!      = 1 − e^{−λx}                   x > a
//! f(x) = (1 − e^{−λx} + λx e^{−λx})/a  0 < x ≤ a
//!      = λ e^{−λx}                     x > a
//! ```
//!
//! The density jumps down by `(1 − e^{−λa})/a` at `x = a`; at `x = a` itself
//! the left branch is used.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{
    find_root, gamma_lower_over_power, gamma_pq, integrate_with, ln_gamma_unchecked,
    one_minus_exp_over, Interval, QuadOptions, RandomStream,
};

const QUAD_TOL: f64 = 1e-13;

/// Parameters `(a, λ)` of a Max-U-Exp law; both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    a: f64,
    lambda: f64,
}

impl Params {
    pub fn new(a: f64, lambda: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(format!("a must be positive and finite, got {a}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(domain(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self { a, lambda })
    }

    /// Uniform endpoint.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Exponential rate.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The product `aλ`, which alone fixes the shape.
    pub fn product(&self) -> f64 {
        self.a * self.lambda
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.a {
            (x / self.a) * -(-self.lambda * x).exp_m1()
        } else {
            -(-self.lambda * x).exp_m1()
        }
    }

    /// `1 − F(x)`, without cancellation in the exponential tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if x <= self.a {
            (self.a - x + x * (-self.lambda * x).exp()) / self.a
        } else {
            (-self.lambda * x).exp()
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.a {
            let y = self.lambda * x;
            (-(-y).exp_m1() + y * (-y).exp()) / self.a
        } else {
            self.lambda * (-self.lambda * x).exp()
        }
    }

    /// `f(x)/x` on `(0, a]`, finite as `x → 0` where it tends to `2λ/a`.
    fn pdf_over_x_left(&self, x: f64) -> f64 {
        let y = self.lambda * x;
        self.lambda * (one_minus_exp_over(y) + (-y).exp()) / self.a
    }

    pub fn hazard(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.a {
            let y = self.lambda * x;
            (-(-y).exp_m1() + y * (-y).exp()) / (self.a - x + x * (-y).exp())
        } else {
            self.lambda
        }
    }

    /// Law of `kξ`: Max-U-Exp(ka, λ/k).
    pub fn scale(&self, k: f64) -> Result<Params> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(domain(format!("scale factor must be positive, got {k}")));
        }
        Params::new(k * self.a, self.lambda / k)
    }

    /// Inverse CDF on (0, 1).
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let hi = self.a + (1.0 / (1.0 - q)).ln() / self.lambda + 1.0;
        find_root(|x| self.cdf(x) - q, Interval::new(0.0, hi)?, 1e-14 * hi.max(1.0))
    }

    /// One draw: the larger of a uniform and an exponential, consuming two
    /// consecutive stream values (uniform first).
    pub fn sample(&self, s: &mut RandomStream) -> f64 {
        let theta = self.a * s.uniform();
        let eta = s.exp(self.lambda);
        theta.max(eta)
    }

    pub fn mean(&self) -> f64 {
        let x = self.product();
        self.a / 2.0 + -(-x).exp_m1() / (self.a * self.lambda * self.lambda)
    }

    /// `E ξ^k` for `k > −1`.
    ///
    /// For `k > 0` this is the incomplete-gamma closed form
    /// `a^k/(k+1) + k γ(k+1, aλ)/(aλ^{k+1}) + k Γ(k, aλ)/λ^k`; for
    /// `k ∈ (−1, 0)` the integral is evaluated by quadrature.
    pub fn moment(&self, k: f64) -> Result<f64> {
        if !(k > -1.0) || !k.is_finite() {
            return Err(domain(format!("moment order must exceed -1, got {k}")));
        }
        if k == 0.0 {
            return Ok(1.0);
        }
        if k < 0.0 {
            return self.expect_quad(|x| x.powf(k));
        }
        let (a, l) = (self.a, self.lambda);
        let x = a * l;
        let (p_k1, _) = gamma_pq(k + 1.0, x)?;
        let (_, q_k) = gamma_pq(k, x)?;
        let lower = (ln_gamma_unchecked(k + 1.0) - (k + 1.0) * l.ln()).exp() * p_k1;
        let upper = (ln_gamma_unchecked(k) - k * l.ln()).exp() * q_k;
        Ok(a.powf(k) / (k + 1.0) + k * lower / a + k * upper)
    }

    pub fn variance(&self) -> f64 {
        let (a, l) = (self.a, self.lambda);
        let e = (-a * l).exp();
        let c = -(-a * l).exp_m1();
        a * a / 12.0 - (1.0 + e) / (l * l) + 4.0 * c / (a * l.powi(3)) - c * c / (a * a * l.powi(4))
    }

    /// `E ξ^{−q}` for `q ∈ (0, 2)`.
    ///
    /// On `(0, 1)` the incomplete-gamma closed form is used. On `[1, 2)` the
    /// integral is computed by quadrature: on `(0, a)` the substitution
    /// `x = s^{1/(2−q)}` turns the `x^{1−q}` endpoint behaviour into a
    /// bounded integrand. The moment diverges at `q = 2` since `f(x) ~ 2λx/a`.
    pub fn neg_moment(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(domain(format!("negative-moment order must be positive, got {q}")));
        }
        if q >= 2.0 {
            return Err(Error::Divergence { order: -q });
        }
        if q < 1.0 {
            Ok(self.neg_moment_closed(q))
        } else {
            self.neg_moment_quad(q)
        }
    }

    fn neg_moment_closed(&self, q: f64) -> f64 {
        let (a, l) = (self.a, self.lambda);
        let x = a * l;
        let (_, q_upper) = gamma_pq(1.0 - q, x).expect("1 - q > 0 and x > 0");
        let full = ln_gamma_unchecked(1.0 - q).exp();
        let upper = q_upper * full;
        1.0 / (a.powf(q) * (1.0 - q))
            + l.powf(q - 1.0) / a * ((q + x) * upper - x.powf(1.0 - q) * (-x).exp() - q * full)
    }

    pub(crate) fn neg_moment_quad(&self, q: f64) -> Result<f64> {
        let r = 1.0 / (2.0 - q);
        let opts = QuadOptions::new(QUAD_TOL);
        let s_hi = self.a.powf(2.0 - q);
        let left = integrate_with(
            |s| {
                let x = s.powf(r);
                if x <= 0.0 {
                    2.0 * self.lambda / self.a * r
                } else {
                    r * self.pdf_over_x_left(x)
                }
            },
            Interval::new(0.0, s_hi)?,
            &[],
            opts,
        )?;
        let right = integrate_with(
            |x| self.lambda * x.powf(-q) * (-self.lambda * x).exp(),
            Interval::semi_infinite(self.a)?,
            &[],
            opts,
        )?;
        Ok(left.value + right.value)
    }

    /// Laplace–Stieltjes transform `E e^{−tξ}`:
    /// `(1 − e^{−ta})/(at) − t(1 − e^{−(λ+t)a})/(a(λ+t)²)`.
    pub fn lst(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("transform argument must be non-negative, got {t}")));
        }
        let s = self.lambda + t;
        Ok(one_minus_exp_over(t * self.a) - (t / s) * one_minus_exp_over(s * self.a))
    }

    /// Tilted moment `T(m, k) = E[ξ^k e^{−mξ}] = ∫ x^k e^{−mx} f(x) dx`
    /// for `m ≥ 0`, `k ≥ 0`.
    ///
    /// With `L = λ + m`:
    /// `T = γ(k+1, am)/(a m^{k+1}) + γ(k+1, aL)(λk − m)/(a L^{k+2}) + λk Γ(k, aL)/L^{k+1}`,
    /// the last term being absent at `k = 0`. The first term is continuous
    /// at `m = 0`, where `T` reduces to the moment `E ξ^k`.
    pub fn tilted_moment(&self, m: f64, k: f64) -> Result<f64> {
        if !(m >= 0.0) || !(k >= 0.0) {
            return Err(domain(format!("tilted moment needs m >= 0 and k >= 0, got m={m}, k={k}")));
        }
        let (a, l) = (self.a, self.lambda);
        let big = l + m;
        let first = gamma_lower_over_power(k + 1.0, a * m)?;
        let second = gamma_lower_over_power(k + 1.0, a * big)? * (l * k - m) / big;
        let third = if k > 0.0 {
            let (_, q) = gamma_pq(k, a * big)?;
            (ln_gamma_unchecked(k + 1.0) - (k + 1.0) * big.ln()).exp() * l * q
        } else {
            0.0
        };
        Ok(a.powf(k) * (first + second) + third)
    }

    /// Poisson-weighted tilted moment `mⁿ T(m, n) / n! = E[(mξ)ⁿ e^{−mξ}/n!]`,
    /// i.e. the mixed Poisson probability of `n` events at exposure `m > 0`.
    ///
    /// Written in regularized gammas so it neither overflows nor underflows
    /// for large `n`:
    /// `P(n+1, am)/(am) + (m/L)ⁿ [P(n+1, aL)(λn − m)/(aL²) + λ Q(n, aL)/L]`.
    pub fn poisson_weight(&self, m: f64, n: u64) -> Result<f64> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(domain(format!("exposure must be positive, got {m}")));
        }
        let (a, l) = (self.a, self.lambda);
        let big = l + m;
        let nf = n as f64;
        let (p_small, _) = gamma_pq(nf + 1.0, a * m)?;
        let (p_big, _) = gamma_pq(nf + 1.0, a * big)?;
        let q_big = if n > 0 { gamma_pq(nf, a * big)?.1 } else { 0.0 };
        let ratio = if n == 0 { 1.0 } else { (nf * (m / big).ln()).exp() };
        let tail = p_big * (l * nf - m) / (a * big * big) + l * q_big / big;
        Ok(p_small / (a * m) + ratio * tail)
    }

    /// `E g(ξ)` by adaptive quadrature with a split at `a`.
    pub fn expect_quad(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let r = integrate_with(
            |x| if x > 0.0 { g(x) * self.pdf(x) } else { 0.0 },
            Interval::semi_infinite(0.0)?,
            &[self.a],
            QuadOptions::new(QUAD_TOL),
        )?;
        Ok(r.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p11() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Params::new(0.0, 1.0).is_err());
        assert!(Params::new(1.0, -1.0).is_err());
        assert!(Params::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn cdf_examples() {
        let p = p11();
        assert_eq!(p.cdf(0.0), 0.0);
        // U(0,1) CDF times Exp(1) CDF at 0.5
        assert!((p.cdf(0.5) - 0.5 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((p.cdf(0.5) - 0.196_735).abs() < 1e-6);
        assert!((p.cdf(2.0) - (1.0 - (-2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn pdf_examples() {
        let p = p11();
        let h = 1e-6;
        let fd = (p.cdf(0.5 + h) - p.cdf(0.5 - h)) / (2.0 * h);
        assert!((p.pdf(0.5) - fd).abs() < 1e-8);
        assert!((p.pdf(0.5) - 0.696_735).abs() < 1e-6);
        assert!((p.pdf(2.0) - (-2f64).exp()).abs() < 1e-15);
        assert_eq!(p.pdf(-1.0), 0.0);
    }

    #[test]
    fn jump_at_uniform_endpoint() {
        for &(a, l) in &[(1.0, 1.0), (2.0, 0.5), (0.5, 5.0)] {
            let p = Params::new(a, l).unwrap();
            let right = p.pdf(a * (1.0 + 1e-13));
            let jump = p.pdf(a) - right;
            assert!((jump - (1.0 - (-a * l).exp()) / a).abs() < 1e-10);
            // CDF is continuous there.
            assert!((p.cdf(a) - p.cdf(a * (1.0 + 1e-15))).abs() < 1e-14);
        }
    }

    #[test]
    fn hazard_examples() {
        let p = p11();
        assert_eq!(p.hazard(2.0), 1.0);
        assert_eq!(p.hazard(-1.0), 0.0);
        let ratio = p.pdf(0.5) / (1.0 - p.cdf(0.5));
        assert!((p.hazard(0.5) - ratio).abs() < 1e-14);
        assert!((p.hazard(0.5) - 0.867_378).abs() < 1e-6);
        assert!(p.hazard(1.0).is_finite());
    }

    #[test]
    fn scaling() {
        assert_eq!(p11().scale(2.0).unwrap(), Params::new(2.0, 0.5).unwrap());
        let p = Params::new(3.0, 0.5).unwrap();
        assert_eq!(p.scale(1.0).unwrap(), p);
        assert_eq!(p.scale(0.5).unwrap(), Params::new(1.5, 1.0).unwrap());
        assert!(p.scale(0.0).is_err());
        assert!(p.scale(-1.0).is_err());
    }

    #[test]
    fn quantile_round_trips() {
        let p = Params::new(2.0, 0.7).unwrap();
        for &x in &[0.3, 2.0, 4.0] {
            let q = p.cdf(x);
            assert!((p.quantile(q).unwrap() - x).abs() < 1e-10, "x={x}");
        }
        let x = p11().quantile(1.0 - (-2f64).exp()).unwrap();
        assert!((x - 2.0).abs() < 1e-10);
        assert!(p.quantile(0.0).is_err() && p.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_median_matches_bisection() {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (1.0 - (-mid).exp()) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((p11().quantile(0.5).unwrap() - lo).abs() < 1e-10);
    }

    #[test]
    fn moments() {
        let p = p11();
        assert_eq!(p.moment(0.0).unwrap(), 1.0);
        let e1 = 0.5 + (1.0 - (-1f64).exp());
        assert!((p.moment(1.0).unwrap() - e1).abs() < 1e-14);
        assert!((p.mean() - e1).abs() < 1e-15);
        assert!((p.moment(2.0).unwrap() - 2.126_056_686_304_679).abs() < 1e-13);
        assert!(p.moment(-1.0).is_err());
        assert!(p.moment(-0.5).unwrap() > 1.0);
    }

    #[test]
    fn variance_examples() {
        let p = p11();
        assert!((p.variance() - 0.844_359_726_582_393_7).abs() < 1e-13);
        for &a in &[0.5, 1.0, 2.0, 5.0] {
            for &l in &[0.5, 1.0, 2.0, 5.0] {
                let p = Params::new(a, l).unwrap();
                let m1 = p.moment(1.0).unwrap();
                let direct = p.moment(2.0).unwrap() - m1 * m1;
                assert!((p.variance() - direct).abs() < 1e-10 * direct, "({a},{l})");
                assert!(p.variance() > 0.0);
            }
        }
    }

    #[test]
    fn negative_moments() {
        let p = p11();
        assert!((p.neg_moment(0.5).unwrap() - 1.164_102_011_296_792_6).abs() < 1e-12);
        assert!((p.neg_moment(1.0).unwrap() - 1.648_104_092_521_131).abs() < 1e-10);
        assert!(p.neg_moment(1.999).unwrap().is_finite());
        assert!(matches!(p.neg_moment(2.0), Err(Error::Divergence { .. })));
        assert!(p.neg_moment(0.0).is_err());
    }

    #[test]
    fn negative_moment_routes_agree_near_one() {
        // The closed form and the quadrature route meet continuously at q = 1.
        let p = Params::new(2.0, 0.5).unwrap();
        for &q in &[0.25, 0.5, 0.9] {
            let closed = p.neg_moment(q).unwrap();
            let quad = p.neg_moment_quad(q).unwrap();
            assert!((closed - quad).abs() < 1e-10 * closed, "q={q}: {closed} vs {quad}");
        }
    }

    #[test]
    fn lst_examples() {
        let p = p11();
        assert!((p.lst(1.0).unwrap() - 0.415_954_379_637_710_85).abs() < 1e-14);
        assert!((p.lst(1e-8).unwrap() - 1.0).abs() < 1e-6);
        let mut prev = 1.0;
        for i in 1..50 {
            let v = p.lst(i as f64 * 0.2).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tilted_kernel_limits() {
        let p = Params::new(2.0, 0.5).unwrap();
        for &k in &[0.5, 1.0, 2.0, 3.0] {
            let at_zero = p.tilted_moment(0.0, k).unwrap();
            assert!((at_zero - p.moment(k).unwrap()).abs() < 1e-12 * at_zero);
        }
        for &m in &[0.3, 1.0, 4.0] {
            assert!((p.tilted_moment(m, 0.0).unwrap() - p.lst(m).unwrap()).abs() < 1e-14);
            for n in 0..8u64 {
                let w = p.poisson_weight(m, n).unwrap();
                let t = p.tilted_moment(m, n as f64).unwrap();
                let fact: f64 = (1..=n).map(|i| i as f64).product();
                let via_t = m.powi(n as i32) * t / fact;
                assert!((w - via_t).abs() < 1e-12 * w.max(1e-300), "m={m} n={n}");
            }
        }
    }

    #[test]
    fn poisson_weight_handles_large_counts() {
        let p = p11();
        let w = p.poisson_weight(1.0, 400).unwrap();
        assert!(w >= 0.0 && w < 1e-100);
    }
}
