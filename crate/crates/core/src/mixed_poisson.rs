//! The mixed Poisson process `N(t) = N₁(ξ μ(t))` with Max-U-Exp mixing.
//!
//! `N₁` is a unit-rate homogeneous Poisson process, `ξ ~ Max-U-Exp(a, λ)` is
//! drawn once per path and `μ` is a deterministic clock. Given the exposure
//! `m = μ(t)`, every count probability, the pgf and the posterior of `ξ` are
//! views of the tilted moment `T(m, n) = E[ξⁿ e^{−mξ}]`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::maxuexp::Params;
use crate::numeric::{integrate_with, ln_gamma_unchecked, Interval, QuadOptions, RandomStream};

/// Hard ceiling for [`pmf_cutoff`].
const MAX_CUTOFF: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformKind {
    /// `μ(t) = t^c`.
    Power { c: f64 },
    /// Piecewise-linear through `(t, μ)` points starting at `(0, 0)`.
    Table { points: Vec<(f64, f64)> },
}

/// A strictly increasing, continuous clock `μ` with `μ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTransform {
    kind: TransformKind,
}

impl TimeTransform {
    pub fn power(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain(format!("power exponent must be positive, got {c}")));
        }
        Ok(Self { kind: TransformKind::Power { c } })
    }

    pub fn identity() -> Self {
        Self { kind: TransformKind::Power { c: 1.0 } }
    }

    /// Table transform. Points must start at `(0, 0)` and increase strictly
    /// in both coordinates.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(domain("a table transform needs at least two points"));
        }
        if points[0] != (0.0, 0.0) {
            return Err(domain(format!("table must start at (0, 0), got {:?}", points[0])));
        }
        for (i, w) in points.windows(2).enumerate() {
            let ((t0, m0), (t1, m1)) = (w[0], w[1]);
            if !(t1 > t0 && m1 > m0) || !t1.is_finite() || !m1.is_finite() {
                return Err(domain(format!(
                    "table points must increase strictly in t and mu: row {} ({t1}, {m1}) follows ({t0}, {m0})",
                    i + 1
                )));
            }
        }
        Ok(Self { kind: TransformKind::Table { points } })
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    /// Largest time at which `μ` is defined.
    pub fn max_time(&self) -> f64 {
        match &self.kind {
            TransformKind::Power { .. } => f64::INFINITY,
            TransformKind::Table { points } => points[points.len() - 1].0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("time must be non-negative, got {t}")));
        }
        match &self.kind {
            TransformKind::Power { c } => Ok(t.powf(*c)),
            TransformKind::Table { points } => interpolate(points, t, |p| p.0, |p| p.1),
        }
    }

    /// Exact inverse of [`TimeTransform::eval`].
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(domain(format!("clock value must be non-negative, got {y}")));
        }
        match &self.kind {
            TransformKind::Power { c } => Ok(y.powf(1.0 / c)),
            TransformKind::Table { points } => interpolate(points, y, |p| p.1, |p| p.0),
        }
    }
}

/// Linear interpolation of `to` against `from` on a strictly increasing table.
fn interpolate(
    points: &[(f64, f64)],
    v: f64,
    from: impl Fn(&(f64, f64)) -> f64,
    to: impl Fn(&(f64, f64)) -> f64,
) -> Result<f64> {
    let last = &points[points.len() - 1];
    if v > from(last) {
        return Err(Error::Range { value: v, max: from(last) });
    }
    let i = points.partition_point(|p| from(p) < v).max(1);
    let (p0, p1) = (&points[i - 1], &points[i]);
    let w = (v - from(p0)) / (from(p1) - from(p0));
    Ok(to(p0) + w * (to(p1) - to(p0)))
}

/// One simulated path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessPath {
    pub xi: f64,
    pub events: Vec<f64>,
    pub horizon: f64,
}

impl ProcessPath {
    /// `N(t)`, the number of events in `[0, t]`.
    pub fn count_at(&self, t: f64) -> u64 {
        self.events.partition_point(|&e| e <= t) as u64
    }

    pub fn counts_at(&self, times: &[f64]) -> Result<CountVector> {
        CountVector::new(times.iter().map(|&t| self.count_at(t)).collect(), times.to_vec())
    }
}

/// Cumulative counts `N(t₁) ≤ … ≤ N(t_n)` observed at ascending times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountVector {
    counts: Vec<u64>,
    times: Vec<f64>,
}

impl CountVector {
    pub fn new(counts: Vec<u64>, times: Vec<f64>) -> Result<Self> {
        if counts.len() != times.len() {
            return Err(domain(format!(
                "{} counts but {} times",
                counts.len(),
                times.len()
            )));
        }
        check_ascending(&times)?;
        Ok(Self { counts, times })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

fn check_ascending(times: &[f64]) -> Result<()> {
    if let Some(&first) = times.first() {
        if !(first > 0.0) {
            return Err(domain(format!("times must be positive, got {first}")));
        }
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(domain("times must be finite and strictly increasing"));
    }
    Ok(())
}

fn check_exposure(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("exposure must be positive, got {m}")))
    }
}

/// `P(N = n)` at exposure `m = μ(t)`.
pub fn pmf(p: &Params, m: f64, n: u64) -> Result<f64> {
    p.poisson_weight(m, n)
}

/// Smallest `N*` for which `P(N > N*) < tail_tol`, certified by Markov's
/// inequality on factorial moments:
/// `P(N ≥ N) ≤ E[(N)_k]/(N)_k ≤ mᵏ(aᵏ + k!/λᵏ)/(N)_k` for any `k ≤ N`.
pub fn pmf_cutoff(p: &Params, m: f64, tail_tol: f64) -> Result<u64> {
    check_exposure(m)?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(domain(format!("tail tolerance must lie in (0, 1), got {tail_tol}")));
    }
    let (a, l) = (p.a(), p.lambda());
    let target = tail_tol.ln();
    // Log of the bound on E[(N)_k].
    let ln_moment_bound = |k: u64| {
        let kf = k as f64;
        let x = kf * (m * a).ln();
        let y = kf * (m / l).ln() + ln_gamma_unchecked(kf + 1.0);
        let (hi, lo) = if x > y { (x, y) } else { (y, x) };
        hi + (lo - hi).exp().ln_1p()
    };
    let mut big_n: u64 = 1;
    while big_n <= MAX_CUTOFF {
        let nf = big_n as f64;
        let ln_fact_n = ln_gamma_unchecked(nf + 1.0);
        let best = (1..=big_n)
            .map(|k| ln_moment_bound(k) - (ln_fact_n - ln_gamma_unchecked((big_n - k) as f64 + 1.0)))
            .fold(f64::INFINITY, f64::min);
        if best < target {
            return Ok(big_n - 1);
        }
        // Step geometrically once past 64; overshooting only adds terms.
        big_n = if big_n < 64 { big_n + 1 } else { big_n + big_n / 8 };
    }
    Err(Error::Convergence { what: "count truncation point".into(), iterations: MAX_CUTOFF as usize })
}

/// `(E N, Var N)`; `Var N = E N + m² Var ξ` exceeds the mean strictly.
pub fn mean_var(p: &Params, m: f64) -> Result<(f64, f64)> {
    check_exposure(m)?;
    let mean = m * p.mean();
    Ok((mean, mean + m * m * p.variance()))
}

/// Probability generating function `E z^N = E e^{−m(1−z)ξ}` for `|z| < 1`.
pub fn pgf(p: &Params, m: f64, z: f64) -> Result<f64> {
    check_exposure(m)?;
    if !(z.abs() < 1.0) {
        return Err(domain(format!("pgf needs |z| < 1, got {z}")));
    }
    p.lst(m * (1.0 - z))
}

/// Posterior density of `ξ` given `N = n` at exposure `m`:
/// `(mx)ⁿ e^{−mx} f(x) / (n! P(N = n))`.
pub fn posterior_pdf(p: &Params, m: f64, n: u64, x: f64) -> Result<f64> {
    check_exposure(m)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let evidence = pmf(p, m, n)?;
    let nf = n as f64;
    let ln_lik = nf * (m * x).ln() - m * x - ln_gamma_unchecked(nf + 1.0);
    Ok((ln_lik - evidence.ln()).exp() * p.pdf(x))
}

/// `E(ξ | N = n)` by quadrature of the posterior.
pub fn posterior_mean(p: &Params, m: f64, n: u64) -> Result<f64> {
    check_exposure(m)?;
    let evidence = pmf(p, m, n)?;
    let nf = n as f64;
    let lg = ln_gamma_unchecked(nf + 1.0);
    let ln_ev = evidence.ln();
    let r = integrate_with(
        |x| {
            if x <= 0.0 {
                return 0.0;
            }
            x * (nf * (m * x).ln() - m * x - lg - ln_ev).exp() * p.pdf(x)
        },
        Interval::semi_infinite(0.0)?,
        &[p.a(), (nf + 1.0) / m],
        QuadOptions::new(1e-12),
    )?;
    Ok(r.value)
}

/// Factorial moment `E[N(N−1)…(N−k+1)] = mᵏ E ξᵏ`.
pub fn factorial_moment(p: &Params, m: f64, k: u32) -> Result<f64> {
    check_exposure(m)?;
    if k == 0 {
        return Err(domain("factorial moment order must be at least 1"));
    }
    Ok(m.powi(k as i32) * p.moment(k as f64)?)
}

/// Joint probability `P(N(t₁) = k₁, …, N(t_n) = k_n)` with `mus[i] = μ(tᵢ)`.
///
/// Given `N(t_n) = k_n`, the events spread multinomially over the clock
/// increments, so the law is `P(N = k_n)` at `μ_n` times
/// `k_n!/Π(Δk)! · Π(Δμ/μ_n)^{Δk}`. Non-monotone counts have probability 0.
pub fn ordered_pmf(p: &Params, mus: &[f64], ks: &[u64]) -> Result<f64> {
    if mus.is_empty() || mus.len() != ks.len() {
        return Err(domain(format!(
            "need matching non-empty times and counts, got {} and {}",
            mus.len(),
            ks.len()
        )));
    }
    check_ascending(mus)?;
    if ks.windows(2).any(|w| w[1] < w[0]) {
        return Ok(0.0);
    }
    let n = mus.len();
    let (mu_n, k_n) = (mus[n - 1], ks[n - 1]);
    let mut ln_factor = ln_gamma_unchecked(k_n as f64 + 1.0);
    let (mut prev_mu, mut prev_k) = (0.0, 0u64);
    for (&mu, &k) in mus.iter().zip(ks) {
        let dk = k - prev_k;
        if dk > 0 {
            ln_factor += dk as f64 * ((mu - prev_mu) / mu_n).ln() - ln_gamma_unchecked(dk as f64 + 1.0);
        }
        prev_mu = mu;
        prev_k = k;
    }
    Ok(pmf(p, mu_n, k_n)? * ln_factor.exp())
}

/// Joint probability of the increments `N(t₁), N(t₂) − N(t₁), …`.
pub fn increments_pmf(p: &Params, mus: &[f64], ms: &[u64]) -> Result<f64> {
    ordered_pmf(p, mus, &to_cumulative(ms))
}

/// Cumulative counts to increments; fails on decreasing input.
pub fn to_increments(ks: &[u64]) -> Result<Vec<u64>> {
    let mut prev = 0u64;
    ks.iter()
        .map(|&k| {
            let d = k
                .checked_sub(prev)
                .ok_or_else(|| domain(format!("counts must be non-decreasing, {k} follows {prev}")))?;
            prev = k;
            Ok(d)
        })
        .collect()
}

/// Increments to cumulative counts.
pub fn to_cumulative(ms: &[u64]) -> Vec<u64> {
    ms.iter()
        .scan(0u64, |acc, &m| {
            *acc += m;
            Some(*acc)
        })
        .collect()
}

/// Simulates one path on `[0, horizon]`: draw `ξ`, run unit-rate arrivals
/// `S₁ < S₂ < …` up to `ξ μ(horizon)` and map each back with `μ⁻¹(S/ξ)`.
pub fn simulate_path(
    p: &Params,
    tt: &TimeTransform,
    horizon: f64,
    s: &mut RandomStream,
) -> Result<ProcessPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain(format!("horizon must be positive, got {horizon}")));
    }
    let clock_end = tt.eval(horizon)?;
    let xi = p.sample(s);
    let limit = xi * clock_end;
    let mut events = Vec::new();
    let mut arrival = s.exp(1.0);
    while arrival <= limit {
        let t = tt.invert((arrival / xi).min(clock_end))?.min(horizon);
        if events.last().map_or(true, |&last| t > last) {
            events.push(t);
        }
        arrival += s.exp(1.0);
    }
    Ok(ProcessPath { xi, events, horizon })
}

/// Simulates `n_paths` paths in parallel; path `i` uses substream `i` of
/// `seed`, so the result does not depend on the thread count.
pub fn simulate_paths(
    p: &Params,
    tt: &TimeTransform,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<ProcessPath>> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| simulate_path(p, tt, horizon, &mut RandomStream::substream(seed, i as u64)))
        .collect()
}

/// `P(N(s) = j | N(t) = n) = C(n, j) ρʲ (1−ρ)^{n−j}` with `ρ = μ(s)/μ(t)`.
pub fn conditional_binomial_pmf(n: u64, mu_s: f64, mu_t: f64, j: u64) -> Result<f64> {
    if !(mu_s > 0.0 && mu_s < mu_t && mu_t.is_finite()) {
        return Err(domain(format!("need 0 < mu_s < mu_t, got {mu_s} and {mu_t}")));
    }
    if j > n {
        return Ok(0.0);
    }
    let rho = mu_s / mu_t;
    let (nf, jf) = (n as f64, j as f64);
    let ln_c = ln_gamma_unchecked(nf + 1.0) - ln_gamma_unchecked(jf + 1.0) - ln_gamma_unchecked(nf - jf + 1.0);
    Ok((ln_c + jf * rho.ln() + (nf - jf) * (-rho).ln_1p()).exp())
}
