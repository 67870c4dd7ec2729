//! Formula ledger: printed closed forms that disagree with each other or
//! with direct integration, each evaluated as printed (`paper_literal`), in
//! the form adopted by this crate (`corrected`), and by an independent
//! oracle.
//!
//! Every record isolates a single defect: the literal value differs from the
//! corrected one only in the term under test. A formula is evaluated at
//! several parameter points and reported at the point where the literal
//! form deviates most; the other points are named in `params`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checks::draw_many;
use crate::error::Result;
use crate::maxuexp::Params;
use crate::mixed_poisson as mp;
use crate::numeric::{gamma_lower, gamma_upper, ln_gamma_unchecked};
use crate::waiting_times as wt;

/// Tolerance for quadrature oracles.
pub const QUAD_TOL: f64 = 1e-8;
/// Monte Carlo oracles pass within this many standard errors.
pub const MC_SIGMAS: f64 = 4.0;
const MC_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PaperOk,
    CorrectedAdopted,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub formula_id: String,
    pub params: String,
    /// Non-finite values (a claimed divergence) serialize as `null`.
    pub paper_literal: f64,
    pub corrected: f64,
    pub oracle: f64,
    pub abs_dev_literal: f64,
    pub abs_dev_corrected: f64,
    pub verdict: Verdict,
}

/// One evaluation of a formula at one parameter point.
#[derive(Debug, Clone)]
pub struct LedgerPoint {
    pub label: String,
    pub literal: f64,
    pub corrected: f64,
    pub oracle: f64,
    pub tol: f64,
}

impl LedgerPoint {
    fn dev_literal(&self) -> f64 {
        let d = (self.literal - self.oracle).abs();
        if d.is_nan() { f64::INFINITY } else { d }
    }

    fn dev_corrected(&self) -> f64 {
        let d = (self.corrected - self.oracle).abs();
        if d.is_nan() { f64::INFINITY } else { d }
    }

    /// Points where the two forms agree cannot tell them apart.
    fn discriminates(&self) -> bool {
        !((self.literal - self.corrected).abs() <= self.tol)
    }
}

/// Combines the per-point outcomes.
///
/// `paper_ok` if the literal form matches the oracle everywhere;
/// `corrected_adopted` if the corrected form matches everywhere and the
/// literal form misses by more than ten tolerances at every point that
/// distinguishes the two; `unresolved` otherwise, including a literal form
/// that passes at one distinguishing point and fails at another.
pub fn verdict(points: &[LedgerPoint]) -> Verdict {
    if points.iter().all(|p| p.dev_literal() <= p.tol) {
        return Verdict::PaperOk;
    }
    let corrected_everywhere = points.iter().all(|p| p.dev_corrected() <= p.tol);
    let literal_fails_clearly = points
        .iter()
        .filter(|p| p.discriminates())
        .all(|p| p.dev_literal() > 10.0 * p.tol);
    if corrected_everywhere && literal_fails_clearly {
        Verdict::CorrectedAdopted
    } else {
        Verdict::Unresolved
    }
}

/// Builds a record reported at the point of largest literal deviation.
pub fn record(formula_id: &str, points: Vec<LedgerPoint>) -> DiscrepancyRecord {
    let v = verdict(&points);
    assert!(!points.is_empty(), "a ledger record needs at least one point");
    // Ties keep the earliest point.
    let mut worst = 0;
    for (i, p) in points.iter().enumerate() {
        if p.dev_literal() > points[worst].dev_literal() {
            worst = i;
        }
    }
    let others: Vec<&str> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != worst)
        .map(|(_, p)| p.label.as_str())
        .collect();
    let w = &points[worst];
    let params = if others.is_empty() {
        w.label.clone()
    } else {
        format!("{} (also checked: {})", w.label, others.join("; "))
    };
    DiscrepancyRecord {
        formula_id: formula_id.into(),
        params,
        paper_literal: w.literal,
        corrected: w.corrected,
        oracle: w.oracle,
        abs_dev_literal: w.dev_literal(),
        abs_dev_corrected: w.dev_corrected(),
        verdict: v,
    }
}

/// Every ledger record, in a fixed order.
pub fn run_ledger() -> Vec<DiscrepancyRecord> {
    let builders: [(&str, fn() -> Result<Vec<LedgerPoint>>); 19] = [
        ("Thm1d-term1", lst_first_term),
        ("Thm4b-sign", variance_sign),
        ("Thm3e-lambda-factor", erlang_moment_factor),
        ("Thm2c-sign", emue_moment_sign),
        ("Thm2c-infinite-claim", emue_mean_finite),
        ("Thm4c-term1", || pgf_terms(true, false)),
        ("Thm4c-term3", || pgf_terms(false, true)),
        ("Thm2e-denominator", conditional_denominator),
        ("Thm2g-closed-form", regression_closed_form),
        ("Thm4d-power", || posterior_terms(true, false)),
        ("Thm4d-exponent", || posterior_terms(false, true)),
        ("Thm1b-moments", moments),
        ("Thm4a-scaling", count_scaling),
        ("Def4-multivariate", multivariate),
        ("Def5-erlang", erlang_density),
        ("Def8-ordered", ordered),
        ("Def9-increments", increments),
        ("Thm4e-posterior-mean", posterior_mean),
        ("Thm4f-factorial-moments", factorial_moments),
    ];
    use rayon::prelude::*;
    builders
        .par_iter()
        .map(|(id, build)| match build() {
            Ok(points) => record(id, points),
            Err(e) => DiscrepancyRecord {
                formula_id: (*id).into(),
                params: format!("evaluation failed: {e}"),
                paper_literal: f64::NAN,
                corrected: f64::NAN,
                oracle: f64::NAN,
                abs_dev_literal: f64::NAN,
                abs_dev_corrected: f64::NAN,
                verdict: Verdict::Unresolved,
            },
        })
        .collect()
}

pub fn to_json(records: &[DiscrepancyRecord]) -> String {
    serde_json::to_string_pretty(records).expect("records serialize")
}

pub fn write_json(records: &[DiscrepancyRecord], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_json(records) + "\n")
}

// ---------------------------------------------------------------------------

fn params(a: f64, l: f64) -> Params {
    Params::new(a, l).expect("ledger parameters are valid")
}

fn quad_point(label: String, literal: f64, corrected: f64, oracle: f64) -> LedgerPoint {
    LedgerPoint { label, literal, corrected, oracle, tol: QUAD_TOL }
}

fn fact(n: u64) -> f64 {
    ln_gamma_unchecked(n as f64 + 1.0).exp()
}

/// `n Γ(n, x)`, read as zero at `n = 0`.
fn n_upper(n: u64, x: f64) -> Result<f64> {
    if n == 0 { Ok(0.0) } else { Ok(n as f64 * gamma_upper(n as f64, x)?) }
}

/// The printed negative-moment brace with the sign of the middle term
/// selectable.
fn neg_moment_brace(a: f64, l: f64, q: f64, middle_sign: f64) -> Result<f64> {
    let x = a * l;
    let full = ln_gamma_unchecked(1.0 - q).exp();
    Ok(1.0 / (a.powf(q) * (1.0 - q))
        + l.powf(q - 1.0) / a
            * ((q + x) * gamma_upper(1.0 - q, x)? + middle_sign * x.powf(1.0 - q) * (-x).exp() - q * full))
}

fn lst_first_term() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, t) in [(1.0, 1.0, 1.0), (2.0, 0.5, 1.0), (0.5, 2.0, 3.0)] {
        let p = params(a, l);
        let s = l + t;
        let second = t / (a * s * s) * (1.0 - (-s * a).exp());
        let literal = (1.0 - (-l * a).exp()) / (a * t) - second;
        out.push(quad_point(
            format!("a={a}, lambda={l}, t={t}"),
            literal,
            p.lst(t)?,
            p.expect_quad(|x| (-t * x).exp())?,
        ));
    }
    Ok(out)
}

fn variance_sign() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
        let p = params(a, l);
        let e = (-l * a).exp();
        let common = a * a / 12.0 - (1.0 + e) / (l * l) + 4.0 / (a * l.powi(3)) * (1.0 - e);
        let last = (1.0 - e).powi(2) / (a * a * l.powi(4));
        let m1 = p.expect_quad(|x| x)?;
        let m2 = p.expect_quad(|x| x * x)?;
        out.push(quad_point(format!("a={a}, lambda={l}"), common + last, p.variance(), m2 - m1 * m1));
    }
    Ok(out)
}

fn mc_mean(
    p: &Params,
    seed: u64,
    sampler: impl Fn(&Params, &mut crate::RandomStream) -> f64 + Sync,
    h: impl Fn(f64) -> f64 + Sync,
) -> (f64, f64) {
    let draws = draw_many(MC_DRAWS, seed, |s| h(sampler(p, s)));
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn erlang_moment_factor() -> Result<Vec<LedgerPoint>> {
    let (n, q) = (1u32, 0.5);
    let mut out = Vec::new();
    for (i, (a, l)) in [(1.0, 1.0), (2.0, 0.5), (1.0, 2.0)].into_iter().enumerate() {
        let p = params(a, l);
        let corrected = wt::erlang_moment(&p, n, q)?;
        let literal = corrected / l.powf(q);
        let (mean, se) = mc_mean(&p, 7_001 + i as u64, |p, s| wt::erlang_sample(p, n, s), |t| t.powf(q));
        out.push(LedgerPoint {
            label: format!("a={a}, lambda={l}, n={n}, p={q}, Monte Carlo of T^p ({MC_DRAWS} draws, se {se:.2e})"),
            literal,
            corrected,
            oracle: mean,
            tol: MC_SIGMAS * se,
        });
    }
    Ok(out)
}

fn emue_moment_sign() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, q) in [(1.0, 1.0, 0.5), (2.0, 0.5, 0.5), (1.0, 1.0, 0.25)] {
        let p = params(a, l);
        let g = ln_gamma_unchecked(q + 1.0).exp();
        out.push(quad_point(
            format!("a={a}, lambda={l}, p={q}"),
            g * neg_moment_brace(a, l, q, 1.0)?,
            wt::emue_moment(&p, q)?,
            g * p.expect_quad(|x| x.powf(-q))?,
        ));
    }
    Ok(out)
}

fn emue_mean_finite() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (i, (a, l)) in [(1.0, 1.0), (2.0, 0.5)].into_iter().enumerate() {
        let p = params(a, l);
        let (mean, se) = mc_mean(&p, 7_101 + i as u64, wt::emue_sample, |t| t);
        out.push(LedgerPoint {
            label: format!("a={a}, lambda={l}, p=1, Monte Carlo mean of tau ({MC_DRAWS} draws, se {se:.2e})"),
            literal: f64::INFINITY,
            corrected: wt::emue_moment(&p, 1.0)?,
            oracle: mean,
            tol: MC_SIGMAS * se,
        });
    }
    Ok(out)
}

/// The printed three-term generating function with either defective term
/// optionally replaced by its corrected version.
fn pgf_printed(a: f64, l: f64, mu: f64, z: f64, literal_first: bool, literal_third: bool) -> f64 {
    let s = mu * (1.0 - z);
    let big = l + s;
    let e = (-big * a).exp();
    let first = if literal_first { (1.0 - (-l * a).exp()) / (a * s) } else { (1.0 - (-a * s).exp()) / (a * s) };
    let second = -(1.0 - e - l * a * e) / (a * big);
    let third_factor = if literal_third { big } else { a * big };
    let third = l / (a * big * big) * (1.0 - e - third_factor * e);
    first + second + third
}

fn pgf_terms(literal_first: bool, literal_third: bool) -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, mu, z) in [(1.0, 1.0, 2.0, 0.5), (2.0, 0.5, 1.0, 0.5), (0.5, 2.0, 2.0, -0.5)] {
        let p = params(a, l);
        let s = mu * (1.0 - z);
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mu}, z={z}"),
            pgf_printed(a, l, mu, z, literal_first, literal_third),
            mp::pgf(&p, mu, z)?,
            p.expect_quad(|x| (-s * x).exp())?,
        ));
    }
    Ok(out)
}

fn conditional_denominator() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, t, x) in [(1.0, 1.0, 1.0, 0.5), (2.0, 0.5, 1.0, 0.5), (2.0, 0.5, 1.0, 3.0), (1.0, 2.0, 0.5, 1.5)] {
        let p = params(a, l);
        let big = l + t;
        let eat = (-a * t).exp();
        let eab = (-a * big).exp();
        let numerator = if x <= a {
            x * t * t * big.powi(3) * (-t * x).exp() * (1.0 - (-l * x).exp() + l * x * (-l * x).exp())
        } else {
            a * l * x * t * t * big.powi(3) * (-big * x).exp()
        };
        let denominator = big.powi(3) * (1.0 - eat - a * t * l * eat)
            + t * t * (l - t) * (1.0 - eab)
            + a * big * t.powi(3) * eab;
        let oracle = x * (-t * x).exp() * p.pdf(x) / p.expect_quad(|y| y * (-t * y).exp())?;
        out.push(quad_point(
            format!("a={a}, lambda={l}, t={t}, x={x}"),
            numerator / denominator,
            wt::cond_density_xi_given_tau(&p, t, x)?,
            oracle,
        ));
    }
    Ok(out)
}

fn regression_closed_form() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, t) in [(1.0, 1.0, 1.0), (2.0, 0.5, 1.0), (1.0, 1.0, 0.5)] {
        let p = params(a, l);
        let big = l + t;
        let eat = (-a * t).exp();
        let eab = (-a * big).exp();
        let brace = 2.0 * (a * t).exp() * (1.0 - 6.0 * l * t.powi(3)) - (a * t + 1.0).powi(2) - 1.0
            + (-a * l).exp()
                * t.powi(3)
                * ((a * big + 1.0).powi(2) + l * a * a * big - 4.0 * a * l + 1.0);
        let denominator = t * big.powi(3) * (1.0 - eat - a * t * l * eat)
            + t.powi(3) * (l - t) * (1.0 - eab)
            + a * big * t.powi(4) * eab;
        let oracle = p.expect_quad(|x| x * x * (-t * x).exp())? / p.expect_quad(|x| x * (-t * x).exp())?;
        out.push(quad_point(
            format!("a={a}, lambda={l}, t={t}"),
            eat * brace / denominator,
            wt::regress_xi_on_tau(&p, t)?,
            oracle,
        ));
    }
    Ok(out)
}

/// Denominator shared by the printed posterior branches; equals
/// `a μⁿ E[ξⁿ e^{−μξ}]`.
fn posterior_denominator(a: f64, l: f64, mu: f64, n: u64) -> Result<f64> {
    let nf = n as f64;
    let big = l + mu;
    Ok(gamma_lower(nf + 1.0, a * mu)? / mu
        + mu.powf(nf) * gamma_lower(nf + 1.0, a * big)? / big.powf(nf + 2.0) * (nf * l - mu)
        + a * l * mu.powf(nf) * n_upper(n, a * big)? / big.powf(nf + 1.0))
}

fn posterior_printed(a: f64, l: f64, mu: f64, n: u64, x: f64, literal_power: bool, literal_exponent: bool) -> Result<f64> {
    let nf = n as f64;
    let power = if literal_power { mu.powf(nf + 1.0) } else { mu.powf(nf) };
    let numerator = if x <= a {
        power * x.powf(nf) * (-mu * x).exp() * (1.0 - (-l * x).exp() + x * l * (-l * x).exp())
    } else {
        let rate = if literal_exponent { mu - l } else { mu + l };
        a * power * x.powf(nf) * l * (-x * rate).exp()
    };
    Ok(numerator / posterior_denominator(a, l, mu, n)?)
}

fn posterior_terms(literal_power: bool, literal_exponent: bool) -> Result<Vec<LedgerPoint>> {
    let n = 2u64;
    let mut out = Vec::new();
    for (a, l, mu, x) in [(1.0f64, 1.0f64, 1.0f64, 0.5f64), (1.0, 1.0, 1.0, 2.0), (2.0, 0.5, 2.0, 1.0), (2.0, 0.5, 2.0, 3.0), (1.0, 2.0, 0.5, 1.5)] {
        let p = params(a, l);
        let nf = n as f64;
        let oracle = x.powf(nf) * (-mu * x).exp() * p.pdf(x) / p.expect_quad(|y| y.powf(nf) * (-mu * y).exp())?;
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mu}, n={n}, x={x}"),
            posterior_printed(a, l, mu, n, x, literal_power, literal_exponent)?,
            mp::posterior_pdf(&p, mu, n, x)?,
            oracle,
        ));
    }
    Ok(out)
}

fn moments() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, k) in [(1.0, 1.0, 2.0), (2.0, 0.5, 3.0), (0.5, 2.0, 0.5)] {
        let p = params(a, l);
        let literal = a.powf(k) / (k + 1.0)
            + k / (a * l.powf(k + 1.0)) * gamma_lower(k + 1.0, a * l)?
            + k / l.powf(k) * gamma_upper(k, l * a)?;
        out.push(quad_point(format!("a={a}, lambda={l}, k={k}"), literal, p.moment(k)?, p.expect_quad(|x| x.powf(k))?));
    }
    Ok(out)
}

/// The printed single-count law at unit exposure.
fn count_law_printed(a: f64, l: f64, n: u64) -> Result<f64> {
    let nf = n as f64;
    let b = l + 1.0;
    Ok((gamma_lower(nf + 1.0, a)? / a
        + gamma_lower(nf + 1.0, a * b)? / (a * b.powf(nf + 2.0)) * (nf * l - 1.0)
        + l * n_upper(n, a * b)? / b.powf(nf + 1.0))
        / fact(n))
}

fn count_scaling() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, mu, n) in [(1.0, 1.0, 2.0, 3u64), (2.0, 0.5, 0.7, 1), (2.0, 0.5, 1.5, 0), (0.5, 2.0, 3.0, 5)] {
        let p = params(a, l);
        let nf = n as f64;
        let oracle = p.expect_quad(|x| (mu * x).powf(nf) * (-mu * x).exp())? / fact(n);
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mu}, n={n}"),
            count_law_printed(a * mu, l / mu, n)?,
            mp::pmf(&p, mu, n)?,
            oracle,
        ));
    }
    Ok(out)
}

/// `E[ξᵏ e^{−Sξ}]` in the printed incomplete-gamma form.
fn tilted_printed(a: f64, l: f64, s: f64, k: u64) -> Result<f64> {
    let kf = k as f64;
    let big = s + l;
    Ok(gamma_lower(kf + 1.0, a * s)? / (a * s.powf(kf + 1.0))
        + gamma_lower(kf + 1.0, a * big)? / (a * big.powf(kf + 2.0)) * (l * kf - s)
        + l * n_upper(k, a * big)? / big.powf(kf + 1.0))
}

fn multivariate() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    let cases: [(f64, f64, &[f64]); 3] = [(1.0, 1.0, &[0.3, 0.9]), (2.0, 0.5, &[0.5, 0.2, 1.0]), (0.5, 2.0, &[1.2])];
    for (a, l, ts) in cases {
        let p = params(a, l);
        let s: f64 = ts.iter().sum();
        let k = ts.len() as u64;
        out.push(quad_point(
            format!("a={a}, lambda={l}, t={ts:?}"),
            tilted_printed(a, l, s, k)?,
            wt::mvar2_pdf(&p, ts)?,
            p.expect_quad(|x| x.powi(k as i32) * (-s * x).exp())?,
        ));
    }
    Ok(out)
}

fn erlang_density() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, n, t) in [(1.0, 1.0, 2u32, 1.0), (2.0, 0.5, 3, 0.7), (0.5, 2.0, 1, 2.0)] {
        let p = params(a, l);
        let nf = f64::from(n);
        let big = l + t;
        let literal = t.powf(nf - 1.0) / (a * fact(u64::from(n) - 1))
            * (gamma_lower(nf + 1.0, a * t)? / t.powf(nf + 1.0)
                + gamma_lower(nf + 1.0, a * big)? / big.powf(nf + 2.0) * (l * nf - t)
                + l * nf * a * gamma_upper(nf, a * big)? / big.powf(nf + 1.0));
        let oracle = p.expect_quad(|x| x.powf(nf) * t.powf(nf - 1.0) * (-t * x).exp())? / fact(u64::from(n) - 1);
        out.push(quad_point(format!("a={a}, lambda={l}, n={n}, t={t}"), literal, wt::erlang_pdf(&p, n, t)?, oracle));
    }
    Ok(out)
}

/// `∫ Π Poisson(m_i; x Δμ_i) f(x) dx` for increments `ms`.
fn increments_oracle(p: &Params, mus: &[f64], ms: &[u64]) -> Result<f64> {
    let mut coef = 1.0;
    let mut prev = 0.0;
    for (&mu, &m) in mus.iter().zip(ms) {
        coef *= (mu - prev).powf(m as f64) / fact(m);
        prev = mu;
    }
    let total: u64 = ms.iter().sum();
    let mu_n = *mus.last().expect("non-empty");
    Ok(coef * p.expect_quad(|x| x.powf(total as f64) * (-mu_n * x).exp())?)
}

/// The printed joint law of increments; the ordered law is the same
/// expression with `m_i = k_i − k_{i−1}`.
fn increments_printed(a: f64, l: f64, mus: &[f64], ms: &[u64]) -> Result<f64> {
    let mut coef = 1.0 / a;
    let mut prev = 0.0;
    for (&mu, &m) in mus.iter().zip(ms) {
        coef *= (mu - prev).powf(m as f64) / fact(m);
        prev = mu;
    }
    let total: u64 = ms.iter().sum();
    let tf = total as f64;
    let mu_n = *mus.last().expect("non-empty");
    let big = l + mu_n;
    Ok(coef
        * (gamma_lower(tf + 1.0, a * mu_n)? / mu_n.powf(tf + 1.0)
            + gamma_lower(tf + 1.0, a * big)? / big.powf(tf + 2.0) * (l * tf - mu_n)
            + l * a * n_upper(total, a * big)? / big.powf(tf + 1.0)))
}

fn ordered() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    let cases: [(f64, f64, &[f64], &[u64]); 3] = [
        (1.0, 1.0, &[0.5, 1.0, 2.0], &[1, 1, 3]),
        (2.0, 0.5, &[0.4, 1.7], &[0, 2]),
        (0.5, 2.0, &[1.0, 1.5, 3.0], &[2, 3, 6]),
    ];
    for (a, l, mus, ks) in cases {
        let p = params(a, l);
        let ms = mp::to_increments(ks)?;
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mus:?}, k={ks:?}"),
            increments_printed(a, l, mus, &ms)?,
            mp::ordered_pmf(&p, mus, ks)?,
            increments_oracle(&p, mus, &ms)?,
        ));
    }
    Ok(out)
}

fn increments() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    let cases: [(f64, f64, &[f64], &[u64]); 3] = [
        (1.0, 1.0, &[0.5, 1.0, 2.0], &[1, 0, 2]),
        (2.0, 0.5, &[0.4, 1.7], &[3, 1]),
        (0.5, 2.0, &[1.0, 1.5, 3.0], &[0, 0, 4]),
    ];
    for (a, l, mus, ms) in cases {
        let p = params(a, l);
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mus:?}, m={ms:?}"),
            increments_printed(a, l, mus, ms)?,
            mp::increments_pmf(&p, mus, ms)?,
            increments_oracle(&p, mus, ms)?,
        ));
    }
    Ok(out)
}

fn posterior_mean() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, mu, n) in [(1.0, 1.0, 1.0, 0u64), (2.0, 0.5, 2.0, 3), (0.5, 2.0, 0.7, 5)] {
        let p = params(a, l);
        let literal = tilted_printed(a, l, mu, n + 1)? / tilted_printed(a, l, mu, n)?;
        let nf = n as f64;
        let oracle = p.expect_quad(|x| x.powf(nf + 1.0) * (-mu * x).exp())? / p.expect_quad(|x| x.powf(nf) * (-mu * x).exp())?;
        out.push(quad_point(format!("a={a}, lambda={l}, mu={mu}, n={n}"), literal, mp::posterior_mean(&p, mu, n)?, oracle));
    }
    Ok(out)
}

fn factorial_moments() -> Result<Vec<LedgerPoint>> {
    let mut out = Vec::new();
    for (a, l, mu, k) in [(1.0f64, 1.0f64, 2.0f64, 1u32), (2.0, 0.5, 1.5, 2), (0.5, 2.0, 3.0, 3)] {
        let p = params(a, l);
        let kf = f64::from(k);
        let mk = mu.powf(kf);
        let literal = (a * mu).powf(kf) / (kf + 1.0)
            + kf * mk / (a * l.powf(kf + 1.0)) * gamma_lower(kf + 1.0, a * l)?
            + kf * mk / l.powf(kf) * gamma_upper(kf, l * a)?;
        out.push(quad_point(
            format!("a={a}, lambda={l}, mu={mu}, k={k}"),
            literal,
            mp::factorial_moment(&p, mu, k)?,
            mk * p.expect_quad(|x| x.powf(kf))?,
        ));
    }
    Ok(out)
}
