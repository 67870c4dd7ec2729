//! Oracle checks: every closed form against quadrature, series or Monte
//! Carlo, with a registry that records which operations each check covers.

use rayon::prelude::*;
use serde::Serialize;

use super::gof::{chi_square_grouped, ks_from_cdf_values, ks_one_sample};
use super::Tolerances;
use crate::error::{domain, Error, Result};
use crate::maxuexp::Params;
use crate::mixed_poisson::{self as mp, TimeTransform};
use crate::numeric::{integrate_with, Interval, QuadOptions, RandomStream};
use crate::waiting_times as wt;

/// Parameter points shared by the deterministic checks.
const GRID: [(f64, f64); 3] = [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)];
const ORACLE_QUAD_TOL: f64 = 1e-13;
const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: String,
    pub passed: bool,
    /// Worst deviation, z-score or p-value, depending on the check.
    pub statistic: f64,
    /// The bound `statistic` was held to.
    pub threshold: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn failed(id: &str, err: &Error) -> Self {
        Self { id: id.into(), passed: false, statistic: f64::NAN, threshold: f64::NAN, detail: err.to_string() }
    }
}

/// A check together with the operations it exercises.
pub struct RegisteredCheck {
    pub id: &'static str,
    pub covers: &'static [&'static str],
    run: fn(&Tolerances) -> Result<CheckOutcome>,
}

impl RegisteredCheck {
    pub fn run(&self, tol: &Tolerances) -> CheckOutcome {
        (self.run)(tol).unwrap_or_else(|e| CheckOutcome::failed(self.id, &e))
    }
}

/// Every closed-form or sampling operation that must carry an oracle check.
pub const CLOSED_FORM_OPS: &[&str] = &[
    "maxuexp::cdf",
    "maxuexp::sf",
    "maxuexp::pdf",
    "maxuexp::hazard",
    "maxuexp::scale",
    "maxuexp::quantile",
    "maxuexp::sample",
    "maxuexp::mean",
    "maxuexp::moment",
    "maxuexp::variance",
    "maxuexp::neg_moment",
    "maxuexp::lst",
    "maxuexp::tilted_moment",
    "maxuexp::poisson_weight",
    "waiting_times::emue_pdf",
    "waiting_times::emue_cdf",
    "waiting_times::emue_sf",
    "waiting_times::emue_sample",
    "waiting_times::emue_moment",
    "waiting_times::biv_pdf",
    "waiting_times::cond_density_xi_given_tau",
    "waiting_times::regress_tau_on_xi",
    "waiting_times::regress_xi_on_tau",
    "waiting_times::mvar2_pdf",
    "waiting_times::erlang_pdf",
    "waiting_times::erlang_cdf",
    "waiting_times::erlang_sample",
    "waiting_times::erlang_moment",
    "mixed_poisson::TimeTransform::eval",
    "mixed_poisson::TimeTransform::invert",
    "mixed_poisson::pmf",
    "mixed_poisson::pmf_cutoff",
    "mixed_poisson::mean_var",
    "mixed_poisson::pgf",
    "mixed_poisson::posterior_pdf",
    "mixed_poisson::posterior_mean",
    "mixed_poisson::factorial_moment",
    "mixed_poisson::ordered_pmf",
    "mixed_poisson::increments_pmf",
    "mixed_poisson::to_increments",
    "mixed_poisson::to_cumulative",
    "mixed_poisson::simulate_path",
    "mixed_poisson::simulate_paths",
    "mixed_poisson::conditional_binomial_pmf",
];

pub fn registry() -> Vec<RegisteredCheck> {
    macro_rules! check {
        ($id:literal, [$($op:literal),+ $(,)?], $f:expr) => {
            RegisteredCheck { id: $id, covers: &[$($op),+], run: $f }
        };
    }
    vec![
        check!("maxuexp.pdf_mass", ["maxuexp::pdf"], maxuexp_mass),
        check!("maxuexp.cdf_vs_quadrature", ["maxuexp::cdf", "maxuexp::sf"], maxuexp_cdf),
        check!("maxuexp.hazard", ["maxuexp::hazard"], maxuexp_hazard),
        check!("maxuexp.scale", ["maxuexp::scale"], maxuexp_scale),
        check!("maxuexp.quantile_inverts_cdf", ["maxuexp::quantile"], maxuexp_quantile),
        check!("maxuexp.moments", ["maxuexp::moment", "maxuexp::mean"], maxuexp_moments),
        check!("maxuexp.variance", ["maxuexp::variance"], maxuexp_variance),
        check!("maxuexp.neg_moment", ["maxuexp::neg_moment"], maxuexp_neg_moment),
        check!("maxuexp.lst", ["maxuexp::lst"], maxuexp_lst),
        check!("maxuexp.tilted_moment", ["maxuexp::tilted_moment"], maxuexp_tilted),
        check!("maxuexp.sample_mean", ["maxuexp::sample"], maxuexp_sample_mean),
        check!("maxuexp.sample_ks", ["maxuexp::sample"], maxuexp_sample_ks),
        check!("emue.pdf_mass", ["waiting_times::emue_pdf"], emue_mass),
        check!("emue.pdf_vs_mixture", ["waiting_times::emue_pdf"], emue_pdf_mixture),
        check!("emue.cdf_vs_quadrature", ["waiting_times::emue_cdf", "waiting_times::emue_sf"], emue_cdf_quad),
        check!("emue.sample_ks", ["waiting_times::emue_sample"], emue_sample_ks),
        check!("emue.sample_quantiles", ["waiting_times::emue_sample"], emue_sample_quantiles),
        check!("emue.moment_mc", ["waiting_times::emue_moment"], emue_moment_mc),
        check!("emue.biv_marginals", ["waiting_times::biv_pdf"], biv_marginals),
        check!("emue.conditional_normalizes", ["waiting_times::cond_density_xi_given_tau"], cond_normalizes),
        check!("emue.regress_tau_on_xi_mc", ["waiting_times::regress_tau_on_xi"], regress_tau_mc),
        check!("emue.regress_xi_on_tau", ["waiting_times::regress_xi_on_tau"], regress_xi_checks),
        check!("emue.mvar2_vs_mixture", ["waiting_times::mvar2_pdf"], mvar2_mixture),
        check!("erlang.pdf_vs_mixture", ["waiting_times::erlang_pdf"], erlang_pdf_mixture),
        check!("erlang.pdf_mass", ["waiting_times::erlang_pdf"], erlang_mass),
        check!("erlang.cdf_vs_counts", ["waiting_times::erlang_cdf"], erlang_cdf_counts),
        check!("erlang.sample_ks", ["waiting_times::erlang_sample"], erlang_sample_ks),
        check!("erlang.moment_mc", ["waiting_times::erlang_moment"], erlang_moment_mc),
        check!(
            "process.time_transform_round_trip",
            ["mixed_poisson::TimeTransform::eval", "mixed_poisson::TimeTransform::invert"],
            transform_round_trip
        ),
        check!("process.pmf_vs_mixture", ["mixed_poisson::pmf", "maxuexp::poisson_weight"], pmf_mixture),
        check!("process.pmf_total_mass", ["mixed_poisson::pmf_cutoff"], pmf_total_mass),
        check!("process.mean_var_vs_series", ["mixed_poisson::mean_var"], mean_var_series),
        check!("process.pgf_vs_series", ["mixed_poisson::pgf"], pgf_series),
        check!("process.posterior_normalizes", ["mixed_poisson::posterior_pdf"], posterior_normalizes),
        check!("process.posterior_mean", ["mixed_poisson::posterior_mean"], posterior_mean_checks),
        check!("process.factorial_moment_vs_series", ["mixed_poisson::factorial_moment"], factorial_series),
        check!("process.ordered_pmf", ["mixed_poisson::ordered_pmf"], ordered_checks),
        check!(
            "process.increments_pmf",
            ["mixed_poisson::increments_pmf", "mixed_poisson::to_increments", "mixed_poisson::to_cumulative"],
            increments_checks
        ),
        check!(
            "process.simulated_counts",
            ["mixed_poisson::simulate_path", "mixed_poisson::simulate_paths"],
            simulated_counts
        ),
        check!("process.binomial_thinning", ["mixed_poisson::conditional_binomial_pmf"], binomial_thinning),
    ]
}

/// Operations listed in [`CLOSED_FORM_OPS`] that no registered check covers.
pub fn uncovered() -> Vec<&'static str> {
    let reg = registry();
    CLOSED_FORM_OPS
        .iter()
        .copied()
        .filter(|op| !reg.iter().any(|c| c.covers.contains(op)))
        .collect()
}

/// Runs every registered check in parallel, in registry order.
pub fn run_checks(tol: &Tolerances) -> Vec<CheckOutcome> {
    registry().par_iter().map(|c| c.run(tol)).collect()
}

// ---------------------------------------------------------------------------
// Generic building blocks.

/// Worst relative-or-absolute deviation `|v − r|/max(1, |r|)` over pairs.
struct Deviation {
    worst: f64,
    at: String,
}

impl Deviation {
    fn new() -> Self {
        Self { worst: 0.0, at: String::new() }
    }

    fn add(&mut self, value: f64, reference: f64, label: impl FnOnce() -> String) {
        let d = (value - reference).abs() / reference.abs().max(1.0);
        if !(d <= self.worst) {
            self.worst = if d.is_nan() { f64::INFINITY } else { d };
            self.at = format!("{} (value {value:.12e}, reference {reference:.12e})", label());
        }
    }

    fn outcome(self, id: &str, threshold: f64) -> CheckOutcome {
        CheckOutcome {
            id: id.into(),
            passed: self.worst <= threshold,
            statistic: self.worst,
            threshold,
            detail: format!("worst deviation at {}", self.at),
        }
    }
}

fn params(a: f64, l: f64) -> Params {
    Params::new(a, l).expect("grid parameters are valid")
}

fn quad(f: impl Fn(f64) -> f64, iv: Interval, breaks: &[f64]) -> Result<f64> {
    Ok(integrate_with(f, iv, breaks, QuadOptions::new(ORACLE_QUAD_TOL))?.value)
}

fn half_line() -> Interval {
    Interval::semi_infinite(0.0).expect("finite bound")
}

/// Quadrature mass of a density, split at `breakpoints`.
pub fn check_density(
    id: &str,
    pdf: impl Fn(f64) -> f64,
    support: Interval,
    breakpoints: &[f64],
    tol: f64,
) -> CheckOutcome {
    match integrate_with(pdf, support, breakpoints, QuadOptions::new(ORACLE_QUAD_TOL)) {
        Ok(r) => CheckOutcome {
            id: id.into(),
            passed: (r.value - 1.0).abs() <= tol,
            statistic: (r.value - 1.0).abs(),
            threshold: tol,
            detail: format!("mass {:.15} ({} evaluations)", r.value, r.evaluations),
        },
        Err(e) => CheckOutcome::failed(id, &e),
    }
}

/// `n` draws split into fixed chunks, chunk `i` using substream `i` of
/// `seed`; the result is independent of the thread count.
pub fn draw_many(n: usize, seed: u64, sampler: impl Fn(&mut RandomStream) -> f64 + Sync) -> Vec<f64> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut s = RandomStream::substream(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| sampler(&mut s)).collect::<Vec<_>>()
        })
        .collect()
}

/// A claimed expectation `E h(X) = expected`.
pub struct MomentClaim<'a> {
    pub transform: &'a (dyn Fn(f64) -> f64 + Sync),
    pub expected: f64,
    /// Whether `h(X)` has a finite variance; if not, the mean comparison is
    /// refused and the quantile claim is used instead.
    pub finite_variance: bool,
}

/// A claimed CDF, compared at fixed points.
pub struct QuantileClaim<'a> {
    pub cdf: &'a dyn Fn(f64) -> f64,
    pub points: &'a [f64],
}

/// Monte Carlo comparison. In mean mode the z-score of the sample mean must
/// stay within `sigmas`; in quantile mode each empirical CDF value must be
/// within `sigmas` binomial standard errors.
pub fn check_mc(
    id: &str,
    draws: &[f64],
    moment: Option<MomentClaim<'_>>,
    quantiles: Option<QuantileClaim<'_>>,
    sigmas: f64,
) -> CheckOutcome {
    let n = draws.len() as f64;
    match (moment, quantiles) {
        (Some(m), _) if m.finite_variance => {
            let (mean, se) = mean_and_se(draws.iter().map(|&x| (m.transform)(x)));
            let z = (mean - m.expected).abs() / se;
            CheckOutcome {
                id: id.into(),
                passed: z <= sigmas,
                statistic: z,
                threshold: sigmas,
                detail: format!("mean mode: {mean:.6} vs {:.6}, se {se:.2e}, n {n}", m.expected),
            }
        }
        (m, Some(q)) => {
            let mut sorted = draws.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut worst = 0.0f64;
            let mut parts = Vec::new();
            for &t in q.points {
                let f = (q.cdf)(t);
                let emp = sorted.partition_point(|&x| x <= t) as f64 / n;
                let z = (emp - f).abs() / (f * (1.0 - f) / n).sqrt();
                worst = worst.max(z);
                parts.push(format!("F({t}) {emp:.5} vs {f:.5}"));
            }
            let refused = if m.is_some() { "variance diverges, mean refused; " } else { "" };
            CheckOutcome {
                id: id.into(),
                passed: worst <= sigmas,
                statistic: worst,
                threshold: sigmas,
                detail: format!("{refused}quantile mode: {}", parts.join(", ")),
            }
        }
        _ => CheckOutcome::failed(
            id,
            &domain("variance diverges and no CDF was supplied for quantile mode"),
        ),
    }
}

fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

fn ks_outcome(id: &str, r: super::gof::GofResult, alpha: f64, n: usize) -> CheckOutcome {
    CheckOutcome {
        id: id.into(),
        passed: r.passes(alpha),
        statistic: r.p_value,
        threshold: alpha,
        detail: format!("KS distance {:.3e} over {n} draws, p = {:.4}", r.statistic, r.p_value),
    }
}

// ---------------------------------------------------------------------------
// Max-U-Exp.

fn maxuexp_mass(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut worst = CheckOutcome { id: String::new(), passed: true, statistic: 0.0, threshold: 0.0, detail: String::new() };
    for a in [0.5, 1.0, 2.0, 5.0] {
        for l in [0.5, 1.0, 2.0, 5.0] {
            let p = params(a, l);
            let o = check_density("maxuexp.pdf_mass", |x| p.pdf(x), half_line(), &[a], tol.quad);
            if !o.passed || o.statistic >= worst.statistic {
                worst = CheckOutcome { detail: format!("(a, lambda) = ({a}, {l}): {}", o.detail), ..o };
            }
            if !worst.passed {
                return Ok(worst);
            }
        }
    }
    Ok(worst)
}

fn maxuexp_cdf(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for x in [0.3 * a, a, 1.5 * a, a + 3.0 / l] {
            let q = quad(|y| p.pdf(y), Interval::new(0.0, x)?, &[a])?;
            dev.add(p.cdf(x), q, || format!("cdf({x}) at ({a}, {l})"));
            dev.add(p.sf(x), 1.0 - q, || format!("sf({x}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("maxuexp.cdf_vs_quadrature", tol.quad))
}

fn maxuexp_hazard(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for x in [0.2 * a, 0.9 * a, 1.1 * a, 3.0 * a] {
            dev.add(p.hazard(x), p.pdf(x) / (1.0 - p.cdf(x)), || format!("h({x}) at ({a}, {l})"));
        }
        dev.add(p.hazard(2.0 * a), l, || format!("h beyond a at ({a}, {l})"));
    }
    Ok(dev.outcome("maxuexp.hazard", tol.quad))
}

fn maxuexp_scale(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for k in [0.5, 3.0] {
            let s = p.scale(k)?;
            for x in [0.4, 1.0, 2.5] {
                dev.add(s.cdf(k * x), p.cdf(x), || format!("F_kξ({k}·{x}) at ({a}, {l})"));
            }
        }
    }
    Ok(dev.outcome("maxuexp.scale", tol.quad))
}

fn maxuexp_quantile(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for q in [0.01, 0.25, 0.5, 0.9, 0.999] {
            dev.add(p.cdf(p.quantile(q)?), q, || format!("F(Q({q})) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("maxuexp.quantile_inverts_cdf", tol.quad))
}

fn maxuexp_moments(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for k in [0.5, 1.0, 2.0, 3.0] {
            let q = p.expect_quad(|x| x.powf(k))?;
            dev.add(p.moment(k)?, q, || format!("E ξ^{k} at ({a}, {l})"));
        }
        dev.add(p.mean(), p.expect_quad(|x| x)?, || format!("E ξ at ({a}, {l})"));
    }
    Ok(dev.outcome("maxuexp.moments", tol.quad))
}

fn maxuexp_variance(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        let m1 = p.expect_quad(|x| x)?;
        let m2 = p.expect_quad(|x| x * x)?;
        dev.add(p.variance(), m2 - m1 * m1, || format!("Var ξ at ({a}, {l})"));
    }
    Ok(dev.outcome("maxuexp.variance", tol.quad))
}

fn maxuexp_neg_moment(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for q in [0.25, 0.5, 0.75, 1.0, 1.5] {
            let oracle = quad(|x| if x > 0.0 { x.powf(-q) * p.pdf(x) } else { 0.0 }, half_line(), &[a])?;
            dev.add(p.neg_moment(q)?, oracle, || format!("E ξ^-{q} at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("maxuexp.neg_moment", tol.quad))
}

fn maxuexp_lst(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in [0.5, 1.0, 2.0] {
            dev.add(p.lst(t)?, p.expect_quad(|x| (-t * x).exp())?, || format!("LST({t}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("maxuexp.lst", tol.quad))
}

fn maxuexp_tilted(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for m in [0.0, 0.5, 2.0] {
            for k in [0.0, 1.0, 2.5, 6.0] {
                let q = p.expect_quad(|x| x.powf(k) * (-m * x).exp())?;
                dev.add(p.tilted_moment(m, k)?, q, || format!("T({m}, {k}) at ({a}, {l})"));
            }
        }
    }
    Ok(dev.outcome("maxuexp.tilted_moment", tol.quad))
}

fn maxuexp_sample_mean(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 101, |s| p.sample(s));
    let id = |x: f64| x;
    Ok(check_mc(
        "maxuexp.sample_mean",
        &draws,
        Some(MomentClaim { transform: &id, expected: p.mean(), finite_variance: true }),
        None,
        tol.mc_sigmas,
    ))
}

fn maxuexp_sample_ks(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 102, |s| p.sample(s));
    Ok(ks_outcome("maxuexp.sample_ks", ks_one_sample(&draws, |x| p.cdf(x))?, tol.alpha, draws.len()))
}

// ---------------------------------------------------------------------------
// Waiting times.

const T_POINTS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn emue_mass(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    Ok(check_density("emue.pdf_mass", |t| wt::emue_pdf(&p, t), half_line(), &[1.0], 100.0 * tol.quad))
}

fn emue_pdf_mixture(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in T_POINTS {
            let q = p.expect_quad(|x| x * (-t * x).exp())?;
            dev.add(wt::emue_pdf(&p, t), q, || format!("f_τ({t}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("emue.pdf_vs_mixture", tol.quad))
}

fn emue_cdf_quad(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in T_POINTS {
            let q = quad(|s| wt::emue_pdf(&p, s), Interval::new(0.0, t)?, &[])?;
            dev.add(wt::emue_cdf(&p, t), q, || format!("F_τ({t}) at ({a}, {l})"));
            dev.add(wt::emue_sf(&p, t), 1.0 - q, || format!("1 - F_τ({t}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("emue.cdf_vs_quadrature", tol.quad))
}

fn emue_sample_ks(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 201, |s| wt::emue_sample(&p, s));
    Ok(ks_outcome("emue.sample_ks", ks_one_sample(&draws, |t| wt::emue_cdf(&p, t))?, tol.alpha, draws.len()))
}

fn emue_sample_quantiles(tol: &Tolerances) -> Result<CheckOutcome> {
    // E τ² is infinite, so the claim about τ² is checked through the CDF.
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 202, |s| wt::emue_sample(&p, s));
    let sq = |t: f64| t * t;
    let cdf = |t: f64| wt::emue_cdf(&p, t);
    Ok(check_mc(
        "emue.sample_quantiles",
        &draws,
        Some(MomentClaim { transform: &sq, expected: f64::INFINITY, finite_variance: false }),
        Some(QuantileClaim { cdf: &cdf, points: &[0.5, 1.0, 2.0] }),
        tol.mc_sigmas,
    ))
}

fn emue_moment_mc(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 203, |s| wt::emue_sample(&p, s));
    let root = |t: f64| t.sqrt();
    Ok(check_mc(
        "emue.moment_mc",
        &draws,
        Some(MomentClaim { transform: &root, expected: wt::emue_moment(&p, 0.5)?, finite_variance: true }),
        None,
        tol.mc_sigmas,
    ))
}

fn biv_marginals(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in [0.5, 1.0, 2.0] {
            let q = quad(|x| wt::biv_pdf(&p, t, x), half_line(), &[a])?;
            dev.add(q, wt::emue_pdf(&p, t), || format!("∫ f(t={t}, x) dx at ({a}, {l})"));
        }
        for x in [0.5, 2.0] {
            let q = quad(|t| wt::biv_pdf(&p, t, x), half_line(), &[])?;
            dev.add(q, p.pdf(x), || format!("∫ f(t, x={x}) dt at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("emue.biv_marginals", tol.quad))
}

fn cond_normalizes(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in [0.5, 1.0, 2.0] {
            let q = quad(
                |x| wt::cond_density_xi_given_tau(&p, t, x).unwrap_or(f64::NAN),
                half_line(),
                &[a],
            )?;
            dev.add(q, 1.0, || format!("∫ f(x | τ={t}) dx at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("emue.conditional_normalizes", 100.0 * tol.quad))
}

fn regress_tau_mc(tol: &Tolerances) -> Result<CheckOutcome> {
    // Keep (τ, ξ) pairs with ξ in a narrow window around x.
    let p = params(1.0, 1.0);
    let (x, half_width) = (1.0, 0.01);
    let n = 2_000_000usize;
    let chunks = n.div_ceil(CHUNK);
    let kept: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut s = RandomStream::substream(301, c as u64);
            (0..CHUNK.min(n - c * CHUNK))
                .filter_map(|_| {
                    let xi = p.sample(&mut s);
                    let eta = s.exp(1.0);
                    ((xi - x).abs() < half_width).then(|| eta / xi)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let id = |t: f64| t;
    let mut o = check_mc(
        "emue.regress_tau_on_xi_mc",
        &kept,
        Some(MomentClaim { transform: &id, expected: wt::regress_tau_on_xi(x)?, finite_variance: true }),
        None,
        tol.mc_sigmas,
    );
    o.detail = format!("{} draws with |ξ - {x}| < {half_width}; {}", kept.len(), o.detail);
    Ok(o)
}

fn regress_xi_checks(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for t in [0.01, 0.5, 1.0, 2.0, 10.0] {
            let oracle = p.expect_quad(|x| x * x * (-t * x).exp())? / p.expect_quad(|x| x * (-t * x).exp())?;
            dev.add(wt::regress_xi_on_tau(&p, t)?, oracle, || format!("E(ξ | τ={t}) at ({a}, {l})"));
        }
    }
    // Tower property: ∫ E(ξ | τ = t) f_τ(t) dt = E ξ.
    let p = params(1.0, 1.0);
    let tower = integrate_with(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            wt::regress_xi_on_tau(&p, t).map_or(f64::NAN, |r| r * wt::emue_pdf(&p, t))
        },
        half_line(),
        &[],
        QuadOptions::new(1e-9),
    )?
    .value;
    let mut tower_dev = Deviation::new();
    tower_dev.add(tower, p.mean(), || "tower property at (1, 1)".into());
    let pointwise = dev.outcome("emue.regress_xi_on_tau", tol.quad);
    let tower = tower_dev.outcome("emue.regress_xi_on_tau", 1e4 * tol.quad);
    Ok(CheckOutcome {
        id: "emue.regress_xi_on_tau".into(),
        passed: pointwise.passed && tower.passed,
        statistic: pointwise.statistic,
        threshold: pointwise.threshold,
        detail: format!("pointwise: {}; {}", pointwise.detail, tower.detail),
    })
}

fn mvar2_mixture(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    let cases: [&[f64]; 4] = [&[1.0], &[0.7, 0.7], &[0.3, 0.9], &[0.2, 0.5, 1.1]];
    for (a, l) in GRID {
        let p = params(a, l);
        for ts in cases {
            let s: f64 = ts.iter().sum();
            let k = ts.len() as i32;
            let q = p.expect_quad(|x| x.powi(k) * (-s * x).exp())?;
            dev.add(wt::mvar2_pdf(&p, ts)?, q, || format!("f{ts:?} at ({a}, {l})"));
        }
        dev.add(wt::mvar2_pdf(&p, &[1.3])?, wt::emue_pdf(&p, 1.3), || format!("k = 1 reduction at ({a}, {l})"));
    }
    Ok(dev.outcome("emue.mvar2_vs_mixture", tol.quad))
}

fn erlang_pdf_mixture(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for n in 1..=3u32 {
            for t in [0.5f64, 1.0, 2.0] {
                // Gamma(n, x) density at t mixed over ξ.
                let fact: f64 = (1..n).map(f64::from).product();
                let q = p.expect_quad(|x| x.powi(n as i32) * t.powi(n as i32 - 1) * (-t * x).exp() / fact)?;
                dev.add(wt::erlang_pdf(&p, n, t)?, q, || format!("f_T{n}({t}) at ({a}, {l})"));
            }
        }
    }
    Ok(dev.outcome("erlang.pdf_vs_mixture", tol.quad))
}

fn erlang_mass(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let mut worst: Option<CheckOutcome> = None;
    for n in 1..=3u32 {
        let o = check_density(
            "erlang.pdf_mass",
            |t| wt::erlang_pdf(&p, n, t).unwrap_or(f64::NAN),
            half_line(),
            &[],
            100.0 * tol.quad,
        );
        if worst.as_ref().map_or(true, |w| !o.passed || o.statistic > w.statistic) {
            worst = Some(CheckOutcome { detail: format!("n = {n}: {}", o.detail), ..o });
        }
    }
    Ok(worst.expect("three orders checked"))
}

fn erlang_cdf_counts(tol: &Tolerances) -> Result<CheckOutcome> {
    // P(T_n ≤ t) = P(N(t) ≥ n) for the identity clock.
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for n in 1..=3u32 {
            for t in [0.3, 1.0, 4.0] {
                let below: f64 = (0..n as u64).map(|j| mp::pmf(&p, t, j)).sum::<Result<f64>>()?;
                dev.add(wt::erlang_cdf(&p, n, t)?, 1.0 - below, || format!("F_T{n}({t}) at ({a}, {l})"));
            }
        }
    }
    Ok(dev.outcome("erlang.cdf_vs_counts", 10.0 * tol.quad))
}

fn erlang_sample_ks(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let n = 2u32;
    let mut draws = draw_many(100_000, 401, |s| wt::erlang_sample(&p, n, s));
    draws.sort_by(f64::total_cmp);
    // CDF by quadrature of the density, accumulated between sorted draws.
    let mut cdf = Vec::with_capacity(draws.len());
    let (mut acc, mut prev) = (0.0, 0.0);
    for &x in &draws {
        if x > prev {
            acc += quad(|t| wt::erlang_pdf(&p, n, t).unwrap_or(f64::NAN), Interval::new(prev, x)?, &[])?;
            prev = x;
        }
        cdf.push(acc);
    }
    Ok(ks_outcome("erlang.sample_ks", ks_from_cdf_values(&cdf)?, tol.alpha, draws.len()))
}

fn erlang_moment_mc(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let draws = draw_many(1_000_000, 402, |s| wt::erlang_sample(&p, 2, s));
    let root = |t: f64| t.sqrt();
    Ok(check_mc(
        "erlang.moment_mc",
        &draws,
        Some(MomentClaim { transform: &root, expected: wt::erlang_moment(&p, 2, 0.5)?, finite_variance: true }),
        None,
        tol.mc_sigmas,
    ))
}

// ---------------------------------------------------------------------------
// Counting process.

fn transform_round_trip(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    let transforms = [
        TimeTransform::power(1.0)?,
        TimeTransform::power(0.5)?,
        TimeTransform::power(2.5)?,
        TimeTransform::table(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 4.0), (5.0, 10.0)])?,
    ];
    for (i, tt) in transforms.iter().enumerate() {
        for t in [0.0, 0.01, 0.7, 1.0, 2.2, 4.9] {
            dev.add(tt.invert(tt.eval(t)?)?, t, || format!("transform {i} at t = {t}"));
        }
    }
    Ok(dev.outcome("process.time_transform_round_trip", 100.0 * tol.quad))
}

fn pmf_mixture(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for a in [0.5, 1.0, 2.0] {
        for l in [0.5, 1.0, 2.0] {
            let p = params(a, l);
            for m in [0.5, 1.0, 2.0] {
                for n in 0..=10u64 {
                    let fact: f64 = (1..=n).map(|k| k as f64).product();
                    let q = p.expect_quad(|x| (m * x).powi(n as i32) * (-m * x).exp() / fact)?;
                    dev.add(mp::pmf(&p, m, n)?, q, || format!("P(N={n}) at m={m}, ({a}, {l})"));
                }
            }
        }
    }
    Ok(dev.outcome("process.pmf_vs_mixture", tol.quad))
}

fn pmf_total_mass(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for m in [0.5, 1.0, 2.0] {
            let cut = mp::pmf_cutoff(&p, m, 1e-12)?;
            let total: f64 = (0..=cut).map(|n| mp::pmf(&p, m, n)).sum::<Result<f64>>()?;
            dev.add(total, 1.0, || format!("Σ P(N=n), n ≤ {cut}, m={m}, ({a}, {l})"));
        }
    }
    Ok(dev.outcome("process.pmf_total_mass", tol.quad))
}

fn series<F: Fn(u64) -> f64>(p: &Params, m: f64, weight: F) -> Result<f64> {
    let cut = mp::pmf_cutoff(p, m, 1e-15)? + 50;
    (0..=cut).map(|n| Ok(weight(n) * mp::pmf(p, m, n)?)).sum()
}

fn mean_var_series(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for m in [0.5, 2.0] {
            let (mean, var) = mp::mean_var(&p, m)?;
            let s1 = series(&p, m, |n| n as f64)?;
            let s2 = series(&p, m, |n| (n * n) as f64)?;
            dev.add(mean, s1, || format!("E N at m={m}, ({a}, {l})"));
            dev.add(var, s2 - s1 * s1, || format!("Var N at m={m}, ({a}, {l})"));
        }
    }
    Ok(dev.outcome("process.mean_var_vs_series", tol.quad))
}

fn pgf_series(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for z in [-0.5f64, 0.0, 0.5] {
            let s = series(&p, 1.0, |n| z.powi(n as i32))?;
            dev.add(mp::pgf(&p, 1.0, z)?, s, || format!("pgf({z}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("process.pgf_vs_series", tol.quad))
}

fn posterior_normalizes(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for (m, n) in [(1.0, 0u64), (1.0, 3), (2.0, 5)] {
            let q = quad(|x| mp::posterior_pdf(&p, m, n, x).unwrap_or(f64::NAN), half_line(), &[a])?;
            dev.add(q, 1.0, || format!("∫ posterior (m={m}, n={n}) at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("process.posterior_normalizes", 100.0 * tol.quad))
}

fn posterior_mean_checks(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for (m, n) in [(1.0, 0u64), (1.0, 3), (2.0, 5)] {
            let nf = n as f64;
            let ratio = p.tilted_moment(m, nf + 1.0)? / p.tilted_moment(m, nf)?;
            dev.add(mp::posterior_mean(&p, m, n)?, ratio, || format!("E(ξ | N={n}), m={m}, ({a}, {l})"));
        }
    }
    // Tower property over the count distribution.
    let p = params(1.0, 1.0);
    let cut = mp::pmf_cutoff(&p, 1.0, 1e-12)?;
    let tower: f64 = (0..=cut).map(|n| Ok(mp::posterior_mean(&p, 1.0, n)? * mp::pmf(&p, 1.0, n)?)).sum::<Result<f64>>()?;
    dev.add(tower, p.mean(), || "Σ E(ξ | N=n) P(N=n) at (1, 1)".into());
    Ok(dev.outcome("process.posterior_mean", tol.quad))
}

fn factorial_series(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        for m in [1.0, 2.0] {
            for k in 1..=3u32 {
                let s = series(&p, m, |n| (0..k as u64).map(|j| n.saturating_sub(j) as f64).product())?;
                dev.add(mp::factorial_moment(&p, m, k)?, s, || format!("k={k}, m={m}, ({a}, {l})"));
            }
        }
    }
    Ok(dev.outcome("process.factorial_moment_vs_series", tol.quad))
}

fn ordered_checks(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    for (a, l) in GRID {
        let p = params(a, l);
        let mus = [0.4f64, 1.0, 1.7];
        for ks in [[0u64, 0, 0], [1, 1, 3], [0, 2, 2], [2, 3, 5]] {
            // ∫ Π_i Poisson(Δk_i; xΔμ_i) f(x) dx.
            let (mut prev_mu, mut prev_k) = (0.0, 0u64);
            let mut coef = 1.0;
            for (&mu, &k) in mus.iter().zip(&ks) {
                let dk = k - prev_k;
                let fact: f64 = (1..=dk).map(|j| j as f64).product();
                coef *= (mu - prev_mu).powi(dk as i32) / fact;
                prev_mu = mu;
                prev_k = k;
            }
            let kn = ks[2] as i32;
            let q = p.expect_quad(|x| coef * x.powi(kn) * (-mus[2] * x).exp())?;
            dev.add(mp::ordered_pmf(&p, &mus, &ks)?, q, || format!("{ks:?} at ({a}, {l})"));
        }
        // Marginalizing the last coordinate.
        let (m1, m2) = (0.5, 1.2);
        for k1 in 0..=3u64 {
            let cut = mp::pmf_cutoff(&p, m2, 1e-14)?;
            let s: f64 = (k1..=cut.max(k1)).map(|k2| mp::ordered_pmf(&p, &[m1, m2], &[k1, k2])).sum::<Result<f64>>()?;
            dev.add(s, mp::pmf(&p, m1, k1)?, || format!("Σ over k2 ≥ {k1} at ({a}, {l})"));
        }
    }
    Ok(dev.outcome("process.ordered_pmf", tol.quad))
}

fn increments_checks(tol: &Tolerances) -> Result<CheckOutcome> {
    let mut dev = Deviation::new();
    let mut s = RandomStream::new(501);
    for (a, l) in GRID {
        let p = params(a, l);
        for _ in 0..20 {
            let len = 1 + (s.next_u64() % 3) as usize;
            let ms: Vec<u64> = (0..len).map(|_| s.next_u64() % 4).collect();
            let mut mus = Vec::with_capacity(len);
            let mut acc = 0.0;
            for _ in 0..len {
                acc += 0.1 + s.uniform();
                mus.push(acc);
            }
            let ks = mp::to_cumulative(&ms);
            if mp::to_increments(&ks)? != ms {
                return Err(domain(format!("increment round trip failed for {ms:?}")));
            }
            dev.add(mp::increments_pmf(&p, &mus, &ms)?, mp::ordered_pmf(&p, &mus, &ks)?, || {
                format!("{ms:?} at {mus:?}, ({a}, {l})")
            });
        }
        // Truncated total mass for two increments at small exposures.
        let mus = [0.3, 0.8];
        let cut = mp::pmf_cutoff(&p, 0.8, 1e-14)?;
        let mut total = 0.0;
        for m1 in 0..=cut {
            for m2 in 0..=(cut - m1) {
                total += mp::increments_pmf(&p, &mus, &[m1, m2])?;
            }
        }
        dev.add(total, 1.0, || format!("total increment mass at ({a}, {l})"));
    }
    Ok(dev.outcome("process.increments_pmf", tol.quad))
}

fn simulate_identity_paths(n_paths: usize, seed: u64) -> Result<Vec<mp::ProcessPath>> {
    mp::simulate_paths(&params(1.0, 1.0), &TimeTransform::identity(), 2.0, n_paths, seed)
}

fn simulated_counts(tol: &Tolerances) -> Result<CheckOutcome> {
    let p = params(1.0, 1.0);
    let paths = simulate_identity_paths(100_000, 601)?;
    let n = paths.len() as f64;
    let counts: Vec<f64> = paths.iter().map(|x| x.count_at(2.0) as f64).collect();
    let (mean, se) = mean_and_se(counts.iter().copied());
    let (expected_mean, _) = mp::mean_var(&p, 2.0)?;
    let z_mean = (mean - expected_mean).abs() / se;
    let p0 = mp::pmf(&p, 1.0, 0)?;
    let zeros = paths.iter().filter(|x| x.count_at(1.0) == 0).count() as f64 / n;
    let z_zero = (zeros - p0).abs() / (p0 * (1.0 - p0) / n).sqrt();
    Ok(CheckOutcome {
        id: "process.simulated_counts".into(),
        passed: z_mean <= tol.mc_sigmas && z_zero <= 3.0,
        statistic: z_mean.max(z_zero),
        threshold: tol.mc_sigmas,
        detail: format!(
            "E N(2): {mean:.5} vs {expected_mean:.5} (z {z_mean:.2}); P(N(1)=0): {zeros:.5} vs {p0:.5} (z {z_zero:.2}, bound 3)"
        ),
    })
}

fn binomial_thinning(tol: &Tolerances) -> Result<CheckOutcome> {
    let paths = simulate_identity_paths(100_000, 602)?;
    let max_n = 12usize;
    let mut table = vec![vec![0.0; max_n + 1]; max_n + 1];
    for path in &paths {
        let (n1, n2) = (path.count_at(1.0) as usize, path.count_at(2.0) as usize);
        if n2 <= max_n {
            table[n2][n1] += 1.0;
        }
    }
    let mut groups = Vec::new();
    for (n, row) in table.iter().enumerate().skip(1) {
        let total: f64 = row.iter().sum();
        if total == 0.0 {
            continue;
        }
        let expected = (0..=n)
            .map(|j| Ok(total * mp::conditional_binomial_pmf(n as u64, 1.0, 2.0, j as u64)?))
            .collect::<Result<Vec<f64>>>()?;
        groups.push((row[..=n].to_vec(), expected));
    }
    let r = chi_square_grouped(&groups, 5.0)?;
    Ok(CheckOutcome {
        id: "process.binomial_thinning".into(),
        passed: r.passes(tol.alpha),
        statistic: r.p_value,
        threshold: tol.alpha,
        detail: format!("chi-square {:.3} on {} dof, p = {:.4}", r.statistic, r.dof.unwrap_or(0), r.p_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_operation_is_covered() {
        assert!(uncovered().is_empty(), "{:?}", uncovered());
        for c in registry() {
            for op in c.covers {
                assert!(CLOSED_FORM_OPS.contains(op), "{} covers unknown op {op}", c.id);
            }
        }
    }

    #[test]
    fn draws_do_not_depend_on_chunking_order() {
        let p = params(1.0, 1.0);
        let a = draw_many(40_000, 5, |s| p.sample(s));
        let b = draw_many(40_000, 5, |s| p.sample(s));
        assert_eq!(a, b);
        let mut s = RandomStream::substream(5, 1);
        assert_eq!(a[CHUNK], p.sample(&mut s));
    }

    #[test]
    fn quantile_mode_is_forced_for_divergent_variance() {
        let draws = [0.5, 1.0, 1.5, 2.0];
        let sq = |x: f64| x * x;
        let cdf = |x: f64| (x / 2.5).min(1.0);
        let o = check_mc(
            "t",
            &draws,
            Some(MomentClaim { transform: &sq, expected: f64::INFINITY, finite_variance: false }),
            Some(QuantileClaim { cdf: &cdf, points: &[1.0] }),
            4.0,
        );
        assert!(o.detail.contains("quantile mode"));
        let o = check_mc(
            "t",
            &draws,
            Some(MomentClaim { transform: &sq, expected: f64::INFINITY, finite_variance: false }),
            None,
            4.0,
        );
        assert!(!o.passed);
    }

    #[test]
    fn density_check_reports_mass() {
        let o = check_density("exp", |x| (-x).exp(), half_line(), &[], 1e-10);
        assert!(o.passed, "{o:?}");
        let o = check_density("half", |x| 0.5 * (-x).exp(), half_line(), &[], 1e-10);
        assert!(!o.passed);
    }
}
