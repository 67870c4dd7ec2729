//! Fitting Max-U-Exp(a, λ) to a sample.
//!
//! The method of moments reduces to one equation in `x = aλ`:
//!
//! ```text
//! g(x) = x[x³/3 + 4 − 2e^{−x}(x+2)] / (x²/2 + 1 − e^{−x})² = r̂,
//! λ = (x²/2 + 1 − e^{−x}) / (x m₁),
//! ```
//!
//! where `r̂` estimates `E ξ²/(E ξ)²`. `g` falls from 2 at `x = 0⁺` to its
//! minimum near `x = 4.0232` and then climbs back towards 4/3, so `r̂`
//! decides whether there is one root, two roots or none. Least squares on
//! the uniform-branch CDF resolves the ambiguous cases.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::maxuexp::Params;
use crate::numeric::{find_root, ln_gamma_unchecked, minimize, minimize_scalar, Interval};

/// Location of the minimum of [`mom_curve`].
pub const MOM_ARGMIN: f64 = 4.023_167_173_887_86;
/// Minimum value of [`mom_curve`].
pub const MOM_MIN: f64 = 1.245_232_775_188_81;
/// The finite solution of `g(x) = 4/3`.
pub const MOM_FOUR_THIRDS: f64 = 2.173_823_425_792_50;

/// Target used when `r̂ ≥ 2`, just below the `x → 0⁺` limit.
const CLAMP_EPS: f64 = 1e-6;
/// Share of the largest observations dropped by the least-squares fit.
pub const DEFAULT_TRIM: f64 = 0.25;
const HISTOGRAM_MIN_N: usize = 20;
const DROP_FACTOR: f64 = 0.5;
const MIN_EXCEEDANCES: usize = 5;

/// A sorted sample of positive observations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleData {
    values: Vec<f64>,
}

impl SampleData {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: values.len() });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(domain(format!("observation {} is {v}; values must be positive", i + 1)));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// First two empirical moments and the unbiased estimate of `(E ξ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub mean_sq_unbiased: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RatioVariant {
    /// `m₂/m₁²`.
    Plain,
    /// `m₂(n−1)/(n m₁² − m₂)`, dividing by the unbiased estimate of `(E ξ)²`.
    #[default]
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Unique,
    AmbiguousTwoRoots,
    FallbackMin,
    LsqRefined,
}

/// A moment-equation solution `x = aλ` with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub x_product: f64,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub a: f64,
    pub lambda: f64,
    pub x_product: f64,
    pub r_hat: f64,
    #[serde(skip)]
    pub r_hat_variant: RatioVariant,
    pub branch: Branch,
    pub objective: Option<f64>,
    pub warnings: Vec<String>,
    /// Every root considered by the moment step.
    #[serde(skip)]
    pub candidates: Vec<Candidate>,
}

impl FitReport {
    pub fn params(&self) -> Result<Params> {
        Params::new(self.a, self.lambda)
    }
}

pub fn empirical_moments(s: &SampleData) -> Moments {
    let n = s.n() as f64;
    let m1 = s.values.iter().sum::<f64>() / n;
    let m2 = s.values.iter().map(|x| x * x).sum::<f64>() / n;
    Moments { m1, m2, mean_sq_unbiased: (n * m1 * m1 - m2) / (n - 1.0) }
}

/// Estimate of `E ξ²/(E ξ)²`.
///
/// Since `m₂ ≥ m₁²`, the unbiased variant is never smaller than the plain
/// one.
pub fn ratio_stat(s: &SampleData, variant: RatioVariant) -> Result<f64> {
    let mo = empirical_moments(s);
    match variant {
        RatioVariant::Plain => Ok(mo.m2 / (mo.m1 * mo.m1)),
        RatioVariant::Unbiased => {
            if !(mo.mean_sq_unbiased > 0.0) {
                return Err(Error::DegenerateSample(format!(
                    "n·m1² − m2 = {} is not positive",
                    mo.mean_sq_unbiased * (s.n() as f64 - 1.0)
                )));
            }
            Ok(mo.m2 / mo.mean_sq_unbiased)
        }
    }
}

/// `g(x) = E ξ²/(E ξ)²` as a function of `x = aλ` alone.
pub fn mom_curve(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        return 2.0 - 2.0 * x2 / 3.0 + x2 * x / 3.0 + x2 * x2 / 12.0 - 11.0 * x2 * x2 * x / 90.0;
    }
    let em1 = (-x).exp_m1();
    let num = x * x * x / 3.0 - 2.0 * x - 2.0 * (x + 2.0) * em1;
    let den = x * x / 2.0 - em1;
    x * num / (den * den)
}

/// `(argmin, min)` of [`mom_curve`], located numerically.
pub fn mom_curve_minimum() -> Result<(f64, f64)> {
    minimize_scalar(mom_curve, Interval::new(1.0, 10.0)?, 1e-10)
}

/// The finite `x` with `g(x) = 4/3`, located numerically.
pub fn mom_curve_four_thirds() -> Result<f64> {
    find_root(|x| mom_curve(x) - 4.0 / 3.0, Interval::new(1.0, MOM_ARGMIN)?, 1e-14)
}

fn lambda_from_x(x: f64, m1: f64) -> f64 {
    (x * x / 2.0 - (-x).exp_m1()) / (x * m1)
}

fn candidate(x: f64, m1: f64) -> Result<Candidate> {
    let lambda = lambda_from_x(x, m1);
    Ok(Candidate { x_product: x, params: Params::new(x / lambda, lambda)? })
}

fn solve_curve(target: f64, lo: f64, hi: f64) -> Result<f64> {
    find_root(|x| mom_curve(x) - target, Interval::new(lo, hi)?, 1e-15)
}

/// Root of `g(x) = target` on the rising branch beyond the minimum.
fn solve_right_branch(target: f64) -> Result<f64> {
    let mut hi = 2.0 * MOM_ARGMIN;
    while mom_curve(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Convergence { what: format!("bracketing g(x) = {target}"), iterations: 40 });
        }
    }
    solve_curve(target, MOM_ARGMIN, hi)
}

/// Method of moments with the branch logic on `r̂` (unbiased variant).
pub fn solve_mom(s: &SampleData) -> Result<FitReport> {
    solve_mom_with(s, RatioVariant::default())
}

pub fn solve_mom_with(s: &SampleData, variant: RatioVariant) -> Result<FitReport> {
    let r_hat = ratio_stat(s, variant)?;
    let m1 = empirical_moments(s).m1;
    let mut warnings = Vec::new();
    let four_thirds = 4.0 / 3.0;

    let (branch, xs) = if r_hat >= 2.0 {
        warnings.push(format!(
            "r_hat = {r_hat} is at least 2, beyond the moment curve; solved g(x) = 2 - {CLAMP_EPS:e} instead"
        ));
        (Branch::Unique, vec![solve_curve(2.0 - CLAMP_EPS, 1e-9, MOM_ARGMIN)?])
    } else if r_hat > four_thirds {
        (Branch::Unique, vec![solve_curve(r_hat, 1e-9, MOM_ARGMIN)?])
    } else if r_hat >= MOM_MIN {
        if mom_curve(MOM_ARGMIN) >= r_hat {
            (Branch::AmbiguousTwoRoots, vec![MOM_ARGMIN, MOM_ARGMIN])
        } else {
            let left = solve_curve(r_hat, 1.0, MOM_ARGMIN)?;
            match solve_right_branch(r_hat) {
                Ok(right) => (Branch::AmbiguousTwoRoots, vec![left, right]),
                Err(_) => {
                    warnings.push(format!(
                        "r_hat = {r_hat} is at the 4/3 boundary; the second root is at infinity"
                    ));
                    (Branch::AmbiguousTwoRoots, vec![left])
                }
            }
        }
    } else {
        warnings.push(format!(
            "r_hat = {r_hat} is below the curve minimum {MOM_MIN:.4}; using x = {MOM_ARGMIN:.4}"
        ));
        (Branch::FallbackMin, vec![MOM_ARGMIN])
    };

    let candidates = xs.iter().map(|&x| candidate(x, m1)).collect::<Result<Vec<_>>>()?;
    let first = candidates[0];
    Ok(FitReport {
        a: first.params.a(),
        lambda: first.params.lambda(),
        x_product: first.x_product,
        r_hat,
        r_hat_variant: variant,
        branch,
        objective: None,
        warnings,
        candidates,
    })
}

fn retained(s: &SampleData, trim: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&trim) {
        return Err(domain(format!("trim fraction must lie in [0, 1), got {trim}")));
    }
    let n = s.n();
    let k = n - ((trim * n as f64).ceil() as usize).min(n);
    if k == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(k)
}

/// Least-squares criterion on the smallest `k` observations:
/// `Σᵢ (i/(n+1) − (xᵢ/a)(1 − e^{−λxᵢ}))²` with `n` the full sample size.
pub fn lsq_objective(s: &SampleData, p: &Params, trim: f64) -> Result<f64> {
    let k = retained(s, trim)?;
    Ok(objective_raw(s.values(), s.n(), k, p.a(), p.lambda()))
}

fn objective_raw(values: &[f64], n: usize, k: usize, a: f64, lambda: f64) -> f64 {
    let denom = n as f64 + 1.0;
    values[..k]
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let d = (i + 1) as f64 / denom - x / a * -(-lambda * x).exp_m1();
            d * d
        })
        .sum()
}

/// Trimmed least squares from `init`, keeping `a` at or above the largest
/// retained observation.
pub fn lsq_fit(s: &SampleData, init: &Params, trim: f64) -> Result<FitReport> {
    let k = retained(s, trim)?;
    let values = s.values();
    let n = s.n();
    let a_min = values[k - 1];
    let start = [init.a().max(a_min), init.lambda()];
    let bounds = [Interval::semi_infinite(a_min)?, Interval::semi_infinite(1e-12 * init.lambda())?];
    let f = |v: &[f64]| objective_raw(values, n, k, v[0], v[1]);
    let f_start = f(&start);
    let r_hat = ratio_stat(s, RatioVariant::default())?;

    let mut warnings = Vec::new();
    let (a, lambda, objective) = match minimize(f, &start, &bounds, 1e-14) {
        Ok(m) if m.converged && m.value <= f_start => (m.point[0], m.point[1], m.value),
        Ok(m) => {
            warnings.push(format!(
                "least squares did not converge after {} iterations; returning the initial point",
                m.iterations
            ));
            (start[0], start[1], f_start)
        }
        Err(e) => {
            warnings.push(format!("least squares failed ({e}); returning the initial point"));
            (start[0], start[1], f_start)
        }
    };
    Ok(FitReport {
        a,
        lambda,
        x_product: a * lambda,
        r_hat,
        r_hat_variant: RatioVariant::default(),
        branch: Branch::LsqRefined,
        objective: Some(objective),
        warnings,
        candidates: Vec::new(),
    })
}

/// Starting values from the histogram: `â` is the left edge of the first bin
/// after the peak whose height falls below half the previous bin, `λ̂` the
/// inverse mean exceedance over `â`.
pub fn histogram_init(s: &SampleData, bins: Option<usize>) -> Result<Params> {
    histogram_init_with(s, bins, DROP_FACTOR)
}

pub fn histogram_init_with(s: &SampleData, bins: Option<usize>, drop_factor: f64) -> Result<Params> {
    let n = s.n();
    if n < HISTOGRAM_MIN_N {
        return Err(Error::InsufficientData { needed: HISTOGRAM_MIN_N, got: n });
    }
    let bins = bins.unwrap_or_else(|| (n as f64).sqrt().ceil() as usize).max(2);
    let top = s.max();
    let width = top / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in s.values() {
        counts[((x / width) as usize).min(bins - 1)] += 1;
    }
    let peak = counts
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let a_hat = (peak + 1..bins)
        .find(|&j| (counts[j] as f64) < drop_factor * counts[j - 1] as f64)
        .map_or(top, |j| j as f64 * width);

    let exceed: Vec<f64> = s.values().iter().filter(|&&x| x > a_hat).map(|&x| x - a_hat).collect();
    let lambda_hat = if exceed.len() >= MIN_EXCEEDANCES {
        exceed.len() as f64 / exceed.iter().sum::<f64>()
    } else {
        1.0 / empirical_moments(s).m1
    };
    Params::new(a_hat, lambda_hat)
}

/// `P(Bin(n, p) ≤ max_exceed)`.
pub fn exceedance_confidence(n: u64, p_exceed: f64, max_exceed: u64) -> Result<f64> {
    if !(p_exceed > 0.0 && p_exceed < 1.0) {
        return Err(domain(format!("exceedance probability must lie in (0, 1), got {p_exceed}")));
    }
    let nf = n as f64;
    let ln_n = ln_gamma_unchecked(nf + 1.0);
    let total: f64 = (0..=max_exceed.min(n))
        .map(|i| {
            let fi = i as f64;
            (ln_n - ln_gamma_unchecked(fi + 1.0) - ln_gamma_unchecked(nf - fi + 1.0)
                + fi * p_exceed.ln()
                + (nf - fi) * (-p_exceed).ln_1p())
            .exp()
        })
        .sum();
    Ok(total.min(1.0))
}

/// Moments first; least squares settles the ambiguous and fallback cases.
pub fn fit_auto(s: &SampleData) -> Result<FitReport> {
    let mut mom = solve_mom(s)?;
    match mom.branch {
        Branch::Unique | Branch::LsqRefined => {
            mom.objective = Some(lsq_objective(s, &mom.params()?, DEFAULT_TRIM)?);
            Ok(mom)
        }
        Branch::AmbiguousTwoRoots => {
            let mut best: Option<(Candidate, f64)> = None;
            for c in &mom.candidates {
                let obj = lsq_objective(s, &c.params, DEFAULT_TRIM)?;
                mom.warnings.push(format!(
                    "candidate x = {:.6} (a = {:.6}, lambda = {:.6}) has objective {obj:.6e}",
                    c.x_product,
                    c.params.a(),
                    c.params.lambda()
                ));
                if best.map_or(true, |(_, b)| obj < b) {
                    best = Some((*c, obj));
                }
            }
            let (c, obj) = best.expect("at least one candidate");
            Ok(FitReport {
                a: c.params.a(),
                lambda: c.params.lambda(),
                x_product: c.x_product,
                branch: Branch::LsqRefined,
                objective: Some(obj),
                ..mom
            })
        }
        Branch::FallbackMin => {
            let init = match histogram_init(s, None) {
                Ok(p) => p,
                Err(e) => {
                    mom.warnings.push(format!("histogram start unavailable ({e}); starting from moments"));
                    mom.params()?
                }
            };
            let mut fit = lsq_fit(s, &init, DEFAULT_TRIM)?;
            fit.r_hat = mom.r_hat;
            let mut warnings = mom.warnings;
            warnings.append(&mut fit.warnings);
            fit.warnings = warnings;
            fit.candidates = mom.candidates;
            Ok(fit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(v: &[f64]) -> SampleData {
        SampleData::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(SampleData::new(vec![1.0]), Err(Error::InsufficientData { .. })));
        assert!(SampleData::new(vec![1.0, -2.0]).is_err());
        assert_eq!(sample(&[3.0, 1.0, 2.0]).values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn moments_arithmetic() {
        let m = empirical_moments(&sample(&[1.0, 3.0]));
        assert_eq!((m.m1, m.m2, m.mean_sq_unbiased), (2.0, 5.0, 3.0));
        let c = empirical_moments(&sample(&[2.5; 7]));
        assert!((c.m2 - 6.25).abs() < 1e-14 && (c.mean_sq_unbiased - 6.25).abs() < 1e-13);
    }

    #[test]
    fn unbiased_ratio_dominates_plain() {
        let s = sample(&[0.3, 1.1, 2.0, 0.7, 5.0]);
        assert!(ratio_stat(&s, RatioVariant::Unbiased).unwrap() >= ratio_stat(&s, RatioVariant::Plain).unwrap());
    }

    #[test]
    fn curve_values() {
        assert!((mom_curve(1.0) - 1.658_783).abs() < 1e-6);
        assert!((mom_curve(1e-4) - 2.0).abs() < 1e-3);
        assert!((mom_curve(1000.0) - 4.0 / 3.0).abs() < 1e-4);
        // Series and direct forms agree across the switch.
        let below = mom_curve(1e-3 * (1.0 - 1e-12));
        let x = 1e-3;
        let em1 = (-x as f64).exp_m1();
        let direct = x * (x * x * x / 3.0 - 2.0 * x - 2.0 * (x + 2.0) * em1) / (x * x / 2.0 - em1).powi(2);
        assert!((below - direct).abs() < 1e-12);
    }

    #[test]
    fn curve_constants_match_numerical_search() {
        let (x, g) = mom_curve_minimum().unwrap();
        assert!((x - MOM_ARGMIN).abs() < 1e-6, "{x}");
        assert!((g - MOM_MIN).abs() < 1e-12, "{g}");
        assert!((mom_curve_four_thirds().unwrap() - MOM_FOUR_THIRDS).abs() < 1e-12);
    }

    /// A sample whose unbiased ratio equals `r` exactly: two values `u < v`
    /// with `(u² + v²)/(2uv) = r`.
    fn sample_with_ratio(r: f64) -> SampleData {
        let t = r + (r * r - 1.0).sqrt();
        sample(&[1.0, t])
    }

    #[test]
    fn branch_selection() {
        let s = sample_with_ratio(1.5);
        let rep = solve_mom(&s).unwrap();
        assert!((rep.r_hat - 1.5).abs() < 1e-12);
        assert_eq!(rep.branch, Branch::Unique);
        assert!((mom_curve(rep.x_product) - rep.r_hat).abs() <= 1e-9);

        let rep = solve_mom(&sample_with_ratio(1.30)).unwrap();
        assert_eq!(rep.branch, Branch::AmbiguousTwoRoots);
        assert_eq!(rep.candidates.len(), 2);
        for c in &rep.candidates {
            assert!((mom_curve(c.x_product) - rep.r_hat).abs() <= 1e-9);
        }
        assert!(rep.candidates[0].x_product < MOM_ARGMIN && rep.candidates[1].x_product > MOM_ARGMIN);

        let rep = solve_mom(&sample_with_ratio(1.20)).unwrap();
        assert_eq!(rep.branch, Branch::FallbackMin);
        assert!((rep.x_product - 4.0232).abs() < 1e-4);
        assert!(!rep.warnings.is_empty());

        let rep = solve_mom(&sample_with_ratio(2.5)).unwrap();
        assert_eq!(rep.branch, Branch::Unique);
        assert!(rep.x_product > 0.0 && rep.x_product < 0.01);
        assert!(!rep.warnings.is_empty());
    }

    #[test]
    fn report_parameters_are_consistent() {
        let s = sample(&[0.2, 0.5, 0.9, 1.4, 2.2, 0.7]);
        let rep = solve_mom(&s).unwrap();
        assert!((rep.a * rep.lambda - rep.x_product).abs() < 1e-9);
        // λ solves the mean equation.
        let p = rep.params().unwrap();
        assert!((p.mean() - empirical_moments(&s).m1).abs() < 1e-12);
    }

    #[test]
    fn exceedance() {
        let v = exceedance_confidence(20, 0.11, 5).unwrap();
        assert!((v - 0.98).abs() < 0.005, "{v}");
        assert_eq!(exceedance_confidence(20, 0.3, 20).unwrap(), 1.0);
        assert!(exceedance_confidence(20, 1.0, 3).is_err());
    }

    #[test]
    fn histogram_needs_twenty_points() {
        let s = sample(&[1.0; 10]);
        assert!(matches!(histogram_init(&s, None), Err(Error::InsufficientData { needed: 20, got: 10 })));
    }

    #[test]
    fn lsq_never_worse_than_start() {
        let s = sample(&[0.1, 0.25, 0.3, 0.45, 0.6, 0.62, 0.8, 0.9, 1.5, 2.5]);
        let init = Params::new(2.0, 0.5).unwrap();
        let rep = lsq_fit(&s, &init, 0.25).unwrap();
        let start = Params::new(init.a().max(s.values()[6]), init.lambda()).unwrap();
        assert!(rep.objective.unwrap() <= lsq_objective(&s, &start, 0.25).unwrap());
        assert!(rep.a >= s.values()[6]);
        assert!(lsq_fit(&s, &init, 1.0).is_err());
    }
}
