//! Goodness-of-fit statistics: Kolmogorov–Smirnov (one and two sample) and
//! Pearson's chi-square.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::numeric::gamma_q;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom, for chi-square tests.
    pub dof: Option<usize>,
}

impl GofResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Asymptotic Kolmogorov survival function `Q(x) = 2 Σ (−1)^{k−1} e^{−2k²x²}`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 * sum.abs() {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `p`-value for a KS distance `d` with effective sample size `n`, using
/// Stephens' small-sample correction.
fn ks_p_value(d: f64, n: f64) -> f64 {
    let sq = n.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test from the model CDF evaluated at the sorted sample.
pub fn ks_from_cdf_values(cdf_at_sorted: &[f64]) -> Result<GofResult> {
    let n = cdf_at_sorted.len();
    if n == 0 {
        return Err(domain("KS test needs at least one observation"));
    }
    let nf = n as f64;
    let d = cdf_at_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / nf - f).max(f - i as f64 / nf))
        .fold(0.0, f64::max);
    Ok(GofResult { statistic: d, p_value: ks_p_value(d, nf), dof: None })
}

/// One-sample KS test of `data` against `cdf`.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofResult> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<f64> = sorted.iter().map(|&x| cdf(x)).collect();
    ks_from_cdf_values(&values)
}

/// Two-sample KS test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<GofResult> {
    if x.is_empty() || y.is_empty() {
        return Err(domain("two-sample KS test needs non-empty samples"));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    Ok(GofResult { statistic: d, p_value: ks_p_value(d, nx * ny / (nx + ny)), dof: None })
}

/// Merges adjacent cells until every expected count reaches `min_expected`.
pub fn pool_cells(observed: &[f64], expected: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
            *lo += o_acc;
            *le += e_acc;
        } else {
            obs.push(o_acc);
            exp.push(e_acc);
        }
    }
    (obs, exp)
}

/// Pearson chi-square test with `k − 1 − fitted` degrees of freedom.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> Result<GofResult> {
    if observed.len() != expected.len() {
        return Err(domain("observed and expected cell counts differ in length"));
    }
    if observed.len() < fitted + 2 {
        return Err(domain(format!("{} cells leave no degrees of freedom", observed.len())));
    }
    if expected.iter().any(|&e| !(e > 0.0)) {
        return Err(domain("expected cell counts must be positive"));
    }
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = observed.len() - 1 - fitted;
    let p = gamma_q(dof as f64 / 2.0, stat / 2.0)?;
    Ok(GofResult { statistic: stat, p_value: p, dof: Some(dof) })
}

/// Chi-square test of several conditional distributions at once. Each group
/// is pooled separately and contributes `cells − 1` degrees of freedom.
pub fn chi_square_grouped(groups: &[(Vec<f64>, Vec<f64>)], min_expected: f64) -> Result<GofResult> {
    let (mut stat, mut dof) = (0.0, 0usize);
    for (observed, expected) in groups {
        let (o, e) = pool_cells(observed, expected, min_expected);
        if o.len() < 2 {
            continue;
        }
        stat += o.iter().zip(&e).map(|(o, e)| (o - e) * (o - e) / e).sum::<f64>();
        dof += o.len() - 1;
    }
    if dof == 0 {
        return Err(domain("no group has two cells after pooling"));
    }
    let p = gamma_q(dof as f64 / 2.0, stat / 2.0)?;
    Ok(GofResult { statistic: stat, p_value: p, dof: Some(dof) })
}
