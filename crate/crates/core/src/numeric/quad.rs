//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Half-lines `[lo, ∞)` are mapped onto `[0, 1)` with `x = lo + u/(1−u)`.
//! Breakpoints split the range before any adaptation starts; every density in
//! this crate jumps at its uniform endpoint `a`, so callers pass `a` there.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Interval;
use crate::error::{domain, Error, Result};

/// Result of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error, never negative.
    pub err_estimate: f64,
    pub evaluations: usize,
}

/// Tolerances and limits for [`integrate_with`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl QuadOptions {
    pub fn new(tol: f64) -> Self {
        Self { abs_tol: tol, rel_tol: tol, max_segments: 4000 }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// One Gauss–Kronrod 15-point panel with the QUADPACK error heuristic.
fn gk15(f: &mut dyn FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

/// Integrates `f` over `iv` to tolerance `tol` (absolute and relative).
pub fn integrate(f: impl FnMut(f64) -> f64, iv: Interval, tol: f64) -> Result<QuadResult> {
    integrate_with(f, iv, &[], QuadOptions::new(tol))
}

/// Integrates `f` over `iv`, splitting first at `breakpoints` that fall
/// strictly inside the interval.
pub fn integrate_with(
    mut f: impl FnMut(f64) -> f64,
    iv: Interval,
    breakpoints: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(opts.abs_tol >= 0.0 && opts.rel_tol >= 0.0) {
        return Err(domain("quadrature tolerances must be non-negative"));
    }
    let lo = iv.lo();
    let infinite = iv.is_semi_infinite();
    let mut evaluations = 0usize;
    // Integrand in the working variable, with the location reported in x.
    let mut g = |u: f64| -> Result<f64> {
        evaluations += 1;
        let (x, jac) = if infinite {
            let w = 1.0 - u;
            (lo + u / w, 1.0 / (w * w))
        } else {
            (u, 1.0)
        };
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite { at: x, value: v });
        }
        Ok(if jac.is_finite() { v * jac } else { 0.0 })
    };

    let to_u = |x: f64| if infinite { (x - lo) / (1.0 + x - lo) } else { x };
    let (u_lo, u_hi) = if infinite { (0.0, 1.0) } else { (lo, iv.hi()) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .filter(|&&b| b > lo && b < iv.hi())
        .map(|&b| to_u(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![u_lo];
    edges.extend(cuts);
    edges.push(u_hi);

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in edges.windows(2) {
        let (value, err) = gk15(&mut g, w[0], w[1])?;
        total += value;
        total_err += err;
        heap.push(Segment { lo: w[0], hi: w[1], value, err });
    }

    while total_err > opts.abs_tol.max(opts.rel_tol * total.abs()) && heap.len() < opts.max_segments {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut g, worst.lo, mid)?;
        let (v2, e2) = gk15(&mut g, mid, worst.hi)?;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { lo: worst.lo, hi: mid, value: v1, err: e1 });
        heap.push(Segment { lo: mid, hi: worst.hi, value: v2, err: e2 });
    }
    // Re-sum to shed drift from the incremental updates.
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let err_estimate: f64 = heap.iter().map(|s| s.err).sum();
    Ok(QuadResult { value, err_estimate: err_estimate.max(0.0), evaluations })
}
