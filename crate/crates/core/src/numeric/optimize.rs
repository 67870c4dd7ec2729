//! Derivative-free minimization: box-constrained Nelder–Mead for vectors,
//! Brent's parabolic/golden-section search for scalars.

use super::Interval;
use crate::error::{domain, Error, Result};

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITER: usize = 5000;

fn project(x: &mut [f64], bounds: &[Interval]) {
    for (xi, b) in x.iter_mut().zip(bounds) {
        *xi = b.clamp(*xi);
    }
}

/// Minimizes `f` from `start` with a Nelder–Mead simplex.
///
/// Bounds are enforced by clamping every trial vertex into the box. The
/// algorithm is deterministic given `start`, and the returned value never
/// exceeds `f(start)`. `tol` bounds both the spread of objective values and
/// the simplex diameter at termination.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    bounds: &[Interval],
    tol: f64,
) -> Result<Minimum> {
    let n = start.len();
    if n == 0 {
        return Err(domain("minimize needs at least one coordinate"));
    }
    if bounds.len() != n {
        return Err(domain(format!("{} bounds given for {} coordinates", bounds.len(), n)));
    }
    let mut x0 = start.to_vec();
    project(&mut x0, bounds);
    let f0 = f(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite { at: x0[0], value: f0 });
    }

    let eval = |f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), f0));
    for i in 0..n {
        let mut v = x0.clone();
        let step = if v[i].abs() > 1e-8 { 0.1 * v[i].abs() } else { 2.5e-4 };
        v[i] += step;
        if v[i] > bounds[i].hi() {
            v[i] = x0[i] - step;
        }
        project(&mut v, bounds);
        let fv = eval(&mut f, &v);
        simplex.push((v, fv));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[n].1 - simplex[0].1).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + simplex[0].1.abs()) && diameter <= tol.sqrt() * 1e-2 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64, to: &[f64]| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(to).map(|(c, w)| c + t * (w - c)).collect();
            project(&mut p, bounds);
            p
        };

        let worst = simplex[n].0.clone();
        let xr = along(-alpha, &worst);
        let fr = eval(&mut f, &xr);
        if fr < simplex[0].1 {
            let xe = along(-gamma, &worst);
            let fe = eval(&mut f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(-rho, &worst);
            let fc = eval(&mut f, &xc);
            (xc, fc)
        } else {
            let xc = along(rho, &worst);
            let fc = eval(&mut f, &xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&best) {
                *x = b + sigma * (*x - b);
            }
            project(v, bounds);
            *fv = eval(&mut f, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    Ok(Minimum { point, value, iterations, converged })
}

/// Minimizes a unimodal scalar function on a finite interval with Brent's
/// method. Returns `(argmin, min)`.
pub fn minimize_scalar(mut f: impl FnMut(f64) -> f64, iv: Interval, tol: f64) -> Result<(f64, f64)> {
    if iv.is_semi_infinite() {
        return Err(domain("scalar minimization needs a finite interval"));
    }
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (iv.lo(), iv.hi());
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    if !fx.is_finite() {
        return Err(Error::NonFinite { at: x, value: fx });
    }
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0_f64, 0.0_f64);
    for _ in 0..MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Convergence { what: "minimize_scalar".into(), iterations: MAX_ITER })
}
