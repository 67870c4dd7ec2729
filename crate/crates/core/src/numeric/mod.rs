//! Numeric kernels shared by every distribution: special functions, root
//! finding, minimization, quadrature and seeded random streams.

mod gamma;
mod interval;
mod optimize;
mod quad;
mod rng;
mod roots;

pub use gamma::{
    gamma, gamma_lower, gamma_lower_over_power, gamma_p, gamma_pq, gamma_q, gamma_upper, ln_gamma,
};
pub(crate) use gamma::ln_gamma_unchecked;
pub use interval::{Interval, Upper};
pub use optimize::{minimize, minimize_scalar, Minimum};
pub use quad::{integrate, integrate_with, QuadOptions, QuadResult};
pub use rng::RandomStream;
pub use roots::find_root;

/// `(1 − e^{−z}) / z`, accurate for small `z`.
pub(crate) fn one_minus_exp_over(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - z / 2.0 + z * z / 6.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 − e^{−z} − z e^{−z}) / z²`, with a series below `z = 1e-3` where the
/// direct form cancels catastrophically.
pub(crate) fn gamma2_over_square(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0 + z.powi(4) / 144.0
    } else {
        (-(-z).exp_m1() - z * (-z).exp()) / (z * z)
    }
}
