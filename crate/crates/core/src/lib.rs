//! The Max-U-Exp distribution family and the mixed Poisson process with a
//! Max-U-Exp mixing variable.
//!
//! * [`maxuexp`]: the mixing law `ξ = max(U(0, a), Exp(λ))`.
//! * [`waiting_times`]: inter-arrival (`η/ξ`) and arrival-time (`Γ(n,1)/ξ`) laws.
//! * [`mixed_poisson`]: counts `N(t) = N₁(ξ μ(t))`, their finite-dimensional
//!   laws and path simulation.
//! * [`estimation`]: method of moments, trimmed least squares and the
//!   automatic pipeline combining them.
//! * [`verify`]: quadrature / Monte Carlo oracles and the formula ledger.

pub mod error;
pub mod estimation;
pub mod maxuexp;
pub mod mixed_poisson;
pub mod numeric;
pub mod verify;
pub mod waiting_times;

pub use error::{Error, Result};
pub use maxuexp::Params;
pub use numeric::RandomStream;
