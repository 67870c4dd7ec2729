//! Verification harness: oracle checks for every closed form, plus a ledger
//! comparing printed formulas against corrected ones.
//!
//! Three tolerance tiers are used. Deterministic checks compare against
//! quadrature or series at `quad` (scaled per check when the oracle itself is
//! less accurate), Monte Carlo checks use `mc_sigmas` standard errors, and
//! goodness-of-fit tests use significance `alpha`.

pub mod checks;
pub mod gof;
pub mod ledger;

use serde::Serialize;

pub use checks::{run_checks, CheckOutcome};
pub use ledger::{run_ledger, DiscrepancyRecord, Verdict};

/// Environment variable overriding [`Tolerances::quad`].
pub const TOL_ENV: &str = "MPMUE_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub quad: f64,
    pub mc_sigmas: f64,
    pub alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quad: 1e-8, mc_sigmas: 4.0, alpha: 0.01 }
    }
}

impl Tolerances {
    /// Defaults, with `quad` taken from `MPMUE_TOL` when it parses as a
    /// non-negative number. Setting it to zero makes every deterministic
    /// check fail, and also zeroes the Monte Carlo and significance gates.
    pub fn from_env() -> Self {
        let mut t = Self::default();
        if let Some(v) = std::env::var(TOL_ENV).ok().and_then(|s| s.trim().parse::<f64>().ok()) {
            if v >= 0.0 {
                t.quad = v;
                if v == 0.0 {
                    t.mc_sigmas = 0.0;
                    t.alpha = 1.0;
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub tolerances: Tolerances,
    pub checks: Vec<CheckOutcome>,
    pub ledger: Vec<DiscrepancyRecord>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Runs every check and builds the ledger.
pub fn run_all(tol: &Tolerances) -> VerifyReport {
    let (checks, ledger) = rayon::join(|| run_checks(tol), run_ledger);
    VerifyReport { tolerances: *tol, checks, ledger }
}
