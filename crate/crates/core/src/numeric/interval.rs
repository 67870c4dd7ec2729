use crate::error::{domain, Result};

/// Upper end of an [`Interval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinite,
}

/// A real interval `[lo, hi]` or the half-line `[lo, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: Upper,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi: Upper::Finite(hi) })
    }

    pub fn semi_infinite(lo: f64) -> Result<Self> {
        if !lo.is_finite() {
            return Err(domain(format!("invalid lower bound {lo}")));
        }
        Ok(Self { lo, hi: Upper::Infinite })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn upper(&self) -> Upper {
        self.hi
    }

    /// Upper end as a float; `f64::INFINITY` for half-lines.
    pub fn hi(&self) -> f64 {
        match self.hi {
            Upper::Finite(h) => h,
            Upper::Infinite => f64::INFINITY,
        }
    }

    pub fn is_semi_infinite(&self) -> bool {
        matches!(self.hi, Upper::Infinite)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi()
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi())
    }
}
