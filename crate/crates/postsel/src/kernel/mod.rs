//! Scalar numeric kernel: standard normal functions, adaptive quadrature,
//! and bracketed root finding. Everything here is a pure function of its
//! inputs and safe to call from any thread.

pub mod normal;
pub mod quad;
pub mod root;

pub use quad::{integrate, QuadratureSpec};
pub use root::{find_root, RootBracket};

use crate::error::{Error, Result};

/// A probability, guaranteed to lie in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            return Err(Error::Domain(format!(
                "probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(Self(p))
    }

    /// Like [`Probability::new`] but excludes the endpoints.
    pub fn interior(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "probability must lie strictly inside (0, 1), got {p}"
            )));
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
