//! Closed-form convergence bounds, margin-fraction guarantees and
//! estimates, rules for choosing `b`, numeric checks of the supporting
//! inequalities, and a brute-force maximum directional margin oracle.
//!
//! Symbols follow the usual notation: `R` is the radius of the data,
//! `γ_d` the maximum directional margin, `t_c` the number of updates at
//! convergence and `γ'_d` the directional margin actually achieved.

mod bounds;
mod lemmas;
mod oracle;

pub use bounds::*;
pub use lemmas::*;
pub use oracle::*;

use serde::Serialize;

use crate::error::{invalid, MargitronError, Result};
use crate::scalar::Scalar;

/// Every quantity a bound or estimate may need. Only `epsilon`, `b` and
/// `radius` are mandatory; formulas that need one of the optional symbols
/// report it as missing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundInputs<T> {
    pub epsilon: T,
    pub b: T,
    pub radius: T,
    pub gamma_d: Option<T>,
    pub t_c: Option<u64>,
    pub gamma_prime_d: Option<T>,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn new(epsilon: T, b: T, radius: T) -> Result<Self> {
        let inputs = Self {
            epsilon,
            b,
            radius,
            gamma_d: None,
            t_c: None,
            gamma_prime_d: None,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn with_gamma_d(mut self, gamma_d: T) -> Result<Self> {
        self.gamma_d = Some(gamma_d);
        self.validate()?;
        Ok(self)
    }

    pub fn with_t_c(mut self, t_c: u64) -> Result<Self> {
        self.t_c = Some(t_c);
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma_prime_d(mut self, gamma_prime_d: T) -> Result<Self> {
        self.gamma_prime_d = Some(gamma_prime_d);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon, T::lit(2.0), false)?;
        check_positive("b", self.b)?;
        check_positive("radius", self.radius)?;
        if let Some(g) = self.gamma_d {
            check_positive("gamma_d", g)?;
            if g > self.radius {
                return Err(invalid(
                    "gamma_d",
                    format!("maximum directional margin {g} exceeds the radius {}", self.radius),
                ));
            }
        }
        if let Some(g) = self.gamma_prime_d {
            check_positive("gamma_prime_d", g)?;
        }
        if self.t_c == Some(0) {
            return Err(invalid("t_c", "must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn require_gamma_d(&self) -> Result<T> {
        self.gamma_d.ok_or(MargitronError::MissingInput("gamma_d"))
    }

    pub(crate) fn require_t_c(&self) -> Result<T> {
        self.t_c
            .map(T::from_count)
            .ok_or(MargitronError::MissingInput("t_c"))
    }

    pub(crate) fn require_gamma_prime_d(&self) -> Result<T> {
        self.gamma_prime_d
            .ok_or(MargitronError::MissingInput("gamma_prime_d"))
    }
}

pub(crate) fn check_positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// `0 < ε < upper`, or `0 < ε <= upper` when `inclusive`.
pub(crate) fn check_epsilon<T: Scalar>(epsilon: T, upper: T, inclusive: bool) -> Result<()> {
    let ok = epsilon > T::zero() && if inclusive { epsilon <= upper } else { epsilon < upper };
    if ok {
        Ok(())
    } else {
        let close = if inclusive { ']' } else { ')' };
        Err(invalid(
            "epsilon",
            format!("must lie in (0, {upper}{close}, got {epsilon}"),
        ))
    }
}

/// Integer part `[ε]`.
#[inline]
pub fn int_part<T: Scalar>(epsilon: T) -> T {
    epsilon.floor()
}
