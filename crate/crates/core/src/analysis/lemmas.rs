use serde::Serialize;

use super::{check_epsilon, check_positive, int_part};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub const BISECTION_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Root<T> {
    pub t_b: T,
    /// Analytic bracket `[lo, hi]` the root was searched in.
    pub bracket: (T, T),
    pub iterations: usize,
}

/// `g(t) = t^ε - α t^(ε-1) - β`
#[inline]
pub fn lemma1_g<T: Scalar>(t: T, epsilon: T, alpha: T, beta: T) -> T {
    t.powf(epsilon) - alpha * t.powf(epsilon - T::one()) - beta
}

/// Unique root on `[1, ∞)` of `g(t) = t^ε - α t^(ε-1) - β`
/// (`ε > 0`, `α >= 1`, `β > 0`).
///
/// The root lies between `α + β^(1/ε)` and `α/ε + β^(1/ε)` (the order of the
/// two depends on whether `ε <= 1`), and `g` changes sign exactly once
/// there, so plain bisection on that bracket converges unconditionally.
/// Bisection runs until the interval stops shrinking in floating point or
/// [`BISECTION_MAX_ITER`] halvings, whichever comes first.
pub fn lemma1_root<T: Scalar>(epsilon: T, alpha: T, beta: T) -> Result<Lemma1Root<T>> {
    check_positive("epsilon", epsilon)?;
    check_positive("beta", beta)?;
    if !(alpha >= T::one()) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("must be at least 1, got {alpha}")));
    }
    let tail = beta.powf(epsilon.recip());
    let (p, q) = (alpha + tail, alpha / epsilon + tail);
    let (mut lo, mut hi) = if epsilon <= T::one() { (p, q) } else { (q, p) };
    let bracket = (lo, hi);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid("beta", "root bracket overflows"));
    }
    let g = |t: T| lemma1_g(t, epsilon, alpha, beta);

    let mut iterations = 0;
    while iterations < BISECTION_MAX_ITER {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if g(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t_b = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(Lemma1Root {
        t_b,
        bracket,
        iterations,
    })
}

/// Both sides of an inequality `lhs <= rhs` (or `lhs > rhs` for
/// [`lemma4_check`]) evaluated at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

/// Slack for `lhs <= rhs` when both sides are differences of terms of
/// magnitude `scale`: a few dozen rounding errors.
fn rounding_slack<T: Scalar>(scale: T) -> T {
    T::lit(64.0) * T::epsilon() * scale
}

/// `x^(1+ε)/(1+ε) - y^(1+ε)/(1+ε) <= (x² - y²) / (2 y^(1-ε))` for
/// `x, y > 0`, `-1 < ε <= 1`.
pub fn lemma2_check<T: Scalar>(x: T, y: T, epsilon: T) -> Result<InequalityCheck<T>> {
    check_positive("x", x)?;
    check_positive("y", y)?;
    if !(epsilon > -T::one() && epsilon <= T::one()) {
        return Err(invalid("epsilon", format!("must lie in (-1, 1], got {epsilon}")));
    }
    let one = T::one();
    let p = one + epsilon;
    let (xp, yp) = (x.powf(p) / p, y.powf(p) / p);
    let denom = T::lit(2.0) * y.powf(one - epsilon);
    let (xs, ys) = (x * x / denom, y * y / denom);
    let lhs = xp - yp;
    let rhs = xs - ys;
    let scale = xp + yp + xs + ys;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + rounding_slack(scale),
    })
}

/// `(t^ε - 1)/ε <= t^ε (ln t)^(1-ε) - [ε]` for `t >= 1`, `0 < ε <= 1`.
pub fn lemma3_check<T: Scalar>(t: T, epsilon: T) -> Result<InequalityCheck<T>> {
    check_epsilon(epsilon, T::one(), true)?;
    if !(t >= T::one()) || !t.is_finite() {
        return Err(invalid("t", format!("must be at least 1, got {t}")));
    }
    let one = T::one();
    let te = t.powf(epsilon);
    let lhs = (te - one) / epsilon;
    let head = te * t.ln().powf(one - epsilon);
    let rhs = head - int_part(epsilon);
    let scale = (te + one) / epsilon + head + one;
    Ok(InequalityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + rounding_slack(scale),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma4Check<T> {
    /// `t_0 = x (ln x)^(1-ε)` with `x = α/ε + β^(1/ε)`, `α = α1 + α2`.
    pub t0: T,
    /// `t_0^ε`
    pub lhs: T,
    /// `α1 (ln t_0 / t_0)^(1-ε) + α2/t_0 + β`
    pub rhs: T,
    /// `g(t_0) = lhs - rhs`
    pub g_t0: T,
    pub holds: bool,
}

/// `g(t_0) > 0` for
/// `g(t) = t^ε - (α1 (ln t / t)^(1-ε) + α2/t) - β`,
/// with `0 < ε < 1`, `α1, α2, β > 0`, `α1 + α2 >= 2 + ε`.
pub fn lemma4_check<T: Scalar>(epsilon: T, alpha1: T, alpha2: T, beta: T) -> Result<Lemma4Check<T>> {
    check_epsilon(epsilon, T::one(), false)?;
    check_positive("alpha1", alpha1)?;
    check_positive("alpha2", alpha2)?;
    check_positive("beta", beta)?;
    let one = T::one();
    let alpha = alpha1 + alpha2;
    if alpha < T::lit(2.0) + epsilon {
        return Err(invalid(
            "alpha1 + alpha2",
            format!("must be at least 2 + epsilon, got {alpha}"),
        ));
    }
    let x = alpha / epsilon + beta.powf(epsilon.recip());
    let t0 = x * x.ln().powf(one - epsilon);
    let lhs = t0.powf(epsilon);
    let rhs = alpha1 * (t0.ln() / t0).powf(one - epsilon) + alpha2 / t0 + beta;
    Ok(Lemma4Check {
        t0,
        lhs,
        rhs,
        g_t0: lhs - rhs,
        holds: lhs > rhs,
    })
}
