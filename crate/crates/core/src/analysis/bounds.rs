use serde::Serialize;

use super::{check_epsilon, check_positive, int_part, lemma1_root, BoundInputs};
use crate::engine::Variant;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

#[inline]
fn lit<T: Scalar>(v: f64) -> T {
    T::lit(v)
}

/// `2 / (2 - ε)`
#[inline]
fn two_over<T: Scalar>(epsilon: T) -> T {
    lit::<T>(2.0) / (lit::<T>(2.0) - epsilon)
}

fn require_eps_le_one<T: Scalar>(epsilon: T) -> Result<()> {
    check_epsilon(epsilon, T::one(), true)
}

fn check_gamma<T: Scalar>(name: &'static str, gamma: T, radius: T) -> Result<()> {
    check_positive(name, gamma)?;
    check_positive("radius", radius)?;
    if gamma > radius {
        return Err(invalid(
            name,
            format!("{gamma} exceeds the radius {radius}"),
        ));
    }
    Ok(())
}

/// Upper bound on the number of updates of the t-margitron.
///
/// For `0 < ε <= 1`: `R²/(ε γ_d²) + ((2/(2-ε)) b/γ_d²)^(1/ε)`.
/// For `1 < ε < 2` the `1/ε` factor on the first term drops.
pub fn tc_bound_t<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let gamma = inputs.require_gamma_d()?;
    let eps = inputs.epsilon;
    let gamma_sq = gamma * gamma;
    let r2g = inputs.radius * inputs.radius / gamma_sq;
    let tail = (two_over(eps) * inputs.b / gamma_sq).powf(eps.recip());
    if eps <= T::one() {
        Ok(r2g / eps + tail)
    } else {
        Ok(r2g + tail)
    }
}

/// Upper bound on the number of updates of the ℓ-margitron.
///
/// For `0 < ε <= 1`: `x (ln x)^(1-ε)` with `x = A/ε + B^(1/ε)`,
/// `A = (2 + ε - 2[ε]) R²/γ_d²` and `B = (1+ε) b/γ_d^(1+ε)`.
/// For `1 < ε < 2`: `R²/γ_d² + ((2/(2-ε)) b/γ_d^(1+ε))^(1/ε)`.
///
/// The `ε < 1` branch does not tend to the `ε = 1` value: its first term
/// approaches `3 R²/γ_d²` instead of `R²/γ_d²`.
pub fn tc_bound_l<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let gamma = inputs.require_gamma_d()?;
    let eps = inputs.epsilon;
    let one = T::one();
    let r2g = inputs.radius * inputs.radius / (gamma * gamma);
    let gamma_pow = gamma.powf(one + eps);
    if eps <= one {
        let a = (lit::<T>(2.0) + eps - lit::<T>(2.0) * int_part(eps)) * r2g;
        let b = (one + eps) * inputs.b / gamma_pow;
        let x = a / eps + b.powf(eps.recip());
        assert!(x > one, "log argument {x} must exceed 1 when gamma_d <= R");
        Ok(x * x.ln().powf(one - eps))
    } else {
        Ok(r2g + (two_over(eps) * inputs.b / gamma_pow).powf(eps.recip()))
    }
}

/// Before-running guarantee of the t-margitron,
/// `f >= (R²/b + 2/(2-ε))^(-1)`, for `0 < ε <= 1`.
pub fn f_lower_t<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    require_eps_le_one(inputs.epsilon)?;
    let r_sq = inputs.radius * inputs.radius;
    Ok((r_sq / inputs.b + two_over(inputs.epsilon)).recip())
}

/// After-running estimate of the t-margitron,
/// `f_est = ((R²/b) t_c^(ε-1) + 2/(2-ε))^(-1)`, for `0 < ε <= 1`.
pub fn f_est_t<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    require_eps_le_one(inputs.epsilon)?;
    let t_c = inputs.require_t_c()?;
    let eps = inputs.epsilon;
    let r_sq = inputs.radius * inputs.radius;
    Ok((r_sq / inputs.b * t_c.powf(eps - T::one()) + two_over(eps)).recip())
}

/// Stronger, `γ_d`-dependent guarantee of the t-margitron, obtained by
/// evaluating the fraction bound at the exact root `t_b` of
/// `t^ε - (R²/γ_d²) t^(ε-1) - (2/(2-ε)) b/γ_d²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StrongFraction<T> {
    pub fraction: T,
    pub t_b: T,
    /// Location of the maximum of the fraction bound in `t`. The bound
    /// applies when `t_c >= t_star`. `None` at `ε = 1`.
    pub t_star: Option<T>,
    /// `ε >= 1/2`: `t_c >= t_star` holds for every run.
    pub auto_satisfied: bool,
    /// `b/R² >= (γ_d/R)(1 + (2/(2-ε)) γ_d/R)`, sufficient for
    /// `t_c >= t_star` when `ε < 1/2`.
    pub sufficient_condition: bool,
}

pub fn f_lower_t_strong<T: Scalar>(inputs: &BoundInputs<T>) -> Result<StrongFraction<T>> {
    require_eps_le_one(inputs.epsilon)?;
    let gamma = inputs.require_gamma_d()?;
    let eps = inputs.epsilon;
    let one = T::one();
    let r = inputs.radius;
    let r_sq = r * r;
    let alpha = r_sq / (gamma * gamma);
    let beta = two_over(eps) * inputs.b / (gamma * gamma);
    let t_b = lemma1_root(eps, alpha, beta)?.t_b;
    let fraction = (r_sq / inputs.b * t_b.powf(eps - one) + two_over(eps)).recip();

    let t_star = if eps == one {
        None
    } else {
        let c = one - lit::<T>(2.0) * eps;
        if c == T::zero() {
            Some(T::zero())
        } else {
            let base = c.abs() * (lit::<T>(2.0) - eps) / (lit::<T>(2.0) * eps) * r_sq / inputs.b;
            Some(base.powf((one - eps).recip()) * c.signum())
        }
    };
    let g_over_r = gamma / r;
    Ok(StrongFraction {
        fraction,
        t_b,
        t_star,
        auto_satisfied: eps >= lit(0.5),
        sufficient_condition: inputs.b / r_sq >= g_over_r * (one + two_over(eps) * g_over_r),
    })
}

/// Upper bound on `γ_d` implied by the observed update count of the
/// t-margitron: `R sqrt(1/t_c + (2/(2-ε)) (b/R²) t_c^(-ε))`.
pub fn gamma_up_t<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    let t_c = inputs.require_t_c()?;
    let eps = inputs.epsilon;
    let r = inputs.radius;
    let inner = t_c.recip() + two_over(eps) * (inputs.b / (r * r)) * t_c.powf(-eps);
    Ok(r * inner.sqrt())
}

/// A chosen margin parameter together with the fraction of `γ_d` it
/// guarantees before running.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BSelection<T> {
    pub delta: T,
    pub omega: Option<T>,
    pub b: T,
    pub guaranteed_fraction: T,
    /// Largest admissible `δ`, where the rule has one.
    pub delta_ceiling: Option<T>,
    /// Whether `δ` respects `delta_ceiling`. Only reported, never enforced.
    pub delta_constraint_met: Option<bool>,
}

/// `b` for the t-margitron:
/// `b/R² = (1 - ε/2)^(1-ε) δ^(-ε) (γ_d²/R²)^(1-ε)`, guaranteeing
/// `f >= (δ + 2/(2-ε))^(-1)`.
///
/// For `ε < 1/2` the guarantee additionally needs
/// `δ <= (1-ε/2)^((1-ε)/ε) (γ_d/R)^(1/ε - 2) (1 + (2/(2-ε)) γ_d/R)^(-1/ε)`,
/// which is reported in the result.
pub fn select_b_t<T: Scalar>(epsilon: T, delta: T, gamma_d: T, radius: T) -> Result<BSelection<T>> {
    require_eps_le_one(epsilon)?;
    check_positive("delta", delta)?;
    check_gamma("gamma_d", gamma_d, radius)?;
    let one = T::one();
    let half_eps = one - epsilon / lit(2.0);
    let g_over_r = gamma_d / radius;
    let b = radius
        * radius
        * half_eps.powf(one - epsilon)
        * delta.powf(-epsilon)
        * (g_over_r * g_over_r).powf(one - epsilon);
    let (delta_ceiling, delta_constraint_met) = if epsilon < lit(0.5) {
        let ceiling = half_eps.powf((one - epsilon) / epsilon)
            * g_over_r.powf(epsilon.recip() - lit(2.0))
            * (one + two_over(epsilon) * g_over_r).powf(-epsilon.recip());
        (Some(ceiling), Some(delta <= ceiling))
    } else {
        (None, None)
    };
    Ok(BSelection {
        delta,
        omega: None,
        b,
        guaranteed_fraction: (delta + two_over(epsilon)).recip(),
        delta_ceiling,
        delta_constraint_met,
    })
}

/// Before-running guarantee of the ℓ-margitron for `0 < ε <= 1`:
/// `f >= { (1+ε)^(2ε-[ε]) / (2ε)^ε · R^(1+ε)/b + 1 + ε }^(-1)`.
pub fn f_lower_l<T: Scalar>(inputs: &BoundInputs<T>) -> Result<T> {
    require_eps_le_one(inputs.epsilon)?;
    let eps = inputs.epsilon;
    let one = T::one();
    let two = lit::<T>(2.0);
    let coeff = (one + eps).powf(two * eps - int_part(eps)) / (two * eps).powf(eps);
    let scale = inputs.radius.powf(one + eps) / inputs.b;
    Ok((coeff * scale + one + eps).recip())
}

/// Which admissibility constraint an `N` satisfies in the ℓ-margitron
/// after-running estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NConstraint {
    /// `t_c >= N >= ((1+ε)/2) (R/γ'_d)^(1-ε)`
    LowerBound,
    /// `t_c >= N ((1 - ε/N)/(1 - ε))^(1/ε)`
    Growth,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EstimateChoice {
    /// Always-admissible choice, `N = 1`.
    pub n_low: u64,
    /// `floor((R/γ'_d)^(1-ε) / 2) + 1`.
    pub n_opt: u64,
    pub n_opt_admissible: bool,
    pub chosen: u64,
    pub constraint_satisfied: NConstraint,
}

fn check_l_estimate_inputs<T: Scalar>(inputs: &BoundInputs<T>) -> Result<(T, T)> {
    check_epsilon(inputs.epsilon, T::one(), false)?;
    Ok((inputs.require_t_c()?, inputs.require_gamma_prime_d()?))
}

/// Which constraint, if any, `n` satisfies.
pub fn n_constraint<T: Scalar>(inputs: &BoundInputs<T>, n: u64) -> Result<Option<NConstraint>> {
    let (t_c, gp) = check_l_estimate_inputs(inputs)?;
    if n == 0 {
        return Ok(None);
    }
    let eps = inputs.epsilon;
    let one = T::one();
    let nn = T::from_count(n);
    let lower = (one + eps) / lit(2.0) * (inputs.radius / gp).powf(one - eps);
    let c1 = t_c >= nn && nn >= lower;
    let c2 = t_c >= nn * ((one - eps / nn) / (one - eps)).powf(eps.recip());
    Ok(match (c1, c2) {
        (true, true) => Some(NConstraint::Both),
        (true, false) => Some(NConstraint::LowerBound),
        (false, true) => Some(NConstraint::Growth),
        (false, false) => None,
    })
}

/// After-running estimate of the ℓ-margitron for `0 < ε < 1` at a given
/// `N`:
///
/// ```text
/// f_est = { R^(1+ε)/b · ( N^(1+ε) + (1+ε)/(2ε) (R/γ'_d)^(1-ε)
///                          · (t_c^ε - (N-ε)/N^(1-ε)) ) / t_c + 1 + ε }^(-1)
/// ```
///
/// The estimate is only a valid lower bound on `γ'_d/γ_d` when `N`
/// satisfies one of the constraints of [`n_constraint`]; this function does
/// not check that.
pub fn f_est_l<T: Scalar>(inputs: &BoundInputs<T>, n: u64) -> Result<T> {
    let (t_c, gp) = check_l_estimate_inputs(inputs)?;
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let eps = inputs.epsilon;
    let one = T::one();
    let nn = T::from_count(n);
    let ratio = inputs.radius / gp;
    let inner = nn.powf(one + eps)
        + (one + eps) / (lit::<T>(2.0) * eps)
            * ratio.powf(one - eps)
            * (t_c.powf(eps) - (nn - eps) / nn.powf(one - eps));
    let scale = inputs.radius.powf(one + eps) / inputs.b;
    Ok((scale * inner / t_c + one + eps).recip())
}

/// Evaluates the ℓ-margitron estimate at `N = 1` and, when admissible, at
/// the near-optimal `N_opt`, and keeps the larger.
pub fn f_est_l_best<T: Scalar>(inputs: &BoundInputs<T>) -> Result<(T, EstimateChoice)> {
    let (_, gp) = check_l_estimate_inputs(inputs)?;
    let eps = inputs.epsilon;
    let half_pow = (inputs.radius / gp).powf(T::one() - eps) / lit(2.0);
    let n_opt = half_pow.floor().to_u64().unwrap_or(u64::MAX - 1).saturating_add(1);

    let base_constraint = n_constraint(inputs, 1)?.unwrap_or(NConstraint::Growth);
    let base = f_est_l(inputs, 1)?;
    let opt_constraint = n_constraint(inputs, n_opt)?;

    let mut choice = EstimateChoice {
        n_low: 1,
        n_opt,
        n_opt_admissible: opt_constraint.is_some(),
        chosen: 1,
        constraint_satisfied: base_constraint,
    };
    let mut best = base;
    if let Some(c) = opt_constraint {
        let at_opt = f_est_l(inputs, n_opt)?;
        if at_opt > best {
            best = at_opt;
            choice.chosen = n_opt;
            choice.constraint_satisfied = c;
        }
    }
    Ok((best, choice))
}

/// `b` for the ℓ-margitron:
/// `b/R^(1+ε) = (1+ε)^(3ε-1-[ε]) / (2εδ)^ε · (γ_d/R)^(1-ε)`, guaranteeing
/// `f >= (δ + 1 + ε)^(-1)`.
pub fn select_b_l<T: Scalar>(epsilon: T, delta: T, gamma_d: T, radius: T) -> Result<BSelection<T>> {
    require_eps_le_one(epsilon)?;
    check_positive("delta", delta)?;
    check_gamma("gamma_d", gamma_d, radius)?;
    let one = T::one();
    let b = radius.powf(one + epsilon) * l_coefficient(epsilon) * delta.powf(-epsilon)
        * (gamma_d / radius).powf(one - epsilon);
    Ok(BSelection {
        delta,
        omega: None,
        b,
        guaranteed_fraction: (delta + one + epsilon).recip(),
        delta_ceiling: None,
        delta_constraint_met: None,
    })
}

/// `(1+ε)^(3ε-1-[ε]) / (2ε)^ε`
fn l_coefficient<T: Scalar>(epsilon: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    (one + epsilon).powf(lit::<T>(3.0) * epsilon - one - int_part(epsilon)) / (two * epsilon).powf(epsilon)
}

/// Largest `ε` accepted by [`select_b_small_eps`].
pub const SMALL_EPSILON_MAX: f64 = 0.2;

/// Refined `b` for the ℓ-margitron at small `ε`:
/// `b/R^(1+ε) = ω^ε (γ_d/R)^(1-ε)` with
///
/// ```text
/// k = (1-ε)(1+1/e)(2+ε)(1+ε)^((ε-1)/ε)
/// ω = (k/δ) ln( (k/δ) e^(1/(1-ε)) R²/γ_d² )
/// ```
///
/// valid for `0 < δ <= e^(-1)(1+1/e)(2+ε) R²/γ_d²`. Guarantees
/// `f > (δ + 1 + ε)^(-1)`.
pub fn select_b_small_eps<T: Scalar>(
    epsilon: T,
    delta: T,
    gamma_d: T,
    radius: T,
) -> Result<BSelection<T>> {
    check_epsilon(epsilon, lit(SMALL_EPSILON_MAX), true)?;
    check_positive("delta", delta)?;
    check_gamma("gamma_d", gamma_d, radius)?;
    let one = T::one();
    let e_inv = (-one).exp();
    let r2g = (radius / gamma_d).powi(2);
    let ceiling = e_inv * (one + e_inv) * (lit::<T>(2.0) + epsilon) * r2g;
    if delta > ceiling {
        return Err(invalid(
            "delta",
            format!("must not exceed {ceiling} for this epsilon and gamma_d, got {delta}"),
        ));
    }
    let k = (one - epsilon)
        * (one + e_inv)
        * (lit::<T>(2.0) + epsilon)
        * (one + epsilon).powf((epsilon - one) / epsilon);
    let x = k / delta * (one - epsilon).recip().exp() * r2g;
    if !(x > one) {
        return Err(invalid(
            "delta",
            format!("log argument {x} is not above 1; no admissible b"),
        ));
    }
    let omega = k / delta * x.ln();
    let b = radius.powf(one + epsilon) * omega.powf(epsilon) * (gamma_d / radius).powf(one - epsilon);
    Ok(BSelection {
        delta,
        omega: Some(omega),
        b,
        guaranteed_fraction: (delta + one + epsilon).recip(),
        delta_ceiling: Some(ceiling),
        delta_constraint_met: Some(true),
    })
}

/// ℓ-margitron `b` with `δ = (γ_d/γ_up)^((1-ε)/ε)`, which removes the
/// dependence on the unknown `γ_d`:
/// `b = R^(1+ε) (1+ε)^(3ε-1-[ε]) / (2ε)^ε · (γ_up/R)^(1-ε)`.
///
/// Accepts `0 < ε <= 1`; at `ε = 1` the result is `R²` for any `γ_up`.
pub fn b_from_gamma_up<T: Scalar>(epsilon: T, gamma_up: T, radius: T) -> Result<T> {
    require_eps_le_one(epsilon)?;
    check_gamma("gamma_up", gamma_up, radius)?;
    let one = T::one();
    Ok(radius.powf(one + epsilon) * l_coefficient(epsilon) * (gamma_up / radius).powf(one - epsilon))
}

/// Large-`b` limit of the guaranteed fraction: `1 - ε/2` for the
/// t-margitron and for either variant when `ε > 1`; `(1+ε)^(-1)` for the
/// ℓ-margitron when `ε <= 1`.
pub fn fraction_asymptote<T: Scalar>(variant: Variant, epsilon: T) -> T {
    let one = T::one();
    match variant {
        Variant::L if epsilon <= one => (one + epsilon).recip(),
        _ => one - epsilon / lit(2.0),
    }
}
