//! Augmented weight vector, misclassification thresholds and the
//! perceptron update.
//!
//! The weight vector `a_t` lives in the same reflected/augmented/extended
//! space as the patterns. It is kept in three parts:
//!
//! - `w`: dense base-feature weights, `Σ s_k x_k` over updates,
//! - `signed_updates`: `Σ s_k` over updates, so the augmented coordinate of
//!   `a_t` is `ρ · signed_updates`,
//! - `counts[k]`: updates triggered by pattern `k`, so the extension
//!   coordinate of slot `k` is `s_k · Δ · counts[k]`.

use serde::Serialize;

use crate::dataset::{Label, SparseVector, TrainingSet};
use crate::error::{invalid, MargitronError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    /// Threshold `b t^(1-ε)`.
    #[serde(rename = "t")]
    T,
    /// Threshold `b ‖a_t‖^(1-ε)`.
    #[serde(rename = "l")]
    L,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::T => f.write_str("t"),
            Variant::L => f.write_str("l"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = MargitronError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "T" => Ok(Variant::T),
            "l" | "L" | "ℓ" => Ok(Variant::L),
            other => Err(invalid("variant", format!("expected `t` or `l`, got `{other}`"))),
        }
    }
}

pub const DEFAULT_MAX_FULL_EPOCHS: u64 = 100_000;
pub const DEFAULT_MINI_EPOCHS: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HyperParams<T> {
    pub variant: Variant,
    pub epsilon: T,
    pub b: T,
    /// Mini-epochs over each active set.
    pub n_ep: u32,
    /// Safety cap on full epochs.
    pub max_full_epochs: u64,
}

impl<T: Scalar> HyperParams<T> {
    pub fn new(variant: Variant, epsilon: T, b: T) -> Result<Self> {
        let params = Self {
            variant,
            epsilon,
            b,
            n_ep: DEFAULT_MINI_EPOCHS,
            max_full_epochs: DEFAULT_MAX_FULL_EPOCHS,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mini_epochs(mut self, n_ep: u32) -> Self {
        self.n_ep = n_ep;
        self
    }

    pub fn with_max_full_epochs(mut self, max: u64) -> Self {
        self.max_full_epochs = max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let two = T::lit(2.0);
        if !(self.epsilon > T::zero() && self.epsilon < two) {
            return Err(invalid(
                "epsilon",
                format!("must lie in (0, 2), got {}", self.epsilon),
            ));
        }
        if !(self.b > T::zero()) || !self.b.is_finite() {
            return Err(invalid("b", format!("must be positive and finite, got {}", self.b)));
        }
        if self.n_ep == 0 {
            return Err(invalid("n_ep", "must be at least 1"));
        }
        if self.max_full_epochs == 0 {
            return Err(invalid("max_full_epochs", "must be at least 1"));
        }
        Ok(())
    }
}

/// Geometry needed to score unseen points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SetMeta<T> {
    pub rho: T,
    pub delta: T,
    pub base_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState<T> {
    w: Vec<T>,
    signed_updates: i64,
    counts: Vec<u64>,
    t: u64,
    norm_sq: T,
}

impl<T: Scalar> ModelState<T> {
    /// `a_0 = 0` for the given set.
    pub fn new(set: &TrainingSet<T>) -> Self {
        Self {
            w: vec![T::zero(); set.base_dim()],
            signed_updates: 0,
            counts: vec![0; set.n()],
            t: 0,
            norm_sq: T::zero(),
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Incrementally maintained `‖a_t‖²`.
    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    pub fn signed_updates(&self) -> i64 {
        self.signed_updates
    }

    /// Augmented coordinate of `a_t`: `ρ · Σ s_k`.
    pub fn aug_component(&self, rho: T) -> T {
        rho * T::from_i64(self.signed_updates).unwrap()
    }

    /// `‖W‖²`: base weights plus extension coordinates, i.e. `‖a_t‖²`
    /// without the augmented coordinate.
    pub fn weight_norm_sq(&self, set: &TrainingSet<T>) -> T {
        let base = self.w.iter().fold(T::zero(), |acc, &v| acc + v * v);
        let delta_sq = set.delta() * set.delta();
        let ext = self.counts.iter().fold(T::zero(), |acc, &c| {
            let c = T::from_count(c);
            acc + c * c
        });
        base + delta_sq * ext
    }

    /// `‖a_t‖²` recomputed from the components.
    pub fn recompute_norm_sq(&self, set: &TrainingSet<T>) -> T {
        let aug = self.aug_component(set.rho());
        self.weight_norm_sq(set) + aug * aug
    }

    /// `a_t · y_k`.
    pub fn inner_product(&self, k: usize, set: &TrainingSet<T>) -> Result<T> {
        if k >= set.n() {
            return Err(MargitronError::IndexOutOfRange { index: k, n: set.n() });
        }
        Ok(self.inner_product_unchecked(k, set))
    }

    #[inline]
    pub(crate) fn inner_product_unchecked(&self, k: usize, set: &TrainingSet<T>) -> T {
        let p = set.pattern(k);
        let rho = set.rho();
        let delta = set.delta();
        let base = p.features.dot_dense(&self.w) + rho * self.aug_component(rho);
        p.label.sign::<T>() * base + delta * delta * T::from_count(self.counts[k])
    }

    /// `a_{t+1} = a_t + y_k`, with `dot = a_t · y_k` already computed.
    pub fn apply_update(&mut self, k: usize, set: &TrainingSet<T>, dot: T) {
        let p = set.pattern(k);
        let s = p.label.sign::<T>();
        for (i, v) in p.features.iter() {
            self.w[i] += s * v;
        }
        self.signed_updates += p.label.as_i64();
        self.counts[k] += 1;
        self.t += 1;
        self.norm_sq += set.y_norm_sq(k) + T::lit(2.0) * dot;
    }

    pub fn predictor(&self, meta: SetMeta<T>) -> Predictor<'_, T> {
        Predictor {
            weights: &self.w,
            rho: meta.rho,
            aug_component: self.aug_component(meta.rho),
        }
    }
}

/// Misclassification threshold for the current state: zero before the
/// first update, then `b t^(1-ε)` or `b ‖a_t‖^(1-ε)`.
pub fn threshold<T: Scalar>(params: &HyperParams<T>, state: &ModelState<T>) -> T {
    if state.t == 0 {
        return T::zero();
    }
    let power = T::one() - params.epsilon;
    match params.variant {
        Variant::T => params.b * T::from_count(state.t).powf(power),
        Variant::L => params.b * state.norm_sq.sqrt().powf(power),
    }
}

/// `a_t · y_k <= threshold`; equality counts as a mistake.
pub fn is_misclassified<T: Scalar>(
    params: &HyperParams<T>,
    state: &ModelState<T>,
    k: usize,
    set: &TrainingSet<T>,
) -> Result<bool> {
    Ok(state.inner_product(k, set)? <= threshold(params, state))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginSummary<T> {
    /// `min_k a·y_k`
    pub min_functional: T,
    /// `min_k a·y_k / ‖a‖`
    pub directional_margin: T,
    /// `min_k a·y_k / ‖W‖`, the margin of the hyperplane `W·x + bias = 0`
    /// in the non-augmented space; `None` when `W = 0`.
    pub geometric_margin: Option<T>,
}

/// Achieved margins of the current weight vector. Norms come from the
/// components rather than the incremental `‖a‖²`. Fails when `a = 0`.
pub fn margins<T: Scalar>(state: &ModelState<T>, set: &TrainingSet<T>) -> Result<MarginSummary<T>> {
    if state.t == 0 {
        return Err(MargitronError::ZeroWeight);
    }
    let min_functional = (0..set.n())
        .map(|k| state.inner_product_unchecked(k, set))
        .fold(T::infinity(), T::min);
    let w_sq = state.weight_norm_sq(set);
    let aug = state.aug_component(set.rho());
    let a_norm = (w_sq + aug * aug).sqrt();
    let w_norm = w_sq.sqrt();
    if !(a_norm > T::zero()) {
        return Err(MargitronError::ZeroWeight);
    }
    Ok(MarginSummary {
        min_functional,
        directional_margin: min_functional / a_norm,
        geometric_margin: (w_norm > T::zero()).then(|| min_functional / w_norm),
    })
}

/// Scores unseen points with `w·x + ρ·A`, where `A` is the augmented
/// coordinate of the weight vector. Unseen points have no extension
/// coordinates and features past the trained dimension are ignored.
#[derive(Clone, Copy, Debug)]
pub struct Predictor<'a, T> {
    pub weights: &'a [T],
    pub rho: T,
    pub aug_component: T,
}

impl<T: Scalar> Predictor<'_, T> {
    pub fn score(&self, x: &SparseVector<T>) -> T {
        x.dot_dense(self.weights) + self.rho * self.aug_component
    }

    pub fn predict(&self, x: &SparseVector<T>) -> Label {
        Label::of_score(self.score(x))
    }
}

/// Predicted label of a raw feature vector; a zero score maps to `+1`.
pub fn predict<T: Scalar>(state: &ModelState<T>, meta: SetMeta<T>, x: &SparseVector<T>) -> Label {
    state.predictor(meta).predict(x)
}
