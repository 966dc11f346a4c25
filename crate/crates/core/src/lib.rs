//! Margitron: a family of perceptron-style large-margin linear classifiers.
//!
//! Every member shares the classical perceptron update `a <- a + y_k` and
//! differs only in its misclassification threshold:
//!
//! - the *t-margitron* tests `a·y_k <= b t^(1-ε)` (t = number of updates),
//! - the *ℓ-margitron* tests `a·y_k <= b ‖a‖^(1-ε)`.
//!
//! At `ε = 1` both reduce to the Perceptron with margin. Smaller `ε` buys a
//! larger guaranteed fraction of the maximum directional margin.
//!
//! The crate is organised as
//!
//! - [`dataset`]: svmlight parsing and the reflected/augmented/extended
//!   training-set view,
//! - [`engine`]: weight-vector state, thresholds, updates, margins,
//! - [`analysis`]: closed-form bounds, estimates, parameter selection,
//!   lemma checks and a brute-force maximum-margin oracle,
//! - [`trainer`]: the active-set training loop and the two-stage
//!   successive-runnings protocol.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The
//! `*F64` / `*F32` aliases below fix the scalar type.

pub mod analysis;
pub mod dataset;
pub mod engine;
mod error;
mod scalar;
pub mod trainer;

pub use error::{MargitronError, Result};
pub use scalar::Scalar;

pub use analysis::{BSelection, BoundInputs, EstimateChoice, OracleMode, OracleOutcome};
pub use dataset::{Label, ParseOptions, SparsePattern, SparseVector, TrainingSet};
pub use engine::{HyperParams, MarginSummary, ModelState, Predictor, SetMeta, Variant};
pub use trainer::{ProtocolConfig, ProtocolReport, TrainOptions, TrainReport};

pub type SparseVectorF64 = SparseVector<f64>;
pub type SparsePatternF64 = SparsePattern<f64>;
pub type TrainingSetF64 = TrainingSet<f64>;
pub type HyperParamsF64 = HyperParams<f64>;
pub type ModelStateF64 = ModelState<f64>;
pub type MarginSummaryF64 = MarginSummary<f64>;
pub type TrainReportF64 = TrainReport<f64>;
pub type BoundInputsF64 = BoundInputs<f64>;

pub type SparseVectorF32 = SparseVector<f32>;
pub type SparsePatternF32 = SparsePattern<f32>;
pub type TrainingSetF32 = TrainingSet<f32>;
pub type HyperParamsF32 = HyperParams<f32>;
pub type ModelStateF32 = ModelState<f32>;
pub type MarginSummaryF32 = MarginSummary<f32>;
pub type TrainReportF32 = TrainReport<f32>;
pub type BoundInputsF32 = BoundInputs<f32>;
