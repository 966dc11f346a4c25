//! Active-set training loop and the two-stage successive-runnings protocol.
//!
//! Each round is a full epoch over all patterns in file order. Patterns that
//! trigger an update are collected, in discovery order, into a fresh active
//! set that is then cycled for up to `n_ep` mini-epochs, stopping early at
//! the first mini-epoch without an update. Training ends at the first full
//! epoch without an update, or gives up after `max_full_epochs`.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    b_from_gamma_up, f_est_l_best, f_est_t, gamma_up_t, BoundInputs, EstimateChoice,
};
use crate::dataset::TrainingSet;
use crate::engine::{margins, threshold, HyperParams, MarginSummary, ModelState, Variant};
use crate::error::{invalid, MargitronError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Shuffle the full-epoch order with this seed. Active sets keep
    /// discovery order.
    pub shuffle_seed: Option<u64>,
    /// Keep the index of every pattern that triggered an update.
    pub record_trace: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport<T> {
    /// Updates made; equals `ModelState::t`.
    pub t_c: u64,
    pub full_epochs: u64,
    pub mini_epochs: u64,
    /// `None` when the final weight vector is zero.
    pub margins: Option<MarginSummary<T>>,
    /// After-running lower estimate of `γ'_d/γ_d`, when one applies.
    pub f_est: Option<T>,
    /// Which `N` the ℓ-margitron estimate used.
    pub estimate_choice: Option<EstimateChoice>,
    /// Upper bound on `γ_d` implied by `t_c`.
    pub gamma_up: Option<T>,
    /// Seconds spent in the training loop.
    pub wall_time: f64,
    /// The last full epoch made no update.
    pub converged: bool,
    #[serde(skip)]
    pub trace: Option<Vec<usize>>,
}

/// Trains from `a_0 = 0` in file order.
pub fn train<T: Scalar>(set: &TrainingSet<T>, params: &HyperParams<T>) -> Result<(ModelState<T>, TrainReport<T>)> {
    train_with(set, params, &TrainOptions::default())
}

pub fn train_with<T: Scalar>(
    set: &TrainingSet<T>,
    params: &HyperParams<T>,
    opts: &TrainOptions,
) -> Result<(ModelState<T>, TrainReport<T>)> {
    params.validate()?;
    let start = Instant::now();
    let mut state = ModelState::new(set);
    let mut run = Run {
        set,
        params,
        state: &mut state,
        theta: T::zero(),
        trace: opts.record_trace.then(Vec::new),
    };

    let mut order: Vec<usize> = (0..set.n()).collect();
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);
    let mut active = Vec::new();
    let mut full_epochs = 0;
    let mut mini_epochs = 0;
    let mut converged = false;

    while full_epochs < params.max_full_epochs {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        active.clear();
        for &k in &order {
            if run.visit(k) {
                active.push(k);
            }
        }
        full_epochs += 1;
        if active.is_empty() {
            converged = true;
            break;
        }
        for _ in 0..params.n_ep {
            mini_epochs += 1;
            let mut updated = false;
            for &k in &active {
                updated |= run.visit(k);
            }
            if !updated {
                break;
            }
        }
    }
    let trace = run.trace.take();
    let wall_time = start.elapsed().as_secs_f64();

    // a = 0 is possible after an unconverged run
    let margins = margins(&state, set).ok();
    let mut report = TrainReport {
        t_c: state.t(),
        full_epochs,
        mini_epochs,
        margins,
        f_est: None,
        estimate_choice: None,
        gamma_up: None,
        wall_time,
        converged,
        trace,
    };
    if converged {
        let gamma_prime_d = margins.map(|m| m.directional_margin);
        fill_estimates(&mut report, set, params, gamma_prime_d)?;
    }
    Ok((state, report))
}

struct Run<'a, T> {
    set: &'a TrainingSet<T>,
    params: &'a HyperParams<T>,
    state: &'a mut ModelState<T>,
    /// Threshold for the current state, refreshed after every update.
    theta: T,
    trace: Option<Vec<usize>>,
}

impl<T: Scalar> Run<'_, T> {
    /// Tests pattern `k` and updates on a mistake.
    #[inline]
    fn visit(&mut self, k: usize) -> bool {
        let dot = self.state.inner_product_unchecked(k, self.set);
        if dot > self.theta {
            return false;
        }
        self.state.apply_update(k, self.set, dot);
        self.theta = threshold(self.params, self.state);
        if let Some(trace) = self.trace.as_mut() {
            trace.push(k);
        }
        true
    }
}

fn fill_estimates<T: Scalar>(
    report: &mut TrainReport<T>,
    set: &TrainingSet<T>,
    params: &HyperParams<T>,
    gamma_prime_d: Option<T>,
) -> Result<()> {
    let one = T::one();
    let eps = params.epsilon;
    let inputs = BoundInputs::new(eps, params.b, set.radius())?.with_t_c(report.t_c)?;
    match params.variant {
        // At ε = 1 both variants share the t-margitron formulas.
        _ if eps == one => {
            report.f_est = Some(f_est_t(&inputs)?);
            report.gamma_up = Some(gamma_up_t(&inputs)?);
        }
        Variant::T => {
            if eps < one {
                report.f_est = Some(f_est_t(&inputs)?);
            }
            report.gamma_up = Some(gamma_up_t(&inputs)?);
        }
        Variant::L => {
            if let (true, Some(gp)) = (eps < one, gamma_prime_d) {
                if gp > T::zero() {
                    let (f, choice) = f_est_l_best(&inputs.with_gamma_prime_d(gp)?)?;
                    report.f_est = Some(f);
                    report.estimate_choice = Some(choice);
                }
            }
        }
    }
    Ok(())
}

/// Stage-1 `b/R²` of the successive-runnings protocol.
pub const PROTOCOL_STAGE1_B_OVER_R_SQ: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolConfig<T> {
    /// Stage-2 `ε`, in `(0, 1)`.
    pub epsilon2: T,
    pub n_ep: u32,
    pub max_full_epochs: u64,
    /// Variant for both stages. The ℓ-margitron is the standard choice;
    /// the t-margitron may struggle for `ε2 < 1/2`.
    pub variant: Variant,
}

impl<T: Scalar> ProtocolConfig<T> {
    pub fn new(epsilon2: T) -> Self {
        Self {
            epsilon2,
            n_ep: crate::engine::DEFAULT_MINI_EPOCHS,
            max_full_epochs: crate::engine::DEFAULT_MAX_FULL_EPOCHS,
            variant: Variant::L,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage1Report<T> {
    pub b: T,
    pub report: TrainReport<T>,
    /// `R sqrt(11/t_c)`, before capping at `R`.
    pub gamma_up_raw: T,
    /// `min(γ_up, R)`, fed to stage 2.
    pub gamma_up: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage2Report<T> {
    pub epsilon: T,
    pub b: T,
    pub report: TrainReport<T>,
    pub f_est: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolReport<T> {
    pub radius: T,
    pub stage1: Stage1Report<T>,
    pub stage2: Stage2Report<T>,
    pub margins: Option<MarginSummary<T>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Two-stage protocol: an `ε = 1` run with `b = 5R²` bounds `γ_d` from
/// above, and that bound fixes `b` for a run at `ε2`.
///
/// `γ_d <= R` always holds, so an upper bound above `R` (fewer than 11
/// stage-1 updates) is replaced by `R`.
pub fn successive_runnings<T: Scalar>(
    set: &TrainingSet<T>,
    config: &ProtocolConfig<T>,
) -> Result<(ModelState<T>, ProtocolReport<T>)> {
    let one = T::one();
    if !(config.epsilon2 > T::zero() && config.epsilon2 < one) {
        return Err(invalid(
            "epsilon2",
            format!("must lie in (0, 1), got {}", config.epsilon2),
        ));
    }
    let radius = set.radius();
    let b1 = T::lit(PROTOCOL_STAGE1_B_OVER_R_SQ) * radius * radius;
    let mut warnings = Vec::new();
    if config.variant == Variant::T && config.epsilon2 < T::lit(0.5) {
        warnings.push(format!(
            "t-margitron protocol with epsilon2 = {} < 0.5 may need very many updates",
            config.epsilon2
        ));
    }
    let p1 = HyperParams::new(config.variant, one, b1)?
        .with_mini_epochs(config.n_ep)
        .with_max_full_epochs(config.max_full_epochs);
    let (_, r1) = train(set, &p1)?;
    if !r1.converged {
        return Err(MargitronError::ProtocolNotConverged {
            stage: 1,
            epochs: r1.full_epochs,
        });
    }
    let gamma_up_raw = r1.gamma_up.expect("converged ε = 1 run reports γ_up");
    let gamma_up = gamma_up_raw.min(radius);

    let b2 = b_from_gamma_up(config.epsilon2, gamma_up, radius)?;
    let p2 = HyperParams::new(config.variant, config.epsilon2, b2)?
        .with_mini_epochs(config.n_ep)
        .with_max_full_epochs(config.max_full_epochs);
    let (state, r2) = train(set, &p2)?;
    let report = ProtocolReport {
        radius,
        margins: r2.margins,
        converged: r2.converged,
        warnings,
        stage1: Stage1Report {
            b: b1,
            report: r1,
            gamma_up_raw,
            gamma_up,
        },
        stage2: Stage2Report {
            epsilon: config.epsilon2,
            b: b2,
            f_est: r2.f_est,
            report: r2,
        },
    };
    Ok((state, report))
}
