//! JSON report shapes. The schemas in `docs/` describe these.

use anyhow::{anyhow, Result};
use margitron::analysis::{
    f_est_l_best, f_est_t, f_lower_l, f_lower_t, f_lower_t_strong, fraction_asymptote, gamma_up_t,
    select_b_l, select_b_small_eps, select_b_t, tc_bound_l, tc_bound_t, BSelection, BoundInputs,
};
use margitron::engine::Variant;
use margitron::trainer::{ProtocolReport, TrainReport};
use margitron::{HyperParams, MargitronError, TrainingSet};
use serde::Serialize;

use crate::{EstimateArgs, ProtocolArgs, SelectRule, TrainArgs};

pub const SCHEMA_VERSION: u32 = 1;

/// One bound or estimate: a value, or why there is none.
#[derive(Debug, Serialize)]
pub struct Formula {
    pub id: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Input symbol the formula needs but was not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missing: Option<&'static str>,
    /// The formula does not apply to these inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub not_applicable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl Formula {
    fn from_result(id: &'static str, r: margitron::Result<f64>) -> Self {
        let mut f = Formula {
            id,
            value: None,
            missing: None,
            not_applicable: None,
            detail: None,
        };
        match r {
            Ok(v) if v.is_finite() => f.value = Some(v),
            Ok(v) => f.not_applicable = Some(format!("value {v} is not finite")),
            Err(MargitronError::MissingInput(sym)) => f.missing = Some(sym),
            Err(e) => f.not_applicable = Some(e.to_string()),
        }
        f
    }

    fn with_detail(mut self, detail: impl Serialize) -> Self {
        if self.value.is_some() {
            self.detail = serde_json::to_value(detail).ok();
        }
        self
    }
}

fn before_running(inputs: &BoundInputs<f64>, variant: Variant) -> Vec<Formula> {
    let mut out = vec![match variant {
        Variant::T => Formula::from_result("f_lower_t", f_lower_t(inputs)),
        Variant::L => Formula::from_result("f_lower_l", f_lower_l(inputs)),
    }];
    out.push(Formula::from_result(
        match variant {
            Variant::T => "fraction_asymptote_t",
            Variant::L => "fraction_asymptote_l",
        },
        Ok(fraction_asymptote(variant, inputs.epsilon)),
    ));
    out
}

#[derive(Debug, Serialize)]
pub struct TrainOutput<'a> {
    pub schema_version: u32,
    pub command: &'static str,
    pub data: String,
    pub variant: Variant,
    pub epsilon: f64,
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_over_r: Option<f64>,
    pub rho: f64,
    pub delta: f64,
    pub n: usize,
    pub base_dim: usize,
    pub radius: f64,
    pub n_ep: u32,
    pub max_full_epochs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
    #[serde(flatten)]
    pub report: &'a TrainReport<f64>,
    pub bounds: Vec<Formula>,
}

impl<'a> TrainOutput<'a> {
    pub fn new(args: &TrainArgs, set: &TrainingSet<f64>, params: &HyperParams<f64>, report: &'a TrainReport<f64>) -> Self {
        let bounds = match BoundInputs::new(params.epsilon, params.b, set.radius()) {
            Ok(inputs) => before_running(&inputs, params.variant),
            Err(_) => Vec::new(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            command: "train",
            data: args.data.data.display().to_string(),
            variant: params.variant,
            epsilon: params.epsilon,
            b: params.b,
            b_over_r: args.b_over_r,
            rho: set.rho(),
            delta: set.delta(),
            n: set.n(),
            base_dim: set.base_dim(),
            radius: set.radius(),
            n_ep: params.n_ep,
            max_full_epochs: params.max_full_epochs,
            shuffle_seed: args.shuffle,
            report,
            bounds,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateOutput {
    pub schema_version: u32,
    pub command: &'static str,
    pub inputs: BoundInputs<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<Selection>,
    pub results: Vec<Formula>,
}

#[derive(Debug, Serialize)]
pub struct Selection {
    pub rule: &'static str,
    #[serde(flatten)]
    pub choice: BSelection<f64>,
}

impl EstimateOutput {
    pub fn compute(args: &EstimateArgs) -> Result<Self> {
        let selection = match args.select_b {
            None => None,
            Some(rule) => {
                let gamma_d = args
                    .gamma_d
                    .ok_or_else(|| anyhow!("--select-b needs the missing symbol gamma_d (--gamma-d)"))?;
                let delta = args.delta.ok_or_else(|| anyhow!("--select-b needs --delta"))?;
                let (name, choice) = match rule {
                    SelectRule::T => ("select_b_t", select_b_t(args.epsilon, delta, gamma_d, args.radius)?),
                    SelectRule::L => ("select_b_l", select_b_l(args.epsilon, delta, gamma_d, args.radius)?),
                    SelectRule::SmallEps => (
                        "select_b_small_eps",
                        select_b_small_eps(args.epsilon, delta, gamma_d, args.radius)?,
                    ),
                };
                Some(Selection { rule: name, choice })
            }
        };
        let b = match (args.b, &selection) {
            (Some(b), _) => b,
            (None, Some(s)) => s.choice.b,
            (None, None) => return Err(anyhow!("missing symbol b: pass --b or --select-b")),
        };
        let mut inputs = BoundInputs::new(args.epsilon, b, args.radius)?;
        if let Some(g) = args.gamma_d {
            inputs = inputs.with_gamma_d(g)?;
        }
        if let Some(t) = args.t_c {
            inputs = inputs.with_t_c(t)?;
        }
        if let Some(g) = args.gamma_prime_d {
            inputs = inputs.with_gamma_prime_d(g)?;
        }

        let strong = f_lower_t_strong(&inputs);
        let strong_detail = strong.as_ref().ok().copied();
        let l_est = f_est_l_best(&inputs);
        let l_choice = l_est.as_ref().ok().map(|(_, c)| *c);
        let results = vec![
            Formula::from_result("tc_bound_t", tc_bound_t(&inputs)),
            Formula::from_result("tc_bound_l", tc_bound_l(&inputs)),
            Formula::from_result("f_lower_t", f_lower_t(&inputs)),
            Formula::from_result("f_lower_t_strong", strong.map(|s| s.fraction)).with_detail(strong_detail),
            Formula::from_result("f_lower_l", f_lower_l(&inputs)),
            Formula::from_result("f_est_t", f_est_t(&inputs)),
            Formula::from_result("f_est_l", l_est.map(|(f, _)| f)).with_detail(l_choice),
            Formula::from_result("gamma_up_t", gamma_up_t(&inputs)),
            Formula::from_result("fraction_asymptote_t", Ok(fraction_asymptote(Variant::T, args.epsilon))),
            Formula::from_result("fraction_asymptote_l", Ok(fraction_asymptote(Variant::L, args.epsilon))),
        ];
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            command: "estimate",
            inputs,
            selection,
            results,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ProtocolOutput<'a> {
    pub schema_version: u32,
    pub command: &'static str,
    pub data: String,
    pub variant: Variant,
    pub rho: f64,
    pub delta: f64,
    pub n: usize,
    pub base_dim: usize,
    pub n_ep: u32,
    pub max_full_epochs: u64,
    #[serde(flatten)]
    pub report: &'a ProtocolReport<f64>,
}

impl<'a> ProtocolOutput<'a> {
    pub fn new(args: &ProtocolArgs, set: &TrainingSet<f64>, report: &'a ProtocolReport<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: "protocol",
            data: args.data.data.display().to_string(),
            variant: args.variant.into(),
            rho: set.rho(),
            delta: set.delta(),
            n: set.n(),
            base_dim: set.base_dim(),
            n_ep: args.miniepochs,
            max_full_epochs: args.max_epochs,
            report,
        }
    }
}
