mod common;

use margitron::analysis::{gamma_d_oracle, tc_bound_l, tc_bound_t, BoundInputs, OracleMode};
use margitron::dataset::{parse_svmlight_str, write_svmlight, ParseOptions};
use margitron::engine::{margins, threshold, HyperParams, ModelState, Variant};
use margitron::trainer::{train, train_with, TrainOptions};
use margitron::{Label, SparsePattern, SparseVector, TrainingSet};
use proptest::prelude::*;
use rand::Rng;

fn arb_pattern(max_dim: usize) -> impl Strategy<Value = (bool, Vec<(usize, f64)>)> {
    (
        any::<bool>(),
        proptest::collection::btree_map(0..max_dim, -1e3f64..1e3, 0..8),
    )
        .prop_map(|(pos, m)| (pos, m.into_iter().filter(|(_, v)| *v != 0.0).collect()))
}

fn build(rows: &[(bool, Vec<(usize, f64)>)]) -> Vec<SparsePattern<f64>> {
    rows.iter()
        .enumerate()
        .map(|(id, (pos, f))| {
            let label = if *pos { Label::Positive } else { Label::Negative };
            SparsePattern::new(id, label, SparseVector::from_pairs(f).unwrap())
        })
        .collect()
}

proptest! {
    #[test]
    fn svmlight_round_trip(rows in proptest::collection::vec(arb_pattern(40), 1..20), zero_based: bool) {
        let patterns = build(&rows);
        let mut buf = Vec::new();
        write_svmlight(&patterns, &mut buf, zero_based).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let opts = ParseOptions { zero_based, ..Default::default() };
        let back = parse_svmlight_str::<f64>(&text, opts).unwrap();
        prop_assert_eq!(back.len(), patterns.len());
        for (a, b) in patterns.iter().zip(&back) {
            prop_assert_eq!(a.label, b.label);
            prop_assert_eq!(&a.features, &b.features);
        }
    }

    #[test]
    fn radius_covers_every_pattern(
        rows in proptest::collection::vec(arb_pattern(10), 1..20),
        rho in 0.1f64..10.0,
        delta in 0.0f64..3.0,
    ) {
        let set = TrainingSet::new(build(&rows), rho, delta).unwrap();
        let r = set.radius();
        let mut hit = false;
        for k in 0..set.n() {
            let y_sq = set.pattern(k).base_norm_sq + rho * rho + delta * delta;
            prop_assert!((set.y_norm_sq(k) - y_sq).abs() <= 1e-12 * y_sq);
            prop_assert!(y_sq.sqrt() <= r * (1.0 + 1e-12));
            hit |= (y_sq.sqrt() - r).abs() <= 1e-12 * r;
        }
        prop_assert!(hit);
    }

    #[test]
    fn extension_floor_on_margin(seed: u64, n in 1usize..8, delta in 0.2f64..2.0) {
        let mut rng = common::rng(seed);
        let set = common::noisy(&mut rng, n, 2, 1.0, delta);
        let g = gamma_d_oracle(&set, OracleMode::Enumeration).unwrap().gamma_d().unwrap();
        prop_assert!(g >= delta / (n as f64).sqrt() * (1.0 - 1e-9));
    }

    #[test]
    fn training_is_deterministic(seed: u64, eps in 0.3f64..1.5, use_l: bool) {
        let mut rng = common::rng(seed);
        let set = common::separable(&mut rng, 30, 3, 0.05, 1.0);
        let variant = if use_l { Variant::L } else { Variant::T };
        let params = HyperParams::new(variant, eps, set.radius()).unwrap();
        let opts = TrainOptions { record_trace: true, ..Default::default() };
        let (a, ra) = train_with(&set, &params, &opts).unwrap();
        let (b, rb) = train_with(&set, &params, &opts).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ra.trace, rb.trace);
        prop_assert_eq!(ra.margins, rb.margins);
        prop_assert_eq!(ra.f_est, rb.f_est);
    }

    #[test]
    fn weight_norm_grows_at_least_linearly(seed: u64, eps in 0.3f64..1.0, use_l: bool) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(3..12);
        let set = common::separable(&mut rng, n, 2, 0.1, 1.0);
        let g = gamma_d_oracle(&set, OracleMode::Enumeration).unwrap().gamma_d().unwrap();
        let variant = if use_l { Variant::L } else { Variant::T };
        let params = HyperParams::new(variant, eps, set.radius()).unwrap();
        let opts = TrainOptions { record_trace: true, ..Default::default() };
        let (_, report) = train_with(&set, &params, &opts).unwrap();
        let mut state = ModelState::new(&set);
        for &k in report.trace.as_ref().unwrap() {
            let dot = state.inner_product(k, &set).unwrap();
            state.apply_update(k, &set, dot);
            let t = state.t() as f64;
            prop_assert!(state.norm_sq().sqrt() >= g * t * (1.0 - 1e-9));
        }
    }
}

#[test]
fn replay_confirms_every_trigger() {
    let mut rng = common::rng(11);
    for case in 0..40 {
        let set = if case % 2 == 0 {
            common::separable(&mut rng, 40, 4, 0.05, 1.0)
        } else {
            common::noisy(&mut rng, 25, 3, 1.0, 1.0)
        };
        let variant = if case % 4 < 2 { Variant::T } else { Variant::L };
        let eps = rng.gen_range(0.5..1.5);
        let params = HyperParams::new(variant, eps, 0.5 * set.radius().powi(2)).unwrap();
        let opts = TrainOptions {
            record_trace: true,
            ..Default::default()
        };
        let (final_state, report) = train_with(&set, &params, &opts).unwrap();
        assert!(report.converged);
        let mut state = ModelState::new(&set);
        for &k in report.trace.as_ref().unwrap() {
            let dot = state.inner_product(k, &set).unwrap();
            let theta = threshold(&params, &state);
            assert!(dot <= theta + 1e-9 * theta.abs().max(dot.abs()), "case {case}");
            state.apply_update(k, &set, dot);
        }
        assert_eq!(state, final_state);
        let theta = threshold(&params, &final_state);
        for k in 0..set.n() {
            assert!(final_state.inner_product(k, &set).unwrap() > theta);
        }
    }
}

#[test]
fn converges_within_update_bound() {
    let mut rng = common::rng(12);
    for case in 0..100 {
        let n = rng.gen_range(5..30);
        let d = rng.gen_range(1..=3);
        let set = common::separable(&mut rng, n, d, 0.1, 1.0);
        let g = gamma_d_oracle(&set, OracleMode::Enumeration).unwrap().gamma_d().unwrap();
        let r = set.radius();
        let variant = if case % 2 == 0 { Variant::T } else { Variant::L };
        let eps = [0.5, 0.8, 1.0, 1.3][case % 4];
        let params = HyperParams::new(variant, eps, r * r).unwrap();
        let (state, report) = train(&set, &params).unwrap();
        assert!(report.converged);
        let inputs = BoundInputs::new(eps, r * r, r).unwrap().with_gamma_d(g).unwrap();
        let bound = match variant {
            Variant::T => tc_bound_t(&inputs).unwrap(),
            Variant::L => tc_bound_l(&inputs).unwrap(),
        };
        assert!(state.t() as f64 <= bound, "case {case}: {} > {bound}", state.t());
    }
}

#[test]
fn single_precision_training() {
    let text = "+1 1:1 2:0.5\n-1 1:-1 2:-0.25\n+1 1:0.75 2:1\n-1 1:-0.5 2:-1\n";
    let patterns = parse_svmlight_str::<f32>(text, ParseOptions::default()).unwrap();
    let set: margitron::TrainingSetF32 = TrainingSet::new(patterns, 1.0, 0.0).unwrap();
    let params: margitron::HyperParamsF32 = HyperParams::new(Variant::L, 0.5, 1.0).unwrap();
    let (state, report) = train(&set, &params).unwrap();
    assert!(report.converged);
    let m = margins(&state, &set).unwrap();
    assert!(m.directional_margin > 0.0);
    let f = report.f_est.unwrap();
    assert!(f > 0.0 && f < 1.0);
    for p in set.patterns() {
        let predicted = margitron::engine::predict(&state, set.meta(), &p.features);
        assert_eq!(predicted, p.label);
    }
}
