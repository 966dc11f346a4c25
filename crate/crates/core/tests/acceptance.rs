//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any gating criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{planar_fixtures, OracleFixture};
use margitron::analysis::{
    b_from_gamma_up, gamma_d_oracle, lemma1_g, lemma1_root, lemma2_check, lemma3_check,
    lemma4_check, select_b_l, select_b_t, tc_bound_l, tc_bound_t, BoundInputs, OracleMode,
};
use margitron::dataset::{parse_svmlight, ParseOptions};
use margitron::engine::{HyperParams, ModelState, Variant};
use margitron::trainer::{successive_runnings, train, train_with, ProtocolConfig, TrainOptions};
use margitron::{Label, TrainingSet};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, limit: Option<Duration>, gating: bool, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!(
                "took {:.2} s, limit {:.0} s",
                elapsed.as_secs_f64(),
                limit.as_secs_f64()
            )),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({:.2} s)", elapsed.as_secs_f64()),
            Err(detail) if detail.starts_with("skipped") => println!("SKIP [{id}] {name}: {detail}"),
            Err(detail) => {
                println!("FAIL [{id}] {name}: {detail} ({:.2} s)", elapsed.as_secs_f64());
                if gating {
                    self.failed += 1;
                }
            }
        }
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() {
    let mut suite = Suite { failed: 0 };

    suite.run(1, "epsilon = 1 variant equivalence", secs(5), true, epsilon_one_equivalence);

    let fixture_start = Instant::now();
    let fixtures = planar_fixtures(50, 0x5eed_0002);
    let fixture_time = fixture_start.elapsed().as_secs_f64();
    println!("     built 50 oracle-verified planar sets in {fixture_time:.2} s");

    let mut sweep_runs = Vec::new();
    suite.run(2, "perceptron with margin guarantee", secs(30), true, || {
        perceptron_with_margin(&fixtures, &mut sweep_runs)
    });
    suite.run(3, "l-margitron small epsilon regime", secs(60), true, || {
        small_epsilon_regime(&fixtures, &mut sweep_runs)
    });
    suite.run(4, "after-running estimate soundness", None, true, || {
        estimate_soundness(&fixtures, &mut sweep_runs)
    });
    suite.run(5, "lemma suites", secs(10), true, lemma_suites);
    suite.run(6, "extension identity", None, true, extension_identity);
    suite.run(7, "hand-traced single pattern", None, true, hand_trace);
    suite.run(8, "protocol internal consistency", None, true, || protocol_consistency(&fixtures));
    suite.run(9, "adult smoke run (non-gating)", secs(300), false, adult_smoke);

    if suite.failed > 0 {
        println!("{} criteria failed", suite.failed);
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn epsilon_one_equivalence() -> Outcome {
    let mut rng = common::rng(0x5eed_0001);
    let opts = TrainOptions {
        record_trace: true,
        ..Default::default()
    };
    let mut updates = 0;
    for case in 0..100 {
        let n = rng.gen_range(1..=100);
        let d = rng.gen_range(1..=10);
        let set = common::separable(&mut rng, n, d, 0.05, 1.0);
        let r = set.radius();
        let b = rng.gen_range(0.1..5.0) * r * r;
        let pt = HyperParams::new(Variant::T, 1.0, b).unwrap();
        let pl = HyperParams::new(Variant::L, 1.0, b).unwrap();
        let (st, rt) = train_with(&set, &pt, &opts).map_err(|e| e.to_string())?;
        let (sl, rl) = train_with(&set, &pl, &opts).map_err(|e| e.to_string())?;
        ensure(rt.converged && rl.converged, || format!("case {case} did not converge"))?;
        ensure(rt.trace == rl.trace, || format!("case {case}: update sequences differ"))?;
        ensure(st == sl, || format!("case {case}: final states differ"))?;
        updates += rt.t_c;
    }
    Ok(format!("100 sets, {updates} updates, identical traces and states"))
}

struct SweepRun {
    label: String,
    f_est: Option<f64>,
    ratio: f64,
}

fn directional(report: &margitron::TrainReportF64) -> f64 {
    report.margins.expect("trained").directional_margin
}

fn perceptron_with_margin(fixtures: &[OracleFixture], runs: &mut Vec<SweepRun>) -> Outcome {
    let mut worst: f64 = f64::INFINITY;
    for (i, fx) in fixtures.iter().enumerate() {
        let r = fx.set.radius();
        let b = r * r;
        let params = HyperParams::new(Variant::T, 1.0, b).unwrap();
        let (_, report) = train(&fx.set, &params).map_err(|e| e.to_string())?;
        ensure(report.converged, || format!("set {i} did not converge"))?;
        let ratio = directional(&report) / fx.gamma_hi();
        worst = worst.min(ratio);
        ensure(ratio >= 1.0 / 3.0, || format!("set {i}: fraction {ratio} < 1/3"))?;
        let g = fx.gamma_hi().min(r);
        let bound = r * r / (g * g) + 2.0 * b / (g * g);
        ensure(report.t_c as f64 <= bound, || {
            format!("set {i}: t_c = {} exceeds {bound}", report.t_c)
        })?;
        runs.push(SweepRun {
            label: format!("set {i} t eps=1"),
            f_est: report.f_est,
            ratio,
        });
    }
    Ok(format!("50 sets, worst fraction {worst:.4}"))
}

fn small_epsilon_regime(fixtures: &[OracleFixture], runs: &mut Vec<SweepRun>) -> Outcome {
    let eps = 0.1;
    let target = 1.0 / (1.0 + 2.0 * eps);
    let mut worst: f64 = f64::INFINITY;
    let mut max_tc = 0;
    for (i, fx) in fixtures.iter().enumerate() {
        let r = fx.set.radius();
        let sel = select_b_l(eps, eps, fx.gamma_d, r).map_err(|e| e.to_string())?;
        let params = HyperParams::new(Variant::L, eps, sel.b).unwrap();
        let (_, report) = train(&fx.set, &params).map_err(|e| e.to_string())?;
        ensure(report.converged, || format!("set {i} did not converge"))?;
        let ratio = directional(&report) / fx.gamma_hi();
        worst = worst.min(ratio);
        ensure(ratio >= target, || format!("set {i}: fraction {ratio} < {target}"))?;
        let inputs = BoundInputs::new(eps, sel.b, r)
            .and_then(|x| x.with_gamma_d(fx.gamma_hi().min(r)))
            .map_err(|e| e.to_string())?;
        let bound = tc_bound_l(&inputs).map_err(|e| e.to_string())?;
        ensure(report.t_c as f64 <= bound, || {
            format!("set {i}: t_c = {} exceeds {bound}", report.t_c)
        })?;
        max_tc = max_tc.max(report.t_c);
        runs.push(SweepRun {
            label: format!("set {i} l eps=0.1"),
            f_est: report.f_est,
            ratio,
        });
    }
    Ok(format!("50 sets, worst fraction {worst:.4}, largest t_c {max_tc}"))
}

fn estimate_soundness(fixtures: &[OracleFixture], runs: &mut Vec<SweepRun>) -> Outcome {
    let delta = 0.5;
    for (i, fx) in fixtures.iter().enumerate() {
        let r = fx.set.radius();
        for eps in [0.2, 0.5, 0.8, 1.0] {
            for variant in [Variant::T, Variant::L] {
                let sel = match variant {
                    Variant::T => select_b_t(eps, delta, fx.gamma_d, r),
                    Variant::L => select_b_l(eps, delta, fx.gamma_d, r),
                }
                .map_err(|e| e.to_string())?;
                let params = HyperParams::new(variant, eps, sel.b).unwrap();
                let (_, report) = train(&fx.set, &params).map_err(|e| e.to_string())?;
                ensure(report.converged, || format!("set {i} {variant} eps={eps} did not converge"))?;
                if variant == Variant::T {
                    let inputs = BoundInputs::new(eps, sel.b, r)
                        .and_then(|x| x.with_gamma_d(fx.gamma_hi().min(r)))
                        .map_err(|e| e.to_string())?;
                    let bound = tc_bound_t(&inputs).map_err(|e| e.to_string())?;
                    ensure(report.t_c as f64 <= bound, || {
                        format!("set {i} t eps={eps}: t_c = {} exceeds {bound}", report.t_c)
                    })?;
                }
                runs.push(SweepRun {
                    label: format!("set {i} {variant} eps={eps}"),
                    f_est: report.f_est,
                    ratio: directional(&report) / fx.gamma_hi(),
                });
            }
        }
    }
    let mut checked = 0;
    let mut slack: f64 = f64::INFINITY;
    for run in runs.iter() {
        let f = run.f_est.ok_or_else(|| format!("{}: no estimate reported", run.label))?;
        ensure(f <= run.ratio, || {
            format!("{}: f_est {f} above achieved fraction {}", run.label, run.ratio)
        })?;
        slack = slack.min(run.ratio - f);
        checked += 1;
    }
    Ok(format!("{checked} runs, smallest gap {slack:.4}"))
}

fn lemma_suites() -> Outcome {
    let mut rng = common::rng(0x5eed_0005);
    let draws = 10_000;
    let log_uniform = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| {
        (rng.gen_range(lo.ln()..hi.ln())).exp()
    };
    for _ in 0..draws {
        let eps = rng.gen_range(0.05..3.0);
        let alpha = log_uniform(&mut rng, 1.0, 100.0);
        let beta = log_uniform(&mut rng, 1e-3, 1e3);
        let root = lemma1_root(eps, alpha, beta).map_err(|e| e.to_string())?;
        let residual = lemma1_g(root.t_b, eps, alpha, beta).abs();
        let (lo, hi) = root.bracket;
        ensure(root.t_b >= lo && root.t_b <= hi && root.t_b >= 1.0, || {
            format!("lemma 1: root {} outside [{lo}, {hi}]", root.t_b)
        })?;
        ensure(residual <= 1e-12 * root.t_b.powf(eps).max(1.0), || {
            format!("lemma 1: residual {residual} at eps={eps} alpha={alpha} beta={beta}")
        })?;
    }
    for _ in 0..draws {
        let x = log_uniform(&mut rng, 1e-3, 1e3);
        let y = log_uniform(&mut rng, 1e-3, 1e3);
        let eps = rng.gen_range(-0.999..=1.0);
        let c = lemma2_check(x, y, eps).map_err(|e| e.to_string())?;
        ensure(c.holds, || format!("lemma 2 fails at x={x} y={y} eps={eps}: {c:?}"))?;
    }
    for _ in 0..draws {
        let t = log_uniform(&mut rng, 1.0, 1e8);
        let eps = rng.gen_range(0.001..=1.0);
        let c = lemma3_check(t, eps).map_err(|e| e.to_string())?;
        ensure(c.holds, || format!("lemma 3 fails at t={t} eps={eps}: {c:?}"))?;
        let at_one = lemma3_check(1.0, eps).map_err(|e| e.to_string())?;
        ensure(at_one.lhs == at_one.rhs, || format!("lemma 3 not equal at t=1, eps={eps}"))?;
        let eps_one = lemma3_check(t, 1.0).map_err(|e| e.to_string())?;
        ensure(eps_one.lhs == eps_one.rhs, || format!("lemma 3 not equal at eps=1, t={t}"))?;
    }
    for _ in 0..draws {
        let eps = rng.gen_range(0.01..0.99);
        let alpha = (2.0 + eps) * log_uniform(&mut rng, 1.0, 50.0);
        let split = rng.gen_range(0.01..0.99);
        let beta = log_uniform(&mut rng, 1e-3, 1e3);
        let c = lemma4_check(eps, alpha * split, alpha * (1.0 - split), beta).map_err(|e| e.to_string())?;
        ensure(c.holds, || format!("lemma 4 fails at eps={eps}: {c:?}"))?;
    }
    Ok(format!("{draws} draws for each of four lemmas"))
}

/// Reflected, augmented, extended pattern as a dense vector.
fn materialize(set: &TrainingSet<f64>, k: usize) -> Vec<f64> {
    let p = set.pattern(k);
    let s = p.label.sign::<f64>();
    let mut y = vec![0.0; set.base_dim() + 1 + set.n()];
    for (i, v) in p.features.iter() {
        y[i] = s * v;
    }
    y[set.base_dim()] = s * set.rho();
    y[set.base_dim() + 1 + k] = s * set.delta();
    y
}

fn extension_identity() -> Outcome {
    let mut rng = common::rng(0x5eed_0006);
    let mut worst_dot: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut comparisons = 0;
    for case in 0..20 {
        let n = rng.gen_range(2..=50);
        let d = rng.gen_range(1..=8);
        let delta = [0.5, 1.0, 2.0][case % 3];
        let rho = rng.gen_range(0.5..2.0);
        let set = common::noisy(&mut rng, n, d, rho, delta);
        let variant = if rng.gen_bool(0.5) { Variant::T } else { Variant::L };
        let eps = rng.gen_range(0.5..=1.0);
        let params = HyperParams::new(variant, eps, set.radius().powi(2)).unwrap();
        let opts = TrainOptions {
            record_trace: true,
            ..Default::default()
        };
        let (final_state, report) = train_with(&set, &params, &opts).map_err(|e| e.to_string())?;
        ensure(report.converged, || format!("case {case} did not converge"))?;

        let ys: Vec<Vec<f64>> = (0..set.n()).map(|k| materialize(&set, k)).collect();
        let mut a = vec![0.0; ys[0].len()];
        let mut state = ModelState::new(&set);
        let trace = report.trace.unwrap();
        for (step, &k) in trace.iter().enumerate() {
            let dot = state.inner_product(k, &set).unwrap();
            if step % 7 == 0 || step + 1 == trace.len() {
                for (j, y) in ys.iter().enumerate() {
                    let ip = state.inner_product(j, &set).unwrap();
                    let (dense, scale) = a
                        .iter()
                        .zip(y)
                        .fold((0.0, 0.0), |(s, m), (x, y)| (s + x * y, m + (x * y).abs()));
                    let err = if scale > 0.0 { (ip - dense).abs() / scale } else { ip.abs() };
                    worst_dot = worst_dot.max(err);
                    comparisons += 1;
                }
            }
            state.apply_update(k, &set, dot);
            for (x, y) in a.iter_mut().zip(&ys[k]) {
                *x += y;
            }
        }
        ensure(state == final_state, || format!("case {case}: replay diverged"))?;
        let dense_sq: f64 = a.iter().map(|x| x * x).sum();
        let rel = (final_state.norm_sq() - dense_sq).abs() / dense_sq;
        let rel_components = (final_state.norm_sq() - final_state.recompute_norm_sq(&set)).abs() / dense_sq;
        worst_norm = worst_norm.max(rel).max(rel_components);
    }
    ensure(worst_dot <= 1e-12, || format!("inner product relative error {worst_dot:e}"))?;
    ensure(worst_norm <= 1e-9, || format!("norm relative error {worst_norm:e}"))?;
    Ok(format!(
        "{comparisons} inner products, worst relative error {worst_dot:.1e}; norm drift {worst_norm:.1e}"
    ))
}

fn hand_trace() -> Outcome {
    let p = common::pattern(0, Label::Positive, &[1.0]);
    let set = TrainingSet::new(vec![p], 1.0, 0.0).map_err(|e| e.to_string())?;
    let params = HyperParams::new(Variant::T, 1.0, 1.0).unwrap();
    let (_, report) = train(&set, &params).map_err(|e| e.to_string())?;
    let gamma_d = gamma_d_oracle(&set, OracleMode::Enumeration)
        .map_err(|e| e.to_string())?
        .gamma_d()
        .ok_or("oracle says not separable")?;
    let sqrt2 = 2f64.sqrt();
    let gp = directional(&report);
    ensure(report.t_c == 1, || format!("t_c = {}", report.t_c))?;
    ensure((gamma_d - sqrt2).abs() <= 1e-12, || format!("oracle gamma_d = {gamma_d}"))?;
    ensure((gp - sqrt2).abs() <= 1e-12, || format!("achieved margin {gp}"))?;
    ensure((gp / gamma_d - 1.0).abs() <= 1e-12, || format!("fraction {}", gp / gamma_d))?;
    Ok("t_c = 1, margin sqrt 2, fraction 1".into())
}

fn protocol_consistency(fixtures: &[OracleFixture]) -> Outcome {
    let eps2 = 0.1;
    let mut lowest: f64 = f64::INFINITY;
    for (i, fx) in fixtures.iter().enumerate() {
        let (_, rep) = successive_runnings(&fx.set, &ProtocolConfig::new(eps2)).map_err(|e| e.to_string())?;
        let r = fx.set.radius();
        let b2 = b_from_gamma_up(eps2, rep.stage1.gamma_up, r).map_err(|e| e.to_string())?;
        ensure(rep.stage2.b == b2, || format!("set {i}: b2 {} != {b2}", rep.stage2.b))?;
        ensure(rep.converged, || format!("set {i}: stage 2 did not converge"))?;
        let f1 = rep.stage1.report.f_est.ok_or("stage 1 reported no estimate")?;
        let f2 = rep.stage2.f_est.ok_or("stage 2 reported no estimate")?;
        ensure(f2 >= f1, || format!("set {i}: stage-2 estimate {f2} below stage-1 {f1}"))?;
        ensure(rep.stage1.gamma_up >= fx.gamma_d - fx.tolerance, || {
            format!("set {i}: gamma_up {} below gamma_d {}", rep.stage1.gamma_up, fx.gamma_d)
        })?;
        lowest = lowest.min(f2);
    }
    Ok(format!("50 sets, lowest stage-2 estimate {lowest:.4}"))
}

fn adult_smoke() -> Outcome {
    let Some(path) = std::env::var_os("MARGITRON_ADULT") else {
        return Err("skipped: set MARGITRON_ADULT to an svmlight copy of Adult".into());
    };
    let file = std::fs::File::open(&path).map_err(|e| e.to_string())?;
    let patterns = parse_svmlight(std::io::BufReader::new(file), ParseOptions::default()).map_err(|e| e.to_string())?;
    let set = TrainingSet::new(patterns, 1.0, 1.0).map_err(|e| e.to_string())?;
    let (_, rep) = successive_runnings(&set, &ProtocolConfig::new(0.1)).map_err(|e| e.to_string())?;
    ensure(rep.converged, || "stage 2 did not converge".into())?;
    let f = rep.stage2.f_est.ok_or("no estimate")?;
    ensure(f >= 0.75, || format!("stage-2 estimate {f} below 0.75"))?;
    Ok(format!("n = {}, stage-2 estimate {f:.3}", set.n()))
}
