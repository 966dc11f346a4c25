#![allow(dead_code)]

use margitron::analysis::{gamma_d_oracle, OracleMode};
use margitron::{Label, SparsePattern, SparseVector, TrainingSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pattern(id: usize, label: Label, dense: &[f64]) -> SparsePattern<f64> {
    let pairs: Vec<(usize, f64)> = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, &v)| (i, v))
        .collect();
    SparsePattern::new(id, label, SparseVector::from_pairs(&pairs).unwrap())
}

/// Points in `[-1, 1]^d` labelled by a random hyperplane, with a slab of
/// half-width `gap` around it left empty. Some coordinates are zeroed to
/// exercise sparsity.
pub fn separable(rng: &mut ChaCha8Rng, n: usize, d: usize, gap: f64, rho: f64) -> TrainingSet<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    let bias = rng.gen_range(-0.3..0.3);
    let mut patterns = Vec::with_capacity(n);
    while patterns.len() < n {
        let x: Vec<f64> = (0..d)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let s = (w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + bias) / w_norm;
        if s.abs() < gap {
            continue;
        }
        let label = if s > 0.0 { Label::Positive } else { Label::Negative };
        patterns.push(pattern(patterns.len(), label, &x));
    }
    TrainingSet::new(patterns, rho, 0.0).unwrap()
}

/// Random labels; separable only through the extension when `delta > 0`.
pub fn noisy(rng: &mut ChaCha8Rng, n: usize, d: usize, rho: f64, delta: f64) -> TrainingSet<f64> {
    let patterns = (0..n)
        .map(|id| {
            let x: Vec<f64> = (0..d)
                .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-2.0..2.0) })
                .collect();
            let label = if rng.gen_bool(0.5) { Label::Positive } else { Label::Negative };
            pattern(id, label, &x)
        })
        .collect();
    TrainingSet::new(patterns, rho, delta).unwrap()
}

pub struct OracleFixture {
    pub set: TrainingSet<f64>,
    pub gamma_d: f64,
    /// Absolute accuracy of `gamma_d`.
    pub tolerance: f64,
}

impl OracleFixture {
    /// `γ_d` plus its tolerance: ratios against it never overstate the
    /// achieved fraction.
    pub fn gamma_hi(&self) -> f64 {
        self.gamma_d + self.tolerance
    }
}

/// Two-dimensional sets separated by a line with a gap, `ρ = 1`, with the
/// grid oracle value checked against subset enumeration.
pub fn planar_fixtures(count: usize, seed: u64) -> Vec<OracleFixture> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.gen_range(10..=40);
        let gap = rng.gen_range(0.05..0.2);
        let set = separable(&mut rng, n, 2, gap, 1.0);
        if set.base_dim() != 2 {
            continue;
        }
        let grid = gamma_d_oracle(&set, OracleMode::Grid).unwrap();
        let exact = gamma_d_oracle(&set, OracleMode::Enumeration).unwrap();
        let (g, e) = (grid.gamma_d().unwrap(), exact.gamma_d().unwrap());
        assert!(
            (g - e).abs() <= 1e-3,
            "grid and enumeration oracles disagree: {g} vs {e}"
        );
        out.push(OracleFixture {
            set,
            gamma_d: g,
            tolerance: 1e-3,
        });
    }
    out
}
