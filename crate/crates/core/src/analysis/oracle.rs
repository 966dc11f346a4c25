//! Brute-force maximum directional margin
//!
//! ```text
//! γ_d = max_{‖u‖=1} min_k u·y_k
//! ```
//!
//! for small training sets, used to check the algorithms and bounds.
//!
//! When positive, `γ_d` equals the distance from the origin to the convex
//! hull of the reflected patterns. The nearest hull point lies in the
//! relative interior of a face spanned by at most `dim` affinely independent
//! patterns, where it coincides with the nearest point of that face's affine
//! hull. *Enumeration* mode therefore walks all support subsets, computes
//! the nearest point `z` of each affine hull from the Gram matrix, and
//! scores the direction `z/‖z‖` against every pattern. *Grid* mode
//! (effective dimension ≤ 3) scans a dense set of unit directions and then
//! polishes the best one by enumerating subsets of the patterns that are
//! nearly active there.

use serde::Serialize;

use crate::dataset::TrainingSet;
use crate::error::{MargitronError, Result};
use crate::scalar::Scalar;

/// Directions scanned in grid mode.
pub const GRID_DIRECTIONS: usize = 1_000_000;
/// Documented accuracy of grid mode.
pub const GRID_TOLERANCE: f64 = 1e-3;
/// Documented accuracy of enumeration mode.
pub const ENUMERATION_TOLERANCE: f64 = 1e-9;
/// Upper limit on `(number of support subsets) × n` in enumeration mode.
pub const ENUMERATION_WORK_LIMIT: f64 = 4e8;
/// Pattern count always accepted by enumeration mode, whatever the
/// dimension.
pub const ENUMERATION_SMALL_N: usize = 12;
/// Nearly-active patterns kept for the grid polish.
const POLISH_CANDIDATES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Auto,
    Grid,
    Enumeration,
}

impl std::str::FromStr for OracleMode {
    type Err = MargitronError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(OracleMode::Auto),
            "grid" => Ok(OracleMode::Grid),
            "enumeration" | "enum" => Ok(OracleMode::Enumeration),
            other => Err(crate::error::invalid(
                "oracle mode",
                format!("expected auto, grid or enumeration, got `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OracleOutcome<T> {
    Separable {
        gamma_d: T,
        tolerance: T,
        mode: OracleMode,
    },
    NonSeparable {
        /// Best (non-positive) `min_k u·y_k` found.
        best: T,
        mode: OracleMode,
    },
}

impl<T: Scalar> OracleOutcome<T> {
    pub fn gamma_d(&self) -> Option<T> {
        match *self {
            OracleOutcome::Separable { gamma_d, .. } => Some(gamma_d),
            OracleOutcome::NonSeparable { .. } => None,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn subset_count(n: usize, max_size: usize) -> f64 {
    (1..=max_size.min(n)).map(|s| binomial(n, s)).sum()
}

fn enumeration_fits(n: usize, dim: usize) -> bool {
    n <= ENUMERATION_SMALL_N || subset_count(n, dim) * n as f64 <= ENUMERATION_WORK_LIMIT
}

/// Maximum directional margin of `set` by brute force.
pub fn gamma_d_oracle<T: Scalar>(set: &TrainingSet<T>, mode: OracleMode) -> Result<OracleOutcome<T>> {
    let n = set.n();
    let dim = set.effective_dim();
    let mode = match mode {
        OracleMode::Auto if enumeration_fits(n, dim) => OracleMode::Enumeration,
        OracleMode::Auto if dim <= 3 => OracleMode::Grid,
        OracleMode::Auto => {
            return Err(MargitronError::OracleLimit(format!(
                "{n} patterns in dimension {dim}: too many support subsets and too many dimensions for a grid"
            )))
        }
        m => m,
    };
    let (best, tolerance) = match mode {
        OracleMode::Enumeration => {
            if !enumeration_fits(n, dim) {
                return Err(MargitronError::OracleLimit(format!(
                    "{:.3e} support subsets over {n} patterns exceed the enumeration budget",
                    subset_count(n, dim)
                )));
            }
            let gram = gram_matrix(set);
            let all: Vec<usize> = (0..n).collect();
            (
                best_over_subsets(&gram, &all, dim, T::neg_infinity()),
                T::lit(ENUMERATION_TOLERANCE),
            )
        }
        OracleMode::Grid => {
            if dim > 3 {
                return Err(MargitronError::OracleLimit(format!(
                    "grid mode needs effective dimension <= 3, got {dim}"
                )));
            }
            (grid_search(set), T::lit(GRID_TOLERANCE))
        }
        OracleMode::Auto => unreachable!(),
    };
    Ok(if best > T::zero() {
        OracleOutcome::Separable {
            gamma_d: best,
            tolerance,
            mode,
        }
    } else {
        OracleOutcome::NonSeparable { best, mode }
    })
}

fn gram_matrix<T: Scalar>(set: &TrainingSet<T>) -> Vec<Vec<T>> {
    let n = set.n();
    let mut g = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let v = set.gram(i, j);
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// Solves the nearest-point system of the affine hull of `subset`:
///
/// ```text
/// [ G_SS  1 ] [λ]   [0]
/// [ 1ᵀ    0 ] [μ] = [1]
/// ```
///
/// Returns `None` for (numerically) affinely dependent subsets.
fn affine_nearest<T: Scalar>(gram: &[Vec<T>], subset: &[usize]) -> Option<Vec<T>> {
    let s = subset.len();
    let m = s + 1;
    let mut a = vec![vec![T::zero(); m + 1]; m];
    let mut scale = T::zero();
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            a[r][c] = gram[i][j];
            scale = scale.max(gram[i][j].abs());
        }
        a[r][s] = T::one();
        a[s][r] = T::one();
    }
    a[s][m] = T::one();
    let tiny = T::lit(1e-12) * scale.max(T::one());

    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() <= tiny {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != T::zero() {
                    for c in col..=m {
                        let v = a[col][c];
                        a[r][c] -= f * v;
                    }
                }
            }
        }
    }
    let lambda: Vec<T> = (0..s).map(|r| a[r][m] / a[r][r]).collect();
    lambda.iter().all(|l| l.is_finite()).then_some(lambda)
}

/// `min_k u·y_k` for `u = z/‖z‖`, `z = Σ λ_i y_i`; `None` when `z ≈ 0`.
fn direction_score<T: Scalar>(gram: &[Vec<T>], subset: &[usize], lambda: &[T]) -> Option<T> {
    let n = gram.len();
    let proj = |k: usize| {
        subset
            .iter()
            .zip(lambda)
            .fold(T::zero(), |acc, (&i, &l)| acc + l * gram[k][i])
    };
    let z_sq = subset
        .iter()
        .zip(lambda)
        .fold(T::zero(), |acc, (&i, &l)| acc + l * proj(i));
    let mag = lambda.iter().fold(T::zero(), |acc, l| acc + l.abs());
    let diag = subset.iter().fold(T::zero(), |acc, &i| acc.max(gram[i][i]));
    if !(z_sq > T::lit(1e-12) * mag * mag * diag) {
        return None;
    }
    let z_norm = z_sq.sqrt();
    Some((0..n).map(proj).fold(T::infinity(), T::min) / z_norm)
}

/// Best `min_k u·y_k` over the nearest-point directions of all subsets of
/// `pool` with at most `max_size` elements.
fn best_over_subsets<T: Scalar>(gram: &[Vec<T>], pool: &[usize], max_size: usize, start: T) -> T {
    let mut best = start;
    let max_size = max_size.min(pool.len());
    let mut idx: Vec<usize> = Vec::with_capacity(max_size);
    let mut subset: Vec<usize> = Vec::with_capacity(max_size);
    for size in 1..=max_size {
        idx.clear();
        idx.extend(0..size);
        loop {
            subset.clear();
            subset.extend(idx.iter().map(|&i| pool[i]));
            if let Some(lambda) = affine_nearest(gram, &subset) {
                if let Some(score) = direction_score(gram, &subset, &lambda) {
                    if score > best {
                        best = score;
                    }
                }
            }
            // next combination in lexicographic order
            let mut pos = size;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if idx[pos] < pool.len() - size + pos {
                    idx[pos] += 1;
                    for q in pos + 1..size {
                        idx[q] = idx[q - 1] + 1;
                    }
                    pos = usize::MAX;
                    break;
                }
            }
            if pos != usize::MAX {
                break;
            }
        }
    }
    best
}

/// Dense reflected patterns in the effective space (at most 3 coordinates).
fn dense_patterns<T: Scalar>(set: &TrainingSet<T>) -> Vec<[T; 3]> {
    let base = set.base_dim();
    (0..set.n())
        .map(|k| {
            let p = set.pattern(k);
            let s = p.label.sign::<T>();
            let mut y = [T::zero(); 3];
            for (i, v) in p.features.iter() {
                y[i] = s * v;
            }
            y[base] = s * set.rho();
            if set.delta() > T::zero() {
                y[base + 1 + k] = s * set.delta();
            }
            y
        })
        .collect()
}

fn grid_search<T: Scalar>(set: &TrainingSet<T>) -> T {
    let dim = set.effective_dim();
    let ys = dense_patterns(set);
    let score = |u: [T; 3], floor: T| -> T {
        let mut m = T::infinity();
        for y in &ys {
            let v = u[0] * y[0] + u[1] * y[1] + u[2] * y[2];
            if v < m {
                m = v;
                if m <= floor {
                    break;
                }
            }
        }
        m
    };

    let mut best = T::neg_infinity();
    let mut best_u = [T::zero(); 3];
    let mut consider = |u: [T; 3]| {
        let v = score(u, best);
        if v > best {
            best = v;
            best_u = u;
        }
    };
    let m = GRID_DIRECTIONS;
    let spacing = match dim {
        1 => {
            consider([T::one(), T::zero(), T::zero()]);
            consider([-T::one(), T::zero(), T::zero()]);
            T::zero()
        }
        2 => {
            let step = std::f64::consts::TAU / m as f64;
            for i in 0..m {
                let (s, c) = (step * i as f64).sin_cos();
                consider([T::lit(c), T::lit(s), T::zero()]);
            }
            T::lit(step)
        }
        _ => {
            // Fibonacci lattice on the sphere
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            for i in 0..m {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let (s, c) = (golden * i as f64).sin_cos();
                consider([T::lit(r * c), T::lit(r * s), T::lit(z)]);
            }
            T::lit((4.0 * std::f64::consts::PI / m as f64).sqrt() * 2.0)
        }
    };

    // Patterns within reach of the optimum from the best grid direction.
    let radius = set.radius();
    let reach = T::lit(2.0) * radius * spacing;
    let mut near: Vec<(T, usize)> = ys
        .iter()
        .enumerate()
        .map(|(k, y)| (best_u[0] * y[0] + best_u[1] * y[1] + best_u[2] * y[2], k))
        .filter(|&(v, _)| v <= best + reach)
        .collect();
    near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    near.truncate(POLISH_CANDIDATES);
    let pool: Vec<usize> = near.into_iter().map(|(_, k)| k).collect();
    let gram: Vec<Vec<T>> = (0..ys.len())
        .map(|i| {
            (0..ys.len())
                .map(|j| ys[i][0] * ys[j][0] + ys[i][1] * ys[j][1] + ys[i][2] * ys[j][2])
                .collect()
        })
        .collect();
    // Scores from the polish are evaluated over all patterns, so they are
    // achieved margins and can only improve on the grid value.
    best_over_subsets(&gram, &pool, dim, best)
}
