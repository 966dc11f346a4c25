//! Plain-text model files.
//!
//! ```text
//! margitron-model 1
//! variant l
//! epsilon 1.0000000000000000e0
//! b 5.0000000000000000e0
//! rho 1.0000000000000000e0
//! delta 1.0000000000000000e0
//! base_dim 3
//! t_c 4
//! a_aug_component 2.0000000000000000e0
//! weights 2
//! 0 1.5000000000000000e0
//! 2 -2.5000000000000000e-1
//! counts 2
//! 1
//! 3
//! ```
//!
//! Floats carry 17 significant digits, enough to reparse every `f64`
//! exactly. The `counts` section is optional.

use std::io::{BufRead, Write};

use anyhow::{anyhow, bail, ensure, Context, Result};
use margitron::engine::{ModelState, Predictor, SetMeta, Variant};
use margitron::HyperParams;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "margitron-model";

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub format_version: u32,
    pub variant: Variant,
    pub epsilon: f64,
    pub b: f64,
    pub rho: f64,
    pub delta: f64,
    pub base_dim: usize,
    pub t_c: u64,
    pub a_aug_component: f64,
    /// Sparse `(index, value)` pairs of the base weights.
    pub weights: Vec<(usize, f64)>,
    pub counts: Option<Vec<u64>>,
}

impl ModelFile {
    pub fn from_state(state: &ModelState<f64>, params: &HyperParams<f64>, meta: SetMeta<f64>, with_counts: bool) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            variant: params.variant,
            epsilon: params.epsilon,
            b: params.b,
            rho: meta.rho,
            delta: meta.delta,
            base_dim: meta.base_dim,
            t_c: state.t(),
            a_aug_component: state.aug_component(meta.rho),
            // keep -0.0 so scores stay bit-identical
            weights: state
                .weights()
                .iter()
                .enumerate()
                .filter(|(_, w)| w.to_bits() != 0)
                .map(|(i, &w)| (i, w))
                .collect(),
            counts: with_counts.then(|| state.counts().to_vec()),
        }
    }

    pub fn dense_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.base_dim];
        for &(i, v) in &self.weights {
            w[i] = v;
        }
        w
    }

    pub fn predictor<'a>(&self, dense: &'a [f64]) -> Predictor<'a, f64> {
        Predictor {
            weights: dense,
            rho: self.rho,
            aug_component: self.a_aug_component,
        }
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC} {}", self.format_version)?;
        writeln!(out, "variant {}", self.variant)?;
        for (key, v) in [("epsilon", self.epsilon), ("b", self.b), ("rho", self.rho), ("delta", self.delta)] {
            writeln!(out, "{key} {v:.16e}")?;
        }
        writeln!(out, "base_dim {}", self.base_dim)?;
        writeln!(out, "t_c {}", self.t_c)?;
        writeln!(out, "a_aug_component {:.16e}", self.a_aug_component)?;
        writeln!(out, "weights {}", self.weights.len())?;
        for &(i, v) in &self.weights {
            writeln!(out, "{i} {v:.16e}")?;
        }
        if let Some(counts) = &self.counts {
            writeln!(out, "counts {}", counts.len())?;
            for c in counts {
                writeln!(out, "{c}")?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((i + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| anyhow!("model file ends before {what}"))?;
            Ok((no, line?))
        };
        let field = |(no, line): (usize, String), key: &str| -> Result<(usize, String)> {
            let (k, v) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| anyhow!("line {no}: expected `{key} <value>`"))?;
            ensure!(k == key, "line {no}: expected `{key}`, found `{k}`");
            Ok((no, v.trim().to_string()))
        };
        fn parse<T: std::str::FromStr>((no, v): (usize, String), key: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| anyhow!("line {no}: bad {key} `{v}`: {e}"))
        }

        let version: u32 = parse(field(next("header")?, MAGIC)?, "format version")?;
        if version != FORMAT_VERSION {
            bail!("unsupported model format version {version}");
        }
        let variant: Variant = parse(field(next("variant")?, "variant")?, "variant")?;
        let epsilon: f64 = parse(field(next("epsilon")?, "epsilon")?, "epsilon")?;
        let b: f64 = parse(field(next("b")?, "b")?, "b")?;
        let rho: f64 = parse(field(next("rho")?, "rho")?, "rho")?;
        let delta: f64 = parse(field(next("delta")?, "delta")?, "delta")?;
        let base_dim: usize = parse(field(next("base_dim")?, "base_dim")?, "base_dim")?;
        let t_c: u64 = parse(field(next("t_c")?, "t_c")?, "t_c")?;
        let a_aug_component: f64 = parse(field(next("a_aug_component")?, "a_aug_component")?, "a_aug_component")?;
        let n_weights: usize = parse(field(next("weights")?, "weights")?, "weight count")?;
        let mut weights = Vec::with_capacity(n_weights);
        for _ in 0..n_weights {
            let (no, line) = next("the last weight")?;
            let (i, v) = line
                .trim()
                .split_once(' ')
                .ok_or_else(|| anyhow!("line {no}: expected `<index> <value>`"))?;
            let i: usize = parse((no, i.to_string()), "weight index")?;
            let v: f64 = parse((no, v.trim().to_string()), "weight value")?;
            ensure!(i < base_dim, "line {no}: weight index {i} not below base_dim {base_dim}");
            ensure!(v.is_finite(), "line {no}: weight must be finite");
            weights.push((i, v));
        }
        let counts = match lines.next() {
            None => None,
            Some((no, line)) => {
                let n: usize = parse(field((no, line?), "counts")?, "count total")?;
                let mut counts = Vec::with_capacity(n);
                for _ in 0..n {
                    let (no, line) = lines
                        .next()
                        .ok_or_else(|| anyhow!("model file ends before the last count"))?;
                    counts.push(parse((no, line?.trim().to_string()), "count")?);
                }
                if let Some((no, _)) = lines.next() {
                    bail!("line {no}: unexpected content after counts");
                }
                Some(counts)
            }
        };
        for (key, v) in [("epsilon", epsilon), ("b", b), ("rho", rho), ("delta", delta), ("a_aug_component", a_aug_component)] {
            ensure!(v.is_finite(), "{key} must be finite");
        }
        Ok(Self {
            format_version: version,
            variant,
            epsilon,
            b,
            rho,
            delta,
            base_dim,
            t_c,
            a_aug_component,
            weights,
            counts,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).with_context(|| format!("opening model {}", path.display()))?;
        Self::read(std::io::BufReader::new(file)).with_context(|| format!("reading model {}", path.display()))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).with_context(|| format!("creating model {}", path.display()))?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }
}
