//! Sparse training data in svmlight format and the training-set view the
//! engine works against.
//!
//! Patterns are stored raw. The learning algorithms see each pattern `k` as
//!
//! ```text
//! y_k = s_k · (x_k, ρ, Δ·e_k)
//! ```
//!
//! where `s_k = ±1` is the label (reflection), `ρ` the augmentation
//! coordinate and `Δ·e_k` a private extension coordinate for pattern `k`.
//! Neither the reflection nor the extension is ever materialized: inner
//! products carry the sign, and extension coordinates only ever meet
//! themselves, contributing `Δ²·[i = j]`.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{invalid, MargitronError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `+1` for positive labels, `-1` otherwise.
    #[inline]
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Label::Positive => T::one(),
            Label::Negative => -T::one(),
        }
    }

    #[inline]
    pub fn as_i64(self) -> i64 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    /// Label of a score; exact zero counts as positive.
    #[inline]
    pub fn of_score<T: Scalar>(score: T) -> Label {
        if score >= T::zero() {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SparseVector<T> {
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn new(indices: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(invalid(
                "sparse vector",
                format!("{} indices but {} values", indices.len(), values.len()),
            ));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(
                "sparse vector",
                format!("index {} does not follow {} in increasing order", w[1], w[0]),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sparse vector", "non-finite value"));
        }
        Ok(Self { indices, values })
    }

    pub fn from_pairs(pairs: &[(usize, T)]) -> Result<Self> {
        let (indices, values) = pairs.iter().copied().unzip();
        Self::new(indices, values)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Index of the last stored entry plus one.
    pub fn dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Dot product with a dense vector; entries past its end are skipped.
    #[inline]
    pub fn dot_dense(&self, dense: &[T]) -> T {
        let mut acc = T::zero();
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            if let Some(&d) = dense.get(i) {
                acc += d * v;
            }
        }
        acc
    }

    pub fn dot(&self, other: &SparseVector<T>) -> T {
        let (mut i, mut j) = (0, 0);
        let mut acc = T::zero();
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// One labelled training instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsePattern<T> {
    pub id: usize,
    pub label: Label,
    pub features: SparseVector<T>,
    /// `‖x_k‖²` over the base features only.
    pub base_norm_sq: T,
}

impl<T: Scalar> SparsePattern<T> {
    pub fn new(id: usize, label: Label, features: SparseVector<T>) -> Self {
        let base_norm_sq = features.norm_sq();
        Self {
            id,
            label,
            features,
            base_norm_sq,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseOptions {
    /// Feature indices in the input already start at zero.
    pub zero_based: bool,
    /// Accept `?` in place of a label (prediction input).
    pub allow_unlabeled: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            zero_based: false,
            allow_unlabeled: false,
        }
    }
}

/// A parsed svmlight line whose label may be absent.
#[derive(Clone, Debug, PartialEq)]
pub struct Record<T> {
    pub line: usize,
    pub label: Option<Label>,
    pub features: SparseVector<T>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> MargitronError {
    MargitronError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_line<T: Scalar>(
    content: &str,
    line: usize,
    opts: ParseOptions,
) -> Result<Option<Record<T>>> {
    let content = match content.find('#') {
        Some(pos) => &content[..pos],
        None => content,
    };
    let mut tokens = content.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };

    let label = if label_tok == "?" {
        if !opts.allow_unlabeled {
            return Err(parse_err(line, "missing label"));
        }
        None
    } else {
        let value: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(line, format!("malformed label `{label_tok}`")))?;
        if value.is_nan() {
            return Err(parse_err(line, "label is NaN"));
        }
        if value == 0.0 {
            return Err(parse_err(line, "label 0 is neither positive nor negative"));
        }
        Some(if value > 0.0 {
            Label::Positive
        } else {
            Label::Negative
        })
    };

    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (idx_str, val_str) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("malformed feature `{tok}`")))?;
        let raw: usize = idx_str
            .parse()
            .map_err(|_| parse_err(line, format!("malformed feature index `{idx_str}`")))?;
        let idx = if opts.zero_based {
            raw
        } else {
            raw.checked_sub(1)
                .ok_or_else(|| parse_err(line, "feature index 0 in one-based input"))?
        };
        let val: f64 = val_str
            .parse()
            .map_err(|_| parse_err(line, format!("malformed feature value `{val_str}`")))?;
        if !val.is_finite() {
            return Err(parse_err(line, format!("non-finite feature value `{val_str}`")));
        }
        if let Some(&prev) = indices.last() {
            if idx <= prev {
                return Err(parse_err(
                    line,
                    format!("non-increasing feature index {raw} (duplicate or out of order)"),
                ));
            }
        }
        indices.push(idx);
        values.push(T::lit(val));
    }

    Ok(Some(Record {
        line,
        label,
        features: SparseVector { indices, values },
    }))
}

/// Parses svmlight lines, keeping records whose label may be missing.
/// An input without any record yields an empty list.
pub fn parse_records<T: Scalar, R: BufRead>(reader: R, opts: ParseOptions) -> Result<Vec<Record<T>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(rec) = parse_line(&line, i + 1, opts)? {
            out.push(rec);
        }
    }
    Ok(out)
}

/// Parses a labelled svmlight training file. Ids follow file order.
pub fn parse_svmlight<T: Scalar, R: BufRead>(
    reader: R,
    opts: ParseOptions,
) -> Result<Vec<SparsePattern<T>>> {
    let opts = ParseOptions {
        allow_unlabeled: false,
        ..opts
    };
    let records = parse_records::<T, R>(reader, opts)?;
    if records.is_empty() {
        return Err(MargitronError::EmptyDataset);
    }
    Ok(records
        .into_iter()
        .enumerate()
        .map(|(id, rec)| {
            // allow_unlabeled is off, so every record carries a label
            let label = rec.label.expect("labelled record");
            SparsePattern::new(id, label, rec.features)
        })
        .collect())
}

pub fn parse_svmlight_str<T: Scalar>(text: &str, opts: ParseOptions) -> Result<Vec<SparsePattern<T>>> {
    parse_svmlight(text.as_bytes(), opts)
}

/// Writes patterns back in svmlight format with one-based or zero-based
/// indices. Values use the shortest representation that reparses exactly.
pub fn write_svmlight<T: Scalar, W: Write>(
    patterns: &[SparsePattern<T>],
    mut out: W,
    zero_based: bool,
) -> Result<()> {
    let offset = usize::from(!zero_based);
    for p in patterns {
        write!(out, "{}", p.label)?;
        for (i, v) in p.features.iter() {
            write!(out, " {}:{}", i + offset, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Immutable view of all patterns together with the augmentation and
/// extension coordinates and the radius `R = max_k ‖y_k‖`.
#[derive(Clone, Debug)]
pub struct TrainingSet<T> {
    patterns: Vec<SparsePattern<T>>,
    rho: T,
    delta: T,
    base_dim: usize,
    radius: T,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(patterns: Vec<SparsePattern<T>>, rho: T, delta: T) -> Result<Self> {
        if patterns.is_empty() {
            return Err(MargitronError::EmptyDataset);
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(invalid("rho", format!("must be positive and finite, got {rho}")));
        }
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(invalid("delta", format!("must be non-negative and finite, got {delta}")));
        }
        let base_dim = patterns.iter().map(|p| p.features.dim()).max().unwrap_or(0);
        let max_base = patterns
            .iter()
            .map(|p| p.base_norm_sq)
            .fold(T::zero(), T::max);
        let radius = (max_base + rho * rho + delta * delta).sqrt();
        Ok(Self {
            patterns,
            rho,
            delta,
            base_dim,
            radius,
        })
    }

    pub fn patterns(&self) -> &[SparsePattern<T>] {
        &self.patterns
    }

    pub fn pattern(&self, k: usize) -> &SparsePattern<T> {
        &self.patterns[k]
    }

    pub fn n(&self) -> usize {
        self.patterns.len()
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// `‖y_k‖² = ‖x_k‖² + ρ² + Δ²`.
    #[inline]
    pub fn y_norm_sq(&self, k: usize) -> T {
        self.patterns[k].base_norm_sq + self.rho * self.rho + self.delta * self.delta
    }

    /// `y_i · y_j` in the reflected, augmented, extended space.
    pub fn gram(&self, i: usize, j: usize) -> T {
        let (pi, pj) = (&self.patterns[i], &self.patterns[j]);
        let sign = pi.label.sign::<T>() * pj.label.sign::<T>();
        let mut g = sign * (pi.features.dot(&pj.features) + self.rho * self.rho);
        if i == j {
            g += self.delta * self.delta;
        }
        g
    }

    /// Dimension of the space the patterns live in: base features, the
    /// augmentation coordinate and, with `Δ > 0`, one extension coordinate
    /// per pattern.
    pub fn effective_dim(&self) -> usize {
        let ext = if self.delta > T::zero() { self.n() } else { 0 };
        self.base_dim + 1 + ext
    }

    pub fn meta(&self) -> crate::engine::SetMeta<T> {
        crate::engine::SetMeta {
            rho: self.rho,
            delta: self.delta,
            base_dim: self.base_dim,
        }
    }
}
