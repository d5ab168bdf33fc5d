//! Coefficient sequences and the separable two-dimensional linear filter
//! `Xhat_{it} = sum_j sum_k c_j theta_k Z_{i-k, t-j}`.
//!
//! All sequences live on finite lag windows, so every filter output is an
//! exact finite sum. Convolutions are plain nested loops over the window.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rv_noise::{IndexRange, NoisePanel};

#[derive(Debug, Deserialize)]
struct RawSequence {
    #[serde(default)]
    min_lag: i64,
    values: Vec<f64>,
    #[serde(default)]
    name: String,
}

/// A real sequence supported on the lags `min_lag .. min_lag + len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct CoefficientSequence {
    min_lag: i64,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    name: String,
    #[serde(skip)]
    abs_sum: f64,
    #[serde(skip)]
    sq_sum: f64,
}

impl TryFrom<RawSequence> for CoefficientSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        Self::new(raw.values, raw.min_lag).map(|s| s.named(raw.name))
    }
}

impl CoefficientSequence {
    pub fn new(values: Vec<f64>, min_lag: i64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidCoefficients("empty window".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoefficients("non-finite coefficient".into()));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidCoefficients(
                "all coefficients are zero".into(),
            ));
        }
        let abs_sum = values.iter().map(|v| v.abs()).sum();
        let sq_sum = values.iter().map(|v| v * v).sum();
        Ok(Self {
            min_lag,
            values,
            name: String::new(),
            abs_sum,
            sq_sum,
        })
    }

    /// Single coefficient `value` at lag 0.
    pub fn spike(value: f64) -> Result<Self> {
        Self::new(vec![value], 0)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_lag(&self) -> i64 {
        self.min_lag
    }

    pub fn max_lag(&self) -> i64 {
        self.min_lag + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coefficient at `lag`, zero outside the window.
    pub fn get(&self, lag: i64) -> f64 {
        if lag < self.min_lag || lag > self.max_lag() {
            0.0
        } else {
            self.values[(lag - self.min_lag) as usize]
        }
    }

    /// `(lag, value)` pairs over the window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(o, &v)| (self.min_lag + o as i64, v))
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }

    pub fn sq_sum(&self) -> f64 {
        self.sq_sum
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of nonzero coefficients.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * s).collect(), self.min_lag)
            .map(|seq| seq.named(self.name.clone()))
    }
}

/// `sum_k |v_k|^delta` over the window.
pub fn delta_norm(seq: &CoefficientSequence, delta: f64) -> f64 {
    seq.values()
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().powf(delta))
        .sum()
}

/// An infinite coefficient rule together with a bound on its absolute tail.
pub trait CoefficientRule {
    fn coefficient(&self, lag: i64) -> f64;

    /// Whether the rule has mass on negative lags (window `-J..=J`) or only
    /// on `0..=J`.
    fn two_sided(&self) -> bool;

    /// Upper bound on the absolute mass dropped by keeping lags up to `last`
    /// (both sides for two-sided rules). `None` if the rule is not summable.
    fn tail_bound(&self, last: u64) -> Option<f64>;
}

/// Built-in summable families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientFamily {
    /// `amplitude * ratio^|j|`.
    Geometric {
        amplitude: f64,
        ratio: f64,
        two_sided: bool,
    },
    /// `amplitude * (1 + |j|)^(-exponent)`.
    Polynomial {
        amplitude: f64,
        exponent: f64,
        two_sided: bool,
    },
}

impl CoefficientRule for CoefficientFamily {
    fn coefficient(&self, lag: i64) -> f64 {
        let lag_ok = self.two_sided() || lag >= 0;
        if !lag_ok {
            return 0.0;
        }
        let j = lag.unsigned_abs() as f64;
        match *self {
            CoefficientFamily::Geometric {
                amplitude, ratio, ..
            } => amplitude * ratio.powf(j),
            CoefficientFamily::Polynomial {
                amplitude,
                exponent,
                ..
            } => amplitude * (1.0 + j).powf(-exponent),
        }
    }

    fn two_sided(&self) -> bool {
        match *self {
            CoefficientFamily::Geometric { two_sided, .. }
            | CoefficientFamily::Polynomial { two_sided, .. } => two_sided,
        }
    }

    fn tail_bound(&self, last: u64) -> Option<f64> {
        let sides = if self.two_sided() { 2.0 } else { 1.0 };
        let next = (last + 1) as f64;
        match *self {
            CoefficientFamily::Geometric {
                amplitude, ratio, ..
            } => {
                let r = ratio.abs();
                (r < 1.0).then(|| sides * amplitude.abs() * r.powf(next) / (1.0 - r))
            }
            CoefficientFamily::Polynomial {
                amplitude,
                exponent,
                ..
            } => {
                // sum_{j > J} (1 + j)^-s <= int_{J+1}^inf x^-s dx
                (exponent > 1.0)
                    .then(|| sides * amplitude.abs() * next.powf(1.0 - exponent) / (exponent - 1.0))
            }
        }
    }
}

/// Finite window kept by [`truncate_family`] and the bound on what was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub sequence: CoefficientSequence,
    pub dropped_abs_bound: f64,
}

const MAX_TRUNCATION_LAG: u64 = 1 << 24;

/// Smallest window `0..=J` (or `-J..=J`) whose dropped absolute mass is
/// below `epsilon`.
pub fn truncate_family<R: CoefficientRule + ?Sized>(rule: &R, epsilon: f64) -> Result<Truncation> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let mut last = 0u64;
    let bound = loop {
        let Some(bound) = rule.tail_bound(last) else {
            return Err(Error::NotSummable("absolute tail sum diverges".into()));
        };
        if bound < epsilon {
            break bound;
        }
        last += 1;
        if last > MAX_TRUNCATION_LAG {
            return Err(Error::NotSummable(format!(
                "no window up to lag {MAX_TRUNCATION_LAG} reaches epsilon = {epsilon}"
            )));
        }
    };
    let last = last as i64;
    let first = if rule.two_sided() { -last } else { 0 };
    let values = (first..=last).map(|lag| rule.coefficient(lag)).collect();
    Ok(Truncation {
        sequence: CoefficientSequence::new(values, first)?,
        dropped_abs_bound: bound,
    })
}

/// Time-direction sequence `c` and row-direction sequence `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub c: CoefficientSequence,
    pub theta: CoefficientSequence,
    pub delta: f64,
}

impl FilterSpec {
    pub fn new(c: CoefficientSequence, theta: CoefficientSequence, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta = {delta} must lie in (0, 1)"
            )));
        }
        Ok(Self { c, theta, delta })
    }

    /// Noise rows needed for output rows `rows`.
    pub fn noise_rows(&self, rows: IndexRange) -> IndexRange {
        lagged_range(rows, &self.theta)
    }

    /// Noise columns needed for output columns `cols`.
    pub fn noise_cols(&self, cols: IndexRange) -> IndexRange {
        lagged_range(cols, &self.c)
    }
}

/// Input indices touched by `out - lag` for every lag in `seq`.
pub fn lagged_range(out: IndexRange, seq: &CoefficientSequence) -> IndexRange {
    IndexRange::new(out.start - seq.max_lag(), out.end - seq.min_lag())
}

/// `xi_{it} = sum_k theta_k Z_{i-k, t}` for `i` in `rows`, `t` in `cols`.
pub fn build_xi(
    noise: &NoisePanel,
    theta: &CoefficientSequence,
    rows: IndexRange,
    cols: IndexRange,
) -> Result<DMatrix<f64>> {
    nonempty(rows, cols)?;
    noise.ensure_covers(lagged_range(rows, theta), cols)?;
    let width = cols.len();
    let col_skip = (cols.start - noise.col_offset()) as usize;
    let mut out = vec![0.0; rows.len() * width];
    for (r, i) in (rows.start..rows.end).enumerate() {
        let dst = &mut out[r * width..(r + 1) * width];
        for (k, th) in theta.iter().filter(|(_, v)| *v != 0.0) {
            let src = &noise.row_slice(i - k)[col_skip..col_skip + width];
            for (d, z) in dst.iter_mut().zip(src) {
                *d += th * z;
            }
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), width, &out))
}

/// `X_{it} = sum_j c_j Z_{i, t-j}` for `i` in `rows`, `t` in `cols`.
pub fn build_row_process(
    noise: &NoisePanel,
    c: &CoefficientSequence,
    rows: IndexRange,
    cols: IndexRange,
) -> Result<DMatrix<f64>> {
    nonempty(rows, cols)?;
    noise.ensure_covers(rows, lagged_range(cols, c))?;
    let width = cols.len();
    let mut out = vec![0.0; rows.len() * width];
    for (r, i) in (rows.start..rows.end).enumerate() {
        let src = noise.row_slice(i);
        time_filter_row(
            src,
            noise.col_offset(),
            c,
            cols,
            &mut out[r * width..(r + 1) * width],
        );
    }
    Ok(DMatrix::from_row_slice(rows.len(), width, &out))
}

/// The `p x n` matrix `Xhat` on rows `1..=p`, columns `1..=n`, built as the
/// row-direction filter `xi` followed by the time filter `c`.
pub fn build_xhat(
    noise: &NoisePanel,
    spec: &FilterSpec,
    p: usize,
    n: usize,
) -> Result<DMatrix<f64>> {
    let rows = IndexRange::new(1, p as i64 + 1);
    let cols = IndexRange::new(1, n as i64 + 1);
    nonempty(rows, cols)?;
    noise.ensure_covers(spec.noise_rows(rows), spec.noise_cols(cols))?;
    let xi_cols = spec.noise_cols(cols);
    let xi = build_xi(noise, &spec.theta, rows, xi_cols)?;
    let xi_width = xi_cols.len();
    let mut out = vec![0.0; p * n];
    let mut xi_row = vec![0.0; xi_width];
    for r in 0..p {
        for (dst, src) in xi_row.iter_mut().zip(xi.row(r).iter()) {
            *dst = *src;
        }
        time_filter_row(
            &xi_row,
            xi_cols.start,
            &spec.c,
            cols,
            &mut out[r * n..(r + 1) * n],
        );
    }
    Ok(DMatrix::from_row_slice(p, n, &out))
}

/// `dst[t] = sum_j c_j src[t - j]` where `src[0]` sits at logical column `src_start`.
fn time_filter_row(
    src: &[f64],
    src_start: i64,
    c: &CoefficientSequence,
    cols: IndexRange,
    dst: &mut [f64],
) {
    let width = cols.len();
    for (j, cj) in c.iter().filter(|(_, v)| *v != 0.0) {
        let offset = (cols.start - j - src_start) as usize;
        for (d, z) in dst.iter_mut().zip(&src[offset..offset + width]) {
            *d += cj * z;
        }
    }
}

fn nonempty(rows: IndexRange, cols: IndexRange) -> Result<()> {
    if rows.is_empty() || cols.is_empty() {
        Err(Error::EmptyRange)
    } else {
        Ok(())
    }
}
