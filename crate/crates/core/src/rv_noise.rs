//! Regularly varying noise: samplers, exact tail functionals and the norming
//! constants `a_m` solving `m P(|Z| > a_m) = 1`.

use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::{key2, KeyedRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Pareto magnitude with a fair random sign.
    ParetoSymmetric,
    /// Plain Pareto, all mass on the right.
    ParetoPositive,
    /// Pareto magnitude, positive with probability `q`.
    ParetoSkewed,
    /// Student t with `alpha` degrees of freedom, multiplied by `scale`.
    StudentT,
}

impl Family {
    pub fn is_pareto(self) -> bool {
        !matches!(self, Family::StudentT)
    }
}

#[derive(Debug, Deserialize)]
struct RawTailModel {
    family: Family,
    alpha: f64,
    #[serde(default)]
    q: Option<f64>,
    #[serde(default = "default_scale")]
    scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

/// A regularly varying distribution with tail index `alpha`, right-tail
/// balance `q` and a scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTailModel")]
pub struct TailModel {
    family: Family,
    alpha: f64,
    q: f64,
    scale: f64,
}

impl TryFrom<RawTailModel> for TailModel {
    type Error = Error;

    fn try_from(raw: RawTailModel) -> Result<Self> {
        let q = match (raw.family, raw.q) {
            (Family::ParetoSymmetric | Family::StudentT, None) => 0.5,
            (Family::ParetoPositive, None) => 1.0,
            (Family::ParetoSkewed, None) => {
                return Err(Error::InvalidModel("pareto_skewed requires q".into()))
            }
            (_, Some(q)) => q,
        };
        TailModel::new(raw.family, raw.alpha, q, raw.scale)
    }
}

/// `E(Z^2)`, which is infinite for `alpha <= 2` in every supported family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondMoment {
    Finite(f64),
    Infinite,
}

impl SecondMoment {
    pub fn is_finite(self) -> bool {
        matches!(self, SecondMoment::Finite(_))
    }
}

impl TailModel {
    pub fn new(family: Family, alpha: f64, q: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 4.0) {
            return Err(Error::InvalidModel(format!(
                "alpha = {alpha} must lie in (0, 4)"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "scale = {scale} must be positive"
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidModel(format!("q = {q} must lie in [0, 1]")));
        }
        match family {
            Family::ParetoSymmetric | Family::StudentT if q != 0.5 => Err(Error::InvalidModel(
                format!("{family:?} has q = 1/2, got {q}"),
            )),
            Family::ParetoPositive if q != 1.0 => Err(Error::InvalidModel(format!(
                "pareto_positive has q = 1, got {q}"
            ))),
            _ => Ok(Self {
                family,
                alpha,
                q,
                scale,
            }),
        }
    }

    pub fn pareto_symmetric(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(Family::ParetoSymmetric, alpha, 0.5, scale)
    }

    pub fn pareto_positive(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(Family::ParetoPositive, alpha, 1.0, scale)
    }

    pub fn pareto_skewed(alpha: f64, q: f64, scale: f64) -> Result<Self> {
        Self::new(Family::ParetoSkewed, alpha, q, scale)
    }

    pub fn student_t(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(Family::StudentT, alpha, 0.5, scale)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Returns a copy with a different tail index, keeping family, q and scale.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.family, alpha, self.q, self.scale)
    }

    /// Exact `P(|Z| > x)`.
    pub fn tail_abs(&self, x: f64) -> f64 {
        if self.family.is_pareto() {
            if x < self.scale {
                1.0
            } else {
                (self.scale / x).powf(self.alpha)
            }
        } else {
            if x <= 0.0 {
                return 1.0;
            }
            let nu = self.alpha;
            let y = x / self.scale;
            beta_reg(nu / 2.0, 0.5, nu / (nu + y * y))
        }
    }

    /// Exact `P(Z > x)` for `x >= 0`.
    pub fn tail_right(&self, x: f64) -> f64 {
        self.q * self.tail_abs(x)
    }

    /// Exact `P(Z < -x)` for `x >= 0`.
    pub fn tail_left(&self, x: f64) -> f64 {
        (1.0 - self.q) * self.tail_abs(x)
    }

    /// Mean of `Z`, `None` when it does not exist (`alpha <= 1`).
    pub fn mean(&self) -> Option<f64> {
        if self.alpha <= 1.0 {
            return None;
        }
        let pareto_mean = self.alpha * self.scale / (self.alpha - 1.0);
        Some(match self.family {
            Family::ParetoSymmetric | Family::StudentT => 0.0,
            Family::ParetoPositive => pareto_mean,
            Family::ParetoSkewed => (2.0 * self.q - 1.0) * pareto_mean,
        })
    }

    /// Whether the law is centered (symmetric about zero).
    pub fn has_zero_mean(&self) -> bool {
        match self.family {
            Family::ParetoSymmetric | Family::StudentT => true,
            Family::ParetoSkewed => self.q == 0.5,
            Family::ParetoPositive => false,
        }
    }

    /// Draw for logical index `(i, t)`; a pure function of `(seed, i, t)`.
    pub fn sample_at(&self, seed: u64, i: i64, t: i64) -> f64 {
        let mut rng = KeyedRng::new(key2(seed, i, t));
        match self.family {
            Family::StudentT => {
                // alpha > 0 was checked at construction
                let dist = StudentT::new(self.alpha).expect("positive degrees of freedom");
                self.scale * dist.sample(&mut rng)
            }
            _ => {
                let u = rng.next_open_closed01();
                let magnitude = self.scale * u.powf(-1.0 / self.alpha);
                let positive = match self.family {
                    Family::ParetoPositive => true,
                    _ => rng.next_open_closed01() <= self.q,
                };
                if positive {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// Half-open logical index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub start: i64,
    pub end: i64,
}

impl IndexRange {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    /// Closed interval `[lo, hi]`.
    pub fn inclusive(lo: i64, hi: i64) -> Self {
        Self {
            start: lo,
            end: hi + 1,
        }
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, i: i64) -> bool {
        self.start <= i && i < self.end
    }

    pub fn covers(&self, other: &IndexRange) -> bool {
        other.is_empty() || (self.start <= other.start && other.end <= self.end)
    }
}

/// iid noise on a rectangle of logical indices.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePanel {
    values: Vec<f64>,
    rows: IndexRange,
    cols: IndexRange,
    seed: u64,
}

impl NoisePanel {
    /// Builds a panel from row-major values with the given logical offsets.
    pub fn from_values(
        values: Vec<f64>,
        row_offset: i64,
        n_rows: usize,
        col_offset: i64,
        n_cols: usize,
    ) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_rows}x{n_cols} panel",
                values.len()
            )));
        }
        Ok(Self {
            values,
            rows: IndexRange::new(row_offset, row_offset + n_rows as i64),
            cols: IndexRange::new(col_offset, col_offset + n_cols as i64),
            seed: 0,
        })
    }

    pub fn row_range(&self) -> IndexRange {
        self.rows
    }

    pub fn col_range(&self) -> IndexRange {
        self.cols
    }

    pub fn row_offset(&self) -> i64 {
        self.rows.start
    }

    pub fn col_offset(&self) -> i64 {
        self.cols.start
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Logical access `Z_{i,t}`.
    pub fn get(&self, i: i64, t: i64) -> Result<f64> {
        if !self.rows.contains(i) || !self.cols.contains(t) {
            return Err(Error::OutOfPanel {
                row: i,
                col: t,
                row_lo: self.rows.start,
                row_hi: self.rows.end,
                col_lo: self.cols.start,
                col_hi: self.cols.end,
            });
        }
        Ok(self.get_unchecked(i, t))
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, i: i64, t: i64) -> f64 {
        let r = (i - self.rows.start) as usize;
        let c = (t - self.cols.start) as usize;
        self.values[r * self.cols.len() + c]
    }

    /// Row `i` as a slice over the full column range.
    pub(crate) fn row_slice(&self, i: i64) -> &[f64] {
        let r = (i - self.rows.start) as usize;
        let w = self.cols.len();
        &self.values[r * w..(r + 1) * w]
    }

    pub(crate) fn ensure_covers(&self, rows: IndexRange, cols: IndexRange) -> Result<()> {
        if self.rows.covers(&rows) && self.cols.covers(&cols) {
            Ok(())
        } else {
            Err(Error::InsufficientCoverage {
                need_rows: (rows.start, rows.end - 1),
                need_cols: (cols.start, cols.end - 1),
                have_rows: (self.rows.start, self.rows.end - 1),
                have_cols: (self.cols.start, self.cols.end - 1),
            })
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Fills the logical rectangle `rows x cols` with iid draws from `model`.
///
/// Entry `(i, t)` depends only on `(seed, i, t)`.
pub fn sample_noise(
    model: &TailModel,
    rows: IndexRange,
    cols: IndexRange,
    seed: u64,
) -> Result<NoisePanel> {
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    for i in rows.start..rows.end {
        values.extend((cols.start..cols.end).map(|t| model.sample_at(seed, i, t)));
    }
    Ok(NoisePanel {
        values,
        rows,
        cols,
        seed,
    })
}

/// Solution `a` of `m P(|Z| > a) = 1`.
///
/// Closed form `scale * m^(1/alpha)` for the Pareto families; for the
/// Student t family the exact quantile equation is solved by bisection in
/// log scale to a relative tolerance well below 1e-10.
pub fn norming_constant(model: &TailModel, m: u64) -> f64 {
    let m = m.max(1) as f64;
    if model.family.is_pareto() {
        return model.scale * m.powf(1.0 / model.alpha);
    }
    if m == 1.0 {
        // P(|T| > 0) = 1
        return 0.0;
    }
    let target = 1.0 / m;
    let mut hi = model.scale;
    while model.tail_abs(hi) > target {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while model.tail_abs(lo) <= target {
        lo /= 2.0;
    }
    // tail(lo) > target >= tail(hi)
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if model.tail_abs(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    (lo * hi).sqrt()
}

/// `E(Z^2)`.
pub fn second_moment(model: &TailModel) -> SecondMoment {
    if model.alpha <= 2.0 {
        return SecondMoment::Infinite;
    }
    // Pareto: alpha s^2 / (alpha - 2); Student t with nu = alpha: nu s^2 / (nu - 2).
    let s2 = model.scale * model.scale;
    SecondMoment::Finite(s2 * model.alpha / (model.alpha - 2.0))
}

/// `E(Z^2 1{Z^2 <= cutoff^2})`.
pub fn truncated_second_moment(model: &TailModel, cutoff: f64) -> f64 {
    if cutoff.is_infinite() {
        return match second_moment(model) {
            SecondMoment::Finite(v) => v,
            SecondMoment::Infinite => f64::INFINITY,
        };
    }
    if cutoff <= 0.0 {
        return 0.0;
    }
    let (a, s) = (model.alpha, model.scale);
    if model.family.is_pareto() {
        if cutoff <= s {
            return 0.0;
        }
        // alpha s^alpha * int_s^c x^(1-alpha) dx
        if (a - 2.0).abs() < 1e-12 {
            2.0 * s * s * (cutoff / s).ln()
        } else {
            a * s * s * ((cutoff / s).powf(2.0 - a) - 1.0) / (2.0 - a)
        }
    } else {
        let nu = a;
        let log_norm = ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI).ln();
        let integrand = |x: f64| x * x * (log_norm - (nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).exp();
        s * s * 2.0 * integrate_dyadic(integrand, cutoff / s, 1e-10)
    }
}

/// Integral of `f` over `[0, b]`, split on the dyadic grid 0, 1, 2, 4, ...
/// and integrated piecewise with adaptive Simpson.
pub(crate) fn integrate_dyadic<F: Fn(f64) -> f64>(f: F, b: f64, rel_tol: f64) -> f64 {
    let mut knots = vec![0.0];
    let mut x = 1.0;
    while x < b {
        knots.push(x);
        x *= 2.0;
    }
    knots.push(b);
    knots
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], rel_tol))
        .sum()
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}
