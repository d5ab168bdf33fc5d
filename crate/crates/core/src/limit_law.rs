//! Limit objects: the two Fréchet-type bound laws for `a_np^{-2} ||S||_2`,
//! the Poisson arrival sequence `Gamma_i`, the point-process order
//! statistics of the moving-averaged diagonal, and the MA(1) constants.

use crate::error::{Error, Result};
use crate::linear_filter::FilterSpec;
use crate::rng::{key1, open_closed01};

/// Scales `M` of the bound laws `P(Gamma_1^{-2/alpha} M <= x) = exp(-(x/M)^{-alpha/2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `max_k theta_k^2 * sum_j c_j^2`
    pub lower_scale: f64,
    /// `max_l |theta_l| * sum_k |theta_k| * sum_j c_j^2`
    pub upper_scale: f64,
    pub alpha: f64,
}

impl BoundConstants {
    pub fn is_degenerate(&self) -> bool {
        self.lower_scale == self.upper_scale
    }
}

pub fn bound_constants(spec: &FilterSpec, alpha: f64) -> BoundConstants {
    let c2 = spec.c.sq_sum();
    let max_abs = spec.theta.max_abs();
    BoundConstants {
        lower_scale: max_abs * max_abs * c2,
        upper_scale: max_abs * spec.theta.abs_sum() * c2,
        alpha,
    }
}

/// `P(Gamma_1^{-2/alpha} scale <= x)`.
pub fn frechet_cdf(x: f64, scale: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    (-(x / scale).powf(-alpha / 2.0)).exp()
}

/// Quantile of [`frechet_cdf`] at level `u` in (0, 1).
pub fn frechet_quantile(u: f64, scale: f64, alpha: f64) -> f64 {
    scale * (-u.ln()).powf(-2.0 / alpha)
}

/// The smaller bound CDF, `exp(-x^{-alpha/2} upper_scale^{alpha/2})`.
pub fn bound_cdf_lower(x: f64, b: &BoundConstants) -> f64 {
    frechet_cdf(x, b.upper_scale, b.alpha)
}

/// The larger bound CDF, `exp(-x^{-alpha/2} lower_scale^{alpha/2})`.
pub fn bound_cdf_upper(x: f64, b: &BoundConstants) -> f64 {
    frechet_cdf(x, b.lower_scale, b.alpha)
}

/// Arrival times of a unit-rate Poisson process.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSeq {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Lazily extends `Gamma_1 < Gamma_2 < ...` for one seed.
struct GammaStream {
    seed: u64,
    next: u64,
    current: f64,
}

impl GammaStream {
    fn new(seed: u64) -> Self {
        Self {
            seed,
            next: 0,
            current: 0.0,
        }
    }
}

impl Iterator for GammaStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let u = open_closed01(key1(self.seed, self.next));
        self.next += 1;
        self.current -= u.ln();
        Some(self.current)
    }
}

/// First `k` arrival times; deterministic given `seed`.
pub fn sample_gamma(k: usize, seed: u64) -> GammaSeq {
    GammaSeq {
        values: GammaStream::new(seed).take(k).collect(),
        seed,
    }
}

/// One draw of the `k` largest points of
/// `sum_i sum_l delta(Gamma_i^{-2/alpha} theta_l sum_j c_j^2)`, in decreasing order.
///
/// Arrivals are generated until `Gamma_K^{-2/alpha} max_l theta_l sum c^2`
/// falls below the current k-th largest point; since the arrival weights
/// decrease, no later point can enter the top `k`.
pub fn limit_order_statistics(
    spec: &FilterSpec,
    alpha: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let theta = &spec.theta;
    let c_sq_sum = spec.c.sq_sum();
    let top_weight = theta.max_value() * c_sq_sum;
    if top_weight.is_nan() || top_weight <= 0.0 {
        return Err(Error::InvalidArgument(
            "order statistics need a positive coefficient in theta".into(),
        ));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = theta.values().iter().map(|t| t * c_sq_sum).collect();
    let mut top: Vec<f64> = Vec::with_capacity(k + weights.len());
    for gamma in GammaStream::new(seed) {
        let base = gamma.powf(-2.0 / alpha);
        if top.len() >= k && base * top_weight < top[k - 1] {
            break;
        }
        top.extend(weights.iter().map(|w| base * w));
        top.sort_by(|a, b| b.total_cmp(a));
        top.truncate(k);
    }
    Ok(top)
}

/// `(max{1, theta^2}, max{1 + |theta|, |theta| + theta^2})`: scales of the
/// MA(1) lower and upper limits.
pub fn ma1_constants(theta: f64) -> (f64, f64) {
    let t2 = theta * theta;
    (1f64.max(t2), (1.0 + theta.abs()).max(theta.abs() + t2))
}
