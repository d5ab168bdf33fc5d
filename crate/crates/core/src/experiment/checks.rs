//! Statistical checks of a trial batch against the limit objects.

use serde::Serialize;

use super::config::ChecksConfig;
use super::stats::{ecdf, ks_distance, median_iqr, median_stderr};
use super::TrialBatch;
use crate::error::{Error, Result};
use crate::limit_law::{
    bound_cdf_lower, bound_cdf_upper, bound_constants, frechet_cdf, frechet_quantile,
    limit_order_statistics, BoundConstants,
};
use crate::linear_filter::FilterSpec;
use crate::rng::key1;

/// Quantiles of the lower bound CDF at the given levels.
pub fn quantile_grid(bounds: &BoundConstants, levels: &[f64]) -> Vec<f64> {
    levels
        .iter()
        .map(|&u| frechet_quantile(u, bounds.upper_scale, bounds.alpha))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub x: f64,
    pub empirical: f64,
    pub lower: f64,
    pub upper: f64,
    pub stderr: f64,
    pub tolerance: f64,
    /// `(empirical - lower) / (upper - lower)`; absent when the envelope is a single curve.
    pub position: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub n: usize,
    pub replicates: usize,
    pub lower_scale: f64,
    pub upper_scale: f64,
    pub slack: f64,
    pub z: f64,
    pub points: Vec<EnvelopePoint>,
    pub passed: bool,
}

/// Checks `lower(x) - tol <= F_N(x) <= upper(x) + tol` on `grid`, where
/// `tol = slack + z * sqrt(F (1 - F) / N)` and `F` is the empirical CDF
/// clamped into the envelope.
pub fn envelope_check_values(
    values: &[f64],
    bounds: &BoundConstants,
    grid: &[f64],
    slack: f64,
    z: f64,
) -> Result<EnvelopeReport> {
    let n_rep = values.len();
    let mut points = Vec::with_capacity(grid.len());
    for &x in grid {
        let empirical = ecdf(values, x)?;
        let lower = bound_cdf_lower(x, bounds);
        let upper = bound_cdf_upper(x, bounds);
        let f = empirical.clamp(lower, upper);
        let stderr = (f * (1.0 - f) / n_rep as f64).sqrt();
        let tolerance = slack + z * stderr;
        let width = upper - lower;
        points.push(EnvelopePoint {
            x,
            empirical,
            lower,
            upper,
            stderr,
            tolerance,
            position: (width > 1e-12).then(|| (empirical - lower) / width),
            passed: empirical >= lower - tolerance && empirical <= upper + tolerance,
        });
    }
    Ok(EnvelopeReport {
        n: 0,
        replicates: n_rep,
        lower_scale: bounds.lower_scale,
        upper_scale: bounds.upper_scale,
        slack,
        z,
        passed: points.iter().all(|p| p.passed),
        points,
    })
}

/// Envelope check of `scaled_norm` at the largest sample size of `batch`.
pub fn envelope_check(
    batch: &TrialBatch,
    grid: &[f64],
    slack: f64,
    z: f64,
) -> Result<EnvelopeReport> {
    let n = batch.largest_n().ok_or(Error::EmptySample)?;
    let bounds = bound_constants(&batch.template.filter, batch.template.model.alpha());
    let report = envelope_check_values(&batch.scaled_norms_at(n), &bounds, grid, slack, z)?;
    Ok(EnvelopeReport { n, ..report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsReport {
    pub n: usize,
    pub replicates: usize,
    pub scale: f64,
    pub alpha: f64,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Kolmogorov-Smirnov distance of `values` to `exp(-(x/scale)^{-alpha/2})`.
pub fn ks_check(values: &[f64], scale: f64, alpha: f64, threshold: f64) -> Result<KsReport> {
    let statistic = ks_distance(values, |x| frechet_cdf(x, scale, alpha))?;
    Ok(KsReport {
        n: 0,
        replicates: values.len(),
        scale,
        alpha,
        statistic,
        threshold,
        passed: statistic <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub rank: usize,
    pub empirical_median: f64,
    pub empirical_iqr: f64,
    pub limit_median: f64,
    pub limit_iqr: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStatReport {
    pub n: usize,
    pub replicates: usize,
    pub limit_draws: usize,
    pub z: f64,
    pub ranks: Vec<RankComparison>,
    pub passed: bool,
}

/// Compares the median of the `r`-th largest diagonal statistic with the
/// median of the `r`-th largest limit point, for `r = 1..=k`. Medians agree
/// when they differ by at most `z` combined standard errors, each estimated
/// from its sample's IQR.
pub fn order_stat_check(
    batch: &TrialBatch,
    spec: &FilterSpec,
    k: usize,
    limit_draws: usize,
    z: f64,
) -> Result<OrderStatReport> {
    let n = batch.largest_n().ok_or(Error::EmptySample)?;
    let alpha = batch.template.model.alpha();
    let records: Vec<_> = batch.records_at(n).collect();
    if records.iter().any(|r| r.top.len() < k) {
        return Err(Error::InvalidArgument(format!(
            "records hold fewer than {k} top values"
        )));
    }
    let seed = key1(batch.base_seed, 0x6f72_6465);
    let draws = (0..limit_draws)
        .map(|d| limit_order_statistics(spec, alpha, k, seed.wrapping_add(d as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut ranks = Vec::with_capacity(k);
    for r in 0..k {
        let emp: Vec<f64> = records.iter().map(|rec| rec.top[r]).collect();
        let lim: Vec<f64> = draws.iter().map(|d| d[r]).collect();
        let (em, eiqr) = median_iqr(&emp)?;
        let (lm, liqr) = median_iqr(&lim)?;
        let se_e = median_stderr(eiqr, emp.len());
        let se_l = median_stderr(liqr, lim.len());
        let tolerance = z * (se_e * se_e + se_l * se_l).sqrt();
        ranks.push(RankComparison {
            rank: r + 1,
            empirical_median: em,
            empirical_iqr: eiqr,
            limit_median: lm,
            limit_iqr: liqr,
            tolerance,
            passed: (em - lm).abs() <= tolerance,
        });
    }
    Ok(OrderStatReport {
        n,
        replicates: records.len(),
        limit_draws,
        z,
        passed: ranks.iter().all(|r| r.passed),
        ranks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffdiagReport {
    pub n_values: Vec<usize>,
    pub medians: Vec<f64>,
    pub threshold: f64,
    pub decreasing: bool,
    pub passed: bool,
}

/// Median of `offdiag_dev` per sample size; passes when the medians
/// strictly decrease in `n` and the last one is below `threshold`.
pub fn offdiag_trend_check(batch: &TrialBatch, threshold: f64) -> Result<OffdiagReport> {
    let mut n_values = batch.n_values.clone();
    n_values.sort_unstable();
    n_values.dedup();
    let medians = n_values
        .iter()
        .map(|&n| {
            let v: Vec<f64> = batch.records_at(n).map(|r| r.offdiag_dev).collect();
            median_iqr(&v).map(|(m, _)| m)
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let last = *medians.last().ok_or(Error::EmptySample)?;
    Ok(OffdiagReport {
        n_values,
        medians,
        threshold,
        decreasing,
        passed: decreasing && last < threshold,
    })
}

/// Every enabled check; `ks` runs only when the bound laws coincide.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSuite {
    pub envelope: Option<EnvelopeReport>,
    pub ks: Option<KsReport>,
    pub order_stats: Option<OrderStatReport>,
    pub offdiag: Option<OffdiagReport>,
    pub passed: bool,
}

impl CheckSuite {
    pub fn run(batch: &TrialBatch, cfg: &ChecksConfig) -> Result<Self> {
        let alpha = batch.template.model.alpha();
        let bounds = bound_constants(&batch.template.filter, alpha);
        let largest = batch.largest_n().ok_or(Error::EmptySample)?;

        let envelope = if cfg.envelope {
            let grid = quantile_grid(&bounds, &cfg.grid_levels);
            Some(envelope_check(batch, &grid, cfg.slack, cfg.z)?)
        } else {
            None
        };
        let ks = if cfg.ks && bounds.is_degenerate() {
            let r = ks_check(
                &batch.scaled_norms_at(largest),
                bounds.lower_scale,
                alpha,
                cfg.ks_threshold,
            )?;
            Some(KsReport { n: largest, ..r })
        } else {
            None
        };
        let order_stats = if cfg.order_stats {
            let k = cfg.order_k.unwrap_or(batch.top_k).min(batch.top_k);
            Some(order_stat_check(
                batch,
                &batch.template.filter,
                k,
                cfg.limit_draws,
                cfg.order_z,
            )?)
        } else {
            None
        };
        let offdiag = if cfg.offdiag {
            Some(offdiag_trend_check(batch, cfg.offdiag_threshold)?)
        } else {
            None
        };

        let passed = envelope.as_ref().is_none_or(|r| r.passed)
            && ks.as_ref().is_none_or(|r| r.passed)
            && order_stats.as_ref().is_none_or(|r| r.passed)
            && offdiag.as_ref().is_none_or(|r| r.passed);
        Ok(Self {
            envelope,
            ks,
            order_stats,
            offdiag,
            passed,
        })
    }
}
