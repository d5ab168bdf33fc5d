//! Monte Carlo harness: admissibility checks, single trials, batches, and
//! the statistical checks run on their output.

mod checks;
mod config;
mod report;
mod stats;

pub use checks::{
    envelope_check, envelope_check_values, ks_check, offdiag_trend_check, order_stat_check,
    quantile_grid, CheckSuite, EnvelopePoint, EnvelopeReport, KsReport, OffdiagReport,
    OrderStatReport, RankComparison,
};
pub use config::{ChecksConfig, ExperimentConfig, Overrides};
pub use report::{checks_json, emit_report, read_trials_csv, trials_csv, write_trials_csv};
pub use stats::{ecdf, ks_distance, median_iqr, median_stderr, quantile_sorted};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear_filter::{build_row_process, build_xhat, FilterSpec};
use crate::rv_noise::{norming_constant, sample_noise, IndexRange, TailModel};
use crate::spectral::{
    centered_covariance, centered_gram_diag, hdh_matrix, ma1_h, mu_x_alpha, offdiag_deviation,
    spectral_norm, CenteringSpec, DEFAULT_REL_TOL,
};

/// Largest admissible growth exponent `beta` in `p_n = O(n^beta)` for tail
/// index `alpha`; `f64::INFINITY` when every `beta` is admissible.
pub fn beta_limit(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 4.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(if alpha <= 1.0 {
        f64::INFINITY
    } else if alpha < 2.0 {
        ((2.0 - alpha) / (alpha - 1.0)).max(0.5)
    } else if alpha < 3.0 {
        ((4.0 - alpha) / (4.0 * (alpha - 1.0))).max(1.0 / 3.0)
    } else {
        (4.0 - alpha) / (3.0 * alpha - 4.0)
    })
}

/// `p = round(constant * n^beta)`, at least 1 and at most `max_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionRule {
    pub beta: f64,
    #[serde(rename = "const")]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_p: Option<usize>,
}

impl DimensionRule {
    pub fn new(beta: f64, constant: f64) -> Self {
        Self {
            beta,
            constant,
            max_p: None,
        }
    }

    pub fn capped(mut self, max_p: usize) -> Self {
        self.max_p = Some(max_p);
        self
    }

    pub fn p_for(&self, n: usize) -> usize {
        let p = (self.constant * (n as f64).powf(self.beta))
            .round()
            .max(1.0) as usize;
        self.max_p.map_or(p, |cap| p.min(cap))
    }
}

/// Everything needed for one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: TailModel,
    pub filter: FilterSpec,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
}

/// Model and filter shared by all replicates of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTemplate {
    pub model: TailModel,
    pub filter: FilterSpec,
}

impl EnsembleTemplate {
    pub fn at(&self, p: usize, n: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            model: self.model,
            filter: self.filter.clone(),
            p,
            n,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Signed distance to the boundary of the hypothesis, when it has one.
    pub margin: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn ensure(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        let msg: Vec<String> = self
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(Error::Validation(msg.join("; ")))
    }
}

fn check(name: &'static str, margin: Option<f64>, passed: bool, detail: String) -> HypothesisCheck {
    HypothesisCheck {
        name,
        passed,
        margin,
        detail,
    }
}

/// Checks every hypothesis of the limit theorem for one ensemble.
pub fn validate(spec: &EnsembleSpec, rule: &DimensionRule) -> ValidationReport {
    let alpha = spec.model.alpha();
    let delta = spec.filter.delta;
    let mut checks = Vec::new();

    let m = alpha.min(4.0 - alpha);
    checks.push(check(
        "alpha_range",
        Some(m),
        m > 0.0,
        format!("alpha = {alpha} in (0, 4)"),
    ));

    let bound = alpha.min(1.0);
    checks.push(check(
        "delta",
        Some(bound - delta),
        delta > 0.0 && delta < bound,
        format!("delta = {delta} < min(alpha, 1) = {bound}"),
    ));

    let c_norm = crate::linear_filter::delta_norm(&spec.filter.c, delta);
    let t_norm = crate::linear_filter::delta_norm(&spec.filter.theta, delta);
    checks.push(check(
        "delta_summability",
        None,
        c_norm.is_finite() && t_norm.is_finite(),
        format!("sum |c|^delta = {c_norm}, sum |theta|^delta = {t_norm}"),
    ));

    match beta_limit(alpha) {
        Ok(limit) => checks.push(check(
            "beta",
            Some(limit - rule.beta),
            rule.beta > 0.0 && rule.beta < limit,
            format!("beta = {} < beta_limit({alpha}) = {limit}", rule.beta),
        )),
        Err(e) => checks.push(check("beta", None, false, e.to_string())),
    }

    let needs_centering = alpha > 5.0 / 3.0;
    let zero_mean = spec.model.has_zero_mean();
    checks.push(check(
        "zero_mean",
        None,
        !needs_centering || zero_mean,
        if needs_centering {
            format!(
                "alpha = {alpha} > 5/3 requires zero mean; model mean = {:?}",
                spec.model.mean()
            )
        } else {
            "not required for alpha <= 5/3".into()
        },
    ));
    // every supported family has exact tail balance q
    checks.push(check(
        "tail_balance",
        None,
        true,
        format!("P(Z > x) / P(|Z| > x) = q = {}", spec.model.q()),
    ));

    checks.push(check(
        "dimensions",
        None,
        spec.p >= 1 && spec.n >= 1,
        format!("p = {}, n = {}", spec.p, spec.n),
    ));

    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

/// Per-replicate output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub p: usize,
    pub replicate: usize,
    pub seed: u64,
    pub a_np: f64,
    /// `a_np^{-2} ||S||_2`
    pub scaled_norm: f64,
    /// `a_np^{-2} ||X X^T - D||_2` for the row process `X`.
    pub offdiag_dev: f64,
    /// Largest values of `a_np^{-2} sum_k theta_k Dtilde_{i-k}`, decreasing.
    pub top: Vec<f64>,
}

/// Matrices of one replicate, before reduction to scalars.
#[derive(Debug, Clone)]
pub struct TrialMatrices {
    pub a_np: f64,
    pub mu: f64,
    pub xhat: DMatrix<f64>,
    /// Row process `X` on the rows `xrows` (all rows touched by `theta`).
    pub x: DMatrix<f64>,
    pub xrows: IndexRange,
}

/// Draws the noise panel for `spec` and builds `Xhat`, the row process and
/// the centering constants.
pub fn build_trial(spec: &EnsembleSpec) -> Result<TrialMatrices> {
    if spec.p == 0 || spec.n == 0 {
        return Err(Error::InvalidArgument("p and n must be at least 1".into()));
    }
    let out_rows = IndexRange::new(1, spec.p as i64 + 1);
    let out_cols = IndexRange::new(1, spec.n as i64 + 1);
    let xrows = spec.filter.noise_rows(out_rows);
    let noise = sample_noise(
        &spec.model,
        xrows,
        spec.filter.noise_cols(out_cols),
        spec.seed,
    )?;
    let xhat = build_xhat(&noise, &spec.filter, spec.p, spec.n)?;
    let x = build_row_process(&noise, &spec.filter.c, xrows, out_cols)?;
    let a_np = norming_constant(&spec.model, (spec.n as u64) * (spec.p as u64));
    if a_np.is_nan() || a_np <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "norming constant a_np = {a_np} is not positive"
        )));
    }
    let mu = mu_x_alpha(&spec.model, &spec.filter.c, a_np);
    Ok(TrialMatrices {
        a_np,
        mu,
        xhat,
        x,
        xrows,
    })
}

/// One replicate: `a_np^{-2} ||S||_2`, the off-diagonal deviation and the
/// top `top_k` moving-averaged centered diagonal statistics.
pub fn run_trial(spec: &EnsembleSpec, top_k: usize) -> Result<TrialRecord> {
    let m = build_trial(spec)?;
    let scale = m.a_np * m.a_np;
    let centering = CenteringSpec::new(&spec.filter.theta, spec.p, spec.n, m.mu)?;
    let s = centered_covariance(&m.xhat, &centering)?;
    let scaled_norm = spectral_norm(&s, DEFAULT_REL_TOL)? / scale;
    let offdiag_dev = offdiag_deviation(&m.x, m.a_np)?;

    let dtilde = centered_gram_diag(&m.x, m.mu);
    let absolute = spec.model.alpha() >= 2.0;
    let mut w: Vec<f64> = (1..=spec.p as i64)
        .map(|i| {
            let v: f64 = spec
                .filter
                .theta
                .iter()
                .map(|(k, th)| th * dtilde[(i - k - m.xrows.start) as usize])
                .sum();
            if absolute {
                v.abs()
            } else {
                v
            }
        })
        .map(|v| v / scale)
        .collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w.truncate(top_k);

    Ok(TrialRecord {
        n: spec.n,
        p: spec.p,
        replicate: 0,
        seed: spec.seed,
        a_np: m.a_np,
        scaled_norm,
        offdiag_dev,
        top: w,
    })
}

/// Scaled statistics of the MA(1) row-dependence model `theta = (1, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ma1Record {
    /// `a_np^{-2} max_i (Dtilde_i + theta^2 Dtilde_{i-1})`
    pub lower: f64,
    /// `a_np^{-2} ||H Dtilde H^T||_inf`
    pub upper: f64,
    /// `a_np^{-2} ||S||_2`
    pub scaled_norm: f64,
}

/// MA(1) diagnostic for one replicate. `spec.filter.theta` must be the
/// window `(1, theta)` on lags `(0, 1)`.
pub fn run_ma1_trial(spec: &EnsembleSpec) -> Result<Ma1Record> {
    let theta = &spec.filter.theta;
    if theta.min_lag() != 0 || theta.len() != 2 || theta.get(0) != 1.0 {
        return Err(Error::InvalidArgument(
            "MA(1) diagnostic needs theta = (1, theta)".into(),
        ));
    }
    let th = theta.get(1);
    let m = build_trial(spec)?;
    let scale = m.a_np * m.a_np;
    // rows of X are i - 1 for i = 1..=p+1, i.e. logical rows 0..=p
    let d = centered_gram_diag(&m.x, m.mu);
    let lower = (0..spec.p)
        .map(|i| d[i + 1] + th * th * d[i])
        .fold(f64::NEG_INFINITY, f64::max);
    // Xhat = H X with H_ii = theta, H_{i,i+1} = 1
    let hdh = hdh_matrix(&ma1_h(th, spec.p)?, &d)?;
    let centering = CenteringSpec::new(theta, spec.p, spec.n, m.mu)?;
    let s = centered_covariance(&m.xhat, &centering)?;
    Ok(Ma1Record {
        lower: lower / scale,
        upper: hdh.inf_norm() / scale,
        scaled_norm: spectral_norm(&s, DEFAULT_REL_TOL)? / scale,
    })
}

/// Seed of replicate `r` at sample size `n`; injective in `(n, r)` for
/// `n, r < 2^32`.
pub fn derive_seed(base_seed: u64, n: usize, r: usize) -> u64 {
    base_seed.wrapping_add(((n as u64) << 32) | (r as u64 & 0xffff_ffff))
}

/// All replicates for all sample sizes, sorted by `(n, replicate)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialBatch {
    pub template: EnsembleTemplate,
    pub rule: DimensionRule,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub top_k: usize,
    pub records: Vec<TrialRecord>,
}

impl TrialBatch {
    pub fn largest_n(&self) -> Option<usize> {
        self.n_values.iter().copied().max()
    }

    pub fn records_at(&self, n: usize) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(move |r| r.n == n)
    }

    pub fn scaled_norms_at(&self, n: usize) -> Vec<f64> {
        self.records_at(n).map(|r| r.scaled_norm).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOptions {
    pub replicates: usize,
    pub base_seed: u64,
    pub top_k: usize,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

/// Validates every `(p, n)` pair, then runs all replicates in parallel.
pub fn run_batch(
    template: &EnsembleTemplate,
    rule: &DimensionRule,
    n_values: &[usize],
    opts: &BatchOptions,
) -> Result<TrialBatch> {
    if n_values.is_empty() {
        return Err(Error::InvalidArgument("no sample sizes given".into()));
    }
    for &n in n_values {
        validate(&template.at(rule.p_for(n), n, opts.base_seed), rule).ensure()?;
    }
    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..opts.replicates).map(move |r| (n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut records = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, r)| {
                let spec = template.at(rule.p_for(n), n, derive_seed(opts.base_seed, n, r));
                run_trial(&spec, opts.top_k).map(|rec| TrialRecord {
                    replicate: r,
                    ..rec
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by_key(|r| (r.n, r.replicate));
    Ok(TrialBatch {
        template: template.clone(),
        rule: *rule,
        n_values: n_values.to_vec(),
        replicates: opts.replicates,
        base_seed: opts.base_seed,
        top_k: opts.top_k,
        records,
    })
}
