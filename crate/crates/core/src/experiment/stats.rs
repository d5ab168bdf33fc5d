//! Empirical distribution helpers.

use crate::error::{Error, Result};

/// Fraction of `values` that are `<= x`.
pub fn ecdf(values: &[f64], x: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values.iter().filter(|v| **v <= x).count() as f64 / values.len() as f64)
}

/// `sup_x |F_n(x) - F(x)|`, evaluated on both sides of every jump.
pub fn ks_distance<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        // step over ties so the ECDF jump is taken in one go
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf(sorted[i]);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    Ok(d)
}

/// Linear-interpolation quantile (type 7) of an already sorted sample.
pub fn quantile_sorted(sorted: &[f64], u: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * u;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median and interquartile range.
pub fn median_iqr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
    ))
}

/// Standard error of a sample median approximated from the IQR
/// (`1.2533 sigma / sqrt(N)` with `sigma = IQR / 1.349`).
pub fn median_stderr(iqr: f64, n: usize) -> f64 {
    1.2533 * iqr / 1.349 / (n as f64).sqrt()
}
