//! Row-banded rectangular matrices: each row stores one contiguous run of
//! columns. Used for the centering matrix `H` and its MA(1) variant.

use nalgebra::DMatrix;

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::linear_filter::CoefficientSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    rows: usize,
    cols: usize,
    starts: Vec<usize>,
    bands: Vec<Vec<f64>>,
}

impl BandedMatrix {
    /// `bands[i]` holds row `i` starting at column `starts[i]`.
    pub fn new(rows: usize, cols: usize, starts: Vec<usize>, bands: Vec<Vec<f64>>) -> Result<Self> {
        if starts.len() != rows || bands.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "{} starts and {} bands for {rows} rows",
                starts.len(),
                bands.len()
            )));
        }
        if let Some(i) = (0..rows).find(|&i| starts[i] + bands[i].len() > cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} band exceeds {cols} columns"
            )));
        }
        Ok(Self {
            rows,
            cols,
            starts,
            bands,
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// `(first column, values)` of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.starts[i], &self.bands[i])
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, band) = self.row(i);
        if j < s {
            0.0
        } else {
            band.get(j - s).copied().unwrap_or(0.0)
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    /// `max_i sum_j |H_ij|`.
    pub fn inf_norm(&self) -> f64 {
        self.bands
            .iter()
            .map(|b| b.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let (s, band) = self.row(i);
            *yi = band
                .iter()
                .zip(&x[s..s + band.len()])
                .map(|(h, v)| h * v)
                .sum();
        }
    }

    /// `y = H^T x`.
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, xi) in x.iter().enumerate().take(self.rows) {
            let (s, band) = self.row(i);
            for (yj, h) in y[s..s + band.len()].iter_mut().zip(band) {
                *yj += h * xi;
            }
        }
    }
}

/// The `p x 3p` centering matrix with `H_ij = theta_{p-(j-i)}` for
/// `0 <= j - i <= 2p` and zero otherwise (0-based `i`, `j`).
///
/// Lags of `theta` outside `[-p, p]` never enter; only the band is stored.
pub fn build_h(theta: &CoefficientSequence, p: usize) -> Result<BandedMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    let pi = p as i64;
    let k_hi = theta.max_lag().min(pi);
    let k_lo = theta.min_lag().max(-pi);
    let mut starts = Vec::with_capacity(p);
    let mut bands = Vec::with_capacity(p);
    for i in 0..pi {
        if k_lo > k_hi {
            starts.push(i as usize);
            bands.push(Vec::new());
            continue;
        }
        // column j carries lag p - (j - i): j runs from i + p - k_hi to i + p - k_lo
        let first = i + pi - k_hi;
        let band = (first..=i + pi - k_lo)
            .map(|j| theta.get(pi - (j - i)))
            .collect();
        starts.push(first as usize);
        bands.push(band);
    }
    BandedMatrix::new(p, 3 * p, starts, bands)
}

/// The `p x (p+1)` MA(1) matrix with `H_ii = theta` and `H_{i,i+1} = 1`.
pub fn ma1_h(theta: f64, p: usize) -> Result<BandedMatrix> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    BandedMatrix::new(p, p + 1, (0..p).collect(), vec![vec![theta, 1.0]; p])
}

/// `H diag(d) H^T`, summing only over overlapping bands.
pub fn hdh_matrix(h: &BandedMatrix, d: &[f64]) -> Result<SymMatrix> {
    if d.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "diagonal of length {} for H with {} columns",
            d.len(),
            h.ncols()
        )));
    }
    let p = h.nrows();
    let mut out = DMatrix::zeros(p, p);
    for i in 0..p {
        let (si, bi) = h.row(i);
        for j in i..p {
            let (sj, bj) = h.row(j);
            let lo = si.max(sj);
            let hi = (si + bi.len()).min(sj + bj.len());
            if lo >= hi {
                continue;
            }
            let v: f64 = (lo..hi).map(|l| bi[l - si] * d[l] * bj[l - sj]).sum();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    SymMatrix::new(out)
}

/// `H H^T`.
pub fn hh_t(h: &BandedMatrix) -> Result<SymMatrix> {
    hdh_matrix(h, &vec![1.0; h.ncols()])
}
