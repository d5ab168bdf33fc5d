//! Centering algebra, the centered sample covariance `S = Xhat Xhat^T - n mu H H^T`
//! and its spectral norm.

mod banded;
mod lanczos;

pub use banded::{build_h, hdh_matrix, hh_t, ma1_h, BandedMatrix};
pub use lanczos::{
    extreme_eigenvalues, tridiagonal_eigen, ExtremeEigenvalues, LanczosOptions, SymmetricOperator,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linear_filter::CoefficientSequence;
use crate::rv_noise::{second_moment, truncated_second_moment, SecondMoment, TailModel};

pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Relative asymmetry above which assembly is treated as a bug.
const SYMMETRY_TOL: f64 = 1e-12;

/// A dense symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Checks symmetry to 1e-12 relative to the largest entry, then
    /// replaces the matrix by `(A + A^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.amax();
        let n = m.nrows();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j + 1..n {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        let rel = if scale > 0.0 { worst / scale } else { 0.0 };
        if rel > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(rel));
        }
        let mut m = m;
        for j in 0..n {
            for i in j + 1..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(Self(m))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dense(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dense(self) -> DMatrix<f64> {
        self.0
    }

    /// `max_i sum_j |A_ij|`, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_diagonal(&self) -> f64 {
        self.0.diagonal().max()
    }
}

impl SymmetricOperator for SymMatrix {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.0.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        // column-major storage: accumulate column by column
        for (j, xj) in x.iter().enumerate().take(n) {
            let col = &self.0.as_slice()[j * n..(j + 1) * n];
            for (yi, a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
    }
}

/// Centering data: `mu_{X,alpha}`, the band matrix `H` and the sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringSpec {
    pub mu: f64,
    pub h: BandedMatrix,
    pub n: usize,
}

impl CenteringSpec {
    pub fn new(theta: &CoefficientSequence, p: usize, n: usize, mu: f64) -> Result<Self> {
        Ok(Self {
            mu,
            h: build_h(theta, p)?,
            n,
        })
    }
}

/// `mu_{X,alpha}`: zero for `alpha < 2`, the truncated second moment at
/// `a_np` times `sum c_j^2` when `alpha = 2` with infinite variance, and
/// `E(Z^2) sum c_j^2` otherwise.
pub fn mu_x_alpha(model: &TailModel, c: &CoefficientSequence, a_np: f64) -> f64 {
    let alpha = model.alpha();
    if alpha < 2.0 {
        return 0.0;
    }
    match second_moment(model) {
        SecondMoment::Finite(v) => v * c.sq_sum(),
        SecondMoment::Infinite => truncated_second_moment(model, a_np) * c.sq_sum(),
    }
}

/// `S = Xhat Xhat^T - n mu H H^T`, symmetrized after assembly.
pub fn centered_covariance(xhat: &DMatrix<f64>, centering: &CenteringSpec) -> Result<SymMatrix> {
    let p = xhat.nrows();
    if centering.h.nrows() != p {
        return Err(Error::DimensionMismatch(format!(
            "Xhat has {p} rows, H has {}",
            centering.h.nrows()
        )));
    }
    if centering.n != xhat.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "Xhat has {} columns, centering uses n = {}",
            xhat.ncols(),
            centering.n
        )));
    }
    let mut s = xhat * xhat.transpose();
    if centering.mu != 0.0 {
        let hh = hh_t(&centering.h)?;
        s -= hh.as_dense() * (centering.n as f64 * centering.mu);
    }
    SymMatrix::new(s)
}

/// `max(|lambda_min|, |lambda_max|)` by Lanczos.
pub fn spectral_norm<O: SymmetricOperator + ?Sized>(m: &O, rel_tol: f64) -> Result<f64> {
    let opts = LanczosOptions {
        rel_tol,
        ..LanczosOptions::default()
    };
    extreme_eigenvalues(m, &opts).map(|e| e.spectral_norm())
}

/// Spectral norm from a full dense eigendecomposition.
pub fn dense_spectral_norm(m: &SymMatrix) -> f64 {
    SymmetricEigen::new(m.as_dense().clone()).eigenvalues.amax()
}

/// `S = Xhat Xhat^T - n mu H H^T` applied without forming `S`.
pub struct CovarianceOperator<'a> {
    xhat: &'a DMatrix<f64>,
    centering: &'a CenteringSpec,
}

impl<'a> CovarianceOperator<'a> {
    pub fn new(xhat: &'a DMatrix<f64>, centering: &'a CenteringSpec) -> Result<Self> {
        if centering.h.nrows() != xhat.nrows() || centering.n != xhat.ncols() {
            return Err(Error::DimensionMismatch(
                "Xhat and centering disagree".into(),
            ));
        }
        Ok(Self { xhat, centering })
    }
}

impl SymmetricOperator for CovarianceOperator<'_> {
    fn dim(&self) -> usize {
        self.xhat.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let u = self.xhat.tr_mul(&xv);
        let out = self.xhat * u;
        y.copy_from_slice(out.as_slice());
        let weight = self.centering.n as f64 * self.centering.mu;
        if weight != 0.0 {
            let h = &self.centering.h;
            let mut ht = vec![0.0; h.ncols()];
            h.apply_transpose(x, &mut ht);
            let mut hht = vec![0.0; h.nrows()];
            h.apply(&ht, &mut hht);
            for (yi, v) in y.iter_mut().zip(&hht) {
                *yi -= weight * v;
            }
        }
    }
}

/// `D_i = sum_t x_{it}^2`.
pub fn gram_diag(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}

/// `D_i - n mu` with `n` the number of columns.
pub fn centered_gram_diag(x: &DMatrix<f64>, mu: f64) -> Vec<f64> {
    let shift = x.ncols() as f64 * mu;
    gram_diag(x).into_iter().map(|d| d - shift).collect()
}

/// `a_np^{-2} ||X X^T - diag(X X^T)||_2`.
pub fn offdiag_deviation(x: &DMatrix<f64>, a_np: f64) -> Result<f64> {
    if x.nrows() < 2 {
        return Ok(0.0);
    }
    let mut g = x * x.transpose();
    g.fill_diagonal(0.0);
    let g = SymMatrix::new(g)?;
    Ok(spectral_norm(&g, DEFAULT_REL_TOL)? / (a_np * a_np))
}
