//! Lanczos iteration with full reorthogonalization for the two extreme
//! eigenvalues of a symmetric operator.

use crate::error::{Error, Result};
use crate::rng::{key1, open_closed01};

/// A symmetric linear map applied matrix-free.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` has length `dim()` and is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Bound on `||A v - lambda v|| / max(|lambda_min|, |lambda_max|)` for
    /// both extreme Ritz pairs.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iter: 10_000,
            seed: 0x6c61_6e63,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeEigenvalues {
    pub min: f64,
    pub max: f64,
    pub iterations: usize,
    /// Largest relative residual of the two extreme Ritz pairs at exit.
    pub residual: f64,
}

impl ExtremeEigenvalues {
    pub fn spectral_norm(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn extreme_eigenvalues<O: SymmetricOperator + ?Sized>(
    op: &O,
    opts: &LanczosOptions,
) -> Result<ExtremeEigenvalues> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::DimensionMismatch("empty operator".into()));
    }
    let mut v: Vec<f64> = (0..dim as u64)
        .map(|i| open_closed01(key1(opts.seed, i)) - 0.5)
        .collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last = ExtremeEigenvalues {
        min: 0.0,
        max: 0.0,
        iterations: 0,
        residual: f64::INFINITY,
    };

    for iter in 1..=opts.max_iter {
        op.apply(&v, &mut w);
        let a = dot(&w, &v);
        axpy(-a, &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(-b, prev, &mut w);
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in basis.iter().chain(std::iter::once(&v)) {
                let proj = dot(&w, q);
                axpy(-proj, q, &mut w);
            }
        }
        alphas.push(a);
        let b = dot(&w, &w).sqrt();

        let (evals, last_row) = tridiagonal_eigen(&alphas, &betas)?;
        let (imin, imax) = extreme_indices(&evals);
        let scale = evals[imin].abs().max(evals[imax].abs());
        let res = b * last_row[imin].abs().max(last_row[imax].abs());
        let rel = if scale > 0.0 {
            res / scale
        } else if b == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        last = ExtremeEigenvalues {
            min: evals[imin],
            max: evals[imax],
            iterations: iter,
            residual: rel,
        };

        let exhausted = basis.len() + 1 == dim;
        let breakdown = b <= f64::EPSILON * scale || b == 0.0;
        if rel <= opts.rel_tol || exhausted || breakdown {
            return Ok(last);
        }
        basis.push(std::mem::take(&mut v));
        betas.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    Err(Error::NoConvergence {
        iterations: last.iterations,
        residual: last.residual,
    })
}

fn extreme_indices(evals: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, &e) in evals.iter().enumerate() {
        if e < evals[imin] {
            imin = i;
        }
        if e > evals[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off`, plus the last component of each unit eigenvector.
///
/// Implicit QL with Wilkinson-type shifts; only the last row of the
/// eigenvector matrix is accumulated, so the cost is O(m^2).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = diag.len();
    if off.len() + 1 != m.max(1) {
        return Err(Error::DimensionMismatch(format!(
            "{} off-diagonals for size {m}",
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; m];
    if m == 0 {
        return Ok((d, z));
    }
    z[m - 1] = 1.0;

    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = mm;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok((d, z))
}
