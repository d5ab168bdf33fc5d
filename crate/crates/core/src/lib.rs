//! Simulation of the heavy-tailed filtered random-matrix ensemble
//! `Xhat_{it} = sum_j sum_k c_j theta_k Z_{i-k,t-j}` and Monte Carlo checks of
//! the limiting law of the spectral norm of its centered sample covariance.

pub mod error;
pub mod experiment;
pub mod limit_law;
pub mod linear_filter;
pub mod rng;
pub mod rv_noise;
pub mod spectral;

pub use error::{Error, Result};
