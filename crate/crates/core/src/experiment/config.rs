//! JSON experiment configuration and command-line overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run_batch, BatchOptions, DimensionRule, EnsembleTemplate, TrialBatch, TrialRecord};
use crate::error::{Error, Result};
use crate::linear_filter::{CoefficientSequence, FilterSpec};
use crate::rv_noise::TailModel;

fn yes() -> bool {
    true
}
fn default_slack() -> f64 {
    0.03
}
fn default_z() -> f64 {
    4.0
}
fn default_ks_threshold() -> f64 {
    0.10
}
fn default_offdiag_threshold() -> f64 {
    0.15
}
fn default_order_z() -> f64 {
    3.0
}
fn default_limit_draws() -> usize {
    4000
}
fn default_grid_levels() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}
fn default_top_k() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksConfig {
    #[serde(default = "yes")]
    pub envelope: bool,
    #[serde(default = "yes")]
    pub ks: bool,
    #[serde(default = "yes")]
    pub order_stats: bool,
    #[serde(default = "yes")]
    pub offdiag: bool,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    #[serde(default = "default_offdiag_threshold")]
    pub offdiag_threshold: f64,
    #[serde(default = "default_order_z")]
    pub order_z: f64,
    /// Number of ranks compared; defaults to the batch's `top_k`.
    #[serde(default)]
    pub order_k: Option<usize>,
    #[serde(default = "default_limit_draws")]
    pub limit_draws: usize,
    /// CDF levels of the lower bound law used as the envelope grid.
    #[serde(default = "default_grid_levels")]
    pub grid_levels: Vec<f64>,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: TailModel,
    pub filter: FilterSpec,
    pub dimension_rule: DimensionRule,
    pub n_values: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub checks: ChecksConfig,
}

/// Command-line values that replace fields of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub n_values: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub slack: Option<f64>,
    pub z: Option<f64>,
}

impl ExperimentConfig {
    /// Symmetric Pareto noise with `alpha = 1.2`, `c = theta = (1, 0.5)`,
    /// `delta = 0.9`, `p = min(n^0.9, 400)`, 500 replicates at `n = 1000`.
    pub fn default_experiment() -> Self {
        let seq = || CoefficientSequence::new(vec![1.0, 0.5], 0).expect("valid window");
        Self {
            model: TailModel::pareto_symmetric(1.2, 1.0).expect("valid model"),
            filter: FilterSpec::new(seq(), seq(), 0.9).expect("valid filter"),
            dimension_rule: DimensionRule::new(0.9, 1.0).capped(400),
            n_values: vec![1000],
            replicates: 500,
            seed: 20240601,
            top_k: default_top_k(),
            checks: ChecksConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(alpha) = o.alpha {
            self.model = self.model.with_alpha(alpha)?;
        }
        if let Some(n) = &o.n_values {
            self.n_values = n.clone();
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(s) = o.slack {
            self.checks.slack = s;
        }
        if let Some(z) = o.z {
            self.checks.z = z;
        }
        Ok(())
    }

    pub fn template(&self) -> EnsembleTemplate {
        EnsembleTemplate {
            model: self.model,
            filter: self.filter.clone(),
        }
    }

    pub fn batch_options(&self, workers: usize) -> BatchOptions {
        BatchOptions {
            replicates: self.replicates,
            base_seed: self.seed,
            top_k: self.top_k,
            workers,
        }
    }

    pub fn run(&self, workers: usize) -> Result<TrialBatch> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        run_batch(
            &self.template(),
            &self.dimension_rule,
            &self.n_values,
            &self.batch_options(workers),
        )
    }

    /// Rebuilds the batch this configuration would produce from previously
    /// written records.
    pub fn batch_from_records(&self, records: Vec<TrialRecord>, top_k: usize) -> TrialBatch {
        let mut n_values: Vec<usize> = records.iter().map(|r| r.n).collect();
        n_values.dedup();
        TrialBatch {
            template: self.template(),
            rule: self.dimension_rule,
            n_values,
            replicates: self.replicates,
            base_seed: self.seed,
            top_k,
            records,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_takes_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{
                "model": {"family": "pareto_symmetric", "alpha": 1.5},
                "filter": {"c": {"values": [1.0]}, "theta": {"values": [1.0, 0.5]}, "delta": 0.9},
                "dimension_rule": {"beta": 0.9, "const": 1.0},
                "n_values": [100, 200],
                "replicates": 10,
                "seed": 1
            }"#,
        )
        .unwrap();
        assert_eq!(cfg.top_k, 3);
        assert_eq!(cfg.checks, ChecksConfig::default());
        assert_eq!(cfg.checks.slack, 0.03);
        assert_eq!(cfg.checks.z, 4.0);
        assert_eq!(cfg.checks.grid_levels.len(), 9);
        assert_eq!(cfg.dimension_rule.max_p, None);
    }

    #[test]
    fn round_trip_and_overrides() {
        let mut cfg = ExperimentConfig::default_experiment();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        cfg.apply(&Overrides {
            alpha: Some(1.4),
            replicates: Some(7),
            z: Some(2.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg.model.alpha(), 1.4);
        assert_eq!(cfg.replicates, 7);
        assert_eq!(cfg.checks.z, 2.0);
        assert!(cfg
            .apply(&Overrides {
                alpha: Some(5.0),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn malformed_json_is_an_error() {
        assert!(matches!(
            ExperimentConfig::from_json("{"),
            Err(Error::Json(_))
        ));
        let skewed_without_q = r#"{"model": {"family": "pareto_skewed", "alpha": 1.5},
            "filter": {"c": {"values": [1]}, "theta": {"values": [1]}, "delta": 0.5},
            "dimension_rule": {"beta": 0.5, "const": 1}, "n_values": [10], "replicates": 1, "seed": 0}"#;
        assert!(ExperimentConfig::from_json(skewed_without_q).is_err());
    }
}
