//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use heavytail_spectra::experiment::{
    beta_limit, envelope_check, ks_check, offdiag_trend_check, order_stat_check, quantile_grid,
    run_batch, run_ma1_trial, trials_csv, BatchOptions, DimensionRule, EnsembleSpec,
    EnsembleTemplate,
};
use heavytail_spectra::limit_law::{
    bound_cdf_lower, bound_cdf_upper, bound_constants, ma1_constants, BoundConstants,
};
use heavytail_spectra::linear_filter::{CoefficientSequence, FilterSpec};
use heavytail_spectra::rng::{key1, KeyedRng};
use heavytail_spectra::rv_noise::TailModel;
use heavytail_spectra::spectral::{
    build_h, dense_spectral_norm, hdh_matrix, hh_t, ma1_h, mu_x_alpha, spectral_norm, SymMatrix,
};

type Outcome = Result<String, String>;

fn seq(v: &[f64]) -> CoefficientSequence {
    CoefficientSequence::new(v.to_vec(), 0).unwrap()
}

fn filter(c: &[f64], theta: &[f64], delta: f64) -> FilterSpec {
    FilterSpec::new(seq(c), seq(theta), delta).unwrap()
}

fn pareto(alpha: f64) -> TailModel {
    TailModel::pareto_symmetric(alpha, 1.0).unwrap()
}

fn levels() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}

fn require(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
}

fn exact_algebra() -> Outcome {
    let h = build_h(&seq(&[1.0]), 2).unwrap();
    require((h.nrows(), h.ncols()) == (2, 6), "single-spike H shape")?;
    for i in 0..2 {
        for j in 0..6 {
            require(
                h.get(i, j) == if j == i + 2 { 1.0 } else { 0.0 },
                "single-spike H entries",
            )?;
        }
    }
    let hh = hh_t(&build_h(&seq(&[1.0]), 5).unwrap()).unwrap();
    require(
        *hh.as_dense() == DMatrix::identity(5, 5),
        "spike HH^T is the identity",
    )?;
    let h = build_h(&seq(&[1.0, 0.5]), 3).unwrap();
    for i in 0..3 {
        for j in 0..9 {
            let want = match j as i64 - i as i64 {
                2 => 0.5,
                3 => 1.0,
                _ => 0.0,
            };
            require(h.get(i, j) == want, format!("H(1, 0.5) at ({i}, {j})"))?;
        }
    }

    let c1 = seq(&[1.0]);
    require(
        mu_x_alpha(&pareto(1.2), &seq(&[3.0, -1.0]), 7.0) == 0.0,
        "mu for alpha < 2",
    )?;
    let pos3 = TailModel::pareto_positive(3.0, 1.0).unwrap();
    require(mu_x_alpha(&pos3, &c1, 10.0) == 3.0, "mu for alpha = 3")?;
    let mu2 = mu_x_alpha(&pareto(2.0), &seq(&[1.0, 1.0]), std::f64::consts::E);
    require(
        close(mu2, 4.0, 1e-12),
        format!("mu for alpha = 2 gave {mu2}"),
    )?;

    require(beta_limit(0.8).unwrap() == f64::INFINITY, "beta_limit(0.8)")?;
    require(beta_limit(1.5).unwrap() == 1.0, "beta_limit(1.5)")?;
    require(
        close(beta_limit(3.5).unwrap(), 0.5 / 6.5, 1e-12),
        "beta_limit(3.5)",
    )?;
    require(
        close(beta_limit(1.2).unwrap(), 4.0, 1e-12),
        "beta_limit(1.2)",
    )?;
    require(
        beta_limit(4.0).is_err() && beta_limit(0.0).is_err(),
        "beta_limit domain",
    )?;

    let b = bound_constants(&filter(&[1.0], &[1.0], 0.5), 2.0);
    require(
        b.lower_scale == 1.0 && b.upper_scale == 1.0,
        "spike bound constants",
    )?;
    let b = bound_constants(&filter(&[1.0], &[1.0, 0.5], 0.5), 2.0);
    require(
        b.lower_scale == 1.0 && b.upper_scale == 1.5,
        "bound constants for (1, 0.5)",
    )?;
    require(
        close(bound_cdf_lower(1.0, &b), (-1.5f64).exp(), 1e-12),
        "lower CDF at 1",
    )?;
    require(
        close(bound_cdf_upper(1.0, &b), (-1.0f64).exp(), 1e-12),
        "upper CDF at 1",
    )?;
    for th in [0.3, -0.7, 1.0, 2.0] {
        let c = [1.0, 0.5];
        let b: BoundConstants = bound_constants(&filter(&c, &[1.0, th], 0.5), 1.5);
        let (lo, hi) = ma1_constants(th);
        require(
            close(b.lower_scale, lo * 1.25, 1e-12),
            format!("MA(1) lower scale at {th}"),
        )?;
        require(
            b.lower_scale <= hi * 1.25 && hi * 1.25 <= b.upper_scale * (1.0 + 1e-12),
            "MA(1) containment",
        )?;
    }
    require(ma1_constants(0.0) == (1.0, 1.0), "ma1_constants(0)")?;
    require(ma1_constants(1.0) == (1.0, 2.0), "ma1_constants(1)")?;
    require(ma1_constants(2.0) == (4.0, 6.0), "ma1_constants(2)")?;

    let th = 0.7;
    let m = hdh_matrix(&ma1_h(th, 2).unwrap(), &[1.0, 2.0, 3.0]).unwrap();
    let want = [[th * th + 2.0, 2.0 * th], [2.0 * th, 2.0 * th * th + 3.0]];
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            require(
                close(m.as_dense()[(i, j)], *w, 1e-12),
                format!("MA(1) HDH^T at ({i}, {j})"),
            )?;
        }
    }
    Ok("H, mu, beta_limit, bound constants, MA(1) constants and HDH^T match".into())
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let mut rng = KeyedRng::new(key1(0xacce, case));
        let dim = rng.random_range(2..=50usize);
        let heavy = case % 2 == 0;
        let mut a = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = if heavy {
                    pareto(1.3).sample_at(case, i as i64, j as i64)
                } else {
                    rng.sample::<f64, _>(StandardNormal)
                };
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let a = SymMatrix::new(a).unwrap();
        let dense = dense_spectral_norm(&a);
        let iter = spectral_norm(&a, 1e-8).map_err(|e| format!("case {case}: {e}"))?;
        let rel = (iter - dense).abs() / dense;
        worst = worst.max(rel);
        require(
            rel <= 1e-8,
            format!("case {case} (dim {dim}): relative error {rel:e}"),
        )?;
    }
    Ok(format!("200 matrices, worst relative error {worst:.2e}"))
}

fn single_spike() -> Outcome {
    let template = EnsembleTemplate {
        model: pareto(1.5),
        filter: filter(&[1.0], &[1.0], 0.9),
    };
    let rule = DimensionRule::new(0.9, 1.0).capped(100);
    let opts = BatchOptions {
        replicates: 1000,
        base_seed: 3,
        top_k: 1,
        workers: 0,
    };
    let batch = run_batch(&template, &rule, &[1000], &opts).map_err(|e| e.to_string())?;
    require(batch.records.iter().all(|r| r.p == 100), "p = 100")?;
    let r = ks_check(&batch.scaled_norms_at(1000), 1.0, 1.5, 0.10).map_err(|e| e.to_string())?;
    let msg = format!("KS = {:.4} (threshold 0.10, 1000 replicates)", r.statistic);
    require(r.passed, msg.clone())?;
    Ok(msg)
}

fn envelope_template(theta: &[f64]) -> (EnsembleTemplate, DimensionRule) {
    (
        EnsembleTemplate {
            model: pareto(1.2),
            filter: filter(&[1.0, 0.5], theta, 0.9),
        },
        DimensionRule::new(0.9, 1.0).capped(400),
    )
}

fn envelope_batch() -> Result<heavytail_spectra::experiment::TrialBatch, String> {
    let (template, rule) = envelope_template(&[1.0, 0.5]);
    let opts = BatchOptions {
        replicates: 500,
        base_seed: 20240601,
        top_k: 3,
        workers: 0,
    };
    run_batch(&template, &rule, &[1000], &opts).map_err(|e| e.to_string())
}

fn envelope(csv_out: &mut Option<String>) -> Outcome {
    let batch = envelope_batch()?;
    *csv_out = Some(trials_csv(&batch.records, batch.top_k).map_err(|e| e.to_string())?);
    require(batch.records.iter().all(|r| r.p == 400), "p capped at 400")?;
    let b = bound_constants(&batch.template.filter, 1.2);
    let r = envelope_check(&batch, &quantile_grid(&b, &levels()), 0.03, 4.0)
        .map_err(|e| e.to_string())?;
    let worst = r
        .points
        .iter()
        .map(|p| {
            (
                (p.lower - p.empirical).max(p.empirical - p.upper).max(0.0),
                p.tolerance,
            )
        })
        .fold((0.0, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let msg = format!(
        "{} of {} grid points inside envelope, largest excursion {:.4} (tolerance {:.4})",
        r.points.iter().filter(|p| p.passed).count(),
        r.points.len(),
        worst.0,
        worst.1
    );
    require(r.passed, msg.clone())?;
    Ok(msg)
}

fn offdiag() -> Outcome {
    let (template, rule) = envelope_template(&[1.0]);
    let opts = BatchOptions {
        replicates: 100,
        base_seed: 11,
        top_k: 1,
        workers: 0,
    };
    let batch =
        run_batch(&template, &rule, &[200, 500, 1000, 2000], &opts).map_err(|e| e.to_string())?;
    let r = offdiag_trend_check(&batch, 0.15).map_err(|e| e.to_string())?;
    let msg = format!("medians {:.4?} (threshold 0.15)", r.medians);
    require(r.passed, msg.clone())?;
    Ok(msg)
}

fn order_stats() -> Outcome {
    let template = EnsembleTemplate {
        model: pareto(1.5),
        filter: filter(&[1.0, 0.5], &[1.0, 0.5], 0.9),
    };
    let rule = DimensionRule::new(0.9, 1.0).capped(100);
    let opts = BatchOptions {
        replicates: 500,
        base_seed: 17,
        top_k: 3,
        workers: 0,
    };
    let batch = run_batch(&template, &rule, &[1000], &opts).map_err(|e| e.to_string())?;
    let r = order_stat_check(&batch, &template.filter, 3, 4000, 3.0).map_err(|e| e.to_string())?;
    let parts: Vec<String> = r
        .ranks
        .iter()
        .map(|c| {
            format!(
                "r{}: {:.3} vs {:.3} (tol {:.3})",
                c.rank, c.empirical_median, c.limit_median, c.tolerance
            )
        })
        .collect();
    let msg = parts.join(", ");
    require(r.passed, msg.clone())?;
    Ok(msg)
}

fn ma1() -> Outcome {
    let th = 0.7;
    let c = [1.0, 0.5];
    let f = filter(&c, &[1.0, th], 0.9);
    let lower = (0..500u64)
        .map(|r| {
            let spec = EnsembleSpec {
                model: pareto(1.5),
                filter: f.clone(),
                p: 100,
                n: 1000,
                seed: key1(23, r),
            };
            run_ma1_trial(&spec).map(|m| m.lower)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let scale = ma1_constants(th).0 * 1.25;
    let r = ks_check(&lower, scale, 1.5, 0.10).map_err(|e| e.to_string())?;
    let msg = format!(
        "KS = {:.4} against scale {scale} (threshold 0.10)",
        r.statistic
    );
    require(r.passed, msg.clone())?;
    Ok(msg)
}

fn determinism(first: Option<String>) -> Outcome {
    let first = first.ok_or("criterion 4 batch did not complete")?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, &first).map_err(|e| e.to_string())?;
    let batch = envelope_batch()?;
    std::fs::write(
        &b,
        trials_csv(&batch.records, batch.top_k).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    require(x == y, "trials.csv differs between runs")?;
    Ok(format!("{} bytes identical", x.len()))
}

fn main() -> ExitCode {
    let mut csv = None;
    let mut failed = 0;
    let mut report = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {id} PASS [{name}] {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id} FAIL [{name}] {msg} ({secs:.1}s)");
            }
        }
    };
    report(1, "exact algebra", &mut exact_algebra);
    report(2, "spectral norm oracle", &mut oracle_equivalence);
    report(3, "single-spike law", &mut single_spike);
    report(4, "envelope containment", &mut || envelope(&mut csv));
    report(5, "off-diagonal vanishing", &mut offdiag);
    report(6, "order statistics", &mut order_stats);
    report(7, "MA(1) lower law", &mut ma1);
    report(8, "determinism", &mut || determinism(csv.take()));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
