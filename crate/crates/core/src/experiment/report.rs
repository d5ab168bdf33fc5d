//! `trials.csv` and `checks.json` output.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{Number, Value};

use super::{CheckSuite, TrialBatch, TrialRecord};
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the records as CSV with header
/// `n,p,replicate,seed,a_np,scaled_norm,offdiag_dev,top1,...,topK`.
/// Missing top values are written as empty fields.
pub fn write_trials_csv<W: Write>(w: W, records: &[TrialRecord], top_k: usize) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header: Vec<String> = [
        "n",
        "p",
        "replicate",
        "seed",
        "a_np",
        "scaled_norm",
        "offdiag_dev",
    ]
    .map(String::from)
    .to_vec();
    header.extend((1..=top_k).map(|k| format!("top{k}")));
    out.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            r.p.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            fmt_f64(r.a_np),
            fmt_f64(r.scaled_norm),
            fmt_f64(r.offdiag_dev),
        ];
        row.extend((0..top_k).map(|k| r.top.get(k).map_or(String::new(), |v| fmt_f64(*v))));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn trials_csv(records: &[TrialRecord], top_k: usize) -> Result<String> {
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, records, top_k)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// Parses the output of [`write_trials_csv`]; returns the records and `top_k`.
pub fn read_trials_csv<R: Read>(r: R) -> Result<(Vec<TrialRecord>, usize)> {
    let mut rdr = csv::Reader::from_reader(r);
    let top_k = rdr.headers()?.len().checked_sub(7).ok_or_else(|| {
        Error::InvalidArgument("trials.csv header has fewer than 7 columns".into())
    })?;
    let bad = |what: &str, e: &dyn std::fmt::Display| {
        Error::InvalidArgument(format!("trials.csv {what}: {e}"))
    };
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let int = |i: usize| row[i].parse::<u64>().map_err(|e| bad(&row[i], &e));
        let float = |i: usize| row[i].parse::<f64>().map_err(|e| bad(&row[i], &e));
        let top = (7..7 + top_k)
            .filter(|&i| !row[i].is_empty())
            .map(float)
            .collect::<Result<Vec<_>>>()?;
        records.push(TrialRecord {
            n: int(0)? as usize,
            p: int(1)? as usize,
            replicate: int(2)? as usize,
            seed: int(3)?,
            a_np: float(4)?,
            scaled_norm: float(5)?,
            offdiag_dev: float(6)?,
            top,
        });
    }
    Ok((records, top_k))
}

/// Rewrites every non-integer number with 17 significant digits.
fn normalize_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().expect("finite float");
            *n = fmt_f64(f)
                .parse::<Number>()
                .expect("formatted float parses");
        }
        Value::Array(items) => items.iter_mut().for_each(normalize_floats),
        Value::Object(map) => map.values_mut().for_each(normalize_floats),
        _ => {}
    }
}

pub fn checks_json(batch: &TrialBatch, checks: &CheckSuite) -> Result<String> {
    let mut v = serde_json::json!({
        "passed": checks.passed,
        "base_seed": batch.base_seed,
        "replicates": batch.replicates,
        "n_values": batch.n_values,
        "checks": checks,
    });
    normalize_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes `trials.csv` and `checks.json` into `dir`, creating it if needed.
pub fn emit_report(
    dir: &Path,
    batch: &TrialBatch,
    checks: &CheckSuite,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let trials = dir.join("trials.csv");
    let json = dir.join("checks.json");
    fs::write(&trials, trials_csv(&batch.records, batch.top_k)?)?;
    fs::write(&json, checks_json(batch, checks)?)?;
    Ok((trials, json))
}
