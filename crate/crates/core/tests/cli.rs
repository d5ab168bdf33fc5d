use std::path::Path;
use std::process::Command;

use heavytail_spectra::experiment::read_trials_csv;

const CONFIG: &str = r#"{
    "model": {"family": "pareto_symmetric", "alpha": 1.4},
    "filter": {"c": {"values": [1.0, 0.5]}, "theta": {"values": [1.0, 0.5]}, "delta": 0.9},
    "dimension_rule": {"beta": 0.5, "const": 1.0},
    "n_values": [64, 100],
    "replicates": 12,
    "seed": 99,
    "top_k": 2,
    "checks": {"limit_draws": 200}
}"#;

fn htspec(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_htspec"))
        .args(args)
        .arg("--config")
        .arg(dir.join("config.json"))
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap() + &String::from_utf8(out.stderr).unwrap();
    (out.status.code().unwrap(), text)
}

#[test]
fn run_check_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), CONFIG).unwrap();

    let (code, text) = htspec(dir.path(), &["validate"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("n = 100, p = 10: pass"), "{text}");

    let (code, text) = htspec(dir.path(), &["run", "--workers", "2"]);
    assert_eq!(code, 0, "{text}");
    let trials = dir.path().join("out/trials.csv");
    let first = std::fs::read(&trials).unwrap();
    let (records, k) = read_trials_csv(first.as_slice()).unwrap();
    assert_eq!(k, 2);
    assert_eq!(records.len(), 24);
    assert_eq!((records[0].n, records[0].replicate), (64, 0));
    assert_eq!((records[23].n, records[23].replicate), (100, 11));

    let (code, text) = htspec(dir.path(), &["check"]);
    assert!(code == 0 || code == 1, "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/checks.json")).unwrap())
            .unwrap();
    assert_eq!(json["passed"].as_bool(), Some(code == 0));
    assert_eq!(
        json["checks"]["envelope"]["points"]
            .as_array()
            .unwrap()
            .len(),
        9
    );
    assert!(json["checks"]["ks"].is_null());

    let check_json = std::fs::read(dir.path().join("out/checks.json")).unwrap();
    let (code, text) = htspec(dir.path(), &["report", "--workers", "1"]);
    assert!(code == 0 || code == 1, "{text}");
    assert_eq!(std::fs::read(&trials).unwrap(), first);
    assert_eq!(
        std::fs::read(dir.path().join("out/checks.json")).unwrap(),
        check_json
    );
}

#[test]
fn overrides_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), CONFIG).unwrap();

    // beta = 0.5 is not admissible for alpha = 3.5
    let (code, text) = htspec(dir.path(), &["validate", "--alpha", "3.5"]);
    assert_eq!(code, 1, "{text}");
    assert!(text.contains("[!!] beta"), "{text}");

    let (code, text) = htspec(
        dir.path(),
        &["run", "--n", "30", "--replicates", "3", "--seed", "5"],
    );
    assert_eq!(code, 0, "{text}");
    let (records, _) =
        read_trials_csv(std::fs::File::open(dir.path().join("out/trials.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.n == 30));

    let (code, text) = htspec(dir.path(), &["run", "--alpha", "7"]);
    assert_eq!(code, 2, "{text}");
    assert!(text.starts_with("error:"), "{text}");

    std::fs::write(dir.path().join("config.json"), "{").unwrap();
    let (code, _) = htspec(dir.path(), &["validate"]);
    assert_eq!(code, 2);
}
