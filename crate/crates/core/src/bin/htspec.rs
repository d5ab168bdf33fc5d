use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heavytail_spectra::experiment::{
    checks_json, emit_report, read_trials_csv, trials_csv, validate, CheckSuite, ExperimentConfig,
    Overrides,
};
use heavytail_spectra::Result;

#[derive(Parser)]
#[command(
    name = "htspec",
    about = "Spectral norm experiments for heavy-tailed filtered random matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration against the hypotheses of the limit theorem.
    Validate,
    /// Run all replicates and write trials.csv.
    Run,
    /// Read trials.csv from the output directory and write checks.json.
    Check,
    /// Run, check, and write both output files.
    Report,
}

#[derive(Args)]
struct Opts {
    /// JSON configuration; the built-in default experiment when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Sample sizes, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    slack: Option<f64>,
    #[arg(long, global = true)]
    z: Option<f64>,
}

fn load(opts: &Opts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_experiment(),
    };
    cfg.apply(&Overrides {
        alpha: opts.alpha,
        n_values: opts.n.clone(),
        replicates: opts.replicates,
        seed: opts.seed,
        slack: opts.slack,
        z: opts.z,
    })?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = load(&cli.opts)?;
    let out = &cli.opts.out;
    match cli.command {
        Command::Validate => {
            let mut ok = true;
            for &n in &cfg.n_values {
                let p = cfg.dimension_rule.p_for(n);
                let report = validate(&cfg.template().at(p, n, cfg.seed), &cfg.dimension_rule);
                println!(
                    "n = {n}, p = {p}: {}",
                    if report.passed { "pass" } else { "FAIL" }
                );
                for c in &report.checks {
                    let margin = c
                        .margin
                        .map_or(String::new(), |m| format!(" (margin {m:.6})"));
                    println!(
                        "  [{}] {}: {}{margin}",
                        if c.passed { "ok" } else { "!!" },
                        c.name,
                        c.detail
                    );
                }
                ok &= report.passed;
            }
            Ok(ok)
        }
        Command::Run => {
            let batch = cfg.run(cli.opts.workers)?;
            std::fs::create_dir_all(out)?;
            let path = out.join("trials.csv");
            std::fs::write(&path, trials_csv(&batch.records, batch.top_k)?)?;
            println!(
                "wrote {} records to {}",
                batch.records.len(),
                path.display()
            );
            Ok(true)
        }
        Command::Check => {
            let (records, top_k) = read_trials_csv(File::open(out.join("trials.csv"))?)?;
            let batch = cfg.batch_from_records(records, top_k);
            let checks = CheckSuite::run(&batch, &cfg.checks)?;
            let path = out.join("checks.json");
            std::fs::write(&path, checks_json(&batch, &checks)?)?;
            println!(
                "{}: {}",
                path.display(),
                if checks.passed { "pass" } else { "FAIL" }
            );
            Ok(checks.passed)
        }
        Command::Report => {
            let batch = cfg.run(cli.opts.workers)?;
            let checks = CheckSuite::run(&batch, &cfg.checks)?;
            let (trials, json) = emit_report(out, &batch, &checks)?;
            println!(
                "wrote {} and {}: {}",
                trials.display(),
                json.display(),
                if checks.passed { "pass" } else { "FAIL" }
            );
            Ok(checks.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
