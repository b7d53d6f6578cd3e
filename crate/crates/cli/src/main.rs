use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pipegrid_core::config::{ExperimentConfig, Overrides, OUTPUT_ENV};
use pipegrid_core::study::{cmd_describe, cmd_preprocess, cmd_run, cmd_stability, cmd_synth};
use pipegrid_core::{Error, SyntheticSpec};

const EXIT_CONFIG: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pipegrid", version, about = "Nested cross-validated pipeline grid studies for small cohorts")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides split.seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config and PIPEGRID_OUT
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Family filter, e.g. `reduced` or `!*:rfe_rf_fs:*:RF,*:*:*:SVM`
    #[arg(long, global = true)]
    grid: Option<String>,

    /// Rows in stability rankings
    #[arg(long, global = true)]
    top_k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-feature tests against the label and missing-value census
    Describe,
    /// Rare-category, NMI and correlation filters with a removal ledger
    Preprocess,
    /// Full study: inner selection, outer CV, ranking, test evaluation
    Run,
    /// Stability ranking of a saved pipeline (default: each dataset's best descriptive one)
    Stability {
        /// Pipeline id such as p0, p0d or p3n
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Generate a synthetic cohort with known informative features
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    rows: usize,
    #[arg(long, default_value_t = 60)]
    numeric: usize,
    #[arg(long, default_value_t = 17)]
    categorical: usize,
    #[arg(long, default_value_t = 5)]
    informative: usize,
    #[arg(long, default_value_t = 24.0 / 42.0)]
    positive_fraction: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
    /// File stem for the CSV, schema and informative list
    #[arg(long, default_value = "synthetic")]
    name: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::root) {
        Some(Error::Config(_)) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::read(path)?;
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        grid: cli.grid.clone(),
        top_k: cli.top_k,
    };
    let env_out = std::env::var_os(OUTPUT_ENV).map(PathBuf::from);
    cfg.apply(&overrides, env_out)?;
    Ok(cfg)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Describe => print_paths(&cmd_describe(&load_config(cli)?)?),
        Command::Preprocess => print_paths(&cmd_preprocess(&load_config(cli)?)?),
        Command::Stability { pipeline } => {
            print_paths(&cmd_stability(&load_config(cli)?, pipeline.as_deref())?);
        }
        Command::Run => {
            let cfg = load_config(cli)?;
            let summary = cmd_run(&cfg)?;
            println!(
                "evaluated {} of {} families in {:.1}s, reports in {}",
                summary.evaluated,
                summary.families,
                summary.wall_seconds,
                summary.output_dir.display()
            );
            for b in &summary.best {
                println!(
                    "{} {}: {} cv_f1 {:.2}+/-{:.2} test_f1 {:.2}",
                    b.id,
                    b.dataset,
                    b.cv.family.id(),
                    b.cv.f1.0,
                    b.cv.f1.1,
                    b.test_f1
                );
            }
            for n in &summary.notes {
                eprintln!("note: {n}");
            }
            if summary.is_partial() {
                eprintln!("{} family evaluations failed; see failures.csv", summary.failures.len());
                return Ok(EXIT_PARTIAL);
            }
        }
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                n_rows: a.rows,
                n_numeric: a.numeric,
                n_categorical: a.categorical,
                n_informative: a.informative,
                positive_fraction: a.positive_fraction,
                noise: a.noise,
                signal: a.signal,
                missing_ratio: a.missing,
                seed: cli.seed.ok_or_else(|| Error::Config("synth needs --seed".into()))?,
            };
            let out = cli
                .out
                .clone()
                .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            print_paths(&cmd_synth(&spec, &out, &a.name)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("starting worker pool");
        if let Err(e) = pool {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            // core errors already carry their causes in the message
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
