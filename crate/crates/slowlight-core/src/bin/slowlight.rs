//! Command-line front end: parse a run configuration, execute its mode,
//! and report the outcome.
//!
//! Exit codes follow the crate's error classes: 0 success, 2 configuration,
//! 3 domain, 4 numeric, 5 structural (no real root, no finite stopping
//! distance, ...), 6 verification, 7 I/O. Failures print a single
//! machine-readable JSON object on stderr. No environment variable is
//! consulted.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use slowlight_core::config::{parse_config, RunMode};
use slowlight_core::run::run;
use slowlight_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "slowlight",
    version,
    about = "Slow-light soliton laboratory: exact solutions, marching solver, verification"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Override the mode in the config
    /// (analytic, simulate, verify, stopping, convergence).
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,

    /// Output directory; takes precedence over the config's `out`
    /// (default "out").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for the data-parallel grid sweeps.
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,

    /// Reserved for future stochastic features; recorded in the summary,
    /// never read.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

fn mode_from_flag(flag: &str) -> Result<RunMode> {
    for mode in [
        RunMode::Analytic,
        RunMode::Simulate,
        RunMode::Verify,
        RunMode::Stopping,
        RunMode::Convergence,
    ] {
        if flag == mode.label() {
            return Ok(mode);
        }
    }
    Err(Error::Config(format!(
        "unknown mode '{flag}'; expected analytic, simulate, verify, stopping, or convergence"
    )))
}

fn execute(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool setup failed: {e}")))?;

    let config_text = std::fs::read_to_string(&cli.config)?;
    let mut config = parse_config(&config_text)?;
    if let Some(flag) = &cli.mode {
        config.mode = mode_from_flag(flag)?;
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let config_dir = cli.config.parent().unwrap_or_else(|| Path::new("."));

    let summary = run(&config, &out_dir, &config_text, config_dir)?;

    println!("mode: {}", summary.mode);
    if let Some(label) = &summary.label {
        println!("label: {label}");
    }
    if let Some(convention) = &summary.convention {
        println!("convention: {convention}");
    }
    if let Some(seed) = cli.seed {
        println!("seed: {seed} (reserved, unused)");
    }
    for metric in &summary.metrics {
        println!("{} = {}", metric.name, metric.value);
    }
    for note in &summary.notes {
        println!("note: {note}");
    }
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit-code": e.exit_code(),
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
