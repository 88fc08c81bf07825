//! `sdskit run <config>`: runs one experiment described by a TOML file and
//! writes `manifest.json`, `report.json` and data files to the output
//! directory.
//!
//! Exit status: 0 on success, 2 for configuration errors (including values
//! an operation cannot accept), 3 when an exact identity is violated, 1 for
//! numerical or i/o failures.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;
use sdskit::Error;

#[derive(Parser)]
#[command(name = "sdskit", version, about = "Run stochastic dynamical system experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the TOML experiment config.
    config: PathBuf,
    /// Maximum number of worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory, overriding the config's `output_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed to use instead of the config's `seed`.
    #[arg(long, value_name = "S")]
    seed_override: Option<u64>,
    /// Root under which `<config name>/` is created when neither `--out`
    /// nor `output_dir` is given.
    #[arg(long, env = "SDSKIT_OUT_ROOT", default_value = "sdskit-out", value_name = "DIR")]
    out_root: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Domain(_) | Error::Unsupported(_) => 2,
        Error::Assertion(_) => 3,
        Error::Numerical { .. } | Error::Io(_) => 1,
    }
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &args.out {
        return out.clone();
    }
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let stem = args.config.file_stem().map_or_else(|| "experiment".into(), |s| s.to_os_string());
    args.out_root.join(stem)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::config("<config path>", format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if args.workers == Some(0) {
        return Err(Error::config("--workers", "must be at least 1"));
    }
    let seed_overridden = args.seed_override.is_some();
    if let Some(s) = args.seed_override {
        cfg.seed = s;
    }
    let dir = output_dir(args, &cfg);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let t0 = Instant::now();
    let ctx = experiments::Context {
        dir: &dir,
        workers: args.workers,
    };
    let result = experiments::run(&cfg, &ctx);
    let (status, files) = match &result {
        Ok(out) => {
            write_json(&dir.join("report.json"), &out.report)?;
            ("ok".to_string(), out.data_files.clone())
        }
        Err(e) => (e.to_string(), Vec::new()),
    };
    let manifest = json!({
        "config_path": args.config.display().to_string(),
        "config": serde_json::to_value(&cfg).expect("config serializes"),
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "seed_overridden": seed_overridden,
        "workers": args.workers,
        "versions": {
            "sdskit": sdskit::VERSION,
            "sdskit-cli": env!("CARGO_PKG_VERSION"),
        },
        "data_files": files,
        "status": status,
        "started_unix": started,
        "wall_time_seconds": t0.elapsed().as_secs_f64(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    result.map(|_| eprintln!("wrote {}", dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        },
    }
}
