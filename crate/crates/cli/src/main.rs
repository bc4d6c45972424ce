//! `torusflow`: run, maximize, verify, sweep and export experiments.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical abort,
//! 3 verification failure.

mod config;
mod export;
mod failure;
mod manifest;
mod maximize;
mod simulate;
mod sweep;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use failure::Failure;

#[derive(Parser)]
#[command(
    name = "torusflow",
    version,
    about = "Euler flows and sinusoidal-state stability on a flat torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `initial.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Euler equations and record diagnostics.
    Simulate(RunArgs),
    /// Run the rearrangement energy maximisation.
    Maximize(RunArgs),
    /// Run the operator and conservation checks; writes a manifest only with --out.
    Verify(RunArgs),
    /// Run every point of the `[sweep]` grid concurrently.
    Sweep(RunArgs),
    /// Export diagnostics columns as `t value` text files.
    ExportPlot {
        /// Run directory containing diagnostics.csv.
        run_dir: PathBuf,
        /// Comma-separated columns; default all.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        /// Destination directory; default `<run_dir>/plot`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, String), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        cfg.initial.seed = seed;
        cfg.validate()?;
    }
    Ok((cfg, text))
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new("runs").join(&cfg.name))
}

/// Loads and validates first, so a bad config never creates a directory.
fn prepare(args: &RunArgs) -> Result<(ExperimentConfig, String, PathBuf), Failure> {
    let (cfg, text) = load(args)?;
    let dir = output_dir(args, &cfg);
    std::fs::create_dir_all(&dir)?;
    Ok((cfg, text, dir))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TORUSFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("TORUSFLOW_THREADS = {raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, text, dir) = prepare(&args)?;
            simulate::simulate_into(&cfg, &text, &dir)?;
            println!("{}", dir.display());
        }
        Command::Maximize(args) => {
            let (cfg, text, dir) = prepare(&args)?;
            let r = maximize::maximize_into(&cfg, &text, &dir)?;
            println!(
                "{}: E = {:.12e} after {} iterations (converged: {})",
                dir.display(),
                r.final_energy(),
                r.iterates,
                r.converged
            );
        }
        Command::Verify(args) => {
            let (cfg, text) = load(&args)?;
            let dir = match &args.out {
                Some(d) => {
                    std::fs::create_dir_all(d)?;
                    Some(d.as_path())
                }
                None => None,
            };
            verify::verify(&cfg, &text, dir)?;
        }
        Command::Sweep(args) => {
            let (cfg, text) = load(&args)?;
            if cfg.sweep_points().is_empty() {
                return Err(Failure::Config("config has no [sweep] section".into()));
            }
            let dir = output_dir(&args, &cfg);
            std::fs::create_dir_all(&dir)?;
            sweep::sweep(&cfg, &text, &dir)?;
            println!("{}", dir.display());
        }
        Command::ExportPlot { run_dir, columns, out } => {
            let out = out.unwrap_or_else(|| run_dir.join("plot"));
            for f in export::export_plot(&run_dir, &columns, &out)? {
                println!("{}", out.join(f).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("torusflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
