use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hpmtl::report::Format;
use hpmtl_cli::{cmd_generate, cmd_report, cmd_run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hpmtl", version, about = "Multi-task house price regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config file).
    #[arg(long, global = true, env = "HPMTL_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads (overrides the config file).
    #[arg(long, global = true, env = "HPMTL_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset with planted weights.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the rolling backtest for every task definition and method.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render the tables of a finished run.
    Report {
        /// Directory holding report.json (defaults to --out).
        results: Option<PathBuf>,
        #[arg(long, default_value = "md")]
        format: String,
    },
}

fn init_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn out_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.out_dir.as_ref().map(|p| c.resolve(p))))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            init_threads(cli.threads.or(cfg.threads))?;
            cmd_generate(&cfg, &out_dir(cli.out, Some(&cfg)), seed)
        }
        Command::Run { config, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            init_threads(cli.threads.or(cfg.threads))?;
            let out = out_dir(cli.out, Some(&cfg));
            cmd_run(&cfg, &out, seed)?;
            println!("results written to {}", out.display());
            Ok(())
        }
        Command::Report { results, format } => {
            let format: Format = format.parse()?;
            let out = out_dir(cli.out, None);
            let results = results.unwrap_or_else(|| out.clone());
            for p in cmd_report(&results, format, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
