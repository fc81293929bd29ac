use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rigidity_core::representation::GALLERY;
use rigidity_lab::{config, init_threads, pipeline};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rigidity-lab", version, about = "Rigidity certificates for small actions of semidirect products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON, see docs/config.schema.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monodromy, K, k0, k, eigenvalues and p0.
    Constants,
    /// Invariant splitting, projections and p0 witness.
    Splitting,
    /// Full pipeline ending in a certificate.
    Certify,
    /// Certificates along an eps family plus a residual slope fit.
    Sweep,
    /// Re-derive every certificate in a run directory from its trace.
    Replay,
    /// List the named gallery actions.
    GalleryList,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load(cli: &Cli) -> Result<(config::Experiment, PathBuf, u64)> {
    let path = cli.config.as_deref().context("--config is required for this subcommand")?;
    let exp = config::load(path)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&exp.config.output));
    let seed = cli.seed.unwrap_or(exp.config.seed);
    Ok((exp, out, seed))
}

fn run(cli: &Cli) -> Result<bool> {
    match cli.command {
        Command::GalleryList => {
            for (name, description) in GALLERY {
                println!("{name:<16} {description}");
            }
        }
        Command::Constants => {
            let (exp, out, seed) = load(cli)?;
            pipeline::run_constants(&exp, &out, seed)?;
            print!("{}", std::fs::read_to_string(out.join("constants.json"))?);
        }
        Command::Splitting => {
            let (exp, out, seed) = load(cli)?;
            pipeline::run_splitting(&exp, &out, seed)?;
            print!("{}", std::fs::read_to_string(out.join("splitting.json"))?);
        }
        Command::Certify => {
            let (exp, out, seed) = load(cli)?;
            print_json(&pipeline::run_certify(&exp, &out, seed)?)?;
        }
        Command::Sweep => {
            let (exp, out, seed) = load(cli)?;
            print_json(&pipeline::run_sweep(&exp, &out, seed)?)?;
        }
        Command::Replay => {
            let out = match (&cli.out, &cli.config) {
                (Some(out), _) => out.clone(),
                (None, Some(_)) => load(cli)?.1,
                (None, None) => anyhow::bail!("replay needs --out or --config to locate the run directory"),
            };
            let report = pipeline::replay(Path::new(&out))?;
            print_json(&report)?;
            return Ok(report.ok());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| run(&cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: replay found certificates that do not match their traces");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
