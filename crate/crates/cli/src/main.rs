use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lenia_evo::engine::snapshot::SnapshotError;
use lenia_evo::engine::{PatternFile, Position, Seed, SimConfig};

mod bench;
mod calibrate;
mod frames;
mod run;
mod search;
mod serve;

#[derive(Parser)]
#[command(name = "lenia-evo", version, about = "Lenia with intrinsic evolution")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run headless for N steps, writing a recording and a final snapshot.
    Run(run::RunArgs),
    /// Live session: stream frames and accept steering commands over TCP (JSON lines).
    Serve(serve::ServeArgs),
    /// Ring-vs-cast kernel error table over random genotypes.
    Calibrate(calibrate::CalibrateArgs),
    /// Measure steps per second.
    Bench(bench::BenchArgs),
    /// Random search for a seed that persists without flooding the world.
    SeedSearch(search::SearchArgs),
    /// Print the default configuration as JSON.
    DefaultConfig,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(a) => run::run(a),
        Cmd::Serve(a) => serve::serve(a),
        Cmd::Calibrate(a) => calibrate::calibrate(a),
        Cmd::Bench(a) => bench::bench(a),
        Cmd::SeedSearch(a) => search::search(a),
        Cmd::DefaultConfig => {
            println!("{}", SimConfig::default().to_json());
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<SnapshotError>() {
                Some(s) => ExitCode::from(s.code() as u8),
                None => ExitCode::from(2),
            }
        }
    }
}

pub(crate) fn load_config(path: &Path) -> anyhow::Result<SimConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    SimConfig::from_json(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Seeds from pattern files, centered unless the file carries a position.
/// With no files the built-in smoke seed is placed at the center.
pub(crate) fn load_seeds(paths: &[PathBuf], config: &SimConfig) -> anyhow::Result<Vec<Seed>> {
    let center = |w: usize, h: usize| Position {
        x: (config.width.saturating_sub(w)) / 2,
        y: (config.height.saturating_sub(h)) / 2,
    };
    if paths.is_empty() {
        let mut seed = lenia_evo::smoke::seed();
        let d = seed.phenotype.dims();
        seed.position = center(d.width, d.height);
        return Ok(vec![seed]);
    }
    paths
        .iter()
        .map(|p| {
            let file = PatternFile::load(p).with_context(|| format!("loading pattern {}", p.display()))?;
            Ok(file.to_seed(center(file.width, file.height))?)
        })
        .collect()
}
