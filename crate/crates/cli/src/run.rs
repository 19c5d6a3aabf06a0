use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use lenia_evo::engine::recording::{command_schedule, read_recording, Recorder};
use lenia_evo::engine::{snapshot, Simulation};
use lenia_evo::gateway::Controller;
use lenia_evo::Error;

use crate::frames::write_png;

#[derive(Args)]
pub struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long, required_unless_present = "resume")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    steps: u64,
    /// Directory for `recording.jsonl` and PNG frames.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Write a PNG frame every M steps (0 disables frames).
    #[arg(long, default_value_t = 0)]
    record_every: u64,
    #[arg(long, default_value = "final.loee")]
    snapshot_out: PathBuf,
    /// Pattern files to seed the world with (default: built-in smoke seed).
    #[arg(long = "seed-pattern")]
    seed_pattern: Vec<PathBuf>,
    /// Continue from a snapshot instead of seeding.
    #[arg(long, conflicts_with_all = ["config", "seed_pattern"])]
    resume: Option<PathBuf>,
    /// Apply the command schedule found in an earlier recording.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    frame_downsample: usize,
}

pub fn run(args: RunArgs) -> anyhow::Result<u8> {
    let sim = match (&args.resume, &args.config) {
        (Some(path), _) => {
            let (state, config) = snapshot::load(path).with_context(|| format!("loading {}", path.display()))?;
            Simulation::from_state(config, state)?
        }
        (None, Some(path)) => {
            let config = crate::load_config(path)?;
            let seeds = crate::load_seeds(&args.seed_pattern, &config)?;
            Simulation::new(config, &seeds)?
        }
        (None, None) => unreachable!("clap enforces one of config/resume"),
    };
    let schedule = match &args.replay {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            command_schedule(&read_recording(BufReader::new(file))?)
        }
        None => Vec::new(),
    };

    let mut recorder = match &args.record {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join("recording.jsonl");
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            Some(Recorder::new(BufWriter::new(file)))
        }
        None => None,
    };
    let frame_path = |step: u64| args.record.as_ref().map(|d| d.join(format!("frame_{step:08}.png")));

    let mut ctl = Controller::new(sim);
    if args.record_every > 0 {
        if let Some(p) = frame_path(ctl.simulation().state().step) {
            write_png(&p, ctl.simulation().state(), args.frame_downsample)?;
        }
    }
    let mut next = 0;
    while ctl.tick() < args.steps {
        while next < schedule.len() && schedule[next].tick <= ctl.tick() {
            ctl.enqueue(schedule[next].command.clone())
                .map_err(anyhow::Error::msg)?;
            next += 1;
        }
        ctl.apply_pending();
        let line = match ctl.step_once() {
            Ok(line) => line,
            Err(e @ Error::NonFinite { .. }) => {
                let dump = args.snapshot_out.with_extension("fault.loee");
                snapshot::save(&dump, ctl.simulation().state(), ctl.simulation().config())?;
                eprintln!("fault: {e}; state dumped to {}", dump.display());
                return Ok(3);
            }
            Err(e) => return Err(e.into()),
        };
        let step = line.stats.step;
        if let Some(rec) = recorder.as_mut() {
            rec.record(&line)?;
        }
        if args.record_every > 0 && step % args.record_every == 0 {
            if let Some(p) = frame_path(step) {
                write_png(&p, ctl.simulation().state(), args.frame_downsample)?;
            }
        }
        if step % 100 == 0 {
            log::info!(
                "step {step}: mass {:.1?} occupied {:.3} events {}/{}",
                line.stats.mass,
                line.stats.occupied_fraction,
                line.stats.mutations,
                line.stats.penalizations
            );
        }
    }
    if let Some(rec) = recorder.as_mut() {
        rec.flush()?;
    }
    let sim = ctl.simulation();
    snapshot::save(&args.snapshot_out, sim.state(), sim.config())
        .with_context(|| format!("writing {}", args.snapshot_out.display()))?;
    println!("{}", serde_json::to_string(&sim.stats())?);
    Ok(0)
}
