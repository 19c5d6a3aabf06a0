use std::path::PathBuf;

use clap::Args;
use lenia_evo::engine::{PatternFile, Seed, SimConfig};
use lenia_evo::smoke::{candidate, evaluate};

#[derive(Args)]
pub struct SearchArgs {
    /// Base configuration; world size is overridden by --size.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    start: u64,
    #[arg(long, default_value_t = 100)]
    candidates: u64,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 200)]
    steps: u64,
    /// Survivors are re-run this many steps; the first that still persists wins.
    #[arg(long, default_value_t = 400)]
    confirm_steps: u64,
    #[arg(long, default_value_t = 0.5)]
    max_fill: f64,
    /// Radius of the candidate phenotype patch.
    #[arg(long, default_value_t = 12)]
    patch_radius: usize,
    #[arg(long, default_value = "smoke.json")]
    out: PathBuf,
}

pub fn search(args: SearchArgs) -> anyhow::Result<u8> {
    let mut config = match &args.config {
        Some(p) => crate::load_config(p)?,
        None => SimConfig::default(),
    };
    config.width = args.size;
    config.height = args.size;
    config.validate()?;
    let side = 2 * args.patch_radius + 1;
    let offset = (args.size - side) / 2;
    for id in args.start..args.start + args.candidates {
        let (phen, genotype) = candidate(id, args.patch_radius);
        let seed = Seed::uniform(phen.clone(), genotype.clone(), offset, offset);
        let first = evaluate(&config, &seed, args.steps, args.max_fill)?;
        println!(
            "candidate {id}: {} steps, max occupied {:.3}, final {:.3}{}{}{}",
            first.steps,
            first.max_occupied,
            first.final_occupied,
            if first.vanished { ", vanished" } else { "" },
            if first.flooded { ", flooded" } else { "" },
            if first.extinct { ", extinct" } else { "" }
        );
        if !first.persisted() {
            continue;
        }
        let confirm = evaluate(&config, &seed, args.confirm_steps, args.max_fill)?;
        println!(
            "  confirm {} steps: max occupied {:.3}, final {:.3}, persisted {}",
            confirm.steps,
            confirm.max_occupied,
            confirm.final_occupied,
            confirm.persisted()
        );
        if confirm.persisted() {
            let mut file = PatternFile::with_genotype(&phen, &genotype, &config.schema);
            file.name = Some(format!("smoke-{id}"));
            file.save(&args.out)?;
            println!("wrote {}", args.out.display());
            return Ok(0);
        }
    }
    eprintln!("no candidate persisted");
    Ok(1)
}
