use std::time::Instant;

use anyhow::bail;
use clap::Args;
use lenia_evo::engine::{Phase, SeedGenes, SimConfig, Simulation, WorldState};
use lenia_evo::field::StackedField;
use lenia_evo::genome::{N_CHANNELS, N_GENES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Args)]
pub struct BenchArgs {
    /// World size as WxH.
    #[arg(long, default_value = "256x256")]
    size: String,
    #[arg(long, default_value_t = 20)]
    steps: u64,
    #[arg(long, default_value_t = 2)]
    warmup: u64,
    /// `noise` fills the whole world (worst case); `smoke` runs the shipped seed.
    #[arg(long, value_enum, default_value_t = World::Noise)]
    world: World,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum World {
    Noise,
    Smoke,
}

const TARGET_FPS: f64 = 20.0;

fn parse_size(s: &str) -> anyhow::Result<(usize, usize)> {
    let Some((w, h)) = s.split_once(['x', 'X']) else {
        bail!("size must look like 256x256, got {s:?}");
    };
    Ok((w.trim().parse()?, h.trim().parse()?))
}

pub fn bench(args: BenchArgs) -> anyhow::Result<u8> {
    let (width, height) = parse_size(&args.size)?;
    let config = SimConfig::with_size(width, height);
    let smoke = lenia_evo::smoke::seed();
    let setup = Instant::now();
    let mut sim = match args.world {
        World::Smoke => {
            let mut seed = smoke;
            let d = seed.phenotype.dims();
            seed.position.x = width.saturating_sub(d.width) / 2;
            seed.position.y = height.saturating_sub(d.height) / 2;
            Simulation::new(config, &[seed])?
        }
        World::Noise => {
            let SeedGenes::Uniform(g) = &smoke.genes else {
                bail!("smoke seed has no uniform genotype");
            };
            let dims = config.dims();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let noise = (0..dims.len() * N_CHANNELS).map(|_| rng.gen::<f32>()).collect();
            let phen = StackedField::from_vec(dims, N_CHANNELS, noise)?;
            let mut genes = StackedField::zeros(dims, N_GENES);
            for (l, &v) in g.as_slice().iter().enumerate() {
                genes.layer_mut(l).fill(v);
            }
            let seed = config.seed;
            Simulation::from_state(config, WorldState::new(phen, genes, seed)?)?
        }
    };
    println!("world {width}x{height}, setup {:.2} s", setup.elapsed().as_secs_f64());
    sim.run(args.warmup)?;

    let mut phase_time = [0.0f64; 10];
    let start = Instant::now();
    for _ in 0..args.steps {
        let mut last: Option<(usize, Instant)> = None;
        sim.step_observed(|p| {
            let now = Instant::now();
            if let Some((i, t)) = last {
                phase_time[i] += (now - t).as_secs_f64();
            }
            let i = Phase::ORDER.iter().position(|&q| q == p).expect("known phase");
            last = Some((i, now));
        })?;
        if let Some((i, t)) = last {
            phase_time[i] += t.elapsed().as_secs_f64();
        }
    }
    let total = start.elapsed().as_secs_f64();
    let rate = args.steps as f64 / total;
    println!(
        "{} steps in {:.2} s: {:.2} steps/s ({:.1} ms/step)",
        args.steps,
        total,
        rate,
        1e3 / rate
    );
    for (p, t) in Phase::ORDER.iter().zip(phase_time) {
        println!(
            "  {:<16} {:>8.2} ms/step",
            format!("{p:?}"),
            1e3 * t / args.steps as f64
        );
    }
    println!(
        "real-time target {TARGET_FPS} steps/s: {} ({:.1}% of target; 1 CPU thread)",
        if rate >= TARGET_FPS { "met" } else { "not met" },
        100.0 * rate / TARGET_FPS
    );
    println!("final stats: {}", serde_json::to_string(&sim.stats())?);
    Ok(0)
}
