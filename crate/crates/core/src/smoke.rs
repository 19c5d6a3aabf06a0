//! Synthetic smoke-test seed and the random search that finds such seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::Seed;
use crate::field::{Dims, StackedField};
use crate::genome::{gene_layer, Genotype, Param, N_CHANNELS, N_GENES, N_KERNELS};

/// Candidate `id` of the search space: a noisy disk phenotype of the given
/// radius and a genotype with growth genes drawn from narrow, Lenia-like
/// ranges. Every kernel's height stays well above ε: with the all-kernels
/// alpha mask, one weak kernel is enough to strip the genes off a pixel.
pub fn candidate(id: u64, radius: usize) -> (StackedField, Genotype) {
    let mut rng = ChaCha8Rng::seed_from_u64(id);
    let mut genes = vec![0.0f32; N_GENES];
    for k in 0..N_KERNELS {
        let cross = k >= 9;
        let mut set = |p: Param, v: f32| genes[gene_layer(p, k)] = v.clamp(0.02, 1.0);
        set(Param::R1, rng.gen_range(0.1..0.6));
        set(Param::W1, rng.gen_range(0.05..0.35));
        set(Param::B1, rng.gen_range(0.3..1.0));
        set(Param::R2, rng.gen_range(0.4..0.95));
        set(Param::W2, rng.gen_range(0.05..0.35));
        set(Param::B2, rng.gen_range(0.02..0.6));
        // m in [0.1, 0.35], s in [0.01, 0.06] physical.
        set(Param::M, rng.gen_range(0.11..0.67));
        set(Param::S, rng.gen_range(0.045..0.3));
        set(
            Param::H,
            if cross {
                rng.gen_range(0.1..0.25)
            } else {
                rng.gen_range(0.15..0.45)
            },
        );
    }
    let genotype = Genotype::new(genes).expect("genes clamped to [0, 1]");

    let side = 2 * radius + 1;
    let dims = Dims::new(side, side);
    let mut phen = StackedField::zeros(dims, N_CHANNELS);
    let c = radius as f64;
    let density: [f64; N_CHANNELS] = [
        rng.gen_range(0.3..1.0),
        rng.gen_range(0.3..1.0),
        rng.gen_range(0.3..1.0),
    ];
    for x in 0..side {
        for y in 0..side {
            let d = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt() / c;
            for (ch, &rho) in density.iter().enumerate() {
                let v = rng.gen::<f64>();
                if d < 0.9 {
                    phen.set(ch, x, y, (v * rho * (1.0 - d * d)) as f32);
                }
            }
        }
    }
    (phen, genotype)
}

pub const SMOKE_PATTERN: &str = include_str!("../patterns/smoke.json");

/// The shipped smoke seed, placed near the origin.
pub fn seed() -> Seed {
    let file = crate::engine::PatternFile::from_json(SMOKE_PATTERN).expect("shipped pattern is valid");
    file.to_seed(crate::engine::Position { x: 100, y: 100 })
        .expect("shipped pattern carries a genotype")
}

/// Outcome of running a seed alone in a world.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SmokeOutcome {
    /// Steps completed before the pattern vanished or flooded, or all steps.
    pub steps: u64,
    pub vanished: bool,
    pub flooded: bool,
    /// The alpha channel emptied: no genes left, so the phenospace froze.
    pub extinct: bool,
    pub max_occupied: f64,
    pub final_occupied: f64,
}

impl SmokeOutcome {
    pub fn persisted(&self) -> bool {
        !self.vanished && !self.flooded && !self.extinct
    }
}

/// Runs `steps` steps; stops early once the world is empty or more than
/// `max_fill` of it is occupied, or once no genes are left.
pub fn evaluate(
    config: &crate::engine::SimConfig,
    seed: &Seed,
    steps: u64,
    max_fill: f64,
) -> crate::Result<SmokeOutcome> {
    let mut sim = crate::engine::Simulation::new(config.clone(), std::slice::from_ref(seed))?;
    let mut out = SmokeOutcome {
        steps: 0,
        vanished: false,
        flooded: false,
        extinct: false,
        max_occupied: 0.0,
        final_occupied: sim.stats().occupied_fraction,
    };
    for _ in 0..steps {
        sim.step()?;
        let stats = sim.stats();
        let occ = stats.occupied_fraction;
        out.steps += 1;
        out.final_occupied = occ;
        out.max_occupied = out.max_occupied.max(occ);
        if occ == 0.0 {
            out.vanished = true;
            break;
        }
        if occ > max_fill {
            out.flooded = true;
            break;
        }
        if stats.alpha_area == 0 {
            out.extinct = true;
            break;
        }
    }
    Ok(out)
}
