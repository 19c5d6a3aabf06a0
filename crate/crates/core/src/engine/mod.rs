//! Run state and the intrinsic-evolution loop.

mod config;
pub mod pattern;
pub mod recording;
pub mod snapshot;

use std::collections::VecDeque;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::SimConfig;
pub use pattern::{PatternFile, PatternSample, Position, Seed, SeedGenes};

use crate::dynamics::{apply_growth, growth_fields, recombine, ring_convolutions};
use crate::error::{Error, Result};
use crate::evolution::{
    alpha_mask, apply_alpha, apply_penalty, apply_walls, diffuse, mask_signal, mutate, penalty_mask, EventKind,
    EventRecord,
};
use crate::field::{delta_sum, disk_kernel, Dims, DiskKernel, Fft2D, Mask2D, StackedField};
use crate::genome::{build_ring_bank, Genotype, RingKernelBank, N_CHANNELS, N_GENES};

/// Serializable position of the ChaCha stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// Decimal, since JSON numbers cannot hold a u128.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> std::result::Result<ChaCha8Rng, String> {
        if self.seed.len() != 64 {
            return Err("rng seed must be 64 hex digits".into());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|e| format!("rng seed: {e}"))?;
        }
        let word_pos: u128 = self.word_pos.parse().map_err(|e| format!("rng word_pos: {e}"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub mutations: u64,
    pub penalizations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    pub step: u64,
    /// `A`, three channels.
    pub phenospace: StackedField,
    /// `P`, 135 normalized genes.
    pub genospace: StackedField,
    pub rng: ChaCha8Rng,
    /// Most recent events, oldest first.
    pub events: VecDeque<EventRecord>,
    pub counts: EventCounts,
    /// Pixels inside α at the last step.
    pub alpha_area: usize,
}

impl WorldState {
    pub fn new(phenospace: StackedField, genospace: StackedField, seed: u64) -> Result<Self> {
        phenospace.dims().ensure_eq(genospace.dims())?;
        if phenospace.layer_count() != N_CHANNELS || genospace.layer_count() != N_GENES {
            return Err(Error::config("world state needs 3 channels and 135 gene layers"));
        }
        Ok(WorldState {
            step: 0,
            phenospace,
            genospace,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: VecDeque::new(),
            counts: EventCounts::default(),
            alpha_area: 0,
        })
    }

    pub fn empty(dims: Dims, seed: u64) -> Self {
        WorldState::new(
            StackedField::zeros(dims, N_CHANNELS),
            StackedField::zeros(dims, N_GENES),
            seed,
        )
        .expect("consistent shapes")
    }

    pub fn dims(&self) -> Dims {
        self.phenospace.dims()
    }

    fn push_event(&mut self, event: EventRecord, capacity: usize) {
        match event.kind {
            EventKind::Mutation => self.counts.mutations += 1,
            EventKind::Penalization => self.counts.penalizations += 1,
        }
        if self.events.len() == capacity {
            self.events.pop_front();
        }
        self.events.push_back(event);
    }

    fn check_finite(&self) -> Result<()> {
        let dims = self.dims();
        for (name, stack) in [("phenospace", &self.phenospace), ("genospace", &self.genospace)] {
            if let Some(i) = stack.as_slice().iter().position(|v| !v.is_finite()) {
                let n = dims.len();
                let px = i % n;
                return Err(Error::NonFinite {
                    step: self.step,
                    layer: name,
                    index: i / n,
                    x: px / dims.height,
                    y: px % dims.height,
                });
            }
        }
        Ok(())
    }
}

/// The ten lines of the loop body, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AddWalls,
    Diffuse,
    ConvolveRings,
    WeightedSum,
    AlphaChannel,
    MaskGenospace,
    PenaltyArea,
    GrowthUpdate,
    Mutate,
    Penalize,
}

impl Phase {
    pub const ORDER: [Phase; 10] = [
        Phase::AddWalls,
        Phase::Diffuse,
        Phase::ConvolveRings,
        Phase::WeightedSum,
        Phase::AlphaChannel,
        Phase::MaskGenospace,
        Phase::PenaltyArea,
        Phase::GrowthUpdate,
        Phase::Mutate,
        Phase::Penalize,
    ];
}

/// Clears `P` and `A` on each seed's footprint, then pastes the seed. The
/// footprint is the patch rectangle plus, for uniform genes, the support
/// dilated by `r_diff`.
pub fn seed_world(config: &SimConfig, seeds: &[Seed]) -> Result<WorldState> {
    let dims = config.dims();
    let mut state = WorldState::empty(dims, config.seed);
    let mut claimed = vec![false; dims.len()];
    for (n, seed) in seeds.iter().enumerate() {
        let pd = seed.phenotype.dims();
        if pd.width > dims.width || pd.height > dims.height || seed.phenotype.layer_count() != N_CHANNELS {
            return Err(Error::Pattern(format!(
                "seed {n}: patch {pd} does not fit a {dims} world"
            )));
        }
        let origin = (seed.position.x as isize, seed.position.y as isize);
        let world_index = |i: usize, j: usize| dims.wrapped_index(origin.0 + i as isize, origin.1 + j as isize);

        let mut footprint = Mask2D::empty(dims);
        for i in 0..pd.width {
            for j in 0..pd.height {
                let w = world_index(i, j);
                footprint.set(w / dims.height, w % dims.height, true);
            }
        }
        let mut gene_region = Mask2D::empty(dims);
        if let SeedGenes::Uniform(_) = seed.genes {
            let r = config.r_diff as isize;
            for (p, inside) in seed.support(config.epsilon).into_iter().enumerate() {
                if !inside {
                    continue;
                }
                let (i, j) = ((p / pd.height) as isize, (p % pd.height) as isize);
                for dx in -r..=r {
                    for dy in -r..=r {
                        if dx * dx + dy * dy <= r * r {
                            let (x, y) = dims.wrap(origin.0 + i + dx, origin.1 + j + dy);
                            gene_region.set(x, y, true);
                            footprint.set(x, y, true);
                        }
                    }
                }
            }
        }

        let overlap = footprint
            .as_slice()
            .iter()
            .zip(&claimed)
            .filter(|(&f, &c)| f && c)
            .count();
        if overlap > 0 {
            log::warn!("seed {n} overlaps earlier seeds on {overlap} pixels; the later seed wins");
        }
        for (idx, &f) in footprint.as_slice().iter().enumerate() {
            if f {
                claimed[idx] = true;
                for l in 0..N_CHANNELS {
                    state.phenospace.layer_mut(l)[idx] = 0.0;
                }
                for l in 0..N_GENES {
                    state.genospace.layer_mut(l)[idx] = 0.0;
                }
            }
        }
        for i in 0..pd.width {
            for j in 0..pd.height {
                let w = world_index(i, j);
                for c in 0..N_CHANNELS {
                    state.phenospace.layer_mut(c)[w] = seed.phenotype.get(c, i, j);
                }
                if let SeedGenes::Patch(genes) = &seed.genes {
                    genes.dims().ensure_eq(pd)?;
                    for l in 0..N_GENES {
                        state.genospace.layer_mut(l)[w] = genes.get(l, i, j);
                    }
                }
            }
        }
        if let SeedGenes::Uniform(g) = &seed.genes {
            for (idx, &inside) in gene_region.as_slice().iter().enumerate() {
                if inside {
                    for (l, &v) in g.as_slice().iter().enumerate() {
                        state.genospace.layer_mut(l)[idx] = v;
                    }
                }
            }
        }
    }
    Ok(state)
}

/// Toroidal `(2r+1)²` patches of A and P centered at `(x, y)`.
pub fn dropper(state: &WorldState, epsilon: f32, x: usize, y: usize, radius: usize) -> Result<PatternSample> {
    if radius == 0 {
        return Err(Error::config("dropper radius must be at least 1"));
    }
    let dims = state.dims();
    let side = 2 * radius + 1;
    let pd = Dims::new(side, side);
    let mut phenotype = StackedField::zeros(pd, N_CHANNELS);
    let mut genotype = StackedField::zeros(pd, N_GENES);
    let mut sum = vec![0.0f64; N_GENES];
    let mut count = 0usize;
    let r = radius as isize;
    for i in 0..side {
        for j in 0..side {
            let (dx, dy) = (i as isize - r, j as isize - r);
            let w = dims.wrapped_index(x as isize + dx, y as isize + dy);
            for c in 0..N_CHANNELS {
                phenotype.set(c, i, j, state.phenospace.layer(c)[w]);
            }
            let mut all = true;
            for l in 0..N_GENES {
                let v = state.genospace.layer(l)[w];
                genotype.set(l, i, j, v);
                all &= v > epsilon;
            }
            if all && dx * dx + dy * dy <= r * r {
                count += 1;
                for (l, s) in sum.iter_mut().enumerate() {
                    *s += state.genospace.layer(l)[w] as f64;
                }
            }
        }
    }
    let averaged = (count > 0).then(|| {
        Genotype::new(sum.iter().map(|s| (s / count as f64).clamp(0.0, 1.0) as f32).collect())
            .expect("mean of valid genes")
    });
    Ok(PatternSample {
        center: Position { x, y },
        radius,
        phenotype,
        genotype,
        averaged,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub step: u64,
    pub mass: [f64; N_CHANNELS],
    /// Fraction of pixels where `Σ_c A_c > ε`.
    pub occupied_fraction: f64,
    pub alpha_area: usize,
    pub alpha_fraction: f64,
    pub mutations: u64,
    pub penalizations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_sec: Option<f64>,
}

pub fn stats(state: &WorldState, epsilon: f32) -> Stats {
    let n = state.dims().len() as f64;
    let mut mass = [0.0; N_CHANNELS];
    for (c, m) in mass.iter_mut().enumerate() {
        *m = state.phenospace.layer(c).iter().map(|&v| v as f64).sum();
    }
    Stats {
        step: state.step,
        mass,
        occupied_fraction: delta_sum(&state.phenospace, epsilon).count() as f64 / n,
        alpha_area: state.alpha_area,
        alpha_fraction: state.alpha_area as f64 / n,
        mutations: state.counts.mutations,
        penalizations: state.counts.penalizations,
        steps_per_sec: None,
    }
}

/// Events produced by one step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub events: Vec<EventRecord>,
}

/// A configured world plus the precomputed transforms it steps with.
pub struct Simulation {
    config: SimConfig,
    plan: Fft2D,
    bank: RingKernelBank,
    diffusion: DiskKernel,
    oxygen: DiskKernel,
    initial: (StackedField, StackedField),
    state: WorldState,
}

impl fmt::Debug for Simulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Simulation")
            .field("dims", &self.config.dims())
            .field("step", &self.state.step)
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(config: SimConfig, seeds: &[Seed]) -> Result<Self> {
        config.validate()?;
        let state = seed_world(&config, seeds)?;
        Simulation::from_state(config, state)
    }

    /// Wraps an existing state, e.g. one loaded from a snapshot. Restarts
    /// return to this state.
    pub fn from_state(config: SimConfig, state: WorldState) -> Result<Self> {
        config.validate()?;
        let dims = config.dims();
        dims.ensure_eq(state.dims())?;
        let plan = Fft2D::new(dims);
        let bank = build_ring_bank(&plan, config.radius, config.n_ring, config.ring_assignment)?;
        let diffusion = disk_kernel(&plan, config.r_diff)?;
        let oxygen = disk_kernel(&plan, config.r_oxy)?;
        Ok(Simulation {
            initial: (state.phenospace.clone(), state.genospace.clone()),
            config,
            plan,
            bank,
            diffusion,
            oxygen,
            state,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn plan(&self) -> &Fft2D {
        &self.plan
    }

    pub fn ring_bank(&self) -> &RingKernelBank {
        &self.bank
    }

    pub fn dims(&self) -> Dims {
        self.config.dims()
    }

    pub fn stats(&self) -> Stats {
        stats(&self.state, self.config.epsilon)
    }

    pub fn dropper(&self, x: usize, y: usize, radius: usize) -> Result<PatternSample> {
        dropper(
            &self.state,
            self.config.epsilon,
            x % self.dims().width,
            y % self.dims().height,
            radius,
        )
    }

    pub fn set_gamma_mut(&mut self, gamma: f64) -> Result<()> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma_mut must be a finite value >= 0"));
        }
        self.config.gamma_mut = gamma;
        Ok(())
    }

    pub fn set_gamma_pen(&mut self, gamma: f64) -> Result<()> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma_pen must be a finite value >= 0"));
        }
        self.config.gamma_pen = gamma;
        Ok(())
    }

    pub fn set_walls_enabled(&mut self, enabled: bool) {
        self.config.walls.enabled = enabled;
    }

    /// Returns to the initial world with a fresh rng stream.
    pub fn restart(&mut self, seed: u64) {
        self.config.seed = seed;
        let (a, p) = self.initial.clone();
        self.state = WorldState::new(a, p, seed).expect("initial state is consistent");
    }

    pub fn snapshot_bytes(&self) -> Vec<u8> {
        snapshot::to_bytes(&self.state, &self.config)
    }

    pub fn step(&mut self) -> Result<StepReport> {
        self.step_observed(|_| {})
    }

    /// One iteration; `observe` is called as each phase starts.
    pub fn step_observed(&mut self, mut observe: impl FnMut(Phase)) -> Result<StepReport> {
        let cfg = &self.config;
        let st = &mut self.state;
        let step = st.step;
        let mut report = StepReport::default();

        observe(Phase::AddWalls);
        apply_walls(&mut st.phenospace, &mut st.genospace, &cfg.walls);

        observe(Phase::Diffuse);
        st.genospace = diffuse(&st.genospace, &self.diffusion, cfg.epsilon);

        observe(Phase::ConvolveRings);
        let convs = ring_convolutions(&self.plan, &self.bank, &st.phenospace)?;

        observe(Phase::WeightedSum);
        let potentials = recombine(&convs, &st.genospace, &self.bank, &cfg.wiring, &cfg.schema)?;
        drop(convs);
        let growth = growth_fields(&potentials, &st.genospace, &cfg.schema, cfg.growth_form)?;
        drop(potentials);

        observe(Phase::AlphaChannel);
        let alpha_signal = mask_signal(&growth, &st.genospace, &cfg.schema, cfg.growth_form, cfg.alpha_signal);
        let alpha = alpha_mask(&alpha_signal, &st.genospace, cfg.epsilon, cfg.alpha_mode);
        let occupancy_signal = if cfg.occupancy_signal == cfg.alpha_signal || cfg.gamma_pen == 0.0 {
            alpha_signal
        } else {
            mask_signal(
                &growth,
                &st.genospace,
                &cfg.schema,
                cfg.growth_form,
                cfg.occupancy_signal,
            )
        };

        observe(Phase::MaskGenospace);
        apply_alpha(&mut st.genospace, &alpha);

        observe(Phase::PenaltyArea);
        // The mask does not touch the rng, so it can be skipped when unused.
        let penalty = if cfg.gamma_pen > 0.0 {
            penalty_mask(&self.plan, &occupancy_signal, &self.oxygen, cfg.epsilon, cfg.theta_pen)?
        } else {
            Mask2D::empty(st.dims())
        };
        drop(occupancy_signal);

        observe(Phase::GrowthUpdate);
        apply_growth(&mut st.phenospace, &growth, &cfg.wiring, cfg.dt);

        observe(Phase::Mutate);
        if let Some(e) = mutate(&mut st.genospace, &alpha, &mut st.rng, cfg.mutation(), step) {
            report.events.push(e);
        }

        observe(Phase::Penalize);
        if let Some(e) = apply_penalty(
            &mut st.genospace,
            &penalty,
            &alpha,
            &mut st.rng,
            cfg.gamma_pen,
            cfg.delta_max,
            step,
        ) {
            report.events.push(e);
        }

        st.step += 1;
        st.alpha_area = alpha.count();
        for e in &report.events {
            st.push_event(e.clone(), cfg.event_log_capacity);
        }
        st.check_finite()?;
        Ok(report)
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{Param, N_KERNELS};

    fn small_config() -> SimConfig {
        SimConfig {
            width: 48,
            height: 40,
            radius: 6,
            n_ring: 12,
            r_oxy: 6,
            mutation_half_size: 4,
            ..SimConfig::default()
        }
    }

    fn blob(side: usize, value: f32) -> StackedField {
        let dims = Dims::new(side, side);
        let mut s = StackedField::zeros(dims, N_CHANNELS);
        let c = side as f32 / 2.0 - 0.5;
        for x in 0..side {
            for y in 0..side {
                let d = ((x as f32 - c).powi(2) + (y as f32 - c).powi(2)).sqrt();
                if d <= side as f32 / 2.0 - 1.0 {
                    for ch in 0..N_CHANNELS {
                        s.set(ch, x, y, value);
                    }
                }
            }
        }
        s
    }

    #[test]
    fn no_seeds_empty_world() {
        let st = seed_world(&small_config(), &[]).unwrap();
        assert!(st.phenospace.as_slice().iter().all(|&v| v == 0.0));
        assert!(st.genospace.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_seed_fills_dilated_support() {
        let cfg = small_config();
        let dims = cfg.dims();
        let g = Genotype::uniform(0.4);
        let patch = blob(9, 0.7);
        let st = seed_world(&cfg, &[Seed::uniform(patch.clone(), g, 45, 10)]).unwrap();
        // Oracle: disk convolution of the pasted support, thresholded at 1/2.
        let mut support = StackedField::zeros(dims, 1);
        for i in 0..9 {
            for j in 0..9 {
                if patch.get(0, i, j) > cfg.epsilon {
                    let (x, y) = dims.wrap(45 + i as isize, 10 + j as isize);
                    support.set(0, x, y, 1.0);
                }
            }
        }
        let disk = disk_kernel(&Fft2D::new(dims), cfg.r_diff).unwrap();
        let dilated = crate::field::tests::naive_convolve(&support.layer_field(0), disk.field());
        for (idx, &d) in dilated.iter().enumerate() {
            for l in [0, 77, 134] {
                assert_eq!(st.genospace.layer(l)[idx], if d > 0.5 { 0.4 } else { 0.0 });
            }
        }
        assert_eq!(st.phenospace.get(1, 1, 14), patch.get(1, 4, 4));
    }

    #[test]
    fn disjoint_seeds_keep_their_genotypes() {
        let cfg = small_config();
        let seeds = [
            Seed::uniform(blob(7, 0.5), Genotype::uniform(0.2), 2, 2),
            Seed::uniform(blob(7, 0.5), Genotype::uniform(0.8), 25, 20),
        ];
        let st = seed_world(&cfg, &seeds).unwrap();
        assert_eq!(st.genospace.get(5, 5, 5), 0.2);
        assert_eq!(st.genospace.get(5, 28, 23), 0.8);
    }

    #[test]
    fn later_seed_wins() {
        let cfg = small_config();
        let seeds = [
            Seed::uniform(blob(7, 0.5), Genotype::uniform(0.2), 2, 2),
            Seed::uniform(blob(7, 0.9), Genotype::uniform(0.8), 4, 4),
        ];
        let st = seed_world(&cfg, &seeds).unwrap();
        assert_eq!(st.genospace.get(0, 7, 7), 0.8);
        assert_eq!(st.phenospace.get(0, 7, 7), 0.9);
    }

    #[test]
    fn oversized_seed_rejected() {
        let cfg = small_config();
        let seed = Seed::uniform(blob(41, 0.5), Genotype::uniform(0.2), 0, 0);
        assert!(seed_world(&cfg, &[seed]).is_err());
    }

    #[test]
    fn zero_growth_leaves_phenospace() {
        let mut cfg = small_config();
        cfg.gamma_mut = 0.0;
        cfg.gamma_pen = 0.0;
        let mut g = Genotype::uniform(0.5);
        for k in 0..N_KERNELS {
            g.set(Param::H, k, 0.0);
        }
        let mut sim = Simulation::new(cfg, &[Seed::uniform(blob(11, 0.6), g, 10, 10)]).unwrap();
        let before = sim.state().phenospace.clone();
        sim.step().unwrap();
        assert_eq!(sim.state().phenospace, before);
        assert_eq!(sim.state().step, 1);
    }

    #[test]
    fn phases_in_order() {
        let cfg = small_config();
        let mut sim = Simulation::new(cfg, &[Seed::uniform(blob(11, 0.6), Genotype::uniform(0.5), 10, 10)]).unwrap();
        let mut seen = Vec::new();
        sim.step_observed(|p| seen.push(p)).unwrap();
        assert_eq!(seen, Phase::ORDER);
    }

    #[test]
    fn dropper_cases() {
        let cfg = small_config();
        let empty = WorldState::empty(cfg.dims(), 0);
        let s = dropper(&empty, cfg.epsilon, 3, 3, 2).unwrap();
        assert!(s.averaged.is_none());
        assert_eq!(s.phenotype.dims(), Dims::new(5, 5));
        assert!(s.genotype.as_slice().iter().all(|&v| v == 0.0));
        assert!(dropper(&empty, cfg.epsilon, 3, 3, 0).is_err());

        let g = Genotype::new((0..N_GENES).map(|i| 0.05 + 0.9 * i as f32 / N_GENES as f32).collect()).unwrap();
        let st = seed_world(&cfg, &[Seed::uniform(blob(15, 0.6), g.clone(), 10, 10)]).unwrap();
        let s = dropper(&st, cfg.epsilon, 17, 17, 3).unwrap();
        assert_eq!(s.averaged.unwrap(), g);
    }

    #[test]
    fn dropper_half_and_half() {
        let cfg = small_config();
        let mut st = WorldState::empty(cfg.dims(), 0);
        let (g1, g2) = (0.3f32, 0.7f32);
        // Row 20 carries no genes, so the disk around (24, 20) splits into
        // mirror-image halves.
        for x in 0..cfg.width {
            for y in 0..cfg.height {
                let v = match y {
                    0..=19 => g1,
                    20 => 0.0,
                    _ => g2,
                };
                for l in 0..N_GENES {
                    st.genospace.set(l, x, y, v);
                }
            }
        }
        let avg = dropper(&st, cfg.epsilon, 24, 20, 4).unwrap().averaged.unwrap();
        let expect = (g1 as f64 + g2 as f64) / 2.0;
        assert!(avg.as_slice().iter().all(|&v| (v as f64 - expect).abs() < 1e-6));
    }

    #[test]
    fn stats_examples() {
        let cfg = small_config();
        let dims = cfg.dims();
        let mut st = WorldState::empty(dims, 0);
        let s = stats(&st, cfg.epsilon);
        assert_eq!((s.mass, s.occupied_fraction, s.alpha_fraction), ([0.0; 3], 0.0, 0.0));
        st.phenospace = StackedField::filled(dims, 3, 1.0);
        let s = stats(&st, cfg.epsilon);
        assert_eq!(s.mass, [dims.len() as f64; 3]);
        assert_eq!(s.occupied_fraction, 1.0);
        st.phenospace = StackedField::zeros(dims, 3);
        for x in 0..dims.width / 2 {
            for y in 0..dims.height {
                st.phenospace.set(1, x, y, 0.5);
            }
        }
        assert_eq!(stats(&st, cfg.epsilon).mass[1], dims.len() as f64 / 4.0);
    }

    #[test]
    fn rng_state_round_trip() {
        use rand::RngCore;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        rng.next_u32();
        let mut back = RngState::capture(&rng).restore().unwrap();
        assert_eq!(back.next_u64(), rng.next_u64());
    }

    #[test]
    fn event_log_is_bounded() {
        let mut cfg = small_config();
        cfg.event_log_capacity = 3;
        let mut sim = Simulation::new(cfg, &[Seed::uniform(blob(15, 0.6), Genotype::uniform(0.5), 10, 10)]).unwrap();
        sim.run(8).unwrap();
        let st = sim.state();
        assert!(st.events.len() <= 3);
        assert!(st.counts.mutations + st.counts.penalizations >= st.events.len() as u64);
    }
}
