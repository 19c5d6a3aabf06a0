//! Operators acting on the genospace: alpha masking, diffusion, mutation,
//! penalization of exploding patterns, and walls.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    convolve_periodic, delta_all, delta_sum, BoxSums, Dims, DiskKernel, Fft2D, Field2D, Mask2D, StackedField,
};
use crate::genome::{gene_layer, GeneSchema, GrowthForm, Param, N_KERNELS, N_PARAMS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Every kernel's signal and every gene above ε.
    #[default]
    All,
    /// Summed signal and summed genes above ε.
    Sum,
    /// Mask disabled: α covers the whole grid.
    Full,
}

/// Which per-kernel quantity the alpha and occupancy masks threshold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSignal {
    /// `|U_k|`.
    #[default]
    Magnitude,
    /// The Gaussian bump of the growth mapping, `h·exp(-(u-m)²/2s²)`.
    /// Equal to `U_k` for the unipolar form and `(U_k + h)/2` for the bipolar form.
    /// Under the bipolar form this drops genes wherever growth is negative,
    /// which freezes decaying matter in place.
    Activation,
}

/// Per-kernel mask signal derived from the growth stack.
pub fn mask_signal(
    growth: &StackedField,
    genospace: &StackedField,
    schema: &GeneSchema,
    form: GrowthForm,
    signal: MaskSignal,
) -> StackedField {
    let mut out = growth.clone();
    match (signal, form) {
        (MaskSignal::Magnitude, _) => {
            for v in out.as_mut_slice() {
                *v = v.abs();
            }
        }
        (MaskSignal::Activation, GrowthForm::Unipolar) => {}
        (MaskSignal::Activation, GrowthForm::Bipolar) => {
            for k in 0..N_KERNELS {
                let h = genospace.layer(gene_layer(Param::H, k));
                for (v, &hn) in out.layer_mut(k).iter_mut().zip(h) {
                    *v = ((*v as f64 + schema.h.decode(hn)) * 0.5) as f32;
                }
            }
        }
    }
    out
}

/// `α = Δ(signal) ∧ Δ(P)` with Δ chosen by `mode`.
pub fn alpha_mask(signal: &StackedField, genospace: &StackedField, epsilon: f32, mode: AlphaMode) -> Mask2D {
    match mode {
        AlphaMode::All => delta_all(signal, epsilon).and(&delta_all(genospace, epsilon)),
        AlphaMode::Sum => delta_sum(signal, epsilon).and(&delta_sum(genospace, epsilon)),
        AlphaMode::Full => Mask2D::full(signal.dims()),
    }
}

/// `P ← P ⊙ α`.
pub fn apply_alpha(genospace: &mut StackedField, alpha: &Mask2D) {
    for layer in genospace.layers_mut() {
        for (v, &keep) in layer.iter_mut().zip(alpha.as_slice()) {
            if !keep {
                *v = 0.0;
            }
        }
    }
}

fn support_key(support: &[u8]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    support.hash(&mut h);
    h.finish()
}

/// `P ← clip((P * K) / (Δ_same(P) * K), 0, 1)` per layer, 0 where the support count vanishes.
///
/// Both convolutions run in direct space with f64 accumulation, so the
/// denominators are exact pixel counts. Layers with identical support share
/// one denominator.
pub fn diffuse(genospace: &StackedField, disk: &DiskKernel, epsilon: f32) -> StackedField {
    let dims = genospace.dims();
    let n = dims.len();
    let mut out = StackedField::zeros(dims, genospace.layer_count());
    let mut boxes = BoxSums::new(dims, disk.radius());
    let mut numerator = vec![0.0f64; n];
    let mut denominators: HashMap<u64, Vec<(Vec<u8>, Vec<f64>)>> = HashMap::new();

    for (i, layer) in genospace.layers().enumerate() {
        boxes.load(layer);
        if !boxes.any_nonzero() {
            continue;
        }
        boxes.disk_sum(disk.half_heights(), &mut numerator);

        let support: Vec<u8> = layer.iter().map(|&v| u8::from(v > epsilon)).collect();
        let bucket = denominators.entry(support_key(&support)).or_default();
        let pos = match bucket.iter().position(|(s, _)| *s == support) {
            Some(pos) => pos,
            None => {
                let mut den = vec![0.0f64; n];
                let mut sb = BoxSums::new(dims, disk.radius());
                sb.load_with(|i| support[i] as f64);
                sb.disk_sum(disk.half_heights(), &mut den);
                bucket.push((support, den));
                bucket.len() - 1
            }
        };
        let den = &bucket[pos].1;
        for ((o, &num), &d) in out.layer_mut(i).iter_mut().zip(&numerator).zip(den) {
            *o = if d > 1e-9 {
                (num / d).clamp(0.0, 1.0) as f32
            } else {
                0.0
            };
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Mutation,
    Penalization,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum EventRegion {
    /// Toroidal square `[x0 - s, x0 + s) × [y0 - s, y0 + s)`.
    Box { x0: usize, y0: usize, half_size: usize },
    /// Number of pixels the event touched.
    Area { pixels: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub step: u64,
    pub kind: EventKind,
    pub param: Param,
    pub kernel: usize,
    /// Signed change applied before clipping (rate × drawn amount).
    pub delta: f64,
    pub region: EventRegion,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationDraw {
    pub param: Param,
    pub kernel: usize,
    pub x0: usize,
    pub y0: usize,
    pub delta: f64,
}

/// Draws the mutation parameters. Always consumes the same amount of
/// randomness, whatever the rate, so the stream stays aligned across steering.
pub fn draw_mutation(rng: &mut impl Rng, dims: Dims, delta_max: f64) -> MutationDraw {
    let param = Param::ALL[rng.gen_range(0..N_PARAMS)];
    let kernel = rng.gen_range(0..N_KERNELS);
    let x0 = rng.gen_range(0..dims.width);
    let y0 = rng.gen_range(0..dims.height);
    let delta = if delta_max > 0.0 {
        rng.gen_range(-delta_max..=delta_max)
    } else {
        let _ = rng.gen::<f64>();
        0.0
    };
    MutationDraw {
        param,
        kernel,
        x0,
        y0,
        delta,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MutationParams {
    pub gamma: f64,
    pub half_size: usize,
    pub delta_max: f64,
}

/// Adds `γ·δ` to one gene layer inside a random box intersected with α.
pub fn mutate(
    genospace: &mut StackedField,
    alpha: &Mask2D,
    rng: &mut impl Rng,
    params: MutationParams,
    step: u64,
) -> Option<EventRecord> {
    let dims = genospace.dims();
    let draw = draw_mutation(rng, dims, params.delta_max);
    apply_mutation(genospace, alpha, &draw, params, step)
}

pub fn apply_mutation(
    genospace: &mut StackedField,
    alpha: &Mask2D,
    draw: &MutationDraw,
    params: MutationParams,
    step: u64,
) -> Option<EventRecord> {
    let shift = params.gamma * draw.delta;
    if shift == 0.0 {
        return None;
    }
    let dims = genospace.dims();
    let s = params.half_size as isize;
    let layer = genospace.layer_mut(gene_layer(draw.param, draw.kernel));
    let mut touched = 0;
    let span_x = (2 * params.half_size).min(dims.width) as isize;
    let span_y = (2 * params.half_size).min(dims.height) as isize;
    for i in 0..span_x {
        for j in 0..span_y {
            let idx = dims.wrapped_index(draw.x0 as isize - s + i, draw.y0 as isize - s + j);
            if alpha.as_slice()[idx] {
                layer[idx] = (layer[idx] as f64 + shift).clamp(0.0, 1.0) as f32;
                touched += 1;
            }
        }
    }
    (touched > 0).then_some(EventRecord {
        step,
        kind: EventKind::Mutation,
        param: draw.param,
        kernel: draw.kernel,
        delta: shift,
        region: EventRegion::Box {
            x0: draw.x0,
            y0: draw.y0,
            half_size: params.half_size,
        },
    })
}

/// Oxygenated and penalized fields of the inverse-diffusion construction.
#[derive(Clone, Debug)]
pub struct PenaltyFields {
    pub occupied: Mask2D,
    pub oxygen: Field2D,
    pub penalty: Field2D,
    pub mask: Mask2D,
}

/// `E_oxy = (1 - Δ_sum(signal)) * K_oxy`, `E_pen = (1 - E_oxy) * K_oxy`, with
/// `K_oxy` the unit-sum disk; the mask is `E_pen > θ`.
pub fn penalty_fields(
    plan: &Fft2D,
    signal: &StackedField,
    oxy: &DiskKernel,
    epsilon: f32,
    theta: f64,
) -> Result<PenaltyFields> {
    let occupied = delta_sum(signal, epsilon);
    penalty_from_occupancy(plan, occupied, oxy, theta)
}

pub fn penalty_from_occupancy(plan: &Fft2D, occupied: Mask2D, oxy: &DiskKernel, theta: f64) -> Result<PenaltyFields> {
    let dims = occupied.dims();
    let kernel = oxy.normalized_spectrum();
    let empty = Field2D::from_vec(
        dims,
        occupied.as_slice().iter().map(|&o| if o { 0.0 } else { 1.0 }).collect(),
    )?;
    let oxygen = convolve_periodic(plan, &empty, &kernel)?;
    let deprived = Field2D::from_vec(dims, oxygen.as_slice().iter().map(|&e| 1.0 - e).collect())?;
    let penalty = convolve_periodic(plan, &deprived, &kernel)?;
    let mask = Mask2D::from_vec(dims, penalty.as_slice().iter().map(|&e| e as f64 > theta).collect());
    Ok(PenaltyFields {
        occupied,
        oxygen,
        penalty,
        mask,
    })
}

pub fn penalty_mask(plan: &Fft2D, signal: &StackedField, oxy: &DiskKernel, epsilon: f32, theta: f64) -> Result<Mask2D> {
    Ok(penalty_fields(plan, signal, oxy, epsilon, theta)?.mask)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyDraw {
    pub param: Param,
    pub kernel: usize,
    /// Signed: positive for `m`, negative for `s`.
    pub delta: f64,
}

pub fn draw_penalty(rng: &mut impl Rng, delta_max: f64) -> PenaltyDraw {
    let param = if rng.gen_bool(0.5) { Param::M } else { Param::S };
    let kernel = rng.gen_range(0..N_KERNELS);
    // (0, δ_max]
    let magnitude = delta_max * (1.0 - rng.gen::<f64>());
    let delta = if param == Param::M { magnitude } else { -magnitude };
    PenaltyDraw { param, kernel, delta }
}

/// Raises `m` or lowers `s` of one kernel on `E_pen ∧ α`.
pub fn apply_penalty(
    genospace: &mut StackedField,
    penalty: &Mask2D,
    alpha: &Mask2D,
    rng: &mut impl Rng,
    gamma: f64,
    delta_max: f64,
    step: u64,
) -> Option<EventRecord> {
    let draw = draw_penalty(rng, delta_max);
    apply_penalty_draw(genospace, penalty, alpha, &draw, gamma, step)
}

pub fn apply_penalty_draw(
    genospace: &mut StackedField,
    penalty: &Mask2D,
    alpha: &Mask2D,
    draw: &PenaltyDraw,
    gamma: f64,
    step: u64,
) -> Option<EventRecord> {
    let shift = gamma * draw.delta;
    if shift == 0.0 {
        return None;
    }
    let layer = genospace.layer_mut(gene_layer(draw.param, draw.kernel));
    let mut touched = 0;
    for ((v, &pen), &a) in layer.iter_mut().zip(penalty.as_slice()).zip(alpha.as_slice()) {
        if pen && a {
            *v = (*v as f64 + shift).clamp(0.0, 1.0) as f32;
            touched += 1;
        }
    }
    (touched > 0).then_some(EventRecord {
        step,
        kind: EventKind::Penalization,
        param: draw.param,
        kernel: draw.kernel,
        delta: shift,
        region: EventRegion::Area { pixels: touched },
    })
}

/// Axis-aligned rectangle `[x, x + width) × [y, y + height)`, wrapping toroidally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WallSet {
    pub enabled: bool,
    pub rects: Vec<Rect>,
}

impl WallSet {
    pub fn validate(&self, dims: Dims) -> Result<()> {
        for r in &self.rects {
            if r.width == 0 || r.height == 0 || r.width > dims.width || r.height > dims.height {
                return Err(Error::config(format!("wall {r:?} does not fit a {dims} grid")));
            }
        }
        Ok(())
    }

    pub fn mask(&self, dims: Dims) -> Mask2D {
        let mut m = Mask2D::empty(dims);
        if !self.enabled {
            return m;
        }
        for r in &self.rects {
            for i in 0..r.width.min(dims.width) {
                for j in 0..r.height.min(dims.height) {
                    m.set((r.x + i) % dims.width, (r.y + j) % dims.height, true);
                }
            }
        }
        m
    }
}

/// Zeroes every channel and every gene inside the enabled walls.
pub fn apply_walls(phenospace: &mut StackedField, genospace: &mut StackedField, walls: &WallSet) {
    if !walls.enabled || walls.rects.is_empty() {
        return;
    }
    let wall = walls.mask(phenospace.dims());
    for layer in phenospace.layers_mut().chain(genospace.layers_mut()) {
        for (v, &w) in layer.iter_mut().zip(wall.as_slice()) {
            if w {
                *v = 0.0;
            }
        }
    }
}
