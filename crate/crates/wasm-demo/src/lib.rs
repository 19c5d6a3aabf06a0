//! Browser bindings: a small live world, the dropper, and kernel plots.

use lenia_evo::engine::{SimConfig, Simulation};
use lenia_evo::field::{Dims, Fft2D};
use lenia_evo::gateway::phenospace_rgb;
use lenia_evo::genome::{
    build_ring_bank, cast_kernel, growth_value, relative_l2, GeneSchema, Genotype, GrowthForm, RingAssignment,
    N_KERNELS,
};
use wasm_bindgen::prelude::*;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    sim: Simulation,
}

impl Demo {
    pub fn create(width: usize, height: usize, seed: u64) -> Result<Demo, String> {
        let mut config = SimConfig {
            seed,
            ..SimConfig::with_size(width, height)
        };
        if width.min(height) <= 2 * config.r_oxy {
            config.r_oxy = (width.min(height) - 1) / 2;
        }
        let mut smoke = lenia_evo::smoke::seed();
        let d = smoke.phenotype.dims();
        smoke.position.x = width.saturating_sub(d.width) / 2;
        smoke.position.y = height.saturating_sub(d.height) / 2;
        let sim = Simulation::new(config, &[smoke]).map_err(|e| e.to_string())?;
        Ok(Demo { sim })
    }

    pub fn step_world(&mut self) -> Result<(), String> {
        self.sim.step().map(|_| ()).map_err(|e| e.to_string())
    }

    pub fn rgba(&self) -> Vec<u8> {
        let (_, _, rgb) = phenospace_rgb(self.sim.state(), 1).expect("factor 1 always divides");
        let mut out = Vec::with_capacity(rgb.len() / 3 * 4);
        for px in rgb.chunks_exact(3) {
            out.extend_from_slice(px);
            out.push(255);
        }
        out
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(width: usize, height: usize, seed: u64) -> Result<Demo, JsError> {
        Demo::create(width, height, seed).map_err(js)
    }

    pub fn width(&self) -> usize {
        self.sim.dims().width
    }

    pub fn height(&self) -> usize {
        self.sim.dims().height
    }

    pub fn step(&mut self, n: u32) -> Result<(), JsError> {
        for _ in 0..n {
            self.step_world().map_err(js)?;
        }
        Ok(())
    }

    /// RGBA bytes, row-major, for `ImageData`.
    pub fn frame(&self) -> Vec<u8> {
        self.rgba()
    }

    pub fn stats(&self) -> String {
        serde_json::to_string(&self.sim.stats()).expect("stats serialize")
    }

    pub fn set_gamma_mut(&mut self, v: f64) -> Result<(), JsError> {
        self.sim.set_gamma_mut(v).map_err(js)
    }

    pub fn set_gamma_pen(&mut self, v: f64) -> Result<(), JsError> {
        self.sim.set_gamma_pen(v).map_err(js)
    }

    pub fn restart(&mut self, seed: u64) {
        self.sim.restart(seed);
    }

    /// Pattern-file JSON of the patch around `(x, y)`.
    pub fn dropper(&self, x: usize, y: usize, radius: usize) -> Result<String, JsError> {
        let sample = self.sim.dropper(x, y, radius).map_err(js)?;
        Ok(sample
            .to_pattern_file(&self.sim.config().schema, self.sim.dims())
            .to_json())
    }

    /// Averaged genotype of the dropper patch, or an empty array when the
    /// patch holds no fully expressed genome.
    pub fn dropper_genotype(&self, x: usize, y: usize, radius: usize) -> Result<Vec<f32>, JsError> {
        let sample = self.sim.dropper(x, y, radius).map_err(js)?;
        Ok(sample.averaged.map(|g| g.as_slice().to_vec()).unwrap_or_default())
    }
}

fn genotype(genes: &[f32]) -> Result<Genotype, String> {
    Genotype::new(genes.to_vec()).map_err(|e| e.to_string())
}

/// `k(x)` of kernel `k` at `samples` points on `[0, 1]`.
pub fn kernel_profile_values(genes: &[f32], k: usize, samples: usize) -> Result<Vec<f64>, String> {
    let g = genotype(genes)?;
    if k >= N_KERNELS {
        return Err(format!("kernel index {k} out of range"));
    }
    let kg = GeneSchema::default().decode_kernel(&g, k);
    Ok(unit_points(samples).map(|x| kg.profile(x)).collect())
}

/// `G(u)` of kernel `k` at `samples` points on `[0, 1]`, bipolar form.
pub fn growth_curve_values(genes: &[f32], k: usize, samples: usize) -> Result<Vec<f64>, String> {
    let g = genotype(genes)?;
    if k >= N_KERNELS {
        return Err(format!("kernel index {k} out of range"));
    }
    let gg = GeneSchema::default().decode_growth(&g, k);
    Ok(unit_points(samples)
        .map(|u| growth_value(u, &gg, GrowthForm::Bipolar))
        .collect())
}

fn unit_points(samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

/// Center row of the ring-recombined and dense kernels of kernel `k`,
/// followed by their relative L2 error: `[ring.., cast.., error]`.
pub fn ring_vs_cast_values(genes: &[f32], k: usize, radius: usize, n_ring: usize) -> Result<Vec<f64>, String> {
    let g = genotype(genes)?;
    if k >= N_KERNELS {
        return Err(format!("kernel index {k} out of range"));
    }
    let kg = GeneSchema::default().decode_kernel(&g, k);
    let side = 2 * radius + 2;
    let dims = Dims::new(side, side);
    let plan = Fft2D::new(dims);
    let bank = build_ring_bank(&plan, radius, n_ring, RingAssignment::Linear).map_err(|e| e.to_string())?;
    let ring = bank.recombined_kernel(&kg).map_err(|e| e.to_string())?;
    let cast = cast_kernel(&kg, radius, dims).map_err(|e| e.to_string())?;
    let r = radius as isize;
    let row = |f: &lenia_evo::field::Field2D| (-r..=r).map(|dx| f.at(dx, 0) as f64).collect::<Vec<_>>();
    let mut out = row(&ring);
    out.extend(row(&cast));
    out.push(relative_l2(&ring, &cast));
    Ok(out)
}

#[wasm_bindgen]
pub fn kernel_profile(genes: &[f32], k: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    kernel_profile_values(genes, k, samples).map_err(js)
}

#[wasm_bindgen]
pub fn growth_curve(genes: &[f32], k: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    growth_curve_values(genes, k, samples).map_err(js)
}

#[wasm_bindgen]
pub fn ring_vs_cast(genes: &[f32], k: usize, radius: usize, n_ring: usize) -> Result<Vec<f64>, JsError> {
    ring_vs_cast_values(genes, k, radius, n_ring).map_err(js)
}
