//! Potentials, growth and the state update.
//!
//! Kernels vary per pixel, so they cannot be applied with one global FFT.
//! Instead every ring of the [`RingKernelBank`] is convolved with every
//! channel once per step, and each pixel recombines those ring responses
//! with weights derived from its own genes.

use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::field::{convolve_periodic, Dims, Fft2D, Spectrum2D, StackedField};
use crate::genome::{
    cast_kernel, fill_shell_weights, gene_layer, growth_value, GeneSchema, Genotype, GrowthForm, GrowthGenes,
    KernelGenes, KernelWiring, Param, RingKernelBank, N_CHANNELS, N_KERNELS,
};

/// Denominators below this are treated as an empty kernel (potential 0).
pub const MIN_KERNEL_MASS: f64 = 1e-9;

/// `K_r * A_c` for every channel and ring, stored as planes `[channel][ring][pixel]`.
#[derive(Clone, Debug)]
pub struct RingConvolutions {
    dims: Dims,
    n_ring: usize,
    channels: usize,
    data: Vec<f32>,
}

impl RingConvolutions {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn n_ring(&self) -> usize {
        self.n_ring
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Response of channel `c` to ring `r` over the whole grid.
    #[inline]
    pub fn plane(&self, c: usize, r: usize) -> &[f32] {
        let n = self.dims.len();
        let start = (c * self.n_ring + r) * n;
        &self.data[start..start + n]
    }

    fn plane_mut(&mut self, c: usize, r: usize) -> &mut [f32] {
        let n = self.dims.len();
        let start = (c * self.n_ring + r) * n;
        &mut self.data[start..start + n]
    }

    fn put_pair(&mut self, c0: usize, r0: usize, c1: usize, r1: usize, values: &[Complex64]) {
        for (d, v) in self.plane_mut(c0, r0).iter_mut().zip(values) {
            *d = v.re as f32;
        }
        for (d, v) in self.plane_mut(c1, r1).iter_mut().zip(values) {
            *d = v.im as f32;
        }
    }
}

/// Convolves every channel of the phenospace with every ring.
///
/// Two real inputs share one complex transform: channels are paired as
/// `A_a + i·A_b` against a ring spectrum, and a leftover channel is run
/// against the packed spectrum of two rings `K_r + i·K_{r+1}`.
pub fn ring_convolutions(plan: &Fft2D, bank: &RingKernelBank, phenospace: &StackedField) -> Result<RingConvolutions> {
    let dims = plan.dims();
    dims.ensure_eq(phenospace.dims())?;
    dims.ensure_eq(bank.dims())?;
    let channels = phenospace.layer_count();
    let n_ring = bank.n_ring();
    let n = dims.len();
    let mut out = RingConvolutions {
        dims,
        n_ring,
        channels,
        data: vec![0.0; channels * n * n_ring],
    };
    let mut buf = vec![Complex64::default(); n];

    let mut c = 0;
    while c + 1 < channels {
        let a = phenospace.layer(c);
        let b = phenospace.layer(c + 1);
        let mut packed: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x as f64, y as f64))
            .collect();
        plan.forward_in_place(&mut packed);
        for (r, ring) in bank.rings().iter().enumerate() {
            multiply_into(&mut buf, &packed, &ring.spectrum);
            plan.inverse_in_place(&mut buf);
            out.put_pair(c, r, c + 1, r, &buf);
        }
        c += 2;
    }
    if c < channels {
        let spectrum = plan.forward_real(phenospace.layer(c));
        for (i, pair) in bank.pair_spectra().iter().enumerate() {
            let r0 = 2 * i;
            multiply_into(&mut buf, &spectrum, pair);
            plan.inverse_in_place(&mut buf);
            if r0 + 1 < n_ring {
                out.put_pair(c, r0, c, r0 + 1, &buf);
            } else {
                for (d, v) in out.plane_mut(c, r0).iter_mut().zip(&buf) {
                    *d = v.re as f32;
                }
            }
        }
    }
    Ok(out)
}

fn multiply_into(dst: &mut [Complex64], a: &[Complex64], b: &Spectrum2D) {
    for ((d, x), y) in dst.iter_mut().zip(a).zip(b.as_slice()) {
        *d = x * y;
    }
}

#[inline]
fn kernel_bits_at(genospace: &StackedField, k: usize, px: usize) -> [u32; 6] {
    [Param::R1, Param::W1, Param::B1, Param::R2, Param::W2, Param::B2]
        .map(|p| genospace.layer(gene_layer(p, k))[px].to_bits())
}

fn kernel_genes_at(genospace: &StackedField, schema: &GeneSchema, k: usize, px: usize) -> ([u32; 6], KernelGenes) {
    let n = [Param::R1, Param::W1, Param::B1, Param::R2, Param::W2, Param::B2]
        .map(|p| genospace.layer(gene_layer(p, k))[px]);
    let genes = KernelGenes {
        r1: schema.r1.decode(n[0]),
        w1: schema.w1.decode(n[1]),
        b1: schema.b1.decode(n[2]),
        r2: schema.r2.decode(n[3]),
        w2: schema.w2.decode(n[4]),
        b2: schema.b2.decode(n[5]),
    };
    (n.map(f32::to_bits), genes)
}

/// Per-pixel recombination `Σ_r k_r (K_r*A_j) / Σ_r k_r (K_r*1)`, clamped to `[0, 1]`.
pub fn recombine(
    convs: &RingConvolutions,
    genospace: &StackedField,
    bank: &RingKernelBank,
    wiring: &KernelWiring,
    schema: &GeneSchema,
) -> Result<StackedField> {
    let dims = convs.dims();
    dims.ensure_eq(genospace.dims())?;
    let n_ring = bank.n_ring();
    let areas = bank.areas();
    let mut potentials = StackedField::zeros(dims, N_KERNELS);
    let mut weights = vec![0.0f64; n_ring];
    for k in 0..N_KERNELS {
        let source = wiring.get(k).source;
        let planes: Vec<&[f32]> = (0..n_ring).map(|r| convs.plane(source, r)).collect();
        let out = potentials.layer_mut(k);
        let mut acc: Vec<f64> = Vec::new();
        let mut px = 0;
        // Neighbouring pixels usually carry identical genes, so work on runs.
        while px < out.len() {
            let (bits, genes) = kernel_genes_at(genospace, schema, k, px);
            let mut end = px + 1;
            while end < out.len() && kernel_bits_at(genospace, k, end) == bits {
                end += 1;
            }
            let run = px..end;
            px = end;
            if genes.is_degenerate() {
                out[run].fill(0.0);
                continue;
            }
            fill_shell_weights(&genes, &mut weights);
            let norm: f64 = weights.iter().zip(&areas).map(|(w, a)| w * a).sum();
            if norm < MIN_KERNEL_MASS {
                out[run].fill(0.0);
                continue;
            }
            acc.clear();
            acc.resize(run.len(), 0.0);
            for (w, p) in weights.iter().zip(&planes) {
                if *w == 0.0 {
                    continue;
                }
                for (a, &v) in acc.iter_mut().zip(&p[run.clone()]) {
                    *a += w * v as f64;
                }
            }
            for (o, a) in out[run].iter_mut().zip(&acc) {
                *o = (a / norm).clamp(0.0, 1.0) as f32;
            }
        }
    }
    Ok(potentials)
}

/// Normalized potentials of all 15 kernels for the current phenospace and genospace.
pub fn potential_fields(
    plan: &Fft2D,
    phenospace: &StackedField,
    genospace: &StackedField,
    bank: &RingKernelBank,
    wiring: &KernelWiring,
    schema: &GeneSchema,
) -> Result<StackedField> {
    let convs = ring_convolutions(plan, bank, phenospace)?;
    recombine(&convs, genospace, bank, wiring, schema)
}

#[inline]
fn growth_genes_at(genospace: &StackedField, schema: &GeneSchema, k: usize, px: usize) -> GrowthGenes {
    GrowthGenes {
        m: schema.m.decode(genospace.layer(gene_layer(Param::M, k))[px]),
        s: schema.s.decode(genospace.layer(gene_layer(Param::S, k))[px]),
        h: schema.h.decode(genospace.layer(gene_layer(Param::H, k))[px]),
    }
}

/// `U_k = G(potential_k; m, s, h)` with genes read per pixel.
pub fn growth_fields(
    potentials: &StackedField,
    genospace: &StackedField,
    schema: &GeneSchema,
    form: GrowthForm,
) -> Result<StackedField> {
    let dims = potentials.dims();
    dims.ensure_eq(genospace.dims())?;
    let mut growth = StackedField::zeros(dims, N_KERNELS);
    for k in 0..N_KERNELS {
        let pot = potentials.layer(k);
        let out = growth.layer_mut(k);
        for (px, o) in out.iter_mut().enumerate() {
            let g = growth_genes_at(genospace, schema, k, px);
            *o = if g.h == 0.0 {
                0.0
            } else {
                growth_value(pot[px] as f64, &g, form) as f32
            };
        }
    }
    Ok(growth)
}

/// `A_i ← clip(A_i + dt·Σ_{k→i} U_k, 0, 1)`, summing kernels in index order.
pub fn apply_growth(phenospace: &mut StackedField, growth: &StackedField, wiring: &KernelWiring, dt: f64) {
    let n = phenospace.dims().len();
    for c in 0..phenospace.layer_count() {
        let mut acc = vec![0.0f64; n];
        for (k, link) in wiring.links().iter().enumerate() {
            if link.target != c {
                continue;
            }
            for (a, &u) in acc.iter_mut().zip(growth.layer(k)) {
                *a += u as f64;
            }
        }
        for (v, a) in phenospace.layer_mut(c).iter_mut().zip(acc) {
            *v = (*v as f64 + dt * a).clamp(0.0, 1.0) as f32;
        }
    }
}

pub fn growth_update(phenospace: &StackedField, growth: &StackedField, wiring: &KernelWiring, dt: f64) -> StackedField {
    let mut next = phenospace.clone();
    apply_growth(&mut next, growth, wiring, dt);
    next
}

/// Classic global-parameter Lenia with dense ("cast") kernels: the oracle the
/// intrinsic path is calibrated against.
#[derive(Clone, Debug)]
pub struct ReferenceStepper {
    plan: Fft2D,
    spectra: Vec<Spectrum2D>,
    growth: Vec<GrowthGenes>,
    wiring: KernelWiring,
    form: GrowthForm,
    dt: f64,
}

impl ReferenceStepper {
    pub fn new(
        plan: &Fft2D,
        genotype: &Genotype,
        schema: &GeneSchema,
        radius: usize,
        wiring: &KernelWiring,
        form: GrowthForm,
        dt: f64,
    ) -> Result<Self> {
        let mut spectra = Vec::with_capacity(N_KERNELS);
        let mut growth = Vec::with_capacity(N_KERNELS);
        for k in 0..N_KERNELS {
            let kernel = cast_kernel(&schema.decode_kernel(genotype, k), radius, plan.dims())?;
            spectra.push(plan.spectrum(&kernel)?);
            growth.push(schema.decode_growth(genotype, k));
        }
        Ok(ReferenceStepper {
            plan: plan.clone(),
            spectra,
            growth,
            wiring: wiring.clone(),
            form,
            dt,
        })
    }

    /// Growth fields for the given phenospace.
    pub fn growth(&self, phenospace: &StackedField) -> Result<StackedField> {
        let dims = phenospace.dims();
        let mut growth = StackedField::zeros(dims, N_KERNELS);
        for k in 0..N_KERNELS {
            let g = &self.growth[k];
            let out = growth.layer_mut(k);
            if g.h == 0.0 {
                continue;
            }
            let source = phenospace.layer_field(self.wiring.get(k).source);
            let pot = convolve_periodic(&self.plan, &source, &self.spectra[k])?;
            for (o, &u) in out.iter_mut().zip(pot.as_slice()) {
                *o = growth_value(u.clamp(0.0, 1.0) as f64, g, self.form) as f32;
            }
        }
        Ok(growth)
    }

    pub fn step(&self, phenospace: &StackedField) -> Result<StackedField> {
        debug_assert_eq!(phenospace.layer_count(), N_CHANNELS);
        let growth = self.growth(phenospace)?;
        Ok(growth_update(phenospace, &growth, &self.wiring, self.dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{build_ring_bank, RingAssignment, N_GENES};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(dims: Dims) -> (Fft2D, RingKernelBank) {
        let plan = Fft2D::new(dims);
        let bank = build_ring_bank(&plan, 6, 12, RingAssignment::Linear).unwrap();
        (plan, bank)
    }

    fn uniform_genospace(dims: Dims, g: &Genotype) -> StackedField {
        let mut p = StackedField::zeros(dims, N_GENES);
        for (i, layer) in p.layers_mut().enumerate() {
            layer.fill(g.as_slice()[i]);
        }
        p
    }

    fn random_phenospace(rng: &mut ChaCha8Rng, dims: Dims) -> StackedField {
        let data = (0..dims.len() * 3).map(|_| rng.gen::<f32>()).collect();
        StackedField::from_vec(dims, 3, data).unwrap()
    }

    #[test]
    fn zero_world_has_zero_potential() {
        let dims = Dims::new(24, 20);
        let (plan, bank) = setup(dims);
        let p = uniform_genospace(dims, &Genotype::uniform(0.5));
        let a = StackedField::zeros(dims, 3);
        let pot = potential_fields(&plan, &a, &p, &bank, &KernelWiring::default(), &GeneSchema::default()).unwrap();
        assert!(pot.as_slice().iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn full_source_channel_gives_unit_potential() {
        let dims = Dims::new(24, 20);
        let (plan, bank) = setup(dims);
        let p = uniform_genospace(dims, &Genotype::uniform(0.5));
        let mut a = StackedField::zeros(dims, 3);
        a.layer_mut(1).fill(1.0);
        let wiring = KernelWiring::default();
        let pot = potential_fields(&plan, &a, &p, &bank, &wiring, &GeneSchema::default()).unwrap();
        for k in 0..N_KERNELS {
            let expect = if wiring.get(k).source == 1 { 1.0 } else { 0.0 };
            assert!(pot.layer(k).iter().all(|&v| (v - expect).abs() < 1e-5), "kernel {k}");
        }
    }

    #[test]
    fn degenerate_pixels_have_zero_potential() {
        let dims = Dims::new(16, 16);
        let (plan, bank) = setup(dims);
        let mut g = Genotype::uniform(0.5);
        for k in 0..N_KERNELS {
            g.set(Param::B1, k, 0.0);
            g.set(Param::B2, k, 0.0);
        }
        let p = uniform_genospace(dims, &g);
        let a = StackedField::filled(dims, 3, 0.7);
        let pot = potential_fields(&plan, &a, &p, &bank, &KernelWiring::default(), &GeneSchema::default()).unwrap();
        assert!(pot.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ring_convolutions_match_per_ring_spectral_convolution() {
        let dims = Dims::new(20, 18);
        let (plan, bank) = setup(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_phenospace(&mut rng, dims);
        let convs = ring_convolutions(&plan, &bank, &a).unwrap();
        for c in 0..3 {
            for (r, ring) in bank.rings().iter().enumerate() {
                let direct = convolve_periodic(&plan, &a.layer_field(c), &ring.spectrum).unwrap();
                for px in 0..dims.len() {
                    assert!((convs.plane(c, r)[px] - direct.as_slice()[px]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn shared_ring_convolutions_are_bitwise_reused() {
        let dims = Dims::new(16, 16);
        let (plan, bank) = setup(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_phenospace(&mut rng, dims);
        let g = Genotype::random(&mut rng);
        let mut g = g;
        // Kernels 0 and 1 share source channel 0; give them identical kernel genes.
        for p in [Param::R1, Param::W1, Param::B1, Param::R2, Param::W2, Param::B2] {
            let v = g.get(p, 0);
            g.set(p, 1, v);
        }
        g.set(Param::B1, 0, 0.8);
        g.set(Param::B1, 1, 0.8);
        let p = uniform_genospace(dims, &g);
        let wiring = KernelWiring::default();
        let schema = GeneSchema::default();
        let shared = ring_convolutions(&plan, &bank, &a).unwrap();
        let once = recombine(&shared, &p, &bank, &wiring, &schema).unwrap();
        assert_eq!(once.layer(0), once.layer(1));
        let fresh = ring_convolutions(&plan, &bank, &a).unwrap();
        let again = recombine(&fresh, &p, &bank, &wiring, &schema).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn potentials_are_linear_in_phenospace() {
        let dims = Dims::new(24, 24);
        let (plan, bank) = setup(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut g = Genotype::random(&mut rng);
        for k in 0..N_KERNELS {
            g.set(Param::B1, k, 0.5 + 0.5 * g.get(Param::B1, k));
            g.set(Param::W1, k, 0.2 + 0.8 * g.get(Param::W1, k));
        }
        let p = uniform_genospace(dims, &g);
        let wiring = KernelWiring::default();
        let schema = GeneSchema::default();
        let a1 =
            StackedField::from_vec(dims, 3, (0..dims.len() * 3).map(|_| 0.5 * rng.gen::<f32>()).collect()).unwrap();
        let a2 =
            StackedField::from_vec(dims, 3, (0..dims.len() * 3).map(|_| 0.5 * rng.gen::<f32>()).collect()).unwrap();
        let sum = StackedField::from_vec(
            dims,
            3,
            a1.as_slice().iter().zip(a2.as_slice()).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let p1 = potential_fields(&plan, &a1, &p, &bank, &wiring, &schema).unwrap();
        let p2 = potential_fields(&plan, &a2, &p, &bank, &wiring, &schema).unwrap();
        let ps = potential_fields(&plan, &sum, &p, &bank, &wiring, &schema).unwrap();
        for i in 0..ps.as_slice().len() {
            let lin = p1.as_slice()[i] + p2.as_slice()[i];
            assert!((ps.as_slice()[i] - lin).abs() < 1e-5);
        }
    }

    #[test]
    fn growth_fields_follow_scalar_growth() {
        let dims = Dims::new(8, 8);
        let schema = GeneSchema::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Genotype::random(&mut rng);
        let mut p = uniform_genospace(dims, &g);
        // One pixel with its own growth genes.
        let odd = dims.index(3, 5);
        for k in 0..N_KERNELS {
            for (param, v) in [(Param::M, 0.9f32), (Param::S, 0.7), (Param::H, 0.3)] {
                p.layer_mut(gene_layer(param, k))[odd] = v;
            }
        }
        let pot = StackedField::filled(dims, N_KERNELS, 0.2);
        let u = growth_fields(&pot, &p, &schema, GrowthForm::Bipolar).unwrap();
        for k in 0..N_KERNELS {
            let expect = growth_value(0.2f32 as f64, &schema.decode_growth(&g, k), GrowthForm::Bipolar) as f32;
            for (px, &v) in u.layer(k).iter().enumerate() {
                if px == odd {
                    let og = GrowthGenes {
                        m: schema.m.decode(0.9),
                        s: schema.s.decode(0.7),
                        h: schema.h.decode(0.3),
                    };
                    assert_eq!(v, growth_value(0.2f32 as f64, &og, GrowthForm::Bipolar) as f32);
                } else {
                    assert_eq!(v, expect);
                }
            }
        }
        let mut flat = p.clone();
        for k in 0..N_KERNELS {
            flat.layer_mut(gene_layer(Param::H, k)).fill(0.0);
        }
        let u = growth_fields(&pot, &flat, &schema, GrowthForm::Bipolar).unwrap();
        assert!(u.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn growth_update_examples() {
        let dims = Dims::new(1, 1);
        let wiring = KernelWiring::default();
        let a = StackedField::from_vec(dims, 3, vec![0.9, 0.5, 0.2]).unwrap();
        let zero = StackedField::zeros(dims, N_KERNELS);
        assert_eq!(growth_update(&a, &zero, &wiring, 0.1), a);

        let mut u = StackedField::zeros(dims, N_KERNELS);
        u.layer_mut(0)[0] = 0.5;
        let next = growth_update(&a, &u, &wiring, 1.0);
        assert_eq!(next.layer(0)[0], 1.0);

        let mut u = StackedField::zeros(dims, N_KERNELS);
        // Channel 1 receives kernels 3..5 and the cross kernels 9 (0→1) and 14 (2→1).
        u.layer_mut(3)[0] = 0.2;
        u.layer_mut(14)[0] = -0.1;
        let next = growth_update(&a, &u, &wiring, 0.1);
        assert!((next.layer(1)[0] - 0.51).abs() < 1e-7);
        assert_eq!(next.layer(0)[0], 0.9);
    }

    #[test]
    fn reference_step_is_identity_without_growth() {
        let dims = Dims::new(32, 32);
        let plan = Fft2D::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = Genotype::random(&mut rng);
        for k in 0..N_KERNELS {
            g.set(Param::H, k, 0.0);
            g.set(Param::B1, k, 0.6);
        }
        let stepper = ReferenceStepper::new(
            &plan,
            &g,
            &GeneSchema::default(),
            8,
            &KernelWiring::default(),
            GrowthForm::Bipolar,
            0.1,
        )
        .unwrap();
        let a = random_phenospace(&mut rng, dims);
        let next = stepper.step(&a).unwrap();
        assert_eq!(next, a);
        assert_eq!(stepper.step(&a).unwrap(), next);
    }

    #[test]
    fn reference_step_rejects_degenerate_kernel() {
        let plan = Fft2D::new(Dims::new(32, 32));
        let mut g = Genotype::uniform(0.5);
        g.set(Param::B1, 4, 0.0);
        g.set(Param::B2, 4, 0.0);
        let err = ReferenceStepper::new(
            &plan,
            &g,
            &GeneSchema::default(),
            8,
            &KernelWiring::default(),
            GrowthForm::Bipolar,
            0.1,
        )
        .unwrap_err();
        assert!(matches!(err, crate::Error::DegenerateKernel));
    }
}
