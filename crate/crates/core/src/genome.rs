//! Gene schema, kernel and growth functions, and ring decomposition of kernels.
//!
//! Genes are stored normalized in `[0, 1]` and decoded through a
//! [`GeneSchema`] on use. Each of the 15 kernels carries nine genes:
//! two radial Gaussian bumps (`r`, `w`, `b` each) and a Gaussian growth
//! mapping (`m`, `s`, `h`).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Dims, Fft2D, Field2D, Spectrum2D};

pub const N_CHANNELS: usize = 3;
pub const N_KERNELS: usize = 15;
pub const N_PARAMS: usize = 9;
pub const N_GENES: usize = N_PARAMS * N_KERNELS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    R1,
    W1,
    B1,
    R2,
    W2,
    B2,
    M,
    S,
    H,
}

impl Param {
    pub const ALL: [Param; N_PARAMS] = [
        Param::R1,
        Param::W1,
        Param::B1,
        Param::R2,
        Param::W2,
        Param::B2,
        Param::M,
        Param::S,
        Param::H,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Param> {
        Self::ALL.get(i).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Param::R1 => "r1",
            Param::W1 => "w1",
            Param::B1 => "b1",
            Param::R2 => "r2",
            Param::W2 => "w2",
            Param::B2 => "b2",
            Param::M => "m",
            Param::S => "s",
            Param::H => "h",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown gene parameter {s:?}")))
    }
}

/// Layer index of gene `(p, k)` in the genospace stack.
#[inline]
pub const fn gene_layer(p: Param, k: usize) -> usize {
    p.index() * N_KERNELS + k
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi }
    }

    #[inline]
    pub fn decode(&self, normalized: f32) -> f64 {
        self.lo + normalized as f64 * (self.hi - self.lo)
    }

    #[inline]
    pub fn encode(&self, physical: f64) -> f32 {
        ((physical - self.lo) / (self.hi - self.lo)) as f32
    }
}

/// Physical range of every gene type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneSchema {
    pub r1: ParamRange,
    pub w1: ParamRange,
    pub b1: ParamRange,
    pub r2: ParamRange,
    pub w2: ParamRange,
    pub b2: ParamRange,
    pub m: ParamRange,
    pub s: ParamRange,
    pub h: ParamRange,
}

impl Default for GeneSchema {
    fn default() -> Self {
        let r = ParamRange::new(0.0, 1.0);
        let w = ParamRange::new(0.01, 0.5);
        let b = ParamRange::new(0.0, 1.0);
        GeneSchema {
            r1: r,
            w1: w,
            b1: b,
            r2: r,
            w2: w,
            b2: b,
            m: ParamRange::new(0.05, 0.5),
            s: ParamRange::new(0.001, 0.2),
            h: ParamRange::new(0.0, 1.0),
        }
    }
}

impl GeneSchema {
    pub fn range(&self, p: Param) -> ParamRange {
        match p {
            Param::R1 => self.r1,
            Param::W1 => self.w1,
            Param::B1 => self.b1,
            Param::R2 => self.r2,
            Param::W2 => self.w2,
            Param::B2 => self.b2,
            Param::M => self.m,
            Param::S => self.s,
            Param::H => self.h,
        }
    }

    #[inline]
    pub fn decode(&self, normalized: f32, p: Param) -> f64 {
        self.range(p).decode(normalized)
    }

    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let r = self.range(p);
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(Error::config(format!("gene range for {p} must satisfy lo < hi")));
            }
        }
        for p in [Param::W1, Param::W2, Param::S] {
            if self.range(p).lo <= 0.0 {
                return Err(Error::config(format!("width gene {p} must decode to positive values")));
            }
        }
        Ok(())
    }

    pub fn decode_kernel(&self, genotype: &Genotype, k: usize) -> KernelGenes {
        let g = |p| self.decode(genotype.get(p, k), p);
        KernelGenes {
            r1: g(Param::R1),
            w1: g(Param::W1),
            b1: g(Param::B1),
            r2: g(Param::R2),
            w2: g(Param::W2),
            b2: g(Param::B2),
        }
    }

    pub fn decode_growth(&self, genotype: &Genotype, k: usize) -> GrowthGenes {
        GrowthGenes {
            m: self.decode(genotype.get(Param::M, k), Param::M),
            s: self.decode(genotype.get(Param::S, k), Param::S),
            h: self.decode(genotype.get(Param::H, k), Param::H),
        }
    }
}

/// The 135 normalized genes of one organism, `(p, k)` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genotype(Vec<f32>);

impl Genotype {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.len() != N_GENES {
            return Err(Error::config(format!(
                "genotype needs {N_GENES} genes, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config("normalized genes must lie in [0, 1]"));
        }
        Ok(Genotype(values))
    }

    pub fn uniform(value: f32) -> Self {
        Genotype(vec![value; N_GENES])
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Genotype((0..N_GENES).map(|_| rng.gen::<f32>()).collect())
    }

    #[inline]
    pub fn get(&self, p: Param, k: usize) -> f32 {
        self.0[gene_layer(p, k)]
    }

    #[inline]
    pub fn set(&mut self, p: Param, k: usize, value: f32) {
        self.0[gene_layer(p, k)] = value;
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

/// Physical genes of one kernel's two radial bumps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGenes {
    pub r1: f64,
    pub w1: f64,
    pub b1: f64,
    pub r2: f64,
    pub w2: f64,
    pub b2: f64,
}

impl KernelGenes {
    /// Kernel profile at normalized radius `x`.
    pub fn profile(&self, x: f64) -> f64 {
        bump(x, self.r1, self.w1, self.b1) + bump(x, self.r2, self.w2, self.b2)
    }

    pub fn is_degenerate(&self) -> bool {
        self.b1 == 0.0 && self.b2 == 0.0
    }

    pub fn random(rng: &mut impl Rng, schema: &GeneSchema) -> Self {
        let mut g = |p| schema.decode(rng.gen::<f32>(), p);
        KernelGenes {
            r1: g(Param::R1),
            w1: g(Param::W1),
            b1: g(Param::B1),
            r2: g(Param::R2),
            w2: g(Param::W2),
            b2: g(Param::B2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthGenes {
    pub m: f64,
    pub s: f64,
    pub h: f64,
}

/// One Gaussian bump `b·exp(-(x-r)²/2w²)`.
#[inline]
pub fn bump(x: f64, r: f64, w: f64, b: f64) -> f64 {
    let d = x - r;
    b * (-(d * d) / (2.0 * w * w)).exp()
}

/// Ring weights `k_r = Σ_i bump(r / n_ring; r_i, w_i, b_i)` for `r = 0..n_ring`.
pub fn shell_weights(genes: &KernelGenes, n_ring: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_ring];
    fill_shell_weights(genes, &mut out);
    out
}

/// Writes the ring weights into `out` (its length is the ring count).
pub fn fill_shell_weights(genes: &KernelGenes, out: &mut [f64]) {
    out.fill(0.0);
    add_bump_samples(out, genes.r1, genes.w1, genes.b1);
    add_bump_samples(out, genes.r2, genes.w2, genes.b2);
}

/// Adds `b·exp(-(i/n - c)²/2w²)` to `out[i]` for every `i < n`.
///
/// Evaluated by a multiplicative recurrence running outward from the sample
/// nearest the centre, four `exp` calls per bump instead of `n`. Values
/// decrease monotonically away from the peak, so underflow is harmless.
fn add_bump_samples(out: &mut [f64], c: f64, w: f64, b: f64) {
    let n = out.len();
    if b == 0.0 || n == 0 {
        return;
    }
    let step = 1.0 / n as f64;
    let a = 1.0 / (2.0 * w * w);
    let peak = ((c * n as f64).round().max(0.0) as usize).min(n - 1);
    let dp = peak as f64 * step - c;
    let g0 = b * (-a * dp * dp).exp();
    let rho = (-2.0 * a * step * step).exp();

    out[peak] += g0;
    if peak + 1 < n {
        let mut g = g0;
        let mut q = (-a * (2.0 * dp * step + step * step)).exp();
        for v in &mut out[peak + 1..] {
            g *= q;
            q *= rho;
            *v += g;
        }
    }
    if peak > 0 {
        let mut g = g0;
        let mut q = (a * (2.0 * dp * step - step * step)).exp();
        for v in out[..peak].iter_mut().rev() {
            g *= q;
            q *= rho;
            *v += g;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthForm {
    /// `h·exp(-(u-m)²/2s²)`, never negative.
    Unipolar,
    /// `h·(2·exp(-(u-m)²/2s²) - 1)`, the usual signed Lenia growth.
    #[default]
    Bipolar,
}

/// Gaussian bump of the growth mapping, `h·exp(-(u-m)²/2s²)`.
#[inline]
pub fn growth_activation(u: f64, g: &GrowthGenes) -> f64 {
    bump(u, g.m, g.s, g.h)
}

#[inline]
pub fn growth_value(u: f64, g: &GrowthGenes, form: GrowthForm) -> f64 {
    let act = growth_activation(u, g);
    match form {
        GrowthForm::Unipolar => act,
        GrowthForm::Bipolar => 2.0 * act - g.h,
    }
}

/// Source and target channel of one kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelLink {
    pub source: usize,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KernelWiring(Vec<KernelLink>);

impl Default for KernelWiring {
    /// Kernels `3c..3c+2` are self kernels of channel `c`; kernels 9..14 are
    /// the cross links 0→1, 1→0, 0→2, 2→0, 1→2, 2→1.
    fn default() -> Self {
        let mut links = Vec::with_capacity(N_KERNELS);
        for c in 0..N_CHANNELS {
            for _ in 0..3 {
                links.push(KernelLink { source: c, target: c });
            }
        }
        for (source, target) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
            links.push(KernelLink { source, target });
        }
        KernelWiring(links)
    }
}

impl KernelWiring {
    pub fn new(links: Vec<KernelLink>) -> Result<Self> {
        let w = KernelWiring(links);
        w.validate()?;
        Ok(w)
    }

    pub fn links(&self) -> &[KernelLink] {
        &self.0
    }

    pub fn get(&self, k: usize) -> KernelLink {
        self.0[k]
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.len() != N_KERNELS {
            return Err(Error::config(format!(
                "wiring needs {N_KERNELS} kernels, got {}",
                self.0.len()
            )));
        }
        let mut selfs = [0usize; N_CHANNELS];
        let mut pairs = [[0usize; N_CHANNELS]; N_CHANNELS];
        for l in &self.0 {
            if l.source >= N_CHANNELS || l.target >= N_CHANNELS {
                return Err(Error::config("wiring refers to a channel out of range"));
            }
            if l.source == l.target {
                selfs[l.source] += 1;
            } else {
                let (a, b) = (l.source.min(l.target), l.source.max(l.target));
                pairs[a][b] += 1;
            }
        }
        if selfs.iter().any(|&n| n != 3) {
            return Err(Error::config("wiring needs exactly 3 self kernels per channel"));
        }
        for a in 0..N_CHANNELS {
            for b in a + 1..N_CHANNELS {
                if pairs[a][b] != 2 {
                    return Err(Error::config("wiring needs exactly 2 kernels per channel pair"));
                }
            }
        }
        Ok(())
    }
}

/// How lattice points are assigned to rings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingAssignment {
    /// Point at distance `d` belongs wholly to ring `⌊d·n/R⌋`.
    Floor,
    /// Point at fractional ring coordinate `t = d·n/R` is split between rings
    /// `⌊t⌋` and `⌊t⌋+1` with weights `1-frac(t)` and `frac(t)`; the outermost
    /// ring keeps its whole share.
    #[default]
    Linear,
}

#[derive(Clone, Debug)]
pub struct Ring {
    pub field: Field2D,
    pub spectrum: Spectrum2D,
    /// `K_r * 1`, the sum of the ring's weights.
    pub area: f64,
}

/// Fixed annular kernels spanning the open disk of radius `R`.
#[derive(Clone, Debug)]
pub struct RingKernelBank {
    radius: usize,
    n_ring: usize,
    assignment: RingAssignment,
    rings: Vec<Ring>,
    /// Spectra of `K_{2i} + i·K_{2i+1}`, for convolving two rings in one inverse FFT.
    pair_spectra: Vec<Spectrum2D>,
}

/// Ring shares of a lattice point at distance `d`: up to two `(ring, weight)` pairs.
fn ring_shares(d: f64, radius: usize, n_ring: usize, assignment: RingAssignment) -> [(usize, f64); 2] {
    let t = d * n_ring as f64 / radius as f64;
    let i0 = (t.floor() as usize).min(n_ring - 1);
    match assignment {
        RingAssignment::Floor => [(i0, 1.0), (i0, 0.0)],
        RingAssignment::Linear => {
            if i0 + 1 < n_ring {
                let f = t - i0 as f64;
                [(i0, 1.0 - f), (i0 + 1, f)]
            } else {
                [(i0, 1.0), (i0, 0.0)]
            }
        }
    }
}

pub fn build_ring_bank(
    plan: &Fft2D,
    radius: usize,
    n_ring: usize,
    assignment: RingAssignment,
) -> Result<RingKernelBank> {
    let dims = plan.dims();
    if radius < 1 || n_ring < 1 {
        return Err(Error::config("kernel radius and ring count must be at least 1"));
    }
    if 2 * radius > dims.min_side() {
        return Err(Error::RadiusTooLarge { radius, dims });
    }
    let mut fields = vec![Field2D::zeros(dims); n_ring];
    let r = radius as isize;
    for dx in -r..=r {
        for dy in -r..=r {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if d >= radius as f64 {
                continue;
            }
            let (x, y) = dims.wrap(dx, dy);
            for (ring, share) in ring_shares(d, radius, n_ring, assignment) {
                if share > 0.0 {
                    let f = &mut fields[ring];
                    f.set(x, y, f.get(x, y) + share as f32);
                }
            }
        }
    }
    let mut rings = Vec::with_capacity(n_ring);
    for field in fields {
        let spectrum = plan.spectrum(&field)?;
        let area = field.sum();
        rings.push(Ring { field, spectrum, area });
    }
    let zero = Field2D::zeros(dims);
    let pair_spectra = rings
        .chunks(2)
        .map(|pair| plan.spectrum_pair(&pair[0].field, pair.get(1).map_or(&zero, |r| &r.field)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RingKernelBank {
        radius,
        n_ring,
        assignment,
        rings,
        pair_spectra,
    })
}

impl RingKernelBank {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn n_ring(&self) -> usize {
        self.n_ring
    }

    pub fn assignment(&self) -> RingAssignment {
        self.assignment
    }

    pub fn dims(&self) -> Dims {
        self.rings[0].field.dims()
    }

    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    pub fn areas(&self) -> Vec<f64> {
        self.rings.iter().map(|r| r.area).collect()
    }

    pub(crate) fn pair_spectra(&self) -> &[Spectrum2D] {
        &self.pair_spectra
    }

    /// `Σ_r k_r K_r / Σ_r k_r (K_r * 1)`: the normalized kernel the rings reconstruct.
    pub fn recombined_kernel(&self, genes: &KernelGenes) -> Result<Field2D> {
        let weights = shell_weights(genes, self.n_ring);
        let norm: f64 = weights.iter().zip(&self.rings).map(|(w, r)| w * r.area).sum();
        if !(norm > 0.0) {
            return Err(Error::DegenerateKernel);
        }
        let dims = self.dims();
        let mut acc = vec![0.0f64; dims.len()];
        for (w, ring) in weights.iter().zip(&self.rings) {
            for (a, &v) in acc.iter_mut().zip(ring.field.as_slice()) {
                *a += w * v as f64;
            }
        }
        Field2D::from_vec(dims, acc.into_iter().map(|v| (v / norm) as f32).collect())
    }
}

/// Dense kernel `K(d) = k(d/R)` for `d < R`, normalized to unit sum.
pub fn cast_kernel(genes: &KernelGenes, radius: usize, dims: Dims) -> Result<Field2D> {
    if 2 * radius > dims.min_side() {
        return Err(Error::RadiusTooLarge { radius, dims });
    }
    if genes.is_degenerate() {
        return Err(Error::DegenerateKernel);
    }
    let mut acc = vec![0.0f64; dims.len()];
    let r = radius as isize;
    for dx in -r..=r {
        for dy in -r..=r {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if d < radius as f64 {
                acc[dims.wrapped_index(dx, dy)] = genes.profile(d / radius as f64);
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateKernel);
    }
    Field2D::from_vec(dims, acc.into_iter().map(|v| (v / total) as f32).collect())
}

/// `‖a - b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &Field2D, b: &Field2D) -> f64 {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        let d = x as f64 - y as f64;
        num += d * d;
        den += (y as f64) * (y as f64);
    }
    (num / den).sqrt()
}

/// Summary of ring-vs-cast errors over random kernels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub radius: usize,
    pub n_ring: usize,
    pub assignment: RingAssignment,
    /// Relative L2 error per sampled kernel, in draw order.
    pub errors: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    /// Fraction of kernels with error at most 5%.
    pub within_5pct: f64,
}

/// Compares the recombined ring kernel against the dense kernel for
/// `samples` kernels drawn uniformly from the schema ranges.
pub fn calibrate_rings(
    bank: &RingKernelBank,
    schema: &GeneSchema,
    samples: usize,
    seed: u64,
) -> Result<CalibrationReport> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(samples);
    while errors.len() < samples {
        let genes = KernelGenes::random(&mut rng, schema);
        if genes.is_degenerate() {
            continue;
        }
        let ring = bank.recombined_kernel(&genes)?;
        let cast = cast_kernel(&genes, bank.radius(), bank.dims())?;
        errors.push(relative_l2(&ring, &cast));
    }
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1);
    let pick = |q: f64| {
        sorted
            .get(((q * (n - 1) as f64).round()) as usize)
            .copied()
            .unwrap_or(0.0)
    };
    Ok(CalibrationReport {
        radius: bank.radius(),
        n_ring: bank.n_ring(),
        assignment: bank.assignment(),
        mean: errors.iter().sum::<f64>() / n as f64,
        median: pick(0.5),
        p90: pick(0.9),
        max: sorted.last().copied().unwrap_or(0.0),
        within_5pct: errors.iter().filter(|&&e| e <= 0.05).count() as f64 / n as f64,
        errors,
    })
}
