//! Toroidal scalar fields, spectral convolution and the threshold masks.
//!
//! Every field in a run shares one [`Dims`]. Storage is row-major with `x`
//! as the outer axis and `y` contiguous: the value at `(x, y)` lives at
//! `x * height + y`. Coordinates wrap on both axes.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub const fn new(width: usize, height: usize) -> Self {
        Dims { width, height }
    }

    #[inline]
    pub const fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn index(&self, x: usize, y: usize) -> usize {
        x * self.height + y
    }

    /// Toroidal wrap of a signed coordinate pair.
    #[inline]
    pub fn wrap(&self, x: isize, y: isize) -> (usize, usize) {
        (
            x.rem_euclid(self.width as isize) as usize,
            y.rem_euclid(self.height as isize) as usize,
        )
    }

    #[inline]
    pub fn wrapped_index(&self, x: isize, y: isize) -> usize {
        let (x, y) = self.wrap(x, y);
        self.index(x, y)
    }

    pub fn min_side(&self) -> usize {
        self.width.min(self.height)
    }

    pub(crate) fn ensure_eq(&self, other: Dims) -> Result<()> {
        if *self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: *self,
                actual: other,
            })
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    dims: Dims,
    data: Vec<f32>,
}

impl Field2D {
    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, 0.0)
    }

    pub fn filled(dims: Dims, value: f32) -> Self {
        Field2D {
            dims,
            data: vec![value; dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.len() {
            return Err(Error::config(format!(
                "field of {dims} needs {} values, got {}",
                dims.len(),
                data.len()
            )));
        }
        Ok(Field2D { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for x in 0..dims.width {
            for y in 0..dims.height {
                data.push(f(x, y));
            }
        }
        Field2D { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[self.dims.index(x, y)]
    }

    /// Toroidal read.
    #[inline]
    pub fn at(&self, x: isize, y: isize) -> f32 {
        self.data[self.dims.wrapped_index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        let i = self.dims.index(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Toroidal shift: the output at `(x + dx, y + dy)` is the input at `(x, y)`.
    pub fn shifted(&self, dx: isize, dy: isize) -> Field2D {
        Field2D::from_fn(self.dims, |x, y| self.at(x as isize - dx, y as isize - dy))
    }

    pub fn max_abs_diff(&self, other: &Field2D) -> f32 {
        max_abs_diff(&self.data, &other.data)
    }
}

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

/// An ordered stack of fields sharing dimensions, stored layer-major.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedField {
    dims: Dims,
    layers: usize,
    data: Vec<f32>,
}

impl StackedField {
    pub fn zeros(dims: Dims, layers: usize) -> Self {
        StackedField {
            dims,
            layers,
            data: vec![0.0; dims.len() * layers],
        }
    }

    pub fn filled(dims: Dims, layers: usize, value: f32) -> Self {
        StackedField {
            dims,
            layers,
            data: vec![value; dims.len() * layers],
        }
    }

    pub fn from_vec(dims: Dims, layers: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != dims.len() * layers {
            return Err(Error::config(format!(
                "stack of {layers} layers at {dims} needs {} values, got {}",
                dims.len() * layers,
                data.len()
            )));
        }
        Ok(StackedField { dims, layers, data })
    }

    pub fn from_layers(layers: &[Field2D]) -> Result<Self> {
        let dims = layers
            .first()
            .map(Field2D::dims)
            .ok_or_else(|| Error::config("empty layer list"))?;
        let mut data = Vec::with_capacity(dims.len() * layers.len());
        for layer in layers {
            dims.ensure_eq(layer.dims())?;
            data.extend_from_slice(layer.as_slice());
        }
        Ok(StackedField {
            dims,
            layers: layers.len(),
            data,
        })
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn layer_count(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn layer(&self, i: usize) -> &[f32] {
        let n = self.dims.len();
        &self.data[i * n..(i + 1) * n]
    }

    #[inline]
    pub fn layer_mut(&mut self, i: usize) -> &mut [f32] {
        let n = self.dims.len();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn layer_field(&self, i: usize) -> Field2D {
        Field2D {
            dims: self.dims,
            data: self.layer(i).to_vec(),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dims.len().max(1))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut [f32]> {
        let n = self.dims.len().max(1);
        self.data.chunks_exact_mut(n)
    }

    #[inline]
    pub fn get(&self, layer: usize, x: usize, y: usize) -> f32 {
        self.data[layer * self.dims.len() + self.dims.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, layer: usize, x: usize, y: usize, value: f32) {
        let i = layer * self.dims.len() + self.dims.index(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn max_abs_diff(&self, other: &StackedField) -> f32 {
        max_abs_diff(&self.data, &other.data)
    }

    /// True when every entry lies in `[lo, hi]` (which also rules out NaN).
    pub fn all_within(&self, lo: f32, hi: f32) -> bool {
        self.data.iter().all(|v| (lo..=hi).contains(v))
    }
}

/// Boolean field over the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask2D {
    dims: Dims,
    data: Vec<bool>,
}

impl Mask2D {
    pub fn empty(dims: Dims) -> Self {
        Mask2D {
            dims,
            data: vec![false; dims.len()],
        }
    }

    pub fn full(dims: Dims) -> Self {
        Mask2D {
            dims,
            data: vec![true; dims.len()],
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for x in 0..dims.width {
            for y in 0..dims.height {
                data.push(f(x, y));
            }
        }
        Mask2D { dims, data }
    }

    pub fn from_vec(dims: Dims, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), dims.len(), "mask length mismatch");
        Mask2D { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[self.dims.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let i = self.dims.index(x, y);
        self.data[i] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn and(&self, other: &Mask2D) -> Mask2D {
        Mask2D {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn to_field(&self) -> Field2D {
        Field2D {
            dims: self.dims,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Complex coefficients of a field under the 2-D DFT, same layout as [`Field2D`].
#[derive(Clone, Debug)]
pub struct Spectrum2D {
    dims: Dims,
    data: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Spectrum2D {
        Spectrum2D {
            dims: self.dims,
            data: self.data.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Planned 2-D FFT for one grid size. Transforms run in double precision.
#[derive(Clone)]
pub struct Fft2D {
    dims: Dims,
    along_y: Arc<dyn Fft<f64>>,
    along_y_inv: Arc<dyn Fft<f64>>,
    along_x: Arc<dyn Fft<f64>>,
    along_x_inv: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for Fft2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2D").field("dims", &self.dims).finish()
    }
}

impl Fft2D {
    pub fn new(dims: Dims) -> Self {
        assert!(!dims.is_empty(), "grid must be non-empty");
        let mut planner = FftPlanner::new();
        let along_y = planner.plan_fft_forward(dims.height);
        let along_y_inv = planner.plan_fft_inverse(dims.height);
        let along_x = planner.plan_fft_forward(dims.width);
        let along_x_inv = planner.plan_fft_inverse(dims.width);
        let scratch_len = [&along_y, &along_y_inv, &along_x, &along_x_inv]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft2D {
            dims,
            along_y,
            along_y_inv,
            along_x,
            along_x_inv,
            scratch_len,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Unnormalized forward transform in place. The spectrum is stored
    /// transposed (`ky` outer); it is only meant for pointwise products and
    /// [`Self::inverse_in_place`]. Index 0 is still the DC term.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.dims.len(), "FFT buffer length mismatch");
        let Dims { width, height } = self.dims;
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.along_y.process_with_scratch(buf, &mut scratch);
        let mut t = vec![Complex64::default(); buf.len()];
        transpose(buf, &mut t, width, height);
        self.along_x.process_with_scratch(&mut t, &mut scratch);
        buf.copy_from_slice(&t);
    }

    /// Inverse transform in place, scaled by `1/N` so it undoes [`Self::forward_in_place`].
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.dims.len(), "FFT buffer length mismatch");
        let Dims { width, height } = self.dims;
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.along_x_inv.process_with_scratch(buf, &mut scratch);
        let mut t = vec![Complex64::default(); buf.len()];
        transpose(buf, &mut t, height, width);
        self.along_y_inv.process_with_scratch(&mut t, &mut scratch);
        let scale = 1.0 / self.dims.len() as f64;
        for (b, v) in buf.iter_mut().zip(&t) {
            *b = v * scale;
        }
    }

    pub fn forward_real(&self, values: &[f32]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn spectrum(&self, field: &Field2D) -> Result<Spectrum2D> {
        self.dims.ensure_eq(field.dims())?;
        Ok(Spectrum2D {
            dims: self.dims,
            data: self.forward_real(field.as_slice()),
        })
    }

    /// Spectrum of the complex field `re + i*im`.
    pub fn spectrum_pair(&self, re: &Field2D, im: &Field2D) -> Result<Spectrum2D> {
        self.dims.ensure_eq(re.dims())?;
        self.dims.ensure_eq(im.dims())?;
        let mut buf: Vec<Complex64> = re
            .as_slice()
            .iter()
            .zip(im.as_slice())
            .map(|(&a, &b)| Complex64::new(a as f64, b as f64))
            .collect();
        self.forward_in_place(&mut buf);
        Ok(Spectrum2D {
            dims: self.dims,
            data: buf,
        })
    }
}

/// Blocked out-of-place transpose of a `rows x cols` matrix (row-major input).
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Circular convolution of `field` with the kernel whose spectrum is given.
pub fn convolve_periodic(plan: &Fft2D, field: &Field2D, kernel: &Spectrum2D) -> Result<Field2D> {
    plan.dims.ensure_eq(field.dims())?;
    plan.dims.ensure_eq(kernel.dims())?;
    let mut buf = plan.forward_real(field.as_slice());
    for (b, k) in buf.iter_mut().zip(&kernel.data) {
        *b *= k;
    }
    plan.inverse_in_place(&mut buf);
    Ok(Field2D {
        dims: field.dims(),
        data: buf.iter().map(|c| c.re as f32).collect(),
    })
}

/// Pixels where every layer exceeds `epsilon`.
pub fn delta_all(stack: &StackedField, epsilon: f32) -> Mask2D {
    let mut data = vec![true; stack.dims().len()];
    for layer in stack.layers() {
        for (m, &v) in data.iter_mut().zip(layer) {
            *m &= v > epsilon;
        }
    }
    Mask2D::from_vec(stack.dims(), data)
}

/// Pixels where the sum over layers exceeds `epsilon`.
pub fn delta_sum(stack: &StackedField, epsilon: f32) -> Mask2D {
    let mut sum = vec![0.0f64; stack.dims().len()];
    for layer in stack.layers() {
        for (s, &v) in sum.iter_mut().zip(layer) {
            *s += v as f64;
        }
    }
    let eps = epsilon as f64;
    Mask2D::from_vec(stack.dims(), sum.into_iter().map(|s| s > eps).collect())
}

/// Per-layer masks of entries exceeding `epsilon`.
pub fn delta_same(stack: &StackedField, epsilon: f32) -> Vec<Mask2D> {
    stack
        .layers()
        .map(|layer| Mask2D::from_vec(stack.dims(), layer.iter().map(|&v| v > epsilon).collect()))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ThresholdMasks {
    pub all: Mask2D,
    pub sum: Mask2D,
    pub same: Vec<Mask2D>,
}

pub fn threshold_masks(stack: &StackedField, epsilon: f32) -> ThresholdMasks {
    ThresholdMasks {
        all: delta_all(stack, epsilon),
        sum: delta_sum(stack, epsilon),
        same: delta_same(stack, epsilon),
    }
}

/// Lattice disk `x² + y² ≤ r²` centred on the origin with toroidal wrap.
#[derive(Clone, Debug)]
pub struct DiskKernel {
    radius: usize,
    field: Field2D,
    spectrum: Spectrum2D,
    area: f64,
    /// Vertical half-extent of the disk at each horizontal offset `-r..=r`.
    half_heights: Vec<usize>,
}

pub fn disk_kernel(plan: &Fft2D, radius: usize) -> Result<DiskKernel> {
    let dims = plan.dims();
    if 2 * radius >= dims.min_side() {
        return Err(Error::RadiusTooLarge { radius, dims });
    }
    let r = radius as isize;
    let mut field = Field2D::zeros(dims);
    let mut area = 0.0;
    let mut half_heights = Vec::with_capacity(2 * radius + 1);
    for dx in -r..=r {
        let mut h = 0;
        for dy in -r..=r {
            if dx * dx + dy * dy <= r * r {
                let (x, y) = dims.wrap(dx, dy);
                field.set(x, y, 1.0);
                area += 1.0;
                h = h.max(dy.unsigned_abs());
            }
        }
        half_heights.push(h);
    }
    let spectrum = plan.spectrum(&field)?;
    Ok(DiskKernel {
        radius,
        field,
        spectrum,
        area,
        half_heights,
    })
}

impl DiskKernel {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn field(&self) -> &Field2D {
        &self.field
    }

    pub fn spectrum(&self) -> &Spectrum2D {
        &self.spectrum
    }

    /// Pixel count of the disk.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Spectrum of the disk scaled to unit sum.
    pub fn normalized_spectrum(&self) -> Spectrum2D {
        self.spectrum.scaled(1.0 / self.area)
    }

    /// Exact direct-space circular convolution with the disk, accumulated in f64.
    ///
    /// Built from vertical box sums so the cost per pixel is `O(r)`. Columns
    /// whose neighbourhood is all zero are skipped.
    pub fn convolve_direct(&self, dims: Dims, values: &[f32], out: &mut [f64]) {
        let mut boxes = BoxSums::new(dims, self.radius);
        boxes.load(values);
        boxes.disk_sum(&self.half_heights, out);
    }

    pub(crate) fn half_heights(&self) -> &[usize] {
        &self.half_heights
    }
}

/// Vertical box sums `B_h(x, y) = Σ_{|dy| ≤ h} v(x, y + dy)` for `h = 0..=r`.
pub(crate) struct BoxSums {
    dims: Dims,
    radius: usize,
    sums: Vec<f64>,
    nonzero_cols: Vec<bool>,
}

impl BoxSums {
    pub(crate) fn new(dims: Dims, radius: usize) -> Self {
        BoxSums {
            dims,
            radius,
            sums: vec![0.0; dims.len() * (radius + 1)],
            nonzero_cols: vec![false; dims.width],
        }
    }

    pub(crate) fn load_with(&mut self, mut value: impl FnMut(usize) -> f64) {
        let Dims { width, height } = self.dims;
        let n = self.dims.len();
        let (base, rest) = self.sums.split_at_mut(n);
        for x in 0..width {
            let col = &mut base[x * height..(x + 1) * height];
            let mut any = false;
            for (y, c) in col.iter_mut().enumerate() {
                let v = value(x * height + y);
                any |= v != 0.0;
                *c = v;
            }
            self.nonzero_cols[x] = any;
        }
        for h in 1..=self.radius {
            let (prev, cur) = if h == 1 {
                (&base[..], &mut rest[..n])
            } else {
                let (lo, hi) = rest.split_at_mut((h - 1) * n);
                (&lo[(h - 2) * n..], &mut hi[..n])
            };
            for x in 0..width {
                let off = x * height;
                if !self.nonzero_cols[x] {
                    cur[off..off + height].fill(0.0);
                    continue;
                }
                let v = &base[off..off + height];
                let p = &prev[off..off + height];
                let c = &mut cur[off..off + height];
                if 2 * h < height {
                    for y in 0..h {
                        c[y] = p[y] + v[y + height - h] + v[y + h];
                    }
                    for y in h..height - h {
                        c[y] = p[y] + v[y - h] + v[y + h];
                    }
                    for y in height - h..height {
                        c[y] = p[y] + v[y - h] + v[y + h - height];
                    }
                } else {
                    for y in 0..height {
                        c[y] = p[y] + v[(y + height - h % height) % height] + v[(y + h) % height];
                    }
                }
            }
        }
    }

    pub(crate) fn load(&mut self, values: &[f32]) {
        self.load_with(|i| values[i] as f64);
    }

    pub(crate) fn disk_sum(&self, half_heights: &[usize], out: &mut [f64]) {
        let Dims { width, height } = self.dims;
        let n = self.dims.len();
        let r = self.radius as isize;
        for x in 0..width {
            let dst = &mut out[x * height..(x + 1) * height];
            dst.fill(0.0);
            for (i, dx) in (-r..=r).enumerate() {
                let sx = (x as isize + dx).rem_euclid(width as isize) as usize;
                if !self.nonzero_cols[sx] {
                    continue;
                }
                let h = half_heights[i];
                let src = &self.sums[h * n + sx * height..h * n + (sx + 1) * height];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
            }
        }
    }

    pub(crate) fn any_nonzero(&self) -> bool {
        self.nonzero_cols.iter().any(|&b| b)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct O(N²) toroidal convolution in f64.
    pub(crate) fn naive_convolve(field: &Field2D, kernel: &Field2D) -> Vec<f64> {
        let d = field.dims();
        let mut out = vec![0.0; d.len()];
        for x in 0..d.width {
            for y in 0..d.height {
                let mut acc = 0.0f64;
                for i in 0..d.width {
                    for j in 0..d.height {
                        let kx = x as isize - i as isize;
                        let ky = y as isize - j as isize;
                        acc += field.get(i, j) as f64 * kernel.at(kx, ky) as f64;
                    }
                }
                out[d.index(x, y)] = acc;
            }
        }
        out
    }

    fn random_field(rng: &mut ChaCha8Rng, dims: Dims) -> Field2D {
        Field2D::from_fn(dims, |_, _| rng.gen::<f32>())
    }

    #[test]
    fn delta_kernel_is_identity() {
        let dims = Dims::new(16, 16);
        let plan = Fft2D::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(&mut rng, dims);
        let mut delta = Field2D::zeros(dims);
        delta.set(0, 0, 1.0);
        let out = convolve_periodic(&plan, &f, &plan.spectrum(&delta).unwrap()).unwrap();
        assert!(out.max_abs_diff(&f) <= 1e-6);
    }

    #[test]
    fn averaging_kernel_preserves_constants() {
        let dims = Dims::new(12, 10);
        let plan = Fft2D::new(dims);
        let k = Field2D::filled(dims, 1.0 / dims.len() as f32);
        let f = Field2D::filled(dims, 0.4);
        let out = convolve_periodic(&plan, &f, &plan.spectrum(&k).unwrap()).unwrap();
        assert!(out.as_slice().iter().all(|v| (v - 0.4).abs() <= 1e-6));
    }

    #[test]
    fn spectral_matches_naive_on_8x8() {
        let dims = Dims::new(8, 8);
        let plan = Fft2D::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_field(&mut rng, dims);
        let k = random_field(&mut rng, dims);
        let out = convolve_periodic(&plan, &f, &plan.spectrum(&k).unwrap()).unwrap();
        let oracle = naive_convolve(&f, &k);
        for (a, b) in out.as_slice().iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() <= 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn mismatched_dims_are_rejected() {
        let plan = Fft2D::new(Dims::new(8, 8));
        let other = Fft2D::new(Dims::new(8, 4));
        let k = other.spectrum(&Field2D::zeros(Dims::new(8, 4))).unwrap();
        let err = convolve_periodic(&plan, &Field2D::zeros(Dims::new(8, 8)), &k).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn fft_round_trip() {
        let dims = Dims::new(6, 10);
        let plan = Fft2D::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(&mut rng, dims);
        let mut buf = plan.forward_real(f.as_slice());
        plan.inverse_in_place(&mut buf);
        for (c, v) in buf.iter().zip(f.as_slice()) {
            assert!((c.re - *v as f64).abs() < 1e-6 && c.im.abs() < 1e-6);
        }
    }

    #[test]
    fn masks_on_trivial_stacks() {
        let dims = Dims::new(4, 4);
        let zero = StackedField::zeros(dims, 3);
        let m = threshold_masks(&zero, 0.01);
        assert!(m.all.is_empty() && m.sum.is_empty() && m.same.iter().all(Mask2D::is_empty));
        let ones = StackedField::filled(dims, 3, 1.0);
        let m = threshold_masks(&ones, 0.01);
        assert_eq!(m.all.count(), 16);
        assert_eq!(m.sum.count(), 16);
        assert!(m.same.iter().all(|s| s.count() == 16));
    }

    #[test]
    fn masks_on_mixed_pixel() {
        let dims = Dims::new(3, 3);
        let mut s = StackedField::zeros(dims, 2);
        s.set(1, 2, 1, 0.5);
        let m = threshold_masks(&s, 0.01);
        assert!(!m.all.get(2, 1));
        assert!(m.sum.get(2, 1));
        assert!(!m.same[0].get(2, 1));
        assert!(m.same[1].get(2, 1));
        assert_eq!(m.sum.count(), 1);
    }

    #[test]
    fn mask_threshold_is_strict() {
        let dims = Dims::new(2, 2);
        let s = StackedField::filled(dims, 1, 0.25);
        assert!(delta_all(&s, 0.25).is_empty());
        assert_eq!(delta_all(&s, 0.2499).count(), 4);
    }

    fn lattice_count(r: usize) -> usize {
        let r = r as isize;
        (-r..=r)
            .flat_map(|x| (-r..=r).map(move |y| (x, y)))
            .filter(|(x, y)| x * x + y * y <= r * r)
            .count()
    }

    #[test]
    fn disk_areas() {
        let plan = Fft2D::new(Dims::new(32, 32));
        assert_eq!(disk_kernel(&plan, 0).unwrap().area(), 1.0);
        assert_eq!(disk_kernel(&plan, 1).unwrap().area(), 5.0);
        assert_eq!(disk_kernel(&plan, 2).unwrap().area(), 13.0);
        for r in 0..16 {
            let d = disk_kernel(&plan, r).unwrap();
            assert_eq!(d.area() as usize, lattice_count(r), "radius {r}");
            assert_eq!(d.field().sum() as usize, lattice_count(r));
        }
    }

    #[test]
    fn disk_radius_limit() {
        let plan = Fft2D::new(Dims::new(32, 20));
        assert!(disk_kernel(&plan, 9).is_ok());
        assert!(matches!(disk_kernel(&plan, 10), Err(Error::RadiusTooLarge { .. })));
    }

    #[test]
    fn direct_disk_convolution_matches_naive() {
        let dims = Dims::new(12, 9);
        let plan = Fft2D::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_field(&mut rng, dims);
        for r in 0..4 {
            let disk = disk_kernel(&plan, r).unwrap();
            let mut out = vec![0.0; dims.len()];
            disk.convolve_direct(dims, f.as_slice(), &mut out);
            let oracle = naive_convolve(&f, disk.field());
            for (a, b) in out.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
