//! Image and flow containers plus the pixel-level primitives shared by the
//! solver and the pooling stages: grayscale conversion, pair normalization,
//! Gaussian pyramids, bilinear warping, gradients and flow filtering.
//!
//! All sampling is bilinear with clamp-to-edge boundaries.

use crate::error::{Error, Result};

/// Smallest width or height a pyramid level may have.
pub const MIN_PYRAMID_SIZE: usize = 8;

/// Row-major real-valued intensity grid, nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::input(format!(
                "expected {} samples for a {width}x{height} image, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image without the finiteness scan. Callers guarantee the
    /// length and that every value is finite.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear sample at a real-valued position, clamped to the grid.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        bilinear(&self.data, self.width, self.height, x, y)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        min_max(&self.data)
    }

    /// Applies `f` to every sample. Non-finite results are rejected.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// Dense 2-D displacement field `u = (u1, u2)` in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        if u1.len() != n || u2.len() != n {
            return Err(Error::input(format!(
                "flow components must have {n} entries, got {} and {}",
                u1.len(),
                u2.len()
            )));
        }
        if u1.iter().chain(&u2).any(|v| !v.is_finite()) {
            return Err(Error::input("flow field contains non-finite entries"));
        }
        Ok(Self {
            width,
            height,
            u1,
            u2,
        })
    }

    pub(crate) fn from_raw(width: usize, height: usize, u1: Vec<f64>, u2: Vec<f64>) -> Self {
        debug_assert_eq!(u1.len(), width * height);
        debug_assert_eq!(u2.len(), width * height);
        Self {
            width,
            height,
            u1,
            u2,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u1: f64, u2: f64) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![u1; n], vec![u2; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn u1(&self) -> &[f64] {
        &self.u1
    }

    pub fn u2(&self) -> &[f64] {
        &self.u2
    }

    pub fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.u1, self.u2)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u1[i], self.u2[i])
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a.hypot(*b))
            .collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes().into_iter().fold(0.0, f64::max)
    }
}

/// Multi-resolution ladder; level 0 is the input image.
#[derive(Debug, Clone)]
pub struct Pyramid {
    pub levels: Vec<GrayImage>,
    pub zoom: f64,
}

impl Pyramid {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> &GrayImage {
        &self.levels[0]
    }

    pub fn coarsest(&self) -> &GrayImage {
        self.levels.last().expect("pyramid has at least one level")
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::input(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

fn ensure_same_dims(a: (usize, usize), b: (usize, usize), what: &str) -> Result<()> {
    if a != b {
        return Err(Error::input(format!(
            "{what}: dimension mismatch {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

#[inline]
pub(crate) fn bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let top = (1.0 - fx) * data[y0 * width + x0] + fx * data[y0 * width + x1];
    let bottom = (1.0 - fx) * data[y1 * width + x0] + fx * data[y1 * width + x1];
    (1.0 - fy) * top + fy * bottom
}

/// Luminance `0.299 r + 0.587 g + 0.114 b`, clamped to `[0, 1]`.
pub fn to_gray(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    ensure_same_dims(r.dims(), g.dims(), "to_gray")?;
    ensure_same_dims(r.dims(), b.dims(), "to_gray")?;
    let data = r
        .data
        .iter()
        .zip(&g.data)
        .zip(&b.data)
        .map(|((&r, &g), &b)| (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0))
        .collect();
    Ok(GrayImage::from_raw(r.width, r.height, data))
}

/// Jointly rescales a frame pair so its combined range maps onto `[0, 1]`.
///
/// With `remove_mean`, each image then has its own mean replaced by 0.5
/// (clamped to `[0, 1]`), which cancels a global brightness offset between
/// the two frames. A constant pair is returned unchanged.
pub fn preprocess_pair(
    a: &GrayImage,
    b: &GrayImage,
    remove_mean: bool,
) -> Result<(GrayImage, GrayImage)> {
    ensure_same_dims(a.dims(), b.dims(), "preprocess_pair")?;
    let (amin, amax) = a.min_max();
    let (bmin, bmax) = b.min_max();
    let lo = amin.min(bmin);
    let hi = amax.max(bmax);
    if hi <= lo {
        return Ok((a.clone(), b.clone()));
    }
    let scale = 1.0 / (hi - lo);
    let normalize = |img: &GrayImage| -> GrayImage {
        let mut data: Vec<f64> = img.data.iter().map(|&v| (v - lo) * scale).collect();
        if remove_mean {
            let mean = data.iter().sum::<f64>() / data.len() as f64;
            for v in &mut data {
                *v = (*v - mean + 0.5).clamp(0.0, 1.0);
            }
        }
        GrayImage::from_raw(img.width, img.height, data)
    };
    Ok((normalize(a), normalize(b)))
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    kernel
}

/// Separable Gaussian blur with clamp-to-edge boundaries.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &img.data[y * w..(y + 1) * w];
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, c)| c * row[clamp(x as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, c)| c * tmp[clamp(y as isize + k as isize - radius, h) * w + x])
                .sum();
        }
    }
    GrayImage::from_raw(w, h, out)
}

/// Maps output pixel index to source coordinate for a pixel-center aligned resize.
#[inline]
fn source_coord(i: usize, from: usize, to: usize) -> f64 {
    (i as f64 + 0.5) * from as f64 / to as f64 - 0.5
}

fn resample_plane(data: &[f64], w: usize, h: usize, new_w: usize, new_h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let sy = source_coord(y, h, new_h);
        for x in 0..new_w {
            out.push(bilinear(data, w, h, source_coord(x, w, new_w), sy));
        }
    }
    out
}

/// Bilinear resize to `new_w x new_h` (no anti-aliasing).
pub fn resample(img: &GrayImage, new_w: usize, new_h: usize) -> Result<GrayImage> {
    check_dims(new_w, new_h)?;
    if img.dims() == (new_w, new_h) {
        return Ok(img.clone());
    }
    let data = resample_plane(&img.data, img.width, img.height, new_w, new_h);
    Ok(GrayImage::from_raw(new_w, new_h, data))
}

/// Size of the next coarser level, or `None` once it would drop below the floor.
pub fn next_level_dims(width: usize, height: usize, zoom: f64) -> Option<(usize, usize)> {
    let w = (width as f64 * zoom).round() as usize;
    let h = (height as f64 * zoom).round() as usize;
    if w < MIN_PYRAMID_SIZE || h < MIN_PYRAMID_SIZE || w >= width || h >= height {
        None
    } else {
        Some((w, h))
    }
}

/// Builds up to `n_scales` levels, each a Gaussian-presmoothed bilinear
/// downsample of the previous one by `zoom`.
pub fn build_pyramid(img: &GrayImage, n_scales: usize, zoom: f64) -> Result<Pyramid> {
    if n_scales == 0 {
        return Err(Error::input("n_scales must be at least 1"));
    }
    if !(zoom > 0.0 && zoom < 1.0) {
        return Err(Error::input(format!("zoom must lie in (0, 1), got {zoom}")));
    }
    let sigma = 0.6 * (1.0 / (zoom * zoom) - 1.0).sqrt();
    let mut levels = vec![img.clone()];
    while levels.len() < n_scales {
        let prev = levels.last().expect("non-empty");
        let Some((w, h)) = next_level_dims(prev.width, prev.height, zoom) else {
            break;
        };
        let smooth = gaussian_blur(prev, sigma);
        levels.push(resample(&smooth, w, h)?);
    }
    Ok(Pyramid { levels, zoom })
}

/// `out(x) = img(x + u(x))`, bilinear with clamped sample coordinates.
pub fn warp(img: &GrayImage, flow: &FlowField) -> Result<GrayImage> {
    ensure_same_dims(img.dims(), flow.dims(), "warp")?;
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out.push(bilinear(
                &img.data,
                w,
                h,
                x as f64 + flow.u1[i],
                y as f64 + flow.u2[i],
            ));
        }
    }
    Ok(GrayImage::from_raw(w, h, out))
}

/// Central differences on the interior, one-sided differences on the border.
pub fn gradient(img: &GrayImage) -> Result<(GrayImage, GrayImage)> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::input(format!(
            "gradient needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let d = &img.data;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = if x == 0 {
                d[i + 1] - d[i]
            } else if x == w - 1 {
                d[i] - d[i - 1]
            } else {
                0.5 * (d[i + 1] - d[i - 1])
            };
            gy[i] = if y == 0 {
                d[i + w] - d[i]
            } else if y == h - 1 {
                d[i] - d[i - w]
            } else {
                0.5 * (d[i + w] - d[i - w])
            };
        }
    }
    Ok((GrayImage::from_raw(w, h, gx), GrayImage::from_raw(w, h, gy)))
}

fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (_, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = buf[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn median_plane(data: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    let mut buf = Vec::with_capacity((2 * radius + 1).pow(2));
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(h - 1));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(w - 1));
            buf.clear();
            for yy in y0..=y1 {
                buf.extend_from_slice(&data[yy * w + x0..=yy * w + x1]);
            }
            out.push(median_in_place(&mut buf));
        }
    }
    out
}

/// Per-component median over the `(2r+1)^2` window, clipped at the borders.
/// An even-sized window takes the mean of its two middle values.
pub fn median_filter_flow(flow: &FlowField, radius: usize) -> FlowField {
    if radius == 0 {
        return flow.clone();
    }
    let (w, h) = flow.dims();
    FlowField::from_raw(
        w,
        h,
        median_plane(&flow.u1, w, h, radius),
        median_plane(&flow.u2, w, h, radius),
    )
}

/// Bilinear resize of a flow field with displacements rescaled to the new
/// resolution (`u1 * new_w / old_w`, `u2 * new_h / old_h`).
pub fn resize_flow(flow: &FlowField, new_w: usize, new_h: usize) -> Result<FlowField> {
    check_dims(new_w, new_h)?;
    let (w, h) = flow.dims();
    if (w, h) == (new_w, new_h) {
        return Ok(flow.clone());
    }
    let sx = new_w as f64 / w as f64;
    let sy = new_h as f64 / h as f64;
    let mut u1 = resample_plane(&flow.u1, w, h, new_w, new_h);
    let mut u2 = resample_plane(&flow.u2, w, h, new_w, new_h);
    u1.iter_mut().for_each(|v| *v *= sx);
    u2.iter_mut().for_each(|v| *v *= sy);
    Ok(FlowField::from_raw(new_w, new_h, u1, u2))
}

/// Upsamples a coarse flow to a finer pyramid level.
pub fn prolongate(flow: &FlowField, new_w: usize, new_h: usize) -> Result<FlowField> {
    if new_w < flow.width || new_h < flow.height {
        return Err(Error::input(format!(
            "prolongate cannot shrink {}x{} to {new_w}x{new_h}",
            flow.width, flow.height
        )));
    }
    resize_flow(flow, new_w, new_h)
}
