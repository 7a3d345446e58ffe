//! Image buffers, pyramids, gradients, bilinear sampling, and binary-mask
//! morphology.
//!
//! Coordinate convention: pixel `(x, y)` of an image sits at coordinate
//! `(x, y)`, so integer coordinates address pixel centers and the valid
//! sampling domain of a `W x H` image is `[0, W-1] x [0, H-1]`.

mod netpbm;

pub use netpbm::{load_pbm, load_pgm, write_pbm, write_pgm, write_ppm, PnmError};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImagingError {
    #[error("pixel buffer has {got} entries, expected {expected} for {width}x{height}")]
    BufferSizeMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("zero-area image ({width}x{height})")]
    ZeroArea { width: usize, height: usize },
    #[error("image {width}x{height} too small, need at least {min_side} pixels per side")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min_side: usize,
    },
    #[error("{levels} pyramid levels would shrink a {width}x{height} image below 1 pixel")]
    TooManyLevels {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("sample position ({x}, {y}) outside [0, {max_x}] x [0, {max_y}]")]
    OutOfBounds { x: f64, y: f64, max_x: f64, max_y: f64 },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image8 {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image8 {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroArea { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImagingError::BufferSizeMismatch {
                width,
                height,
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }
}

/// Floating-point grayscale image, the working precision for flow.
///
/// Values are exact integer-to-float conversions of the source pixels; no
/// normalization is applied, so thresholds stay in 8-bit intensity units.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroArea { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImagingError::BufferSizeMismatch {
                width,
                height,
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.pixels[y * self.width + x] = value;
    }

    /// Bilinear interpolation without the bounds check. Callers must
    /// guarantee `0 <= x <= width-1` and `0 <= y <= height-1`.
    #[inline]
    pub(crate) fn sample_unchecked(&self, x: f64, y: f64) -> f32 {
        debug_assert!(x >= 0.0 && x <= (self.width - 1) as f64);
        debug_assert!(y >= 0.0 && y <= (self.height - 1) as f64);
        let x0 = x as usize;
        let y0 = y as usize;
        let fx = (x - x0 as f64) as f32;
        let fy = (y - y0 as f64) as f32;
        let x1 = if fx > 0.0 { x0 + 1 } else { x0 };
        let y1 = if fy > 0.0 { y0 + 1 } else { y0 };
        let p00 = self.get(x0, y0);
        let p10 = self.get(x1, y0);
        let p01 = self.get(x0, y1);
        let p11 = self.get(x1, y1);
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        top + (bottom - top) * fy
    }
}

/// RGB image for overlay rendering, row-major interleaved `[r, g, b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroArea { width, height });
        }
        if data.len() != 3 * width * height {
            return Err(ImagingError::BufferSizeMismatch {
                width,
                height,
                expected: 3 * width * height,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        let mut data = Vec::with_capacity(3 * width * height);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data)
    }

    /// Grayscale expansion: every channel gets the source intensity.
    pub fn from_gray(image: &Image8) -> Self {
        let mut data = Vec::with_capacity(3 * image.width * image.height);
        for &v in image.pixels() {
            data.extend_from_slice(&[v, v, v]);
        }
        Self {
            width: image.width,
            height: image.height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Sets a pixel, ignoring out-of-image coordinates.
    #[inline]
    pub fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = 3 * (y as usize * self.width + x as usize);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Multi-level image representation: level 0 is full resolution, each level
/// above halves both dimensions (floor).
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<ImageF>,
}

impl Pyramid {
    pub fn levels(&self) -> &[ImageF] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &ImageF {
        &self.levels[k]
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// Binary mask, row-major booleans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImagingError> {
        if bits.len() != width * height {
            return Err(ImagingError::BufferSizeMismatch {
                width,
                height,
                expected: width * height,
                got: bits.len(),
            });
        }
        Ok(Self { width, height, bits })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Exact integer-to-float conversion of every pixel.
pub fn to_float(image: &Image8) -> ImageF {
    ImageF {
        width: image.width,
        height: image.height,
        pixels: image.pixels.iter().map(|&v| v as f32).collect(),
    }
}

/// Builds an image pyramid. Each level above 0 is produced by separable
/// 5-tap smoothing with kernel (1, 4, 6, 4, 1)/16 (borders clamped) followed
/// by 2x decimation at even indices.
pub fn build_pyramid(image: &ImageF, levels: usize) -> Result<Pyramid, ImagingError> {
    if levels == 0 {
        return Err(ImagingError::TooManyLevels {
            width: image.width,
            height: image.height,
            levels,
        });
    }
    let min_side = 1usize << (levels - 1);
    if image.width < min_side || image.height < min_side {
        return Err(ImagingError::TooManyLevels {
            width: image.width,
            height: image.height,
            levels,
        });
    }
    let mut out = Vec::with_capacity(levels);
    out.push(image.clone());
    for _ in 1..levels {
        let prev = out.last().unwrap();
        out.push(smooth_and_decimate(prev));
    }
    Ok(Pyramid { levels: out })
}

/// Separable 5-tap binomial smoothing, borders clamped. Border pixels take
/// the scalar clamped path; the interior runs clamp-free so it vectorizes.
pub(crate) fn smooth5(src: &ImageF) -> ImageF {
    const SCALE: f32 = 1.0 / 16.0;
    let (w, h) = (src.width, src.height);
    let clamp_x = |x: isize| x.clamp(0, w as isize - 1) as usize;
    let clamp_y = |y: isize| y.clamp(0, h as isize - 1) as usize;

    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &src.pixels[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for x in 2..w.saturating_sub(2) {
            out[x] = (row[x - 2] + row[x + 2] + 4.0 * (row[x - 1] + row[x + 1]) + 6.0 * row[x])
                * SCALE;
        }
        for x in (0..2.min(w)).chain(w.saturating_sub(2)..w) {
            let xi = x as isize;
            out[x] = (row[clamp_x(xi - 2)]
                + row[clamp_x(xi + 2)]
                + 4.0 * (row[clamp_x(xi - 1)] + row[clamp_x(xi + 1)])
                + 6.0 * row[x])
                * SCALE;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let yi = y as isize;
        let r0 = &tmp[clamp_y(yi - 2) * w..clamp_y(yi - 2) * w + w];
        let r1 = &tmp[clamp_y(yi - 1) * w..clamp_y(yi - 1) * w + w];
        let r2 = &tmp[y * w..y * w + w];
        let r3 = &tmp[clamp_y(yi + 1) * w..clamp_y(yi + 1) * w + w];
        let r4 = &tmp[clamp_y(yi + 2) * w..clamp_y(yi + 2) * w + w];
        let dst = &mut out[y * w..(y + 1) * w];
        for x in 0..w {
            dst[x] = (r0[x] + r4[x] + 4.0 * (r1[x] + r3[x]) + 6.0 * r2[x]) * SCALE;
        }
    }
    ImageF {
        width: w,
        height: h,
        pixels: out,
    }
}

/// 2x decimation at even indices.
pub(crate) fn decimate2(src: &ImageF) -> ImageF {
    let (w, h) = (src.width, src.height);
    let nw = (w / 2).max(1);
    let nh = (h / 2).max(1);
    let mut out = vec![0.0f32; nw * nh];
    for ny in 0..nh {
        for nx in 0..nw {
            out[ny * nw + nx] = src.pixels[(2 * ny) * w + 2 * nx];
        }
    }
    ImageF {
        width: nw,
        height: nh,
        pixels: out,
    }
}

fn smooth_and_decimate(src: &ImageF) -> ImageF {
    decimate2(&smooth5(src))
}

/// Image gradients: central differences `(f(x+1) - f(x-1)) / 2` in the
/// interior, one-sided differences on the border rows/columns.
pub fn gradient(image: &ImageF) -> Result<(ImageF, ImageF), ImagingError> {
    let (w, h) = (image.width, image.height);
    if w < 3 || h < 3 {
        return Err(ImagingError::ImageTooSmall {
            width: w,
            height: h,
            min_side: 3,
        });
    }
    let px = &image.pixels;
    let mut gx = vec![0.0f32; w * h];
    let mut gy = vec![0.0f32; w * h];
    for y in 0..h {
        let r = y * w;
        gx[r] = px[r + 1] - px[r];
        for x in 1..w - 1 {
            gx[r + x] = (px[r + x + 1] - px[r + x - 1]) * 0.5;
        }
        gx[r + w - 1] = px[r + w - 1] - px[r + w - 2];
    }
    for x in 0..w {
        gy[x] = px[w + x] - px[x];
        for y in 1..h - 1 {
            gy[y * w + x] = (px[(y + 1) * w + x] - px[(y - 1) * w + x]) * 0.5;
        }
        gy[(h - 1) * w + x] = px[(h - 1) * w + x] - px[(h - 2) * w + x];
    }
    Ok((
        ImageF {
            width: w,
            height: h,
            pixels: gx,
        },
        ImageF {
            width: w,
            height: h,
            pixels: gy,
        },
    ))
}

/// Bilinear interpolation of the four pixels surrounding `(x, y)`.
pub fn bilinear_sample(image: &ImageF, x: f64, y: f64) -> Result<f32, ImagingError> {
    let max_x = (image.width - 1) as f64;
    let max_y = (image.height - 1) as f64;
    if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
        return Err(ImagingError::OutOfBounds { x, y, max_x, max_y });
    }
    Ok(image.sample_unchecked(x, y))
}

/// Binary erosion with the 3x3 square structuring element: a pixel survives
/// an iteration only if its whole 3x3 neighborhood is set. Out-of-image
/// neighbors count as unset, so each iteration clears the outermost ring.
pub fn erode(mask: &BitMask, iterations: usize) -> BitMask {
    let (w, h) = (mask.width, mask.height);
    let mut cur = mask.bits.clone();
    let mut next = vec![false; w * h];
    for _ in 0..iterations {
        for y in 0..h {
            for x in 0..w {
                let mut keep = x > 0 && y > 0 && x < w - 1 && y < h - 1;
                if keep {
                    'n: for dy in 0..3 {
                        for dx in 0..3 {
                            if !cur[(y + dy - 1) * w + (x + dx - 1)] {
                                keep = false;
                                break 'n;
                            }
                        }
                    }
                }
                next[y * w + x] = keep;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    BitMask {
        width: w,
        height: h,
        bits: cur,
    }
}
