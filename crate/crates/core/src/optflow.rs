//! Sparse pyramidal Lucas-Kanade point tracker.
//!
//! Coarse-to-fine estimation after Bouguet's classic description: at every
//! pyramid level the 2x2 structure tensor of the previous frame is inverted
//! once per point, then Newton iterations on the intensity mismatch refine
//! the displacement; the estimate doubles when descending a level. Gradients
//! of the previous frame are computed once per level and shared by all
//! points; the next frame is sampled bilinearly.

use crate::imaging::{self, ImageF, ImagingError, Pyramid};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("pyramid dimensions differ at level {level}: {prev_w}x{prev_h} vs {next_w}x{next_h}")]
    DimensionMismatch {
        level: usize,
        prev_w: usize,
        prev_h: usize,
        next_w: usize,
        next_h: usize,
    },
    #[error("pyramids have {available} levels, parameters require {required}")]
    NotEnoughLevels { available: usize, required: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Lucas-Kanade tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct LkParams {
    /// Half-width of the integration window; the window is
    /// `(2*window_half+1)^2` pixels.
    pub window_half: usize,
    /// Number of pyramid levels used for estimation.
    pub levels: usize,
    /// Iteration cap per level.
    pub max_iters: usize,
    /// Convergence threshold on the per-iteration update norm, in pixels.
    pub epsilon: f64,
    /// Minimum structure-tensor eigenvalue, normalized by window area, for a
    /// point to count as trackable (intensity^2 per pixel^2).
    pub min_eigen: f64,
    /// Mean absolute intensity error above which a converged point is
    /// declared diverged.
    pub max_residual: f64,
}

impl Default for LkParams {
    fn default() -> Self {
        Self {
            window_half: 7,
            levels: 3,
            max_iters: 30,
            epsilon: 0.01,
            min_eigen: 1e-4,
            max_residual: 20.0,
        }
    }
}

impl LkParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if self.window_half < 1 {
            return Err(FlowError::InvalidParams("window_half must be >= 1"));
        }
        if self.levels < 1 {
            return Err(FlowError::InvalidParams("levels must be >= 1"));
        }
        if self.max_iters < 1 {
            return Err(FlowError::InvalidParams("max_iters must be >= 1"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(FlowError::InvalidParams("epsilon must be > 0"));
        }
        if self.min_eigen.is_nan() || self.min_eigen < 0.0 {
            return Err(FlowError::InvalidParams("min_eigen must be >= 0"));
        }
        if self.max_residual.is_nan() || self.max_residual <= 0.0 {
            return Err(FlowError::InvalidParams("max_residual must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    /// Converged with an acceptable residual.
    Ok,
    /// Structure tensor too close to singular (textureless window).
    LostSingular,
    /// The integration window left the image.
    LostOutOfBounds,
    /// Converged but the window mismatch stayed large.
    LostDiverged,
}

/// Per-point displacement estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResult {
    pub dx: f64,
    pub dy: f64,
    pub status: FlowStatus,
    /// Mean absolute intensity error over the window at the final estimate.
    pub residual: f64,
}

impl FlowResult {
    #[inline]
    pub fn is_ok(&self) -> bool {
        self.status == FlowStatus::Ok
    }

    fn lost(status: FlowStatus) -> Self {
        Self {
            dx: 0.0,
            dy: 0.0,
            status,
            residual: f64::INFINITY,
        }
    }
}

struct FlowLevel {
    image: ImageF,
    grad_x: ImageF,
    grad_y: ImageF,
}

/// An image pyramid bundled with per-level gradients, ready to serve as the
/// "previous" frame of a flow computation.
pub struct FlowPyramid {
    levels: Vec<FlowLevel>,
}

impl FlowPyramid {
    /// Wraps a pyramid for flow estimation. Every level gets one pass of
    /// binomial smoothing before its gradients are taken: the matching model
    /// assumes locally linear intensity, which raw aliased texture violates
    /// badly enough to stall the sub-pixel iterations.
    pub fn new(pyramid: Pyramid) -> Result<Self, FlowError> {
        let mut levels = Vec::with_capacity(pyramid.level_count());
        for raw in pyramid.levels() {
            let image = imaging::smooth5(raw);
            let (grad_x, grad_y) = imaging::gradient(&image)?;
            levels.push(FlowLevel {
                image,
                grad_x,
                grad_y,
            });
        }
        Ok(Self { levels })
    }

    /// Constructor from an 8-bit frame. Equivalent to
    /// `Self::new(build_pyramid(to_float(image), levels))` but computes each
    /// level's smoothing once, since pyramid reduction and flow presmoothing
    /// share it.
    pub fn from_image(image: &crate::imaging::Image8, levels: usize) -> Result<Self, FlowError> {
        if levels == 0 || image.width() < 1 << (levels - 1) || image.height() < 1 << (levels - 1)
        {
            return Err(ImagingError::TooManyLevels {
                width: image.width(),
                height: image.height(),
                levels,
            }
            .into());
        }
        let mut out = Vec::with_capacity(levels);
        let mut raw = imaging::to_float(image);
        for k in 0..levels {
            let smoothed = imaging::smooth5(&raw);
            if k + 1 < levels {
                raw = imaging::decimate2(&smoothed);
            }
            let (grad_x, grad_y) = imaging::gradient(&smoothed)?;
            out.push(FlowLevel {
                image: smoothed,
                grad_x,
                grad_y,
            });
        }
        Ok(Self { levels: out })
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_image(&self, k: usize) -> &ImageF {
        &self.levels[k].image
    }
}

#[inline]
fn window_fits(cx: f64, cy: f64, width: usize, height: usize, half: f64) -> bool {
    cx - half >= 0.0
        && cy - half >= 0.0
        && cx + half <= (width - 1) as f64
        && cy + half <= (height - 1) as f64
}

/// Fills `out` (side x side, row-major) with bilinear samples of the window
/// centered at `(cx, cy)`. All samples share one fractional offset, so the
/// interpolation weights are hoisted out of the loop. The window must fit
/// inside the image.
fn fill_window(image: &ImageF, cx: f64, cy: f64, side: usize, out: &mut [f64]) {
    let half = (side / 2) as f64;
    let w = image.width();
    let px = image.pixels();
    let x_origin = cx - half;
    let y_origin = cy - half;
    let base_x = x_origin.floor();
    let base_y = y_origin.floor();
    let fx = (x_origin - base_x) as f32;
    let fy = (y_origin - base_y) as f32;
    let base_x = base_x as usize;
    let base_y = base_y as usize;
    let x_next = usize::from(fx > 0.0);
    let y_next = usize::from(fy > 0.0);
    for dy in 0..side {
        let y0 = base_y + dy;
        let row0 = &px[y0 * w..y0 * w + w];
        let row1 = &px[(y0 + y_next) * w..(y0 + y_next) * w + w];
        let dst = &mut out[dy * side..(dy + 1) * side];
        for (dx, sample) in dst.iter_mut().enumerate() {
            let x0 = base_x + dx;
            let p00 = row0[x0];
            let p10 = row0[x0 + x_next];
            let p01 = row1[x0];
            let p11 = row1[x0 + x_next];
            let top = p00 + (p10 - p00) * fx;
            let bottom = p01 + (p11 - p01) * fx;
            *sample = (top + (bottom - top) * fy) as f64;
        }
    }
}

/// Tracks `points` from `prev` to `next`. Results are returned in input
/// order; every point gets a result, failures are reported through
/// [`FlowStatus`] rather than errors.
pub fn lk_track(
    prev: &FlowPyramid,
    next: &FlowPyramid,
    points: &[(f64, f64)],
    params: &LkParams,
) -> Result<Vec<FlowResult>, FlowError> {
    params.validate()?;
    let available = prev.level_count().min(next.level_count());
    if available < params.levels {
        return Err(FlowError::NotEnoughLevels {
            available,
            required: params.levels,
        });
    }
    for (k, (p, n)) in prev.levels.iter().zip(next.levels.iter()).enumerate() {
        if p.image.width() != n.image.width() || p.image.height() != n.image.height() {
            return Err(FlowError::DimensionMismatch {
                level: k,
                prev_w: p.image.width(),
                prev_h: p.image.height(),
                next_w: n.image.width(),
                next_h: n.image.height(),
            });
        }
    }

    let mut scratch = Scratch::new(params.window_half);
    Ok(points
        .iter()
        .map(|&p| track_point(prev, next, p, params, &mut scratch))
        .collect())
}

/// Per-call window buffers, reused across points.
struct Scratch {
    intensity: Vec<f64>,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
    moved: Vec<f64>,
}

impl Scratch {
    fn new(window_half: usize) -> Self {
        let n = (2 * window_half + 1).pow(2);
        Self {
            intensity: vec![0.0; n],
            grad_x: vec![0.0; n],
            grad_y: vec![0.0; n],
            moved: vec![0.0; n],
        }
    }
}

fn track_point(
    prev: &FlowPyramid,
    next: &FlowPyramid,
    point: (f64, f64),
    params: &LkParams,
    scratch: &mut Scratch,
) -> FlowResult {
    let half = params.window_half as f64;
    let side = 2 * params.window_half + 1;
    let area = (side * side) as f64;
    let eps2 = params.epsilon * params.epsilon;

    let mut g = (0.0f64, 0.0f64);
    for level in (0..params.levels).rev() {
        let pl = &prev.levels[level];
        let nl = &next.levels[level];
        let (w, h) = (pl.image.width(), pl.image.height());
        let scale = (1u32 << level) as f64;
        let u = (point.0 / scale, point.1 / scale);

        if !window_fits(u.0, u.1, w, h, half) {
            if level == 0 {
                return FlowResult::lost(FlowStatus::LostOutOfBounds);
            }
            // The window does not fit at this coarse level; skip it and let
            // the finer levels do the work from the scaled estimate.
            g = (g.0 * 2.0, g.1 * 2.0);
            continue;
        }

        // Structure tensor and cached window samples of the previous frame.
        fill_window(&pl.image, u.0, u.1, side, &mut scratch.intensity);
        fill_window(&pl.grad_x, u.0, u.1, side, &mut scratch.grad_x);
        fill_window(&pl.grad_y, u.0, u.1, side, &mut scratch.grad_y);
        let (mut gxx, mut gxy, mut gyy) = (0.0f64, 0.0f64, 0.0f64);
        for (ix, iy) in scratch.grad_x.iter().zip(&scratch.grad_y) {
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
        }
        let trace = gxx + gyy;
        let det = gxx * gyy - gxy * gxy;
        let lambda_min = 0.5 * (trace - ((gxx - gyy).powi(2) + 4.0 * gxy * gxy).sqrt());
        if lambda_min / area < params.min_eigen || det <= f64::MIN_POSITIVE {
            return FlowResult::lost(FlowStatus::LostSingular);
        }

        let mut nu = (0.0f64, 0.0f64);
        for _ in 0..params.max_iters {
            let cx = u.0 + g.0 + nu.0;
            let cy = u.1 + g.1 + nu.1;
            if !window_fits(cx, cy, w, h, half) {
                if level == 0 {
                    return FlowResult::lost(FlowStatus::LostOutOfBounds);
                }
                break;
            }
            fill_window(&nl.image, cx, cy, side, &mut scratch.moved);
            let (mut bx, mut by) = (0.0f64, 0.0f64);
            for k in 0..scratch.moved.len() {
                let diff = scratch.intensity[k] - scratch.moved[k];
                bx += diff * scratch.grad_x[k];
                by += diff * scratch.grad_y[k];
            }
            let eta = ((gyy * bx - gxy * by) / det, (gxx * by - gxy * bx) / det);
            nu = (nu.0 + eta.0, nu.1 + eta.1);
            if eta.0 * eta.0 + eta.1 * eta.1 < eps2 {
                break;
            }
        }
        g = if level > 0 {
            (2.0 * (g.0 + nu.0), 2.0 * (g.1 + nu.1))
        } else {
            (g.0 + nu.0, g.1 + nu.1)
        };
    }

    // Final verification on the full-resolution level. `scratch.intensity`
    // still holds the level-0 window of the previous frame.
    let pl0 = &prev.levels[0];
    let nl0 = &next.levels[0];
    let (w0, h0) = (pl0.image.width(), pl0.image.height());
    let (cx, cy) = (point.0 + g.0, point.1 + g.1);
    if !g.0.is_finite()
        || !g.1.is_finite()
        || !window_fits(cx, cy, w0, h0, half)
        || !window_fits(point.0, point.1, w0, h0, half)
    {
        return FlowResult::lost(FlowStatus::LostOutOfBounds);
    }
    fill_window(&nl0.image, cx, cy, side, &mut scratch.moved);
    let mut residual = 0.0f64;
    for k in 0..scratch.moved.len() {
        residual += (scratch.intensity[k] - scratch.moved[k]).abs();
    }
    residual /= area;
    if residual > params.max_residual {
        return FlowResult {
            dx: g.0,
            dy: g.1,
            status: FlowStatus::LostDiverged,
            residual,
        };
    }
    FlowResult {
        dx: g.0,
        dy: g.1,
        status: FlowStatus::Ok,
        residual,
    }
}
