//! Track-level geometry and state: boxes and IoU, interest-point sampling in
//! the head band of a box (optionally restricted to an eroded instance mask),
//! median-flow box propagation, Mahalanobis outlier rejection, and the
//! point-spread ratio used for tracking termination.

use crate::imaging::{erode, BitMask};
use crate::optflow::FlowResult;
use rand::Rng;
use thiserror::Error;

/// Gate confidence for the Mahalanobis outlier test used by [`propagate`]
/// and [`variance_ratio`].
pub const DEFAULT_OUTLIER_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("box dimensions must be positive, got {w}x{h}")]
    InvalidBox { w: f64, h: f64 },
    #[error("no eligible pixels to sample interest points from")]
    NoEligiblePixels,
    #[error("empty input")]
    EmptyInput,
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("point spread of the source frame is zero")]
    DegenerateVariance,
    #[error("every interest point was lost by the flow estimator")]
    AllPointsLost,
}

/// Axis-aligned box; `(x, y)` is the top-left corner, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, TrackError> {
        // NaN extents fail too, not only non-positive ones.
        if w.is_nan() || h.is_nan() || w <= 0.0 || h <= 0.0 {
            return Err(TrackError::InvalidBox { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = a.right().min(b.right()) - a.x.max(b.x);
    let iy = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.area() + b.area() - inter)
}

/// The top `frac` of a box, where heads tend to be.
pub fn head_band(bbox: &BBox, frac: f64) -> BBox {
    debug_assert!(frac > 0.0 && frac <= 1.0);
    BBox {
        x: bbox.x,
        y: bbox.y,
        w: bbox.w,
        h: bbox.h * frac,
    }
}

/// Subpixel image position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A detector output: box, confidence, and an optional instance mask cropped
/// to the box extent (dimensions equal the rounded box dimensions).
#[derive(Debug, Clone)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub mask: Option<BitMask>,
}

/// One tracked object: identity, current box, interest points, and lifecycle
/// counters.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub bbox: BBox,
    pub points: Vec<Point2>,
    /// Frames spent unmatched since the last successful detection match;
    /// 0 while matched.
    pub miss_frames: u32,
    /// Frames since creation.
    pub age: u32,
    /// Number of detection matches (the spawning detection counts).
    pub hits: u32,
}

/// Integer pixel columns covered by `[lo, lo+len)`, with the guarantee that
/// at least one pixel is returned even for sub-pixel extents.
fn raster_range(lo: f64, len: f64) -> (i64, i64) {
    let first = lo.ceil() as i64;
    let last = (lo + len).ceil() as i64 - 1;
    if last < first {
        (first, first)
    } else {
        (first, last)
    }
}

/// Samples up to `q` interest points uniformly without replacement from the
/// integer pixels of the head band, intersected with the eroded mask when one
/// is given. Points carry pixel-center coordinates. When fewer than `q`
/// pixels are eligible, all of them are returned.
pub fn sample_points(
    bbox: &BBox,
    mask: Option<&BitMask>,
    q: usize,
    head_frac: f64,
    erosion_iters: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Point2>, TrackError> {
    assert!(q >= 1, "q must be at least 1");
    let band = head_band(bbox, head_frac);
    let (x0, x1) = raster_range(band.x, band.w);
    let (y0, y1) = raster_range(band.y, band.h);

    let eroded = mask.map(|m| erode(m, erosion_iters));
    let mask_origin = (bbox.x.round() as i64, bbox.y.round() as i64);

    let mut eligible = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if let Some(m) = &eroded {
                let mx = x - mask_origin.0;
                let my = y - mask_origin.1;
                if mx < 0 || my < 0 || mx >= m.width() as i64 || my >= m.height() as i64 {
                    continue;
                }
                if !m.get(mx as usize, my as usize) {
                    continue;
                }
            }
            eligible.push(Point2::new(x as f64, y as f64));
        }
    }
    if eligible.is_empty() {
        return Err(TrackError::NoEligiblePixels);
    }
    if eligible.len() <= q {
        return Ok(eligible);
    }
    let picks = rand::seq::index::sample(rng, eligible.len(), q);
    Ok(picks.iter().map(|i| eligible[i]).collect())
}

/// Componentwise median; even-length inputs take the mean of the two middle
/// values per component.
pub fn median_shift(displacements: &[(f64, f64)]) -> Result<(f64, f64), TrackError> {
    if displacements.is_empty() {
        return Err(TrackError::EmptyInput);
    }
    let mut xs: Vec<f64> = displacements.iter().map(|d| d.0).collect();
    let mut ys: Vec<f64> = displacements.iter().map(|d| d.1).collect();
    Ok((median_of(&mut xs), median_of(&mut ys)))
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Chi-square quantile with 2 degrees of freedom (closed form).
pub fn chi_square2_quantile(confidence: f64) -> f64 {
    -2.0 * (1.0 - confidence).ln()
}

/// Survivor flags of the Mahalanobis gate: `None` when the test does not
/// apply (fewer than 4 points or near-singular covariance), in which case
/// every point is kept.
///
/// The covariance uses the `1/n` divisor; with the `1/(n-1)` divisor the
/// squared distance is bounded by `(n-1)^2/n`, which sits below the 0.99
/// chi-square gate for any realistic point count and would make the test
/// inert.
fn mahalanobis_survivors(points: &[Point2], threshold_d2: f64) -> Option<Vec<bool>> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let inv_n = 1.0 / n as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() * inv_n;
    let my = points.iter().map(|p| p.y).sum::<f64>() * inv_n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let dx = p.x - mx;
        let dy = p.y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    sxx *= inv_n;
    sxy *= inv_n;
    syy *= inv_n;
    let det = sxx * syy - sxy * sxy;
    if det.abs() < 1e-12 {
        return None;
    }
    Some(
        points
            .iter()
            .map(|p| {
                let dx = p.x - mx;
                let dy = p.y - my;
                let d2 = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;
                d2 <= threshold_d2
            })
            .collect(),
    )
}

/// Removes points whose squared Mahalanobis distance from the set mean
/// exceeds the chi-square(2) quantile at `confidence`. Returns the input
/// unchanged when the test does not apply.
pub fn hotelling_filter(points: &[Point2], confidence: f64) -> Vec<Point2> {
    match mahalanobis_survivors(points, chi_square2_quantile(confidence)) {
        None => points.to_vec(),
        Some(keep) => points
            .iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(*p))
            .collect(),
    }
}

/// Mean squared Euclidean distance to the centroid (the trace of the
/// population covariance).
pub fn variance(points: &[Point2]) -> Result<f64, TrackError> {
    if points.is_empty() {
        return Err(TrackError::EmptyInput);
    }
    let inv_n = 1.0 / points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() * inv_n;
    let my = points.iter().map(|p| p.y).sum::<f64>() * inv_n;
    Ok(points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        * inv_n)
}

/// Spread ratio of a point set across one flow step: variance of the
/// displaced set over variance of the source set.
///
/// The outlier gate runs on the displaced set and the surviving subset is
/// used on *both* sides of the ratio, so a rigid translation always yields
/// exactly 1 and scaling about the centroid by `s` yields exactly `s^2`,
/// whatever points the gate drops.
pub fn variance_ratio(
    prev_points: &[Point2],
    displacements: &[(f64, f64)],
) -> Result<f64, TrackError> {
    if prev_points.is_empty() {
        return Err(TrackError::EmptyInput);
    }
    if prev_points.len() != displacements.len() {
        return Err(TrackError::LengthMismatch {
            expected: prev_points.len(),
            got: displacements.len(),
        });
    }
    let displaced: Vec<Point2> = prev_points
        .iter()
        .zip(displacements)
        .map(|(p, d)| Point2::new(p.x + d.0, p.y + d.1))
        .collect();
    let keep = mahalanobis_survivors(&displaced, chi_square2_quantile(DEFAULT_OUTLIER_CONFIDENCE))
        .unwrap_or_else(|| vec![true; displaced.len()]);
    let prev_kept: Vec<Point2> = prev_points
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    let displaced_kept: Vec<Point2> = displaced
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    let prev_var = variance(&prev_kept)?;
    if prev_var < 1e-12 {
        return Err(TrackError::DegenerateVariance);
    }
    Ok(variance(&displaced_kept)? / prev_var)
}

/// Carries a track across one frame: drops points whose flow was lost,
/// displaces the rest, gates outliers, and shifts the box by the median of
/// the surviving displacements. Width, height, and identity never change.
pub fn propagate(track: &Track, flows: &[FlowResult]) -> Result<Track, TrackError> {
    if flows.len() != track.points.len() {
        return Err(TrackError::LengthMismatch {
            expected: track.points.len(),
            got: flows.len(),
        });
    }
    let mut displaced = Vec::with_capacity(track.points.len());
    let mut shifts = Vec::with_capacity(track.points.len());
    for (p, f) in track.points.iter().zip(flows) {
        if f.is_ok() {
            displaced.push(Point2::new(p.x + f.dx, p.y + f.dy));
            shifts.push((f.dx, f.dy));
        }
    }
    if displaced.is_empty() {
        return Err(TrackError::AllPointsLost);
    }
    let keep = mahalanobis_survivors(&displaced, chi_square2_quantile(DEFAULT_OUTLIER_CONFIDENCE))
        .unwrap_or_else(|| vec![true; displaced.len()]);
    let kept_points: Vec<Point2> = displaced
        .iter()
        .zip(&keep)
        .filter_map(|(p, &k)| k.then_some(*p))
        .collect();
    let kept_shifts: Vec<(f64, f64)> = shifts
        .iter()
        .zip(&keep)
        .filter_map(|(s, &k)| k.then_some(*s))
        .collect();
    let (mdx, mdy) = median_shift(&kept_shifts)?;
    Ok(Track {
        id: track.id,
        bbox: BBox {
            x: track.bbox.x + mdx,
            y: track.bbox.y + mdy,
            w: track.bbox.w,
            h: track.bbox.h,
        },
        points: kept_points,
        miss_frames: track.miss_frames,
        age: track.age,
        hits: track.hits,
    })
}

/// Why a track was retired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Fewer surviving interest points than the configured minimum.
    PointLoss,
    /// Point spread ratio above the configured threshold.
    VarianceSpread,
    /// Unmatched longer than the continuation limit.
    MissTimeout,
}

/// Thresholds consulted by [`should_terminate`].
#[derive(Debug, Clone, Copy)]
pub struct TerminationPolicy {
    /// Minimum interest points a live track must hold.
    pub min_points: usize,
    /// Whether the spread-ratio rule is active.
    pub variance_enabled: bool,
    /// Spread-ratio threshold.
    pub variance_threshold: f64,
    /// Maximum frames a track may stay unmatched.
    pub max_miss_frames: u32,
}

/// Decides whether a track should be retired, and for which reason. Rules are
/// checked in order: point loss, spread, miss timeout.
pub fn should_terminate(
    track: &Track,
    alpha: f64,
    policy: &TerminationPolicy,
) -> Option<TerminationReason> {
    if track.points.len() < policy.min_points {
        Some(TerminationReason::PointLoss)
    } else if policy.variance_enabled && alpha > policy.variance_threshold {
        Some(TerminationReason::VarianceSpread)
    } else if track.miss_frames > policy.max_miss_frames {
        Some(TerminationReason::MissTimeout)
    } else {
        None
    }
}
