//! The per-frame scheduler: flow propagation on every frame, detection
//! ingestion and association every `L`-th frame, track birth, continuation of
//! unmatched tracks, termination, ID issuance, and stage timing.

use crate::assoc::gated_match;
use crate::imaging::{build_pyramid, to_float, Image8, ImagingError};
use crate::mot_io::ResultRow;
use crate::optflow::{lk_track, FlowError, FlowPyramid, LkParams};
use crate::track::{
    propagate, sample_points, should_terminate, variance_ratio, BBox, Detection, Point2,
    TerminationPolicy, Track, TrackError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame index {got} does not follow {expected} (indices must increase by exactly 1)")]
    NonMonotonicFrameIndex { expected: u32, got: u32 },
    #[error("frame {frame} is a detection frame but carries no detection list")]
    MissingDetections { frame: u32 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("frame source: {0}")]
    FrameSource(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// All scalar knobs of the tracker, with the published defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Detection interval `L`: the detector output is consumed on frames
    /// where `(t - 1) % L == 0`.
    pub detection_interval: u32,
    /// Continuation limit `M`: an unmatched track survives while its miss
    /// counter stays at or below this many frames.
    pub max_miss_frames: u32,
    /// Maximum interest points per track (`Q`).
    pub max_points: usize,
    /// Minimum interest points a live track must keep (`R`).
    pub min_points: usize,
    /// Association gate on the `1 - IoU` cost.
    pub association_gate: f64,
    /// Point-spread ratio above which a track is terminated.
    pub variance_threshold: f64,
    /// Detection confidence floor applied at ingestion.
    pub score_threshold: f64,
    /// Fraction of the box height forming the head band.
    pub head_fraction: f64,
    /// Erosion iterations applied to instance masks before sampling.
    pub erosion_iters: usize,
    /// Lucas-Kanade parameters.
    pub lk: LkParams,
    /// Seed for interest-point sampling.
    pub seed: u64,
    /// Ablation switch S: restrict sampling to instance masks when present.
    pub enable_segmentation: bool,
    /// Ablation switch C: keep unmatched tracks alive up to `M` frames.
    pub enable_continuation: bool,
    /// Ablation switch T: terminate tracks whose points spread out.
    pub enable_termination: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            detection_interval: 5,
            max_miss_frames: 10,
            max_points: 10,
            min_points: 3,
            association_gate: 0.7,
            variance_threshold: 2.0,
            score_threshold: 0.2,
            head_fraction: 0.3,
            erosion_iters: 2,
            lk: LkParams::default(),
            seed: 0,
            enable_segmentation: true,
            enable_continuation: true,
            enable_termination: true,
        }
    }
}

impl Config {
    /// Validates the invariants; the returned message names the offending
    /// key as spelled in config files.
    pub fn validate(&self) -> Result<(), String> {
        if self.detection_interval < 1 {
            return Err("L must be >= 1".into());
        }
        if self.min_points < 1 {
            return Err("R must be >= 1".into());
        }
        if self.max_points < self.min_points {
            return Err("Q must be >= R".into());
        }
        if !(0.0..=1.0).contains(&self.association_gate) {
            return Err("epsilon must be in [0, 1]".into());
        }
        if self.variance_threshold.is_nan() || self.variance_threshold <= 0.0 {
            return Err("tau_var must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err("score_thresh must be in [0, 1]".into());
        }
        if !(self.head_fraction > 0.0 && self.head_fraction <= 1.0) {
            return Err("head_frac must be in (0, 1]".into());
        }
        self.lk
            .validate()
            .map_err(|e| format!("lk parameters: {e}"))?;
        Ok(())
    }

    fn termination_policy(&self) -> TerminationPolicy {
        TerminationPolicy {
            min_points: self.min_points,
            variance_enabled: self.enable_termination,
            variance_threshold: self.variance_threshold,
            max_miss_frames: self.max_miss_frames,
        }
    }
}

/// True on frames where the detector output is consumed; frame 1 always is.
pub fn is_detection_frame(t: u32, interval: u32) -> bool {
    debug_assert!(t >= 1 && interval >= 1);
    (t - 1).is_multiple_of(interval)
}

/// One frame of input: 1-based index, the image, and the detection list
/// (present exactly on detection frames).
#[derive(Debug, Clone)]
pub struct FrameBundle {
    pub index: u32,
    pub image: Image8,
    pub detections: Option<Vec<Detection>>,
}

/// Wall-clock stage timings collected by a run, one entry per frame.
#[derive(Debug, Clone, Default)]
pub struct TimingReport {
    pub flow_ms: Vec<f64>,
    pub association_ms: Vec<f64>,
    pub sampling_ms: Vec<f64>,
    pub total_ms: Vec<f64>,
    pub detection_frames: usize,
}

impl TimingReport {
    pub fn frames(&self) -> usize {
        self.total_ms.len()
    }

    fn mean(values: &[f64]) -> f64 {
        if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    }

    pub fn mean_flow_ms(&self) -> f64 {
        Self::mean(&self.flow_ms)
    }

    pub fn mean_association_ms(&self) -> f64 {
        Self::mean(&self.association_ms)
    }

    pub fn mean_sampling_ms(&self) -> f64 {
        Self::mean(&self.sampling_ms)
    }

    pub fn mean_total_ms(&self) -> f64 {
        Self::mean(&self.total_ms)
    }

    /// Tracking-only throughput (detector time excluded).
    pub fn mean_fps(&self) -> f64 {
        let ms = self.mean_total_ms();
        if ms <= 0.0 {
            f64::INFINITY
        } else {
            1000.0 / ms
        }
    }

    /// Throughput with a simulated detector that costs `latency_ms` on every
    /// detection frame.
    pub fn simulated_fps(&self, latency_ms: f64) -> f64 {
        if self.total_ms.is_empty() {
            return 0.0;
        }
        let det_share = self.detection_frames as f64 / self.total_ms.len() as f64;
        let ms = self.mean_total_ms() + latency_ms * det_share;
        if ms <= 0.0 {
            f64::INFINITY
        } else {
            1000.0 / ms
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "flow: {:.3} ms/frame\nassociation: {:.3} ms/frame\nsampling: {:.3} ms/frame\ntotal: {:.3} ms/frame ({:.1} fps tracking-only, {} frames, {} detection frames)",
            self.mean_flow_ms(),
            self.mean_association_ms(),
            self.mean_sampling_ms(),
            self.mean_total_ms(),
            self.mean_fps(),
            self.frames(),
            self.detection_frames,
        )
    }
}

/// Tracker state folded over a frame sequence. Owns the live track list, the
/// ID counter, the cached previous-frame pyramid, the sampling RNG, and the
/// timing accumulators.
pub struct Tracker {
    config: Config,
    tracks: Vec<Track>,
    next_id: u64,
    prev_pyramid: Option<FlowPyramid>,
    prev_index: Option<u32>,
    rng: ChaCha8Rng,
    timing: TimingReport,
}

impl Tracker {
    pub fn new(config: Config) -> Result<Self, PipelineError> {
        config.validate().map_err(PipelineError::InvalidConfig)?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            tracks: Vec::new(),
            next_id: 1,
            prev_pyramid: None,
            prev_index: None,
            rng,
            timing: TimingReport::default(),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn live_tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn timing(&self) -> &TimingReport {
        &self.timing
    }

    pub fn into_timing(self) -> TimingReport {
        self.timing
    }

    fn sample_for(&mut self, detection: &Detection) -> Vec<Point2> {
        let mask = if self.config.enable_segmentation {
            detection.mask.as_ref()
        } else {
            None
        };
        let attempt = sample_points(
            &detection.bbox,
            mask,
            self.config.max_points,
            self.config.head_fraction,
            self.config.erosion_iters,
            &mut self.rng,
        );
        match attempt {
            Ok(points) => points,
            // An over-eroded or empty mask falls back to the bare head band.
            Err(TrackError::NoEligiblePixels) => sample_points(
                &detection.bbox,
                None,
                self.config.max_points,
                self.config.head_fraction,
                self.config.erosion_iters,
                &mut self.rng,
            )
            .expect("maskless head band always rasterizes at least one pixel"),
            Err(e) => unreachable!("sampling cannot fail otherwise: {e}"),
        }
    }

    /// Advances the tracker by one frame and returns the records for every
    /// track alive at the end of it.
    pub fn step(&mut self, bundle: &FrameBundle) -> Result<Vec<ResultRow>, PipelineError> {
        let expected = match self.prev_index {
            None => 1,
            Some(p) => p + 1,
        };
        if bundle.index != expected {
            return Err(PipelineError::NonMonotonicFrameIndex {
                expected,
                got: bundle.index,
            });
        }
        let t = bundle.index;
        let step_start = Instant::now();
        let detection_frame = is_detection_frame(t, self.config.detection_interval);
        let policy = self.config.termination_policy();

        // Flow stage: build this frame's pyramid and carry every track from
        // t-1 to t. The pyramid is skipped when nothing can need it (no live
        // tracks and no spawns possible this frame).
        let flow_start = Instant::now();
        let current_pyramid = if !self.tracks.is_empty() || detection_frame {
            let pyr = build_pyramid(&to_float(&bundle.image), self.config.lk.levels)?;
            Some(FlowPyramid::new(pyr)?)
        } else {
            None
        };
        if t >= 2 && !self.tracks.is_empty() {
            let prev = self
                .prev_pyramid
                .as_ref()
                .expect("live tracks imply a cached previous pyramid");
            let current = current_pyramid.as_ref().unwrap();
            let mut survivors = Vec::with_capacity(self.tracks.len());
            for track in self.tracks.drain(..) {
                let positions: Vec<(f64, f64)> =
                    track.points.iter().map(|p| (p.x, p.y)).collect();
                let flows = lk_track(prev, current, &positions, &self.config.lk)?;

                let ok_points: Vec<Point2> = track
                    .points
                    .iter()
                    .zip(&flows)
                    .filter_map(|(p, f)| f.is_ok().then_some(*p))
                    .collect();
                let ok_shifts: Vec<(f64, f64)> = flows
                    .iter()
                    .filter(|f| f.is_ok())
                    .map(|f| (f.dx, f.dy))
                    .collect();

                let mut moved = match propagate(&track, &flows) {
                    Ok(moved) => moved,
                    Err(TrackError::AllPointsLost) => continue,
                    Err(e) => unreachable!("flows are aligned with points: {e}"),
                };
                // No spread evidence when the source variance degenerates.
                let alpha = variance_ratio(&ok_points, &ok_shifts).unwrap_or(1.0);

                moved.age += 1;
                if !detection_frame && moved.miss_frames > 0 {
                    moved.miss_frames += 1;
                }
                if should_terminate(&moved, alpha, &policy).is_none() {
                    survivors.push(moved);
                }
            }
            self.tracks = survivors;
        }
        let flow_ms = flow_start.elapsed().as_secs_f64() * 1000.0;

        // Association stage, detection frames only.
        let mut association_ms = 0.0;
        let mut sampling_ms = 0.0;
        if detection_frame {
            let supplied = bundle
                .detections
                .as_ref()
                .ok_or(PipelineError::MissingDetections { frame: t })?;
            let detections: Vec<&Detection> = supplied
                .iter()
                .filter(|d| d.score >= self.config.score_threshold)
                .collect();

            let assoc_start = Instant::now();
            let track_boxes: Vec<BBox> = self.tracks.iter().map(|tr| tr.bbox).collect();
            let det_boxes: Vec<BBox> = detections.iter().map(|d| d.bbox).collect();
            let assignment = gated_match(&track_boxes, &det_boxes, self.config.association_gate);
            association_ms = assoc_start.elapsed().as_secs_f64() * 1000.0;

            let sampling_start = Instant::now();
            for &(ti, dj) in &assignment.matches {
                let detection = detections[dj];
                let points = self.sample_for(detection);
                let track = &mut self.tracks[ti];
                track.bbox = detection.bbox;
                track.miss_frames = 0;
                track.hits += 1;
                track.points = points;
            }
            let mut drop_flags = vec![false; self.tracks.len()];
            for &ti in &assignment.unmatched_tracks {
                let track = &mut self.tracks[ti];
                track.miss_frames += 1;
                drop_flags[ti] = !self.config.enable_continuation
                    || track.miss_frames > self.config.max_miss_frames;
            }
            let mut keep = drop_flags.iter().map(|d| !d);
            self.tracks.retain(|_| keep.next().unwrap());

            for &dj in &assignment.unmatched_detections {
                let detection = detections[dj];
                let points = self.sample_for(detection);
                let track = Track {
                    id: self.next_id,
                    bbox: detection.bbox,
                    points,
                    miss_frames: 0,
                    age: 0,
                    hits: 1,
                };
                self.next_id += 1;
                self.tracks.push(track);
            }
            // A freshly sampled point set below the minimum cannot be tracked.
            self.tracks
                .retain(|tr| tr.points.len() >= self.config.min_points);
            sampling_ms = sampling_start.elapsed().as_secs_f64() * 1000.0;
        }

        if let Some(pyr) = current_pyramid {
            self.prev_pyramid = Some(pyr);
        }
        self.prev_index = Some(t);

        let mut records: Vec<ResultRow> = self
            .tracks
            .iter()
            .map(|tr| ResultRow {
                frame: t,
                id: tr.id,
                x: tr.bbox.x,
                y: tr.bbox.y,
                w: tr.bbox.w,
                h: tr.bbox.h,
                conf: 1.0,
            })
            .collect();
        records.sort_by_key(|r| r.id);

        self.timing.flow_ms.push(flow_ms);
        self.timing.association_ms.push(association_ms);
        self.timing.sampling_ms.push(sampling_ms);
        self.timing
            .total_ms
            .push(step_start.elapsed().as_secs_f64() * 1000.0);
        if detection_frame {
            self.timing.detection_frames += 1;
        }
        Ok(records)
    }
}

/// Folds [`Tracker::step`] over a fallible frame source.
pub fn try_run<I, E>(frames: I, config: &Config) -> Result<(Vec<ResultRow>, TimingReport), PipelineError>
where
    I: IntoIterator<Item = Result<FrameBundle, E>>,
    PipelineError: From<E>,
{
    let mut tracker = Tracker::new(config.clone())?;
    let mut records = Vec::new();
    let mut any = false;
    for bundle in frames {
        let bundle = bundle?;
        any = true;
        records.extend(tracker.step(&bundle)?);
    }
    if !any {
        return Err(PipelineError::EmptySequence);
    }
    Ok((records, tracker.into_timing()))
}

/// Folds [`Tracker::step`] over an in-memory frame sequence.
pub fn run<I>(frames: I, config: &Config) -> Result<(Vec<ResultRow>, TimingReport), PipelineError>
where
    I: IntoIterator<Item = FrameBundle>,
{
    try_run(
        frames.into_iter().map(Ok::<_, PipelineError>),
        config,
    )
}
