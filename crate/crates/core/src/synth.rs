//! Deterministic synthetic scenes — textured rectangles drifting over a
//! quiet noise background, with exact ground truth, corruptible detections,
//! and footprint masks — plus the detection-interval benchmark harness.
//!
//! Objects live in disjoint horizontal lanes so trajectories never cross;
//! each one moves with a constant horizontal velocity plus small sinusoidal
//! wobble on both axes. The renderer paints objects in index order, so boxes
//! that do overlap occlude reproducibly (later index on top).

use crate::imaging::{write_pbm, write_pgm, BitMask, Image8};
use crate::metrics::{evaluate, EvalOptions, MetricsError};
use crate::mot_io::{
    frame_filename, mask_filename, parse_det, parse_gt, write_det, write_gt, DetFileRow, GtRow,
    MotIoError,
};
use crate::pipeline::{is_detection_frame, run, Config, FrameBundle, PipelineError};
use crate::track::{BBox, Detection};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("object {object} leaves the image on frame {frame}")]
    ObjectLeavesImage { object: usize, frame: u32 },
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    MotIo(#[from] MotIoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Parameters of a generated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub num_objects: usize,
    pub num_frames: u32,
    pub width: usize,
    pub height: usize,
    /// Horizontal speed magnitude range, px/frame.
    pub vel_min: f64,
    pub vel_max: f64,
    /// Amplitude of the object texture noise around each object's base gray.
    pub noise_amp: f64,
    /// Probability that an object's detection is dropped on a given frame.
    pub fn_rate: f64,
    /// Expected spurious detections per frame (Poisson rate).
    pub fp_rate: f64,
    /// Gaussian sigma applied to detected box coordinates, px.
    pub bbox_jitter_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            num_objects: 10,
            num_frames: 200,
            width: 640,
            height: 480,
            vel_min: 0.5,
            vel_max: 2.5,
            noise_amp: 60.0,
            fn_rate: 0.0,
            fp_rate: 0.0,
            bbox_jitter_sigma: 0.0,
            seed: 1,
        }
    }
}

impl SceneSpec {
    fn validate(&self) -> Result<(), SceneError> {
        if self.num_frames < 1 {
            return Err(SceneError::InvalidSpec("num_frames must be >= 1".into()));
        }
        if self.width < 64 || self.height < 64 {
            return Err(SceneError::InvalidSpec(
                "image must be at least 64x64".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.fn_rate) || !(0.0..=1.0).contains(&self.fp_rate) {
            return Err(SceneError::InvalidSpec(
                "fn_rate and fp_rate must be in [0, 1]".into(),
            ));
        }
        if self.bbox_jitter_sigma < 0.0 {
            return Err(SceneError::InvalidSpec("jitter sigma must be >= 0".into()));
        }
        if self.vel_min < 0.0 || self.vel_max < self.vel_min {
            return Err(SceneError::InvalidSpec(
                "velocity range must satisfy 0 <= min <= max".into(),
            ));
        }
        if self.num_objects > 0 {
            let lane = self.height as f64 / self.num_objects as f64;
            if lane < MIN_OBJ_H + 4.0 {
                return Err(SceneError::InvalidSpec(format!(
                    "{} objects leave lanes of {:.1} px, below the {} px minimum object height",
                    self.num_objects,
                    lane,
                    MIN_OBJ_H
                )));
            }
        }
        Ok(())
    }
}

const MIN_OBJ_H: f64 = 16.0;
const SIDE_MARGIN: f64 = 10.0;

/// One detection-latency model: a constant cost per detection frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorLatencyModel {
    pub latency_ms: f64,
}

impl DetectorLatencyModel {
    pub fn new(latency_ms: f64) -> Result<Self, SceneError> {
        if latency_ms < 0.0 {
            return Err(SceneError::InvalidSpec("latency must be >= 0".into()));
        }
        Ok(Self { latency_ms })
    }
}

/// A fully materialized scene: frames, per-frame detections (with masks),
/// and ground truth.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub frames: Vec<Image8>,
    /// Detections per frame, index 0 = frame 1. Order within a frame defines
    /// the mask sidecar index.
    pub detections: Vec<Vec<Detection>>,
    pub gt_rows: Vec<GtRow>,
}

struct ObjectPlan {
    w: usize,
    h: usize,
    texture: Vec<u8>,
    /// Integer top-left position per frame.
    positions: Vec<(i64, i64)>,
}

/// Generates a scene deterministically from its spec: identical specs yield
/// byte-identical artifacts.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SceneError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (width, height) = (spec.width, spec.height);
    let frames_n = spec.num_frames as usize;

    // Quiet static background; object texture carries the contrast.
    let bg_amp = (spec.noise_amp / 5.0).clamp(4.0, 30.0);
    let background = {
        let mut px = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v = 128.0 + rng.gen_range(-bg_amp..=bg_amp);
            px.push(v.clamp(0.0, 255.0) as u8);
        }
        Image8::new(width, height, px).expect("validated dims")
    };

    let mut plans = Vec::with_capacity(spec.num_objects);
    for index in 0..spec.num_objects {
        let lane_h = height as f64 / spec.num_objects as f64;
        let lane_top = index as f64 * lane_h;
        let max_h = (lane_h - 4.0).min(120.0);
        let obj_h = rng.gen_range(MIN_OBJ_H..=max_h.max(MIN_OBJ_H + 1.0)).round();
        let obj_w = rng
            .gen_range((obj_h * 0.5).max(12.0)..=(obj_h * 0.8).max(13.0))
            .round();

        // Vertical wobble stays inside the lane; horizontal motion is linear
        // plus wobble, capped so the box never touches the side margins.
        let y_slack = (lane_h - obj_h) / 2.0;
        let amp_y = rng.gen_range(0.0..=(y_slack - 1.0).clamp(0.0, 3.0));
        let omega_y = rng.gen_range(0.05..0.25);
        let phase_y = rng.gen_range(0.0..std::f64::consts::TAU);
        let y_base = lane_top + y_slack;

        let amp_x = rng.gen_range(0.0..=3.0);
        let omega_x = rng.gen_range(0.05..0.25);
        let phase_x = rng.gen_range(0.0..std::f64::consts::TAU);
        let x_lo = SIDE_MARGIN + amp_x;
        let x_hi = width as f64 - obj_w - SIDE_MARGIN - amp_x;
        if x_hi <= x_lo {
            return Err(SceneError::InvalidSpec(
                "image too narrow for the object sizes".into(),
            ));
        }
        let x0 = rng.gen_range(x_lo..x_hi);
        let span = spec.num_frames.saturating_sub(1).max(1) as f64;
        let headroom_right = (x_hi - x0) / span;
        let headroom_left = (x0 - x_lo) / span;
        let speed = rng.gen_range(spec.vel_min..=spec.vel_max);
        let rightward = rng.gen_bool(0.5);
        let vel = if rightward {
            speed.min(headroom_right)
        } else {
            -speed.min(headroom_left)
        };

        let base_gray = rng.gen_range(60.0..200.0);
        let texture: Vec<u8> = (0..(obj_w as usize * obj_h as usize))
            .map(|_| {
                (base_gray + rng.gen_range(-spec.noise_amp..=spec.noise_amp)).clamp(0.0, 255.0)
                    as u8
            })
            .collect();

        let mut positions = Vec::with_capacity(frames_n);
        for f in 0..frames_n {
            let tf = f as f64;
            let x = x0 + vel * tf + amp_x * (omega_x * tf + phase_x).sin();
            let y = y_base + amp_y * (omega_y * tf + phase_y).sin();
            let (xi, yi) = (x.round() as i64, y.round() as i64);
            if xi < 0
                || yi < 0
                || xi + obj_w as i64 > width as i64
                || yi + obj_h as i64 > height as i64
            {
                return Err(SceneError::ObjectLeavesImage {
                    object: index,
                    frame: f as u32 + 1,
                });
            }
            positions.push((xi, yi));
        }
        plans.push(ObjectPlan {
            w: obj_w as usize,
            h: obj_h as usize,
            texture,
            positions,
        });
    }

    let mut frames = Vec::with_capacity(frames_n);
    let mut gt_rows = Vec::new();
    let mut detections: Vec<Vec<Detection>> = Vec::with_capacity(frames_n);
    let jitter = if spec.bbox_jitter_sigma > 0.0 {
        Some(Normal::new(0.0, spec.bbox_jitter_sigma).expect("sigma validated"))
    } else {
        None
    };

    for f in 0..frames_n {
        let frame_no = f as u32 + 1;
        let mut image = background.clone();
        for plan in &plans {
            let (x, y) = plan.positions[f];
            for ty in 0..plan.h {
                let row = (y as usize + ty) * width + x as usize;
                let trow = ty * plan.w;
                image.pixels_mut()[row..row + plan.w]
                    .copy_from_slice(&plan.texture[trow..trow + plan.w]);
            }
        }
        frames.push(image);

        let mut frame_dets = Vec::new();
        for (index, plan) in plans.iter().enumerate() {
            let (x, y) = plan.positions[f];
            gt_rows.push(GtRow {
                frame: frame_no,
                id: index as u64 + 1,
                x: x as f64,
                y: y as f64,
                w: plan.w as f64,
                h: plan.h as f64,
                considered: true,
                class_id: 1,
                visibility: 1.0,
            });
            if spec.fn_rate > 0.0 && rng.gen_bool(spec.fn_rate) {
                continue;
            }
            let (mut dx, mut dy, mut dw, mut dh) =
                (x as f64, y as f64, plan.w as f64, plan.h as f64);
            if let Some(normal) = &jitter {
                dx += normal.sample(&mut rng);
                dy += normal.sample(&mut rng);
                dw = (dw + normal.sample(&mut rng)).max(4.0);
                dh = (dh + normal.sample(&mut rng)).max(4.0);
            }
            let mask = footprint_mask((dx, dy, dw, dh), (x, y), (plan.w, plan.h));
            frame_dets.push(Detection {
                bbox: BBox::new(dx, dy, dw, dh).expect("extent clamped positive"),
                score: rng.gen_range(0.5..=1.0),
                mask: Some(mask),
            });
        }
        if spec.fp_rate > 0.0 {
            let poisson = Poisson::new(spec.fp_rate).expect("rate validated");
            let count = poisson.sample(&mut rng) as usize;
            for _ in 0..count {
                let w = rng.gen_range(10.0..40.0f64).round();
                let h = rng.gen_range(16.0..80.0f64).round();
                let x = rng.gen_range(0.0..(width as f64 - w));
                let y = rng.gen_range(0.0..(height as f64 - h));
                frame_dets.push(Detection {
                    bbox: BBox::new(x.round(), y.round(), w, h).unwrap(),
                    score: rng.gen_range(0.3..=1.0),
                    mask: Some(BitMask::filled(w as usize, h as usize, true)),
                });
            }
        }
        detections.push(frame_dets);
    }

    Ok(Scene {
        spec: spec.clone(),
        frames,
        detections,
        gt_rows,
    })
}

/// Mask of the object's true rectangle footprint inside a (possibly
/// jittered) detection box given as `(x, y, w, h)`.
fn footprint_mask(det: (f64, f64, f64, f64), obj_origin: (i64, i64), obj_size: (usize, usize)) -> BitMask {
    let (dx, dy, dw, dh) = det;
    let (obj_x, obj_y) = obj_origin;
    let (obj_w, obj_h) = obj_size;
    let mw = dw.round().max(1.0) as usize;
    let mh = dh.round().max(1.0) as usize;
    let ox = dx.round() as i64;
    let oy = dy.round() as i64;
    let mut mask = BitMask::filled(mw, mh, false);
    for my in 0..mh {
        let py = oy + my as i64;
        if py < obj_y || py >= obj_y + obj_h as i64 {
            continue;
        }
        for mx in 0..mw {
            let px = ox + mx as i64;
            if px >= obj_x && px < obj_x + obj_w as i64 {
                mask.set(mx, my, true);
            }
        }
    }
    mask
}

impl Scene {
    /// Detection rows in file format (id -1), frame-major order.
    pub fn det_rows(&self) -> Vec<DetFileRow> {
        let mut rows = Vec::new();
        for (f, dets) in self.detections.iter().enumerate() {
            for d in dets {
                rows.push(DetFileRow {
                    frame: f as u32 + 1,
                    id: -1,
                    x: d.bbox.x,
                    y: d.bbox.y,
                    w: d.bbox.w,
                    h: d.bbox.h,
                    score: d.score,
                });
            }
        }
        rows
    }

    pub fn gt_by_frame(&self) -> BTreeMap<u32, Vec<GtRow>> {
        let mut map: BTreeMap<u32, Vec<GtRow>> = BTreeMap::new();
        for r in &self.gt_rows {
            map.entry(r.frame).or_default().push(r.clone());
        }
        map
    }

    /// Frame bundles for a run at detection interval `interval`; detections
    /// are attached only on detection frames.
    pub fn bundles(&self, interval: u32) -> Vec<FrameBundle> {
        self.frames
            .iter()
            .enumerate()
            .map(|(f, image)| {
                let index = f as u32 + 1;
                FrameBundle {
                    index,
                    image: image.clone(),
                    detections: is_detection_frame(index, interval)
                        .then(|| self.detections[f].clone()),
                }
            })
            .collect()
    }

    /// Writes `frames/`, `det.txt`, `gt.txt`, and `masks/` under `dir`,
    /// exactly the layout the CLI commands consume.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SceneError> {
        let io_err = |path: &Path, source: std::io::Error| SceneError::Io {
            path: path.to_path_buf(),
            source,
        };
        let frames_dir = dir.join("frames");
        let masks_dir = dir.join("masks");
        std::fs::create_dir_all(&frames_dir).map_err(|e| io_err(&frames_dir, e))?;
        std::fs::create_dir_all(&masks_dir).map_err(|e| io_err(&masks_dir, e))?;
        for (f, image) in self.frames.iter().enumerate() {
            let path = frames_dir.join(frame_filename(f as u32 + 1));
            std::fs::write(&path, write_pgm(image)).map_err(|e| io_err(&path, e))?;
        }
        for (f, dets) in self.detections.iter().enumerate() {
            for (j, det) in dets.iter().enumerate() {
                if let Some(mask) = &det.mask {
                    let path = masks_dir.join(mask_filename(f as u32 + 1, j));
                    std::fs::write(&path, write_pbm(mask)).map_err(|e| io_err(&path, e))?;
                }
            }
        }
        let det_path = dir.join("det.txt");
        std::fs::write(&det_path, write_det(&self.det_rows())).map_err(|e| io_err(&det_path, e))?;
        let gt_path = dir.join("gt.txt");
        std::fs::write(&gt_path, write_gt(&self.gt_rows)).map_err(|e| io_err(&gt_path, e))?;
        Ok(())
    }
}

/// Loads a scene directory written by [`Scene::write_to_dir`] (or any
/// directory following the same layout). The spec is not recoverable from
/// disk, so defaults are stored in its place.
pub fn load_scene_dir(dir: &Path) -> Result<Scene, SceneError> {
    use crate::imaging::load_pgm;
    use crate::mot_io::load_masks;

    let io_err = |path: &Path, source: std::io::Error| SceneError::Io {
        path: path.to_path_buf(),
        source,
    };
    let frames_dir = dir.join("frames");
    let mut frames = Vec::new();
    loop {
        let path = frames_dir.join(frame_filename(frames.len() as u32 + 1));
        match std::fs::read(&path) {
            Ok(bytes) => {
                let image = load_pgm(&bytes).map_err(|e| {
                    SceneError::InvalidSpec(format!("{}: {e}", path.display()))
                })?;
                frames.push(image);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => break,
            Err(e) => return Err(io_err(&path, e)),
        }
    }
    if frames.is_empty() {
        return Err(SceneError::InvalidSpec(format!(
            "no frames found under {}",
            frames_dir.display()
        )));
    }
    let det_path = dir.join("det.txt");
    let det_text = std::fs::read_to_string(&det_path).map_err(|e| io_err(&det_path, e))?;
    let det_map = parse_det(&det_text)?;
    let gt_path = dir.join("gt.txt");
    let gt_text = std::fs::read_to_string(&gt_path).map_err(|e| io_err(&gt_path, e))?;
    let gt_rows: Vec<GtRow> = parse_gt(&gt_text)?.into_values().flatten().collect();

    let masks_dir = dir.join("masks");
    let mut detections = Vec::with_capacity(frames.len());
    for f in 0..frames.len() {
        let frame_no = f as u32 + 1;
        let rows = det_map.get(&frame_no).cloned().unwrap_or_default();
        let mut dets = Vec::with_capacity(rows.len());
        for (j, row) in rows.iter().enumerate() {
            let mask = if masks_dir.is_dir() {
                load_masks(&masks_dir, frame_no, j)?
            } else {
                None
            };
            dets.push(Detection {
                bbox: BBox::new(row.x, row.y, row.w, row.h)
                    .expect("parser rejects non-positive extents"),
                score: row.score,
                mask,
            });
        }
        detections.push(dets);
    }
    Ok(Scene {
        spec: SceneSpec {
            num_frames: frames.len() as u32,
            width: frames[0].width(),
            height: frames[0].height(),
            ..SceneSpec::default()
        },
        frames,
        detections,
        gt_rows,
    })
}

/// One row of the detection-interval sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub interval: u32,
    pub mota: f64,
    pub id_switches: u64,
    pub tracking_ms_per_frame: f64,
    pub simulated_fps: f64,
}

/// Runs the full pipeline once per detection interval and scores each run
/// against the scene's ground truth. Configurations run sequentially so the
/// timing of one never pollutes another. The simulated throughput charges
/// `latency` on detection frames on top of the measured tracking time.
pub fn bench(
    scene: &Scene,
    intervals: &[u32],
    latency: &DetectorLatencyModel,
    base_config: &Config,
) -> Result<Vec<BenchRow>, SceneError> {
    let gt = scene.gt_by_frame();
    let mut rows = Vec::with_capacity(intervals.len());
    for &interval in intervals {
        let mut config = base_config.clone();
        config.detection_interval = interval;
        let (records, timing) = run(scene.bundles(interval), &config)?;
        let mut res: BTreeMap<u32, Vec<crate::mot_io::ResultRow>> = BTreeMap::new();
        for r in records {
            res.entry(r.frame).or_default().push(r);
        }
        let report = evaluate(&gt, &res, &EvalOptions::default())?;
        rows.push(BenchRow {
            interval,
            mota: report.mota,
            id_switches: report.id_switches,
            tracking_ms_per_frame: timing.mean_total_ms(),
            simulated_fps: timing.simulated_fps(latency.latency_ms),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mot_io::{write_det, write_gt};

    fn small_spec(seed: u64) -> SceneSpec {
        SceneSpec {
            num_objects: 4,
            num_frames: 40,
            width: 320,
            height: 240,
            seed,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn clean_scene_detections_equal_ground_truth() {
        let scene = generate_scene(&small_spec(3)).unwrap();
        assert_eq!(scene.frames.len(), 40);
        let det = scene.det_rows();
        assert_eq!(det.len(), scene.gt_rows.len());
        for (d, g) in det.iter().zip(&scene.gt_rows) {
            assert_eq!(d.frame, g.frame);
            assert_eq!((d.x, d.y, d.w, d.h), (g.x, g.y, g.w, g.h));
            assert_eq!(d.id, -1);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_scene(&small_spec(7)).unwrap();
        let b = generate_scene(&small_spec(7)).unwrap();
        assert_eq!(write_det(&a.det_rows()), write_det(&b.det_rows()));
        assert_eq!(write_gt(&a.gt_rows), write_gt(&b.gt_rows));
        assert_eq!(a.frames, b.frames);
        let c = generate_scene(&small_spec(8)).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn objects_stay_inside_the_image() {
        let scene = generate_scene(&small_spec(11)).unwrap();
        for g in &scene.gt_rows {
            assert!(g.x >= 0.0 && g.y >= 0.0);
            assert!(g.x + g.w <= 320.0);
            assert!(g.y + g.h <= 240.0);
        }
    }

    #[test]
    fn lanes_do_not_overlap() {
        let scene = generate_scene(&small_spec(13)).unwrap();
        let by_frame = scene.gt_by_frame();
        for rows in by_frame.values() {
            for a in rows {
                for b in rows {
                    if a.id != b.id {
                        let a_box = BBox::new(a.x, a.y, a.w, a.h).unwrap();
                        let b_box = BBox::new(b.x, b.y, b.w, b.h).unwrap();
                        assert_eq!(crate::track::iou(&a_box, &b_box), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn fn_rate_drops_the_expected_fraction() {
        let spec = SceneSpec {
            fn_rate: 0.3,
            num_objects: 10,
            num_frames: 200,
            seed: 5,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        let total = scene.gt_rows.len() as f64;
        let kept: f64 = scene.detections.iter().map(|d| d.len() as f64).sum();
        let dropped = (total - kept) / total;
        // Binomial over 2000 trials; 0.3 +- 3 sigma.
        assert!(
            (0.27..=0.33).contains(&dropped),
            "dropped fraction {dropped}"
        );
    }

    #[test]
    fn fp_rate_spawns_extra_detections() {
        let spec = SceneSpec {
            fp_rate: 0.5,
            num_frames: 100,
            num_objects: 2,
            seed: 6,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        let det_count: usize = scene.detections.iter().map(Vec::len).sum();
        let expected_fps = det_count as i64 - scene.gt_rows.len() as i64;
        assert!(
            (20..=90).contains(&expected_fps),
            "{expected_fps} spurious detections from rate 0.5 over 100 frames"
        );
    }

    #[test]
    fn masks_cover_the_true_footprint() {
        let spec = SceneSpec {
            bbox_jitter_sigma: 2.0,
            num_objects: 3,
            num_frames: 5,
            seed: 9,
            ..SceneSpec::default()
        };
        let scene = generate_scene(&spec).unwrap();
        for dets in &scene.detections {
            for det in dets {
                let mask = det.mask.as_ref().unwrap();
                assert_eq!(mask.width(), det.bbox.w.round() as usize);
                assert_eq!(mask.height(), det.bbox.h.round() as usize);
            }
        }
        // Without jitter the footprint fills the whole box.
        let clean = generate_scene(&small_spec(2)).unwrap();
        let det = &clean.detections[0][0];
        let mask = det.mask.as_ref().unwrap();
        assert_eq!(mask.count_set(), mask.width() * mask.height());
    }

    #[test]
    fn too_many_objects_rejected() {
        let spec = SceneSpec {
            num_objects: 40,
            height: 120,
            ..SceneSpec::default()
        };
        assert!(matches!(
            generate_scene(&spec),
            Err(SceneError::InvalidSpec(_))
        ));
    }

    #[test]
    fn scene_round_trips_through_a_directory() {
        let scene = generate_scene(&SceneSpec {
            num_objects: 2,
            num_frames: 6,
            width: 160,
            height: 120,
            seed: 21,
            ..SceneSpec::default()
        })
        .unwrap();
        let dir = std::env::temp_dir().join(format!("sdof-scene-test-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        scene.write_to_dir(&dir).unwrap();
        let loaded = load_scene_dir(&dir).unwrap();
        assert_eq!(loaded.frames, scene.frames);
        assert_eq!(loaded.gt_rows.len(), scene.gt_rows.len());
        assert_eq!(loaded.detections.len(), scene.detections.len());
        for (a, b) in loaded.detections.iter().flatten().zip(scene.detections.iter().flatten()) {
            assert_eq!(a.bbox, b.bbox);
            assert_eq!(a.mask, b.mask);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bench_simulated_fps_decreases_with_latency() {
        let scene = generate_scene(&SceneSpec {
            num_objects: 2,
            num_frames: 20,
            width: 160,
            height: 120,
            seed: 31,
            ..SceneSpec::default()
        })
        .unwrap();
        let config = Config::default();
        let fast = bench(
            &scene,
            &[5],
            &DetectorLatencyModel::new(10.0).unwrap(),
            &config,
        )
        .unwrap();
        let slow = bench(
            &scene,
            &[5],
            &DetectorLatencyModel::new(200.0).unwrap(),
            &config,
        )
        .unwrap();
        assert!(slow[0].simulated_fps < fast[0].simulated_fps);
    }
}
