//! Readers and writers for the MOTChallenge text formats (detections, ground
//! truth, tracker results), per-detection PBM mask sidecars, and `key = value`
//! config files.
//!
//! Coordinates are kept exactly as read; no origin shift is applied anywhere,
//! so internal and external coordinates agree. Floats are written with
//! Rust's shortest round-trip formatting, making every parse/write cycle
//! lossless.

use crate::imaging::{load_pbm, BitMask, PnmError};
use crate::optflow::LkParams;
use crate::pipeline::Config;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotIoError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: box dimensions must be positive")]
    NegativeDimensions { line: usize },
    #[error("result rows must be sorted by (frame, id); row {index} is out of order")]
    UnsortedInput { index: usize },
    #[error("unknown config key \"{key}\"")]
    UnknownKey { key: String },
    #[error("invalid value for config key \"{key}\": {message}")]
    InvalidValue { key: String, message: String },
    #[error("malformed PBM mask {path}: {source}")]
    MalformedPbm { path: PathBuf, source: PnmError },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One row of a MOTChallenge `det.txt`: the id field is conventionally -1.
#[derive(Debug, Clone, PartialEq)]
pub struct DetFileRow {
    pub frame: u32,
    pub id: i64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

/// One row of a tracker result file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub frame: u32,
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub conf: f64,
}

/// One row of a MOTChallenge `gt.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GtRow {
    pub frame: u32,
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// The "consider this entry" flag (0 or 1).
    pub considered: bool,
    pub class_id: i64,
    pub visibility: f64,
}

fn split_line(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn parse_num<T: std::str::FromStr>(
    field: &str,
    name: &str,
    line: usize,
) -> Result<T, MotIoError> {
    field.parse().map_err(|_| MotIoError::ParseError {
        line,
        message: format!("cannot parse {name} from \"{field}\""),
    })
}

fn parse_finite(field: &str, name: &str, line: usize) -> Result<f64, MotIoError> {
    let v: f64 = parse_num(field, name, line)?;
    if !v.is_finite() {
        return Err(MotIoError::ParseError {
            line,
            message: format!("{name} must be finite, got \"{field}\""),
        });
    }
    Ok(v)
}

/// Render a float the way the MOT files carry it: shortest representation
/// that parses back to the identical value.
fn fmt_float(v: f64) -> String {
    format!("{v}")
}

/// Parses a detection file into per-frame row lists, preserving row order
/// within each frame. No score filtering happens here.
pub fn parse_det(text: &str) -> Result<BTreeMap<u32, Vec<DetFileRow>>, MotIoError> {
    let mut out: BTreeMap<u32, Vec<DetFileRow>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 10 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: format!("expected 10 comma-separated fields, got {}", fields.len()),
            });
        }
        let frame: u32 = parse_num(fields[0], "frame", line_no)?;
        if frame < 1 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: "frame numbers are 1-based".into(),
            });
        }
        let row = DetFileRow {
            frame,
            id: parse_num(fields[1], "id", line_no)?,
            x: parse_finite(fields[2], "x", line_no)?,
            y: parse_finite(fields[3], "y", line_no)?,
            w: parse_finite(fields[4], "w", line_no)?,
            h: parse_finite(fields[5], "h", line_no)?,
            score: parse_finite(fields[6], "score", line_no)?,
        };
        if row.w <= 0.0 || row.h <= 0.0 {
            return Err(MotIoError::NegativeDimensions { line: line_no });
        }
        out.entry(frame).or_default().push(row);
    }
    Ok(out)
}

/// Serializes detection rows in file order.
pub fn write_det(rows: &[DetFileRow]) -> String {
    let mut out = String::new();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},-1,-1,-1",
            r.frame,
            r.id,
            fmt_float(r.x),
            fmt_float(r.y),
            fmt_float(r.w),
            fmt_float(r.h),
            fmt_float(r.score),
        )
        .unwrap();
    }
    out
}

/// Parses a ground-truth file into per-frame row lists.
pub fn parse_gt(text: &str) -> Result<BTreeMap<u32, Vec<GtRow>>, MotIoError> {
    let mut out: BTreeMap<u32, Vec<GtRow>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 9 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: format!("expected 9 comma-separated fields, got {}", fields.len()),
            });
        }
        let frame: u32 = parse_num(fields[0], "frame", line_no)?;
        let id: u64 = parse_num(fields[1], "id", line_no)?;
        if frame < 1 || id < 1 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: "frame and id are 1-based".into(),
            });
        }
        let considered = match fields[6] {
            "0" => false,
            "1" => true,
            other => {
                return Err(MotIoError::ParseError {
                    line: line_no,
                    message: format!("considered flag must be 0 or 1, got \"{other}\""),
                })
            }
        };
        let row = GtRow {
            frame,
            id,
            x: parse_finite(fields[2], "x", line_no)?,
            y: parse_finite(fields[3], "y", line_no)?,
            w: parse_finite(fields[4], "w", line_no)?,
            h: parse_finite(fields[5], "h", line_no)?,
            considered,
            class_id: parse_num(fields[7], "class", line_no)?,
            visibility: parse_finite(fields[8], "visibility", line_no)?,
        };
        if row.w <= 0.0 || row.h <= 0.0 {
            return Err(MotIoError::NegativeDimensions { line: line_no });
        }
        out.entry(frame).or_default().push(row);
    }
    Ok(out)
}

/// Serializes ground-truth rows in file order.
pub fn write_gt(rows: &[GtRow]) -> String {
    let mut out = String::new();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.frame,
            r.id,
            fmt_float(r.x),
            fmt_float(r.y),
            fmt_float(r.w),
            fmt_float(r.h),
            u8::from(r.considered),
            r.class_id,
            fmt_float(r.visibility),
        )
        .unwrap();
    }
    out
}

/// Parses a tracker result file into per-frame row lists.
pub fn parse_results(text: &str) -> Result<BTreeMap<u32, Vec<ResultRow>>, MotIoError> {
    let mut out: BTreeMap<u32, Vec<ResultRow>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 10 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: format!("expected 10 comma-separated fields, got {}", fields.len()),
            });
        }
        let frame: u32 = parse_num(fields[0], "frame", line_no)?;
        let id: u64 = parse_num(fields[1], "id", line_no)?;
        if frame < 1 || id < 1 {
            return Err(MotIoError::ParseError {
                line: line_no,
                message: "frame and id are 1-based".into(),
            });
        }
        let row = ResultRow {
            frame,
            id,
            x: parse_finite(fields[2], "x", line_no)?,
            y: parse_finite(fields[3], "y", line_no)?,
            w: parse_finite(fields[4], "w", line_no)?,
            h: parse_finite(fields[5], "h", line_no)?,
            conf: parse_finite(fields[6], "conf", line_no)?,
        };
        if row.w <= 0.0 || row.h <= 0.0 {
            return Err(MotIoError::NegativeDimensions { line: line_no });
        }
        out.entry(frame).or_default().push(row);
    }
    Ok(out)
}

/// Serializes result rows, which must already be sorted by `(frame, id)`.
pub fn write_results(rows: &[ResultRow]) -> Result<String, MotIoError> {
    for (i, pair) in rows.windows(2).enumerate() {
        if (pair[1].frame, pair[1].id) < (pair[0].frame, pair[0].id) {
            return Err(MotIoError::UnsortedInput { index: i + 1 });
        }
    }
    let mut out = String::new();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},-1,-1,-1",
            r.frame,
            r.id,
            fmt_float(r.x),
            fmt_float(r.y),
            fmt_float(r.w),
            fmt_float(r.h),
            fmt_float(r.conf),
        )
        .unwrap();
    }
    Ok(out)
}

/// Frame image file name: frame number zero-padded to 6 digits.
pub fn frame_filename(frame: u32) -> String {
    format!("{frame:06}.pgm")
}

/// Mask sidecar file name: frame zero-padded to 6, detection index (its
/// 0-based position in that frame's detection list) zero-padded to 3.
pub fn mask_filename(frame: u32, det_index: usize) -> String {
    format!("{frame:06}_{det_index:03}.pbm")
}

/// Loads the mask sidecar for one detection. A missing file simply means no
/// mask; a present-but-invalid file is an error.
pub fn load_masks(
    dir: &Path,
    frame: u32,
    det_index: usize,
) -> Result<Option<BitMask>, MotIoError> {
    let path = dir.join(mask_filename(frame, det_index));
    let bytes = match std::fs::read(&path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(MotIoError::Io { path, source: e }),
    };
    load_pbm(&bytes)
        .map(Some)
        .map_err(|source| MotIoError::MalformedPbm { path, source })
}

fn set_key<T: std::str::FromStr>(
    target: &mut T,
    key: &str,
    value: &str,
) -> Result<(), MotIoError> {
    *target = value.parse().map_err(|_| MotIoError::InvalidValue {
        key: key.to_string(),
        message: format!("cannot parse \"{value}\""),
    })?;
    Ok(())
}

fn set_bool(target: &mut bool, key: &str, value: &str) -> Result<(), MotIoError> {
    *target = match value {
        "true" | "1" => true,
        "false" | "0" => false,
        _ => {
            return Err(MotIoError::InvalidValue {
                key: key.to_string(),
                message: format!("expected true/false/1/0, got \"{value}\""),
            })
        }
    };
    Ok(())
}

/// Parses a `key = value` config file. Unknown keys are rejected; keys left
/// out keep the published defaults. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Config, MotIoError> {
    let mut config = Config::default();
    let mut lk = LkParams::default();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(MotIoError::InvalidValue {
                key: line.to_string(),
                message: "expected \"key = value\"".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "L" => set_key(&mut config.detection_interval, key, value)?,
            "M" => set_key(&mut config.max_miss_frames, key, value)?,
            "Q" => set_key(&mut config.max_points, key, value)?,
            "R" => set_key(&mut config.min_points, key, value)?,
            "epsilon" => set_key(&mut config.association_gate, key, value)?,
            "tau_var" => set_key(&mut config.variance_threshold, key, value)?,
            "score_thresh" => set_key(&mut config.score_threshold, key, value)?,
            "head_frac" => set_key(&mut config.head_fraction, key, value)?,
            "erosion_iters" => set_key(&mut config.erosion_iters, key, value)?,
            "seed" => set_key(&mut config.seed, key, value)?,
            "enable_segmentation" => set_bool(&mut config.enable_segmentation, key, value)?,
            "enable_continuation" => set_bool(&mut config.enable_continuation, key, value)?,
            "enable_termination" => set_bool(&mut config.enable_termination, key, value)?,
            "lk_window_half" => set_key(&mut lk.window_half, key, value)?,
            "lk_levels" => set_key(&mut lk.levels, key, value)?,
            "lk_max_iters" => set_key(&mut lk.max_iters, key, value)?,
            "lk_epsilon" => set_key(&mut lk.epsilon, key, value)?,
            "lk_min_eigen" => set_key(&mut lk.min_eigen, key, value)?,
            "lk_max_residual" => set_key(&mut lk.max_residual, key, value)?,
            _ => {
                return Err(MotIoError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
    }
    config.lk = lk;
    config.validate().map_err(|message| {
        let key = message
            .split_whitespace()
            .next()
            .unwrap_or("config")
            .to_string();
        MotIoError::InvalidValue { key, message }
    })?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::write_pbm;
    use proptest::prelude::*;

    #[test]
    fn det_row_parses_per_the_format() {
        let parsed = parse_det("1,-1,10,20,30,60,0.9,-1,-1,-1\n").unwrap();
        assert_eq!(parsed.len(), 1);
        let row = &parsed[&1][0];
        assert_eq!((row.x, row.y, row.w, row.h), (10.0, 20.0, 30.0, 60.0));
        assert_eq!(row.score, 0.9);
        assert_eq!(row.id, -1);
    }

    #[test]
    fn det_preserves_in_frame_order_and_groups_frames() {
        let text = "2,-1,1,1,5,5,0.5,-1,-1,-1\n1,-1,9,9,5,5,0.1,-1,-1,-1\n2,-1,2,2,5,5,0.8,-1,-1,-1\n";
        let parsed = parse_det(text).unwrap();
        assert_eq!(parsed[&2][0].x, 1.0);
        assert_eq!(parsed[&2][1].x, 2.0);
        assert_eq!(parsed[&1][0].x, 9.0);
    }

    #[test]
    fn empty_det_file_is_an_empty_map() {
        assert!(parse_det("").unwrap().is_empty());
        assert!(parse_det("\n\n").unwrap().is_empty());
    }

    #[test]
    fn short_det_line_names_its_line() {
        match parse_det("1,-1,3,4,5\n") {
            Err(MotIoError::ParseError { line: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_det("1,-1,10,20,30,60,0.9,-1,-1,-1\nbogus,line\n") {
            Err(MotIoError::ParseError { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_extent_rejected() {
        assert!(matches!(
            parse_det("1,-1,10,20,0,60,0.9,-1,-1,-1\n"),
            Err(MotIoError::NegativeDimensions { line: 1 })
        ));
        assert!(matches!(
            parse_det("1,-1,10,20,30,-5,0.9,-1,-1,-1\n"),
            Err(MotIoError::NegativeDimensions { line: 1 })
        ));
    }

    #[test]
    fn result_row_renders_in_mot_order() {
        let rows = vec![ResultRow {
            frame: 1,
            id: 3,
            x: 10.0,
            y: 20.0,
            w: 30.0,
            h: 60.0,
            conf: 1.0,
        }];
        assert_eq!(write_results(&rows).unwrap(), "1,3,10,20,30,60,1,-1,-1,-1\n");
        assert_eq!(write_results(&[]).unwrap(), "");
    }

    #[test]
    fn unsorted_results_rejected() {
        let rows = vec![
            ResultRow { frame: 2, id: 1, x: 1.0, y: 1.0, w: 1.0, h: 1.0, conf: 1.0 },
            ResultRow { frame: 1, id: 1, x: 1.0, y: 1.0, w: 1.0, h: 1.0, conf: 1.0 },
        ];
        assert!(matches!(
            write_results(&rows),
            Err(MotIoError::UnsortedInput { index: 1 })
        ));
    }

    #[test]
    fn gt_round_trips() {
        let rows = vec![GtRow {
            frame: 4,
            id: 9,
            x: 1.25,
            y: 2.5,
            w: 3.0,
            h: 4.0,
            considered: true,
            class_id: 1,
            visibility: 0.75,
        }];
        let text = write_gt(&rows);
        assert_eq!(text, "4,9,1.25,2.5,3,4,1,1,0.75\n");
        let parsed = parse_gt(&text).unwrap();
        assert_eq!(parsed[&4], rows);
    }

    #[test]
    fn mask_sidecar_loading() {
        let dir = std::env::temp_dir().join(format!("sdof-mask-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mask = BitMask::filled(4, 4, true);
        std::fs::write(dir.join(mask_filename(1, 0)), write_pbm(&mask)).unwrap();
        std::fs::write(dir.join(mask_filename(1, 2)), b"P4\n9 9\n\x00").unwrap();

        assert_eq!(load_masks(&dir, 1, 0).unwrap(), Some(mask));
        assert_eq!(load_masks(&dir, 1, 1).unwrap(), None);
        assert!(matches!(
            load_masks(&dir, 1, 2),
            Err(MotIoError::MalformedPbm { .. })
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn config_defaults_match_published_values() {
        let config = parse_config("").unwrap();
        assert_eq!(config.detection_interval, 5);
        assert_eq!(config.max_miss_frames, 10);
        assert_eq!(config.max_points, 10);
        assert_eq!(config.min_points, 3);
        assert_eq!(config.association_gate, 0.7);
        assert_eq!(config.score_threshold, 0.2);
        assert_eq!(config.head_fraction, 0.3);
    }

    #[test]
    fn config_overrides_and_comments() {
        let config = parse_config("# comment\nL = 15\nenable_termination = false # inline\n").unwrap();
        assert_eq!(config.detection_interval, 15);
        assert!(!config.enable_termination);
        assert_eq!(config.max_miss_frames, 10);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            parse_config("frobnicate = 3\n"),
            Err(MotIoError::UnknownKey { .. })
        ));
        match parse_config("L = zero\n") {
            Err(MotIoError::InvalidValue { key, .. }) => assert_eq!(key, "L"),
            other => panic!("unexpected {other:?}"),
        }
        match parse_config("L = 0\n") {
            Err(MotIoError::InvalidValue { key, .. }) => assert_eq!(key, "L"),
            other => panic!("unexpected {other:?}"),
        }
    }

    prop_compose! {
        fn arb_result_row()(
            frame in 1u32..500,
            id in 1u64..100,
            x in -100i32..1000,
            y in -100i32..1000,
            w in 1i32..400,
            h in 1i32..400,
            conf_q in 0u8..=100,
        ) -> ResultRow {
            ResultRow {
                frame,
                id,
                x: x as f64 * 0.37,
                y: y as f64 * 0.61,
                w: w as f64 * 0.93,
                h: h as f64 * 1.07,
                conf: conf_q as f64 / 100.0,
            }
        }
    }

    proptest! {
        #[test]
        fn results_round_trip(mut rows in proptest::collection::vec(arb_result_row(), 0..40)) {
            rows.sort_by_key(|r| (r.frame, r.id));
            let text = write_results(&rows).unwrap();
            let parsed = parse_results(&text).unwrap();
            let flattened: Vec<ResultRow> = parsed.into_values().flatten().collect();
            prop_assert_eq!(flattened, rows);
        }
    }
}
