use anyhow::{Context, Result};
use sdof_core::imaging::load_pgm;
use sdof_core::mot_io::{frame_filename, load_masks, parse_config, parse_det, write_results};
use sdof_core::pipeline::{is_detection_frame, try_run, Config, FrameBundle, PipelineError};
use sdof_core::track::{BBox, Detection};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Directory with 000001.pgm, 000002.pgm, ... (contiguous)
    #[arg(long)]
    frames: PathBuf,
    /// MOT-format detection file
    #[arg(long)]
    det: PathBuf,
    /// Directory with per-detection PBM masks (NNNNNN_MMM.pbm)
    #[arg(long)]
    masks: Option<PathBuf>,
    /// key = value config file; omitted keys use the defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output results file (MOT format)
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            parse_config(&text)?
        }
        None => Config::default(),
    };
    let det_text = std::fs::read_to_string(&args.det)
        .with_context(|| format!("cannot read detections {}", args.det.display()))?;
    let det_map = parse_det(&det_text)?;
    let frame_count = super::discover_frame_count(&args.frames)?;

    let frames_dir = args.frames.clone();
    let masks_dir = args.masks.clone();
    let interval = config.detection_interval;
    let bundles = (1..=frame_count).map(move |t| -> Result<FrameBundle, PipelineError> {
        let path = frames_dir.join(frame_filename(t));
        let bytes = std::fs::read(&path)
            .map_err(|e| PipelineError::FrameSource(format!("{}: {e}", path.display())))?;
        let image = load_pgm(&bytes)
            .map_err(|e| PipelineError::FrameSource(format!("{}: {e}", path.display())))?;
        let detections = if is_detection_frame(t, interval) {
            let rows = det_map.get(&t).cloned().unwrap_or_default();
            let mut dets = Vec::with_capacity(rows.len());
            for (j, row) in rows.iter().enumerate() {
                let mask = match &masks_dir {
                    Some(dir) => load_masks(dir, t, j)
                        .map_err(|e| PipelineError::FrameSource(e.to_string()))?,
                    None => None,
                };
                dets.push(Detection {
                    bbox: BBox::new(row.x, row.y, row.w, row.h)
                        .expect("detection parser rejects non-positive extents"),
                    score: row.score,
                    mask,
                });
            }
            Some(dets)
        } else {
            None
        };
        Ok(FrameBundle {
            index: t,
            image,
            detections,
        })
    });

    let (records, timing) = try_run(bundles, &config)?;
    let text = write_results(&records)?;
    std::fs::write(&args.out, text)
        .with_context(|| format!("cannot write results {}", args.out.display()))?;
    println!("{}", timing.summary());
    println!(
        "wrote {} records for {} frames to {}",
        records.len(),
        frame_count,
        args.out.display()
    );
    Ok(())
}
