use anyhow::Result;
use sdof_core::synth::{generate_scene, SceneSpec};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Output directory (frames/, det.txt, gt.txt, masks/ are created inside)
    #[arg(long)]
    out: PathBuf,
    /// Number of objects
    #[arg(long)]
    objects: usize,
    /// Number of frames
    #[arg(long)]
    frames: u32,
    /// Probability of dropping an object's detection per frame
    #[arg(long = "fn", default_value_t = 0.0)]
    fn_rate: f64,
    /// Expected spurious detections per frame
    #[arg(long = "fp", default_value_t = 0.0)]
    fp_rate: f64,
    /// Generator seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn run(args: Args) -> Result<()> {
    let spec = SceneSpec {
        num_objects: args.objects,
        num_frames: args.frames,
        fn_rate: args.fn_rate,
        fp_rate: args.fp_rate,
        seed: args.seed,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec)?;
    scene.write_to_dir(&args.out)?;
    let det_count: usize = scene.detections.iter().map(Vec::len).sum();
    println!(
        "wrote {} frames ({}x{}), {} gt rows, {} detections to {}",
        scene.frames.len(),
        spec.width,
        spec.height,
        scene.gt_rows.len(),
        det_count,
        args.out.display()
    );
    Ok(())
}
