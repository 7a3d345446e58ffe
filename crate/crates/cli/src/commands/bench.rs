use anyhow::Result;
use sdof_core::pipeline::Config;
use sdof_core::synth::{bench, load_scene_dir, DetectorLatencyModel};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Scene directory (frames/, det.txt, gt.txt, optionally masks/)
    #[arg(long)]
    scene: PathBuf,
    /// Detection intervals to sweep, comma separated (e.g. 1,2,5,10,15)
    #[arg(long = "L", value_delimiter = ',', num_args = 1..)]
    intervals: Vec<u32>,
    /// Simulated detector cost per detection frame, milliseconds
    #[arg(long = "det-latency-ms", default_value_t = 100.0)]
    det_latency_ms: f64,
}

pub fn run(args: Args) -> Result<()> {
    let scene = load_scene_dir(&args.scene)?;
    let latency = DetectorLatencyModel::new(args.det_latency_ms)?;
    let rows = bench(&scene, &args.intervals, &latency, &Config::default())?;
    println!("L,mota,idsw,tracking_ms_per_frame,simulated_fps");
    for row in rows {
        println!(
            "{},{:.6},{},{:.3},{:.3}",
            row.interval, row.mota, row.id_switches, row.tracking_ms_per_frame, row.simulated_fps
        );
    }
    Ok(())
}
