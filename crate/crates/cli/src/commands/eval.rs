use anyhow::{Context, Result};
use sdof_core::metrics::{evaluate, EvalOptions};
use sdof_core::mot_io::{parse_gt, parse_results};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Ground-truth file (MOT gt.txt format)
    #[arg(long)]
    gt: PathBuf,
    /// Tracker result file
    #[arg(long)]
    res: PathBuf,
    /// IoU gate for a hypothesis to cover a ground-truth box
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
}

pub fn run(args: Args) -> Result<()> {
    let gt_text = std::fs::read_to_string(&args.gt)
        .with_context(|| format!("cannot read ground truth {}", args.gt.display()))?;
    let gt = parse_gt(&gt_text)?;
    let res_text = std::fs::read_to_string(&args.res)
        .with_context(|| format!("cannot read results {}", args.res.display()))?;
    let res = parse_results(&res_text)?;
    let options = EvalOptions {
        iou_gate: args.iou,
        ..EvalOptions::default()
    };
    let report = evaluate(&gt, &res, &options)?;

    println!("MT    {}", report.mostly_tracked);
    println!("ML    {}", report.mostly_lost);
    println!("Rcll  {:.3}", report.recall);
    println!("Prcn  {:.3}", report.precision);
    println!("IDsw  {}", report.id_switches);
    println!("Frag  {}", report.fragmentations);
    println!("MOTA  {:.3}", report.mota);
    println!();
    println!("mt,ml,rcll,prcn,idsw,frag,mota");
    println!(
        "{},{},{:.3},{:.3},{},{},{:.3}",
        report.mostly_tracked,
        report.mostly_lost,
        report.recall,
        report.precision,
        report.id_switches,
        report.fragmentations,
        report.mota
    );
    Ok(())
}
