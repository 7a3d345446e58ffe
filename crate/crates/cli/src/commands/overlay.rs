use crate::draw;
use anyhow::{bail, Context, Result};
use sdof_core::imaging::{load_pgm, write_ppm, RgbImage};
use sdof_core::mot_io::{frame_filename, parse_results};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Directory with 000001.pgm, 000002.pgm, ...
    #[arg(long)]
    frames: PathBuf,
    /// Result file whose boxes are drawn
    #[arg(long)]
    res: PathBuf,
    /// Output directory for NNNNNN.ppm overlays
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let res_text = std::fs::read_to_string(&args.res)
        .with_context(|| format!("cannot read results {}", args.res.display()))?;
    let res = parse_results(&res_text)?;
    let frame_count = super::discover_frame_count(&args.frames)?;
    if let Some((&beyond, _)) = res.iter().find(|(&f, _)| f > frame_count) {
        bail!(
            "results reference frame {beyond} but the sequence ends at {} ({} missing)",
            frame_count,
            args.frames.join(frame_filename(beyond)).display()
        );
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    for t in 1..=frame_count {
        let path = args.frames.join(frame_filename(t));
        let bytes = std::fs::read(&path)
            .with_context(|| format!("cannot read frame {}", path.display()))?;
        let gray = load_pgm(&bytes).with_context(|| path.display().to_string())?;
        let mut image = RgbImage::from_gray(&gray);
        if let Some(rows) = res.get(&t) {
            for row in rows {
                let color = draw::color_for_id(row.id);
                draw::draw_rect(&mut image, row.x, row.y, row.w, row.h, color);
                draw::draw_number(
                    &mut image,
                    row.id,
                    row.x.round() as i64 + 2,
                    row.y.round() as i64 + 2,
                    color,
                );
            }
        }
        let out_path = args.out.join(format!("{t:06}.ppm"));
        std::fs::write(&out_path, write_ppm(&image))
            .with_context(|| format!("cannot write {}", out_path.display()))?;
    }
    println!("wrote {frame_count} overlays to {}", args.out.display());
    Ok(())
}
