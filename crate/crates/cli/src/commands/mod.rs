pub mod bench;
pub mod eval;
pub mod overlay;
pub mod synth;
pub mod track;

use anyhow::{anyhow, bail, Context, Result};
use sdof_core::mot_io::frame_filename;
use std::collections::BTreeSet;
use std::path::Path;

/// Finds the frame count of a `000001.pgm ...` sequence and verifies it has
/// no gaps. The error names the first missing file.
pub fn discover_frame_count(dir: &Path) -> Result<u32> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list frames directory {}", dir.display()))?;
    let mut indices = BTreeSet::new();
    for entry in entries {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".pgm") {
            if stem.len() == 6 && stem.bytes().all(|b| b.is_ascii_digit()) {
                indices.insert(stem.parse::<u32>()?);
            }
        }
    }
    let max = *indices
        .iter()
        .max()
        .ok_or_else(|| anyhow!("no frames matching NNNNNN.pgm under {}", dir.display()))?;
    if max == 0 {
        bail!("frame numbering starts at 000001.pgm");
    }
    for t in 1..=max {
        if !indices.contains(&t) {
            bail!("missing frame {}", dir.join(frame_filename(t)).display());
        }
    }
    Ok(max)
}
