use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context;
use lenia_evo::engine::WorldState;
use lenia_evo::gateway::phenospace_rgb;

pub fn write_png(path: &Path, state: &WorldState, downsample: usize) -> anyhow::Result<()> {
    let (w, h, rgb) = phenospace_rgb(state, downsample)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&rgb)?;
    writer.finish()?;
    Ok(())
}
