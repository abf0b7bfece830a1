//! Annotated frame rendering: inactive patches darkened, ground truth as
//! white outlines, tracks as id-coloured boxes with their numeric id.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::RgbImage;
use crate::rng::splitmix64;
use crate::scene::Renderer;
use crate::sensor::{ActivationMask, PatchGrid, PixelFormat, SensedFrame};

use super::sim::RunArtifacts;

const GT_COLOR: [u8; 3] = [255, 255, 255];

/// 3×5 bitmaps of the digits 0–9, one row per entry, MSB on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Bright colour derived from a track id.
pub fn track_color(id: u64) -> [u8; 3] {
    let h = splitmix64(id);
    [0, 16, 32].map(|shift| 96 + ((h >> shift) & 0x9f) as u8)
}

/// Scale inactive patches to 30% brightness.
pub fn darken_inactive(img: &mut RgbImage, grid: &PatchGrid, mask: &ActivationMask) {
    for y in 0..img.height {
        let row = y / grid.patch_size;
        for x in 0..img.width {
            let p = grid.index(row, x / grid.patch_size);
            if !mask.is_active(p) {
                let px = img.pixel(x, y).map(|v| (u16::from(v) * 3 / 10) as u8);
                img.set_pixel(x, y, px);
            }
        }
    }
}

/// One-pixel outline of the pixels whose centres lie in `bbox`.
pub fn draw_outline(img: &mut RgbImage, bbox: &BBox, rgb: [u8; 3]) {
    let Some(b) = bbox.clip(img.width as f64, img.height as f64) else {
        return;
    };
    let x0 = b.x.round() as usize;
    let y0 = b.y.round() as usize;
    let x1 = (b.right().round() as usize).clamp(x0 + 1, img.width) - 1;
    let y1 = (b.bottom().round() as usize).clamp(y0 + 1, img.height) - 1;
    if x0 >= img.width || y0 >= img.height {
        return;
    }
    for x in x0..=x1 {
        img.set_pixel(x, y0, rgb);
        img.set_pixel(x, y1, rgb);
    }
    for y in y0..=y1 {
        img.set_pixel(x0, y, rgb);
        img.set_pixel(x1, y, rgb);
    }
}

/// Decimal `value` with its top-left corner at (x, y); clipped at the borders.
pub fn draw_number(img: &mut RgbImage, x: usize, y: usize, value: u64, rgb: [u8; 3]) {
    for (k, ch) in value.to_string().bytes().enumerate() {
        let glyph = &DIGITS[usize::from(ch - b'0')];
        for (dy, bits) in glyph.iter().enumerate() {
            for dx in 0..3 {
                if bits & (0b100 >> dx) != 0 {
                    let (px, py) = (x + 4 * k + dx, y + dy);
                    if px < img.width && py < img.height {
                        img.set_pixel(px, py, rgb);
                    }
                }
            }
        }
    }
}

/// Annotated image of one frame of a run.
pub fn render_annotated(artifacts: &RunArtifacts, renderer: &Renderer<'_>, frame: usize) -> Result<RgbImage> {
    let mask = artifacts
        .masks
        .get(frame)
        .ok_or_else(|| Error::InvalidInput(format!("frame {frame} out of range")))?;
    let mut img = renderer.render(frame)?;
    darken_inactive(&mut img, &artifacts.scene.grid, mask);
    for o in &artifacts.scene.frames[frame].objects {
        draw_outline(&mut img, &o.bbox, GT_COLOR);
    }
    for t in &artifacts.tracks[frame] {
        let color = track_color(t.track_id);
        draw_outline(&mut img, &t.bbox, color);
        let (x, y) = (t.bbox.x.max(0.0) as usize, t.bbox.y.max(0.0) as usize);
        let label_y = if y >= 7 { y - 7 } else { y + 2 };
        draw_number(&mut img, x + 1, label_y, t.track_id, color);
    }
    Ok(img)
}

/// Write `frame_%06d.ppm` for every frame of the run.
pub fn render_run(artifacts: &RunArtifacts, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let renderer = Renderer::new(&artifacts.scene);
    let mut paths = Vec::with_capacity(artifacts.masks.len());
    for f in 0..artifacts.masks.len() {
        let path = out_dir.join(format!("frame_{f:06}.ppm"));
        render_annotated(artifacts, &renderer, f)?.write_ppm(&path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Image of what crossed the sensor: active patches as sampled, everything else black.
/// Bayer samples are shown in their own colour channel.
pub fn render_sensed(sensed: &SensedFrame, grid: &PatchGrid) -> RgbImage {
    let mut img = RgbImage::new(grid.width, grid.height);
    let ps = grid.patch_size;
    for patch in &sensed.patches {
        let (r, c) = grid.row_col(patch.index);
        for dy in 0..ps {
            for dx in 0..ps {
                let (x, y) = (c * ps + dx, r * ps + dy);
                if x >= grid.width || y >= grid.height {
                    continue;
                }
                let i = dy * ps + dx;
                let q = |v: f64| v.round().clamp(0.0, 255.0) as u8;
                let px = match sensed.format {
                    PixelFormat::Rgb => [
                        q(patch.samples[3 * i]),
                        q(patch.samples[3 * i + 1]),
                        q(patch.samples[3 * i + 2]),
                    ],
                    PixelFormat::Bayer => {
                        let mut px = [0; 3];
                        px[PixelFormat::bayer_channel(x, y)] = q(patch.samples[i]);
                        px
                    }
                };
                img.set_pixel(x, y, px);
            }
        }
    }
    img
}
