//! Patch-addressable sensor front-end.
//!
//! The image is tiled into square patches (the last row/column is padded
//! when the image size is not a multiple of the patch size). A per-frame
//! [`ActivationMask`] decides which patches are digitized; only active
//! patches produce samples, and every active patch draws its noise from its
//! own counter-based substream so serial and parallel sensing agree bit for
//! bit.

mod bandwidth;
mod features;
mod noise;

pub use bandwidth::{record_bandwidth, BandwidthLedger, BandwidthSummary, FrameBandwidth, REFERENCE_FEATURE_DIM};
pub use features::{extract_features, PatchFeature, Projection};
pub use noise::{apply_gaussian_noise, apply_poisson_noise, NoiseModel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::RgbImage;
use crate::rng;

pub const DEFAULT_PATCH_SIZE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch_size: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("zero-area image {width}x{height}")));
        }
        if patch_size == 0 {
            return Err(Error::Config("patch size must be positive".into()));
        }
        Ok(Self {
            patch_size,
            rows: height.div_ceil(patch_size),
            cols: width.div_ceil(patch_size),
            width,
            height,
        })
    }

    /// Total patch count.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Pixel rectangle of a patch, including any padding past the image edge.
    pub fn patch_rect(&self, index: usize) -> BBox {
        let (r, c) = self.row_col(index);
        let ps = self.patch_size as f64;
        BBox::new(c as f64 * ps, r as f64 * ps, ps, ps)
    }

    /// Patches whose rectangle intersects `bbox` with positive area.
    pub fn patches_overlapping(&self, bbox: &BBox) -> Vec<usize> {
        match self.span(bbox) {
            Some((r0, r1, c0, c1)) => (r0..=r1)
                .flat_map(|r| (c0..=c1).map(move |c| (r, c)))
                .map(|(r, c)| self.index(r, c))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Inclusive (row0, row1, col0, col1) range of patches touched by `bbox`.
    fn span(&self, bbox: &BBox) -> Option<(usize, usize, usize, usize)> {
        let ps = self.patch_size as f64;
        let clipped = bbox.clip(self.cols as f64 * ps, self.rows as f64 * ps)?;
        let c0 = (clipped.x / ps).floor() as usize;
        let r0 = (clipped.y / ps).floor() as usize;
        let c1 = ((clipped.right() / ps).ceil() as usize).saturating_sub(1);
        let r1 = ((clipped.bottom() / ps).ceil() as usize).saturating_sub(1);
        Some((
            r0.min(self.rows - 1),
            r1.min(self.rows - 1),
            c0.min(self.cols - 1),
            c1.min(self.cols - 1),
        ))
    }

    /// Distance in patches to the nearest image border.
    pub fn border_distance(&self, index: usize) -> usize {
        let (r, c) = self.row_col(index);
        r.min(c).min(self.rows - 1 - r).min(self.cols - 1 - c)
    }

    /// 8-connected neighbours of `index`.
    pub fn neighbours(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.row_col(index);
        (-1i64..=1)
            .flat_map(move |dr| (-1i64..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr != 0 || dc != 0)
            .filter_map(move |(dr, dc)| {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                (nr >= 0 && nc >= 0 && (nr as usize) < self.rows && (nc as usize) < self.cols)
                    .then(|| self.index(nr as usize, nc as usize))
            })
    }

    pub fn occupancy(&self, boxes: impl IntoIterator<Item = BBox>) -> Vec<bool> {
        let mut occ = vec![false; self.len()];
        for b in boxes {
            for p in self.patches_overlapping(&b) {
                occ[p] = true;
            }
        }
        occ
    }
}

/// Front-end settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub patch_size: usize,
    pub pixel_format: PixelFormat,
    pub noise: NoiseModel,
    /// Feature values per active patch sent to the back-end.
    pub feature_dim: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            patch_size: DEFAULT_PATCH_SIZE,
            pixel_format: PixelFormat::Rgb,
            noise: NoiseModel::None,
            feature_dim: REFERENCE_FEATURE_DIM,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 {
            return Err(Error::Config("patch size must be positive".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        self.noise.validate()
    }

    pub fn samples_per_patch(&self) -> usize {
        self.pixel_format.samples_per_patch(self.patch_size)
    }
}

/// Per-frame on/off control word over the patch grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationMask {
    pub frame_index: usize,
    pub bits: Vec<bool>,
}

impl ActivationMask {
    pub fn full(frame_index: usize, n: usize) -> Self {
        Self {
            frame_index,
            bits: vec![true; n],
        }
    }

    pub fn empty(frame_index: usize, n: usize) -> Self {
        Self {
            frame_index,
            bits: vec![false; n],
        }
    }

    pub fn from_indices(frame_index: usize, n: usize, active: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(frame_index, n);
        for i in active {
            mask.bits[i] = true;
        }
        mask
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn active_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.active_count() as f64 / self.bits.len() as f64
        }
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Packed bitmap, least significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelFormat {
    #[default]
    Rgb,
    /// Single-sample RGGB mosaic.
    Bayer,
}

impl PixelFormat {
    pub fn samples_per_pixel(self) -> usize {
        match self {
            PixelFormat::Rgb => 3,
            PixelFormat::Bayer => 1,
        }
    }

    pub fn samples_per_patch(self, patch_size: usize) -> usize {
        patch_size * patch_size * self.samples_per_pixel()
    }

    /// RGGB channel kept at absolute pixel (x, y).
    #[inline]
    pub fn bayer_channel(x: usize, y: usize) -> usize {
        match (y & 1, x & 1) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        }
    }
}

impl std::str::FromStr for PixelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rgb" => Ok(PixelFormat::Rgb),
            "bayer" => Ok(PixelFormat::Bayer),
            other => Err(Error::Config(format!("unknown pixel format `{other}`"))),
        }
    }
}

impl std::fmt::Display for PixelFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PixelFormat::Rgb => "rgb",
            PixelFormat::Bayer => "bayer",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensedPatch {
    pub index: usize,
    pub samples: Vec<f64>,
}

/// Raw samples of the active patches of one frame, in ascending patch order.
#[derive(Clone, Debug, PartialEq)]
pub struct SensedFrame {
    pub frame_index: usize,
    pub format: PixelFormat,
    pub samples_per_patch: usize,
    pub patches: Vec<SensedPatch>,
}

impl SensedFrame {
    pub fn total_samples(&self) -> usize {
        self.patches.iter().map(|p| p.samples.len()).sum()
    }

    pub fn patch(&self, index: usize) -> Option<&SensedPatch> {
        self.patches
            .binary_search_by_key(&index, |p| p.index)
            .ok()
            .map(|i| &self.patches[i])
    }
}

/// Digitize the active patches of `image`.
///
/// Bayer mosaicking happens before noise; noise is applied per sample and
/// clamped to [0, 255]. Pixels in the padded margin read as zero. Patch `p`
/// draws its noise from `rng::substream(noise_seed, p)`.
pub fn sense(
    image: &RgbImage,
    grid: &PatchGrid,
    mask: &ActivationMask,
    format: PixelFormat,
    noise: &NoiseModel,
    noise_seed: u64,
) -> Result<SensedFrame> {
    if image.width != grid.width || image.height != grid.height {
        return Err(Error::Dimension {
            expected: grid.width * grid.height,
            actual: image.width * image.height,
        });
    }
    if mask.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            actual: mask.len(),
        });
    }
    noise.validate()?;
    let active: Vec<usize> = mask.active_indices().collect();
    let patches = active
        .par_iter()
        .map(|&index| {
            let mut samples = raw_patch_samples(image, grid, index, format);
            if !matches!(noise, NoiseModel::None) {
                let mut stream = rng::substream(noise_seed, index as u64);
                for s in samples.iter_mut() {
                    *s = noise.apply(*s, &mut stream);
                }
            }
            SensedPatch { index, samples }
        })
        .collect();
    Ok(SensedFrame {
        frame_index: mask.frame_index,
        format,
        samples_per_patch: format.samples_per_patch(grid.patch_size),
        patches,
    })
}

/// Noise-free samples of one patch: row-major pixels, RGB interleaved or one RGGB sample each.
pub fn raw_patch_samples(image: &RgbImage, grid: &PatchGrid, index: usize, format: PixelFormat) -> Vec<f64> {
    let ps = grid.patch_size;
    let (r, c) = grid.row_col(index);
    let (x0, y0) = (c * ps, r * ps);
    let mut out = Vec::with_capacity(format.samples_per_patch(ps));
    for y in y0..y0 + ps {
        for x in x0..x0 + ps {
            let inside = x < image.width && y < image.height;
            match format {
                PixelFormat::Rgb => {
                    if inside {
                        let px = image.pixel(x, y);
                        out.extend(px.iter().map(|&v| f64::from(v)));
                    } else {
                        out.extend([0.0; 3]);
                    }
                }
                PixelFormat::Bayer => {
                    let v = if inside {
                        f64::from(image.pixel(x, y)[PixelFormat::bayer_channel(x, y)])
                    } else {
                        0.0
                    };
                    out.push(v);
                }
            }
        }
    }
    out
}
