//! Synthetic scenes: moving rectangles over a textured background, with
//! per-frame ground truth (clipped boxes, visibility, occlusion, truncation
//! and patch occupancy).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{union_area_within, BBox};
use crate::image::RgbImage;
use crate::rng::{self, tag, SimRng};
use crate::sensor::PatchGrid;

/// Area thresholds separating small/medium/large objects.
pub const SMALL_AREA: f64 = 32.0 * 32.0;
pub const LARGE_AREA: f64 = 96.0 * 96.0;

/// Fraction of an object's box that must be covered by nearer objects to flag it occluded.
pub const OCCLUSION_THRESHOLD: f64 = 0.3;

const SPAWN_RETRIES: usize = 64;
const BACKGROUND_TAG: u64 = 0x4247_5445_5800_0000;
const BACKGROUND_CELL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn name(self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

/// Area rule: small below 32², large above 96², medium otherwise.
pub fn classify_size(w: f64, h: f64) -> Result<SizeClass> {
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::InvalidInput(format!("non-positive box size {w}x{h}")));
    }
    let area = w * h;
    Ok(if area < SMALL_AREA {
        SizeClass::Small
    } else if area > LARGE_AREA {
        SizeClass::Large
    } else {
        SizeClass::Medium
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpawnModel {
    /// Objects appear on a horizon line and move outward and down.
    Horizon,
    /// Objects enter across the image border.
    #[default]
    Periphery,
    /// Objects appear anywhere, moving in any direction.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    pub small: f64,
    pub medium: f64,
    pub large: f64,
}

impl Default for SizeDistribution {
    fn default() -> Self {
        Self {
            small: 0.3,
            medium: 0.5,
            large: 0.2,
        }
    }
}

impl SizeDistribution {
    fn sample(&self, rng: &mut SimRng) -> SizeClass {
        let u: f64 = rng.random();
        if u < self.small {
            SizeClass::Small
        } else if u < self.small + self.medium {
            SizeClass::Medium
        } else {
            SizeClass::Large
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub width_px: usize,
    pub height_px: usize,
    pub num_frames: usize,
    /// Total objects spawned over the scene.
    pub object_count: usize,
    pub spawn_model: SpawnModel,
    pub size_distribution: SizeDistribution,
    /// Speed range in px/frame, `[min, max]`.
    pub speed_range: [f64; 2],
    /// Per-frame displacement perturbation, uniform in `[-jitter_px, jitter_px]` per axis.
    pub jitter_px: f64,
    pub occlusion_enabled: bool,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width_px: 1280,
            height_px: 720,
            num_frames: 300,
            object_count: 40,
            spawn_model: SpawnModel::default(),
            size_distribution: SizeDistribution::default(),
            speed_range: [1.0, 6.0],
            jitter_px: 0.25,
            occlusion_enabled: true,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::Config(format!(
                "zero-area image {}x{}",
                self.width_px, self.height_px
            )));
        }
        if self.num_frames == 0 {
            return Err(Error::Config("num_frames must be positive".into()));
        }
        let [lo, hi] = self.speed_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("invalid speed range [{lo}, {hi}]")));
        }
        if !(self.jitter_px >= 0.0 && self.jitter_px.is_finite()) {
            return Err(Error::Config(format!("invalid jitter {}", self.jitter_px)));
        }
        let d = &self.size_distribution;
        let weights = [d.small, d.medium, d.large];
        if weights.iter().any(|w| !(*w >= 0.0)) || ((d.small + d.medium + d.large) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "size weights {weights:?} must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Ground truth of one object on one frame. `bbox` is clipped to the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectFrame {
    pub frame: usize,
    pub bbox: BBox,
    /// Visible area over the full (unclipped) box area.
    pub visibility: f64,
    /// Unoccluded fraction of the in-image part of the box.
    pub unoccluded: f64,
    pub occluded: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub object_id: u64,
    pub size_class: SizeClass,
    pub width: f64,
    pub height: f64,
    pub color: [u8; 3],
    /// Consecutive frames from spawn until the object leaves the image or the scene ends.
    pub frames: Vec<ObjectFrame>,
    #[serde(skip)]
    full_boxes: Vec<BBox>,
}

impl GroundTruthObject {
    pub fn first_frame(&self) -> usize {
        self.frames.first().map_or(0, |f| f.frame)
    }

    pub fn at(&self, frame: usize) -> Option<&ObjectFrame> {
        let first = self.first_frame();
        frame.checked_sub(first).and_then(|i| self.frames.get(i))
    }

    /// Unclipped box on `frame`, if the object exists then.
    pub fn full_box(&self, frame: usize) -> Option<BBox> {
        let first = self.first_frame();
        frame.checked_sub(first).and_then(|i| self.full_boxes.get(i)).copied()
    }

    /// Frames with visibility > 0.
    pub fn visible_frames(&self) -> impl Iterator<Item = &ObjectFrame> {
        self.frames.iter().filter(|f| f.visibility > 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub object_id: u64,
    pub bbox: BBox,
    pub visibility: f64,
    pub unoccluded: f64,
    pub size_class: SizeClass,
    pub occluded: bool,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    pub frame_index: usize,
    pub objects: Vec<VisibleObject>,
    /// One flag per patch: set when a visible object's box overlaps the patch.
    pub occupancy: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub grid: PatchGrid,
    pub objects: Vec<GroundTruthObject>,
    pub frames: Vec<FrameTruth>,
}

impl Scene {
    pub fn object(&self, id: u64) -> Option<&GroundTruthObject> {
        self.objects.iter().find(|o| o.object_id == id)
    }
}

pub fn generate_scene(config: &SceneConfig, grid: &PatchGrid) -> Result<Scene> {
    config.validate()?;
    if grid.width != config.width_px || grid.height != config.height_px {
        return Err(Error::Config(format!(
            "patch grid {}x{} does not match scene {}x{}",
            grid.width, grid.height, config.width_px, config.height_px
        )));
    }
    let mut main = rng::stream(config.seed);
    let mut spawn_frames: Vec<usize> = (0..config.object_count)
        .map(|_| main.random_range(0..config.num_frames))
        .collect();
    spawn_frames.sort_unstable();

    let mut objects: Vec<GroundTruthObject> = Vec::with_capacity(config.object_count);
    for (i, &spawn) in spawn_frames.iter().enumerate() {
        let object_id = i as u64 + 1;
        let size_class = config.size_distribution.sample(&mut main);
        let (w, h) = sample_dimensions(size_class, &mut main);
        let speed = main.random_range(config.speed_range[0]..=config.speed_range[1]);
        let mut placed = None;
        for _ in 0..SPAWN_RETRIES {
            let (start, velocity) = spawn_pose(config, w, h, speed, &mut main);
            let clear = objects
                .iter()
                .filter_map(|o| o.full_box(spawn))
                .all(|other| other.intersection_area(&start) <= OCCLUSION_THRESHOLD * other.area().min(start.area()));
            if clear {
                placed = Some((start, velocity));
                break;
            }
        }
        let (start, velocity) = placed.ok_or_else(|| {
            Error::Config(format!(
                "could not place object {object_id} at frame {spawn} after {SPAWN_RETRIES} attempts; reduce object_count"
            ))
        })?;
        let full_boxes = trajectory(config, start, velocity, spawn, object_id);
        let frames = full_boxes
            .iter()
            .enumerate()
            .map(|(k, b)| ObjectFrame {
                frame: spawn + k,
                bbox: b
                    .clip(config.width_px as f64, config.height_px as f64)
                    .expect("trajectory stays visible"),
                visibility: 0.0,
                unoccluded: 0.0,
                occluded: false,
                truncated: false,
            })
            .collect();
        objects.push(GroundTruthObject {
            object_id,
            size_class,
            width: w,
            height: h,
            color: object_color(config.seed, object_id),
            frames,
            full_boxes,
        });
    }

    annotate_visibility(config, &mut objects);
    let frames = (0..config.num_frames).map(|t| frame_truth(t, &objects, grid)).collect();
    Ok(Scene {
        config: config.clone(),
        grid: *grid,
        objects,
        frames,
    })
}

fn sample_dimensions(class: SizeClass, rng: &mut SimRng) -> (f64, f64) {
    let (lo, hi) = match class {
        SizeClass::Small => (12.0, 31.0),
        SizeClass::Medium => (34.0, 94.0),
        SizeClass::Large => (100.0, 200.0),
    };
    let w: f64 = rng.random_range(lo..=hi);
    let h: f64 = rng.random_range(lo..=hi);
    (w.round(), h.round())
}

fn spawn_pose(config: &SceneConfig, w: f64, h: f64, speed: f64, rng: &mut SimRng) -> (BBox, (f64, f64)) {
    let (width, height) = (config.width_px as f64, config.height_px as f64);
    match config.spawn_model {
        SpawnModel::Periphery => {
            // Pick an edge proportionally to its length, enter a few px deep.
            let perimeter = 2.0 * (width + height);
            let u = rng.random_range(0.0..perimeter);
            let depth = rng.random_range(1.0..=speed.max(2.0)).min(w.min(h));
            let spread = rng.random_range(-0.7..0.7f64);
            let (bx, by, normal) = if u < width {
                (rng.random_range(0.0..(width - w).max(1.0)), depth - h, (0.0, 1.0))
            } else if u < 2.0 * width {
                (rng.random_range(0.0..(width - w).max(1.0)), height - depth, (0.0, -1.0))
            } else if u < 2.0 * width + height {
                (depth - w, rng.random_range(0.0..(height - h).max(1.0)), (1.0, 0.0))
            } else {
                (width - depth, rng.random_range(0.0..(height - h).max(1.0)), (-1.0, 0.0))
            };
            let (c, s) = (spread.cos(), spread.sin());
            let dir = (normal.0 * c - normal.1 * s, normal.0 * s + normal.1 * c);
            (BBox::new(bx, by, w, h), (dir.0 * speed, dir.1 * speed))
        }
        SpawnModel::Horizon => {
            let horizon = 0.4 * height;
            let cx = rng.random_range(0.5 * w..=(width - 0.5 * w).max(0.5 * w));
            let cy = horizon.clamp(0.5 * h, (height - 0.5 * h).max(0.5 * h));
            let outward = (cx - 0.5 * width) / (0.5 * width) + rng.random_range(-0.3..0.3);
            let down = rng.random_range(0.2..1.0);
            let norm = (outward * outward + down * down).sqrt();
            (
                BBox::new(cx - 0.5 * w, cy - 0.5 * h, w, h),
                (outward / norm * speed, down / norm * speed),
            )
        }
        SpawnModel::Uniform => {
            let x = rng.random_range(0.0..=(width - w).max(0.0));
            let y = rng.random_range(0.0..=(height - h).max(0.0));
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            (BBox::new(x, y, w, h), (angle.cos() * speed, angle.sin() * speed))
        }
    }
}

/// Unclipped boxes from `spawn` until the object leaves the image or the scene ends.
fn trajectory(config: &SceneConfig, start: BBox, velocity: (f64, f64), spawn: usize, object_id: u64) -> Vec<BBox> {
    let (width, height) = (config.width_px as f64, config.height_px as f64);
    let mut jitter = rng::substream(rng::derive_seed(config.seed, tag::OBJECT), object_id);
    let j = config.jitter_px;
    let mut boxes = vec![start];
    let mut current = start;
    for _ in spawn + 1..config.num_frames {
        let (dx, dy) = if j > 0.0 {
            (jitter.random_range(-j..=j), jitter.random_range(-j..=j))
        } else {
            (0.0, 0.0)
        };
        current = current.translate(velocity.0 + dx, velocity.1 + dy);
        if current.clip(width, height).is_none() {
            break;
        }
        boxes.push(current);
    }
    boxes
}

fn object_color(seed: u64, object_id: u64) -> [u8; 3] {
    let bits = rng::splitmix64(seed ^ tag::OBJECT ^ object_id.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let bright = 190 + (bits & 0x3f) as u8;
    let dark = ((bits >> 8) & 0x3f) as u8;
    let mid = ((bits >> 16) & 0xff) as u8;
    match (bits >> 24) % 6 {
        0 => [bright, dark, mid],
        1 => [bright, mid, dark],
        2 => [dark, bright, mid],
        3 => [mid, bright, dark],
        4 => [dark, mid, bright],
        _ => [mid, dark, bright],
    }
}

/// Nearer objects (larger bottom edge, then larger id) occlude farther ones.
fn depth_key(b: &BBox, id: u64) -> (f64, u64) {
    (b.bottom(), id)
}

fn annotate_visibility(config: &SceneConfig, objects: &mut [GroundTruthObject]) {
    for t in 0..config.num_frames {
        let present: Vec<(usize, BBox, BBox)> = objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| Some((i, o.full_box(t)?, o.at(t)?.bbox)))
            .collect();
        for &(i, full, clipped) in &present {
            let id = objects[i].object_id;
            let full_area = full.area();
            let truncated = clipped.area() < full_area - 1e-9;
            let (visible_area, occluded) = if config.occlusion_enabled {
                let me = depth_key(&full, id);
                let occluders: Vec<BBox> = present
                    .iter()
                    .filter(|&&(j, f, _)| j != i && depth_key(&f, objects[j].object_id) > me)
                    .map(|&(_, _, c)| c)
                    .collect();
                let covered = union_area_within(&clipped, &occluders);
                (clipped.area() - covered, covered / full_area > OCCLUSION_THRESHOLD)
            } else {
                (clipped.area(), false)
            };
            let first = objects[i].first_frame();
            let f = &mut objects[i].frames[t - first];
            f.visibility = (visible_area / full_area).clamp(0.0, 1.0);
            f.unoccluded = (visible_area / clipped.area()).clamp(0.0, 1.0);
            f.occluded = occluded;
            f.truncated = truncated;
        }
    }
}

fn frame_truth(t: usize, objects: &[GroundTruthObject], grid: &PatchGrid) -> FrameTruth {
    let visible: Vec<VisibleObject> = objects
        .iter()
        .filter_map(|o| {
            let f = o.at(t)?;
            (f.visibility > 0.0).then_some(VisibleObject {
                object_id: o.object_id,
                bbox: f.bbox,
                visibility: f.visibility,
                unoccluded: f.unoccluded,
                size_class: o.size_class,
                occluded: f.occluded,
                truncated: f.truncated,
            })
        })
        .collect();
    let occupancy = grid.occupancy(visible.iter().map(|v| v.bbox));
    FrameTruth {
        frame_index: t,
        objects: visible,
        occupancy,
    }
}

/// Renders scene frames; the background texture is computed once.
pub struct Renderer<'a> {
    scene: &'a Scene,
    background: RgbImage,
}

impl<'a> Renderer<'a> {
    pub fn new(scene: &'a Scene) -> Self {
        Self {
            background: background(&scene.config),
            scene,
        }
    }

    pub fn background(&self) -> &RgbImage {
        &self.background
    }

    pub fn render(&self, frame_index: usize) -> Result<RgbImage> {
        if frame_index >= self.scene.config.num_frames {
            return Err(Error::InvalidInput(format!(
                "frame {frame_index} out of range (scene has {})",
                self.scene.config.num_frames
            )));
        }
        let mut img = self.background.clone();
        let mut drawn: Vec<(&GroundTruthObject, BBox, BBox)> = self
            .scene
            .objects
            .iter()
            .filter_map(|o| Some((o, o.full_box(frame_index)?, o.at(frame_index)?.bbox)))
            .collect();
        drawn.sort_by(|a, b| {
            depth_key(&a.1, a.0.object_id)
                .partial_cmp(&depth_key(&b.1, b.0.object_id))
                .expect("finite boxes")
        });
        for (o, _, clipped) in drawn {
            fill_rect(&mut img, &clipped, o.color);
        }
        Ok(img)
    }
}

pub fn render_frame(scene: &Scene, frame_index: usize) -> Result<RgbImage> {
    Renderer::new(scene).render(frame_index)
}

/// Fill the pixels whose centres fall inside `bbox`.
pub fn fill_rect(img: &mut RgbImage, bbox: &BBox, rgb: [u8; 3]) {
    let (x0, x1) = pixel_span(bbox.x, bbox.right(), img.width);
    let (y0, y1) = pixel_span(bbox.y, bbox.bottom(), img.height);
    for y in y0..y1 {
        for x in x0..x1 {
            img.set_pixel(x, y, rgb);
        }
    }
}

fn pixel_span(lo: f64, hi: f64, limit: usize) -> (usize, usize) {
    let a = (lo - 0.5).ceil().max(0.0) as usize;
    let b = ((hi - 0.5).ceil().max(0.0) as usize).min(limit);
    (a.min(b), b)
}

fn background(config: &SceneConfig) -> RgbImage {
    let (w, h) = (config.width_px, config.height_px);
    let mut img = RgbImage::new(w, h);
    let cols = w.div_ceil(BACKGROUND_CELL);
    for y in 0..h {
        for x in 0..w {
            let cell = ((y / BACKGROUND_CELL) * cols + x / BACKGROUND_CELL) as u64;
            let bits = rng::splitmix64(config.seed ^ BACKGROUND_TAG ^ cell);
            let base = 100 + (bits % 24) as u8;
            let tint = [(bits >> 8) % 4, (bits >> 16) % 4, (bits >> 24) % 4];
            img.set_pixel(x, y, [base + tint[0] as u8, base + tint[1] as u8, base + tint[2] as u8]);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SceneConfig {
        SceneConfig {
            width_px: 480,
            height_px: 272,
            num_frames: 60,
            object_count: 8,
            ..SceneConfig::default()
        }
    }

    fn grid(c: &SceneConfig) -> PatchGrid {
        PatchGrid::new(c.width_px, c.height_px, 16).unwrap()
    }

    #[test]
    fn size_thresholds() {
        assert_eq!(classify_size(30.0, 30.0).unwrap(), SizeClass::Small);
        assert_eq!(classify_size(50.0, 50.0).unwrap(), SizeClass::Medium);
        assert_eq!(classify_size(100.0, 100.0).unwrap(), SizeClass::Large);
        assert_eq!(classify_size(32.0, 32.0).unwrap(), SizeClass::Medium);
        assert_eq!(classify_size(96.0, 96.0).unwrap(), SizeClass::Medium);
        assert!(classify_size(0.0, 10.0).is_err());
        assert!(classify_size(10.0, -1.0).is_err());
    }

    #[test]
    fn empty_scene_has_empty_truth() {
        let c = SceneConfig {
            object_count: 0,
            ..small_config()
        };
        let s = generate_scene(&c, &grid(&c)).unwrap();
        assert!(s
            .frames
            .iter()
            .all(|f| f.objects.is_empty() && f.occupancy.iter().all(|o| !o)));
        assert_eq!(render_frame(&s, 5).unwrap(), *Renderer::new(&s).background());
    }

    #[test]
    fn generation_is_deterministic() {
        let c = small_config();
        let a = generate_scene(&c, &grid(&c)).unwrap();
        let b = generate_scene(&c, &grid(&c)).unwrap();
        assert_eq!(a, b);
        assert_eq!(render_frame(&a, 10).unwrap(), render_frame(&b, 10).unwrap());
        let other = generate_scene(&SceneConfig { seed: 1, ..c.clone() }, &grid(&c)).unwrap();
        assert_ne!(a.objects, other.objects);
    }

    #[test]
    fn boxes_are_positive_and_classes_consistent() {
        let c = small_config();
        let s = generate_scene(&c, &grid(&c)).unwrap();
        for o in &s.objects {
            assert_eq!(classify_size(o.width, o.height).unwrap(), o.size_class);
            for f in &o.frames {
                assert!(f.bbox.w > 0.0 && f.bbox.h > 0.0);
                assert!((0.0..=1.0).contains(&f.visibility));
            }
        }
    }

    #[test]
    fn occupancy_matches_brute_force_rescan() {
        let c = small_config();
        let g = grid(&c);
        let s = generate_scene(&c, &g).unwrap();
        for f in &s.frames {
            for p in 0..g.len() {
                let rect = g.patch_rect(p);
                let expected = f.objects.iter().any(|o| o.bbox.intersection_area(&rect) > 0.0);
                assert_eq!(f.occupancy[p], expected, "frame {} patch {p}", f.frame_index);
            }
        }
    }

    #[test]
    fn trajectories_are_continuous() {
        let c = small_config();
        let s = generate_scene(&c, &grid(&c)).unwrap();
        let bound = c.speed_range[1] + c.jitter_px * std::f64::consts::SQRT_2 + 1e-9;
        for o in &s.objects {
            let first = o.first_frame();
            for t in first + 1..first + o.frames.len() {
                let (a, b) = (o.full_box(t - 1).unwrap().center(), o.full_box(t).unwrap().center());
                let step = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                assert!(step <= bound, "object {} moved {step}", o.object_id);
            }
        }
    }

    #[test]
    fn static_large_object_is_large_everywhere() {
        let c = SceneConfig {
            object_count: 1,
            spawn_model: SpawnModel::Uniform,
            size_distribution: SizeDistribution {
                small: 0.0,
                medium: 0.0,
                large: 1.0,
            },
            speed_range: [0.0, 0.0],
            jitter_px: 0.0,
            ..small_config()
        };
        let s = generate_scene(&c, &grid(&c)).unwrap();
        let o = &s.objects[0];
        assert_eq!(o.size_class, SizeClass::Large);
        let first = o.frames[0].bbox;
        assert!(o.frames.iter().all(|f| f.bbox == first));
    }

    #[test]
    fn direct_fill_sets_covered_pixels() {
        let mut img = RgbImage::new(4, 4);
        fill_rect(&mut img, &BBox::new(0.0, 0.0, 2.0, 2.0), [200, 10, 10]);
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert_eq!(img.pixel(x, y)[0], 200);
        }
        assert_eq!(img.pixel(2, 0), [0, 0, 0]);
        assert_eq!(img.pixel(0, 2), [0, 0, 0]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let g = PatchGrid::new(480, 272, 16).unwrap();
        let bad = SceneConfig {
            width_px: 0,
            ..small_config()
        };
        assert!(bad.validate().is_err());
        let bad = SceneConfig {
            size_distribution: SizeDistribution {
                small: 0.5,
                medium: 0.5,
                large: 0.5,
            },
            ..small_config()
        };
        assert!(generate_scene(&bad, &g).is_err());
        let bad = SceneConfig {
            speed_range: [3.0, 1.0],
            ..small_config()
        };
        assert!(generate_scene(&bad, &g).is_err());
    }

    #[test]
    fn overcrowded_scene_is_a_configuration_error() {
        let c = SceneConfig {
            width_px: 64,
            height_px: 64,
            num_frames: 1,
            object_count: 50,
            spawn_model: SpawnModel::Uniform,
            size_distribution: SizeDistribution {
                small: 0.0,
                medium: 1.0,
                large: 0.0,
            },
            ..SceneConfig::default()
        };
        let err = generate_scene(&c, &PatchGrid::new(64, 64, 16).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn occlusion_flags_follow_coverage() {
        let c = SceneConfig {
            num_frames: 200,
            object_count: 20,
            spawn_model: SpawnModel::Uniform,
            size_distribution: SizeDistribution {
                small: 0.0,
                medium: 1.0,
                large: 0.0,
            },
            ..small_config()
        };
        let s = generate_scene(&c, &grid(&c)).unwrap();
        let mut seen = 0;
        for o in &s.objects {
            for f in &o.frames {
                if f.occluded {
                    seen += 1;
                    assert!(f.visibility <= 1.0 - OCCLUSION_THRESHOLD + 1e-9);
                }
            }
        }
        assert!(seen > 0, "crowded scene should produce occlusions");
        let flat = SceneConfig {
            occlusion_enabled: false,
            ..c
        };
        let s = generate_scene(&flat, &grid(&flat)).unwrap();
        assert!(s.objects.iter().flat_map(|o| &o.frames).all(|f| !f.occluded));
    }
}
