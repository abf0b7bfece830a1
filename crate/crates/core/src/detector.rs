//! Detection sources: a stochastic oracle driven by ground truth and sensed
//! coverage, or detections replayed from a MOT-Challenge `det` file.
//!
//! The oracle's probability law is a behavioural surrogate for a learned
//! detector, not a model of one. An object with coverage `c` (fraction of
//! its patches that were digitized) is emitted with probability
//!
//! `p = p_max(size) · c^γ · noise_mult · dim_mult · format_mult · unoccluded`
//!
//! where `unoccluded` is the fraction of the in-image box not hidden by
//! nearer objects; truncation at the border does not lower `p` by itself.
//! Emitted boxes carry Gaussian jitter whose standard deviation is
//! `box_jitter_std / (noise_mult · dim_mult · format_mult)`, so a degraded
//! front end also localizes worse.
//!
//! Misses are correlated over time through a per-object latent, so hard
//! objects stay hard from frame to frame, while the per-frame marginal
//! detection rate is exactly `p`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::harness::mot_csv::{self, MotKind};
use crate::rng::{self, tag};
use crate::scene::{FrameTruth, SizeClass};
use crate::sensor::{ActivationMask, NoiseModel, PatchGrid, PixelFormat, SensorConfig, REFERENCE_FEATURE_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    pub class_id: i64,
    /// Mean-pooled patch features under the box; empty when nothing under it was sensed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub appearance: Vec<f64>,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64) -> Self {
        Self {
            bbox,
            confidence,
            class_id: -1,
            appearance: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRates {
    pub small: f64,
    pub medium: f64,
    pub large: f64,
}

impl SizeRates {
    pub fn get(&self, class: SizeClass) -> f64 {
        match class {
            SizeClass::Small => self.small,
            SizeClass::Medium => self.medium,
            SizeClass::Large => self.large,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Detection probability at full coverage per size class.
    pub p_max: SizeRates,
    /// γ in `coverage^γ`.
    pub coverage_exponent: f64,
    pub gaussian_noise_penalty: f64,
    pub poisson_noise_penalty: f64,
    /// Multiplier applied when the feature dimension is below the 768 reference.
    pub reduced_dim_penalty: f64,
    /// Multiplier applied to Bayer-mosaic input.
    pub bayer_penalty: f64,
    pub box_jitter_std: f64,
    /// Expected false positives per frame.
    pub false_positive_rate: f64,
    /// Beta concentration of the confidence draw.
    pub confidence_concentration: f64,
    /// Correlation of an object's detection draws across frames, in [0, 1).
    pub miss_persistence: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            p_max: SizeRates {
                small: 0.55,
                medium: 0.85,
                large: 0.95,
            },
            coverage_exponent: 1.0,
            gaussian_noise_penalty: 0.9,
            poisson_noise_penalty: 0.95,
            reduced_dim_penalty: 0.9,
            bayer_penalty: 0.9,
            box_jitter_std: 2.0,
            false_positive_rate: 0.2,
            confidence_concentration: 20.0,
            miss_persistence: 0.9,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_max.small, self.p_max.medium, self.p_max.large];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!("p_max {probs:?} outside [0, 1]")));
        }
        for (name, m) in [
            ("gaussian_noise_penalty", self.gaussian_noise_penalty),
            ("poisson_noise_penalty", self.poisson_noise_penalty),
            ("reduced_dim_penalty", self.reduced_dim_penalty),
            ("bayer_penalty", self.bayer_penalty),
        ] {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::Config(format!("{name} = {m} outside (0, 1]")));
            }
        }
        if !(self.coverage_exponent > 0.0 && self.coverage_exponent.is_finite()) {
            return Err(Error::Config("coverage exponent must be positive".into()));
        }
        if !(self.box_jitter_std >= 0.0 && self.false_positive_rate >= 0.0) {
            return Err(Error::Config(
                "jitter and false-positive rate must be non-negative".into(),
            ));
        }
        if !(self.confidence_concentration > 0.0) {
            return Err(Error::Config("confidence concentration must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.miss_persistence) {
            return Err(Error::Config("miss persistence must be in [0, 1)".into()));
        }
        Ok(())
    }

    fn sensor_multiplier(&self, sensor: &SensorConfig) -> f64 {
        let noise = match sensor.noise {
            NoiseModel::None => 1.0,
            NoiseModel::Gaussian { .. } => self.gaussian_noise_penalty,
            NoiseModel::Poisson { .. } => self.poisson_noise_penalty,
        };
        let dim = if sensor.feature_dim < REFERENCE_FEATURE_DIM {
            self.reduced_dim_penalty
        } else {
            1.0
        };
        let format = match sensor.pixel_format {
            PixelFormat::Rgb => 1.0,
            PixelFormat::Bayer => self.bayer_penalty,
        };
        noise * dim * format
    }

    /// Per-frame emission probability for one object.
    pub fn detection_probability(
        &self,
        class: SizeClass,
        coverage: f64,
        unoccluded: f64,
        sensor: &SensorConfig,
    ) -> f64 {
        if coverage <= 0.0 {
            return 0.0;
        }
        (self.p_max.get(class) * coverage.powf(self.coverage_exponent) * self.sensor_multiplier(sensor) * unoccluded)
            .clamp(0.0, 1.0)
    }
}

/// Fraction of the patches under `bbox` that are active.
pub fn coverage_fraction(bbox: &BBox, mask: &ActivationMask, grid: &PatchGrid) -> Result<f64> {
    let clipped = bbox
        .clip(grid.width as f64, grid.height as f64)
        .ok_or_else(|| Error::InvalidInput(format!("box {bbox:?} lies outside the image")))?;
    let occupied = grid.patches_overlapping(&clipped);
    let active = occupied.iter().filter(|&&p| mask.is_active(p)).count();
    Ok(active as f64 / occupied.len() as f64)
}

/// Per-object coverage for every visible object in a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub frame_index: usize,
    pub coverage: Vec<(u64, f64)>,
}

pub fn coverage_report(truth: &FrameTruth, mask: &ActivationMask, grid: &PatchGrid) -> Result<CoverageReport> {
    let coverage = truth
        .objects
        .iter()
        .map(|o| Ok((o.object_id, coverage_fraction(&o.bbox, mask, grid)?)))
        .collect::<Result<_>>()?;
    Ok(CoverageReport {
        frame_index: truth.frame_index,
        coverage,
    })
}

fn object_latent(seed: u64, object_id: u64) -> f64 {
    let mut r = rng::substream(rng::derive_seed(seed, tag::OBJECT), object_id);
    StandardNormal.sample(&mut r)
}

/// Simulated detector output for one frame.
///
/// Every visible object consumes the same number of draws whether or not it
/// is emitted, so for a fixed seed a larger active set can only add
/// detections, never reshuffle them.
pub fn detect_oracle(
    truth: &FrameTruth,
    mask: &ActivationMask,
    grid: &PatchGrid,
    sensor: &SensorConfig,
    oracle: &OracleConfig,
    seed: u64,
) -> Result<Vec<Detection>> {
    oracle.validate()?;
    let mut stream = rng::substream(seed, truth.frame_index as u64);
    let std_normal = StatNormal::standard();
    let rho = oracle.miss_persistence;
    let quality = oracle.sensor_multiplier(sensor);
    let (img_w, img_h) = (grid.width as f64, grid.height as f64);
    let mut out = Vec::new();

    for obj in &truth.objects {
        let coverage = coverage_fraction(&obj.bbox, mask, grid)?;
        let p = oracle.detection_probability(obj.size_class, coverage, obj.unoccluded, sensor);
        let eps: f64 = StandardNormal.sample(&mut stream);
        let u = std_normal.cdf(rho * object_latent(seed, obj.object_id) + (1.0 - rho * rho).sqrt() * eps);
        let jitter: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut stream));
        let mean_conf = 0.3 + 0.65 * coverage * obj.unoccluded * quality;
        let confidence = beta_draw(&mut stream, mean_conf, oracle.confidence_concentration);
        if coverage > 0.0 && u < p {
            let s = oracle.box_jitter_std / quality;
            let b = obj.bbox;
            let jittered = BBox::new(
                b.x + s * jitter[0],
                b.y + s * jitter[1],
                (b.w + s * jitter[2]).max(1.0),
                (b.h + s * jitter[3]).max(1.0),
            );
            let bbox = jittered.clip(img_w, img_h).unwrap_or(b);
            out.push(Detection::new(bbox, confidence));
        }
    }

    if oracle.false_positive_rate > 0.0 {
        let count: f64 = Poisson::new(oracle.false_positive_rate)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut stream);
        let active: Vec<usize> = mask.active_indices().collect();
        for _ in 0..count as usize {
            let Some(&patch) = active.choose(&mut stream) else {
                break;
            };
            let (cx, cy) = grid.patch_rect(patch).center();
            let w: f64 = stream.random_range(16.0..64.0);
            let h: f64 = stream.random_range(16.0..64.0);
            let confidence = beta_draw(&mut stream, 0.3, oracle.confidence_concentration);
            if let Some(bbox) = BBox::new(cx - 0.5 * w, cy - 0.5 * h, w, h).clip(img_w, img_h) {
                out.push(Detection::new(bbox, confidence));
            }
        }
    }
    Ok(out)
}

fn beta_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, concentration: f64) -> f64 {
    let m = mean.clamp(0.02, 0.98);
    Beta::new(m * concentration, (1.0 - m) * concentration)
        .map(|b| b.sample(rng))
        .unwrap_or(m)
        .clamp(0.0, 1.0)
}

/// Detections grouped by 1-based MOT frame number.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionReplay {
    frames: BTreeMap<usize, Vec<Detection>>,
}

impl DetectionReplay {
    pub fn frame(&self, mot_frame: usize) -> &[Detection] {
        self.frames.get(&mot_frame).map_or(&[], Vec::as_slice)
    }

    pub fn frame_numbers(&self) -> impl Iterator<Item = usize> + '_ {
        self.frames.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Read a MOT-Challenge detection file; confidences given in [0, 100] are rescaled to [0, 1].
pub fn load_detections(path: &Path) -> Result<DetectionReplay> {
    let records = mot_csv::parse_mot_csv(path, MotKind::Det)?;
    let scale = if records.iter().any(|r| r.confidence > 1.0) {
        100.0
    } else {
        1.0
    };
    let mut frames: BTreeMap<usize, Vec<Detection>> = BTreeMap::new();
    for r in records {
        let mut det = Detection::new(r.bbox, (r.confidence / scale).clamp(0.0, 1.0));
        det.class_id = r.class_id;
        frames.entry(r.frame).or_default().push(det);
    }
    Ok(DetectionReplay { frames })
}

/// Gaussian box perturbation used by tests that need a reference jitter law.
#[doc(hidden)]
pub fn jitter_distribution(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("non-negative std")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::VisibleObject;

    fn grid() -> PatchGrid {
        PatchGrid::new(128, 128, 16).unwrap()
    }

    fn object(id: u64, bbox: BBox, class: SizeClass) -> VisibleObject {
        VisibleObject {
            object_id: id,
            bbox,
            visibility: 1.0,
            unoccluded: 1.0,
            size_class: class,
            occluded: false,
            truncated: false,
        }
    }

    fn truth(frame: usize, objects: Vec<VisibleObject>) -> FrameTruth {
        let g = grid();
        FrameTruth {
            frame_index: frame,
            occupancy: g.occupancy(objects.iter().map(|o| o.bbox)),
            objects,
        }
    }

    #[test]
    fn coverage_extremes_and_partial() {
        let g = grid();
        let b = BBox::new(16.0, 16.0, 32.0, 32.0);
        assert_eq!(
            coverage_fraction(&b, &ActivationMask::full(0, g.len()), &g).unwrap(),
            1.0
        );
        assert_eq!(
            coverage_fraction(&b, &ActivationMask::empty(0, g.len()), &g).unwrap(),
            0.0
        );
        let one = ActivationMask::from_indices(0, g.len(), [g.index(1, 1)]);
        assert_eq!(coverage_fraction(&b, &one, &g).unwrap(), 0.25);
        assert!(coverage_fraction(&BBox::new(500.0, 0.0, 4.0, 4.0), &one, &g).is_err());
    }

    #[test]
    fn unsensed_objects_yield_only_false_positives() {
        let g = grid();
        let t = truth(3, vec![object(1, BBox::new(10.0, 10.0, 40.0, 40.0), SizeClass::Medium)]);
        let cfg = OracleConfig {
            false_positive_rate: 0.0,
            ..OracleConfig::default()
        };
        for seed in 0..200 {
            let d = detect_oracle(
                &t,
                &ActivationMask::empty(3, g.len()),
                &g,
                &SensorConfig::default(),
                &cfg,
                seed,
            )
            .unwrap();
            assert!(d.is_empty());
        }
    }

    #[test]
    fn degenerate_oracle_reproduces_truth() {
        let g = grid();
        let boxes = [BBox::new(10.0, 12.0, 30.0, 40.0), BBox::new(70.0, 60.0, 20.0, 20.0)];
        let t = truth(
            0,
            boxes
                .iter()
                .enumerate()
                .map(|(i, b)| object(i as u64 + 1, *b, SizeClass::Medium))
                .collect(),
        );
        let cfg = OracleConfig {
            p_max: SizeRates {
                small: 1.0,
                medium: 1.0,
                large: 1.0,
            },
            box_jitter_std: 0.0,
            false_positive_rate: 0.0,
            ..OracleConfig::default()
        };
        let d = detect_oracle(
            &t,
            &ActivationMask::full(0, g.len()),
            &g,
            &SensorConfig::default(),
            &cfg,
            5,
        )
        .unwrap();
        assert_eq!(d.iter().map(|d| d.bbox).collect::<Vec<_>>(), boxes.to_vec());
    }

    #[test]
    fn large_object_rate_matches_configuration() {
        let g = grid();
        let cfg = OracleConfig {
            false_positive_rate: 0.0,
            ..OracleConfig::default()
        };
        let mask = ActivationMask::full(0, g.len());
        let trials = 10_000;
        let hits: usize = (0..trials)
            .map(|i| {
                let t = truth(
                    0,
                    vec![object(
                        i as u64 + 1,
                        BBox::new(0.0, 0.0, 110.0, 110.0),
                        SizeClass::Large,
                    )],
                );
                detect_oracle(&t, &mask, &g, &SensorConfig::default(), &cfg, 1_000 + i as u64)
                    .unwrap()
                    .len()
            })
            .sum();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.95).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn larger_active_set_never_removes_detections() {
        let g = grid();
        let t = truth(
            7,
            vec![
                object(1, BBox::new(0.0, 0.0, 40.0, 40.0), SizeClass::Medium),
                object(2, BBox::new(60.0, 60.0, 50.0, 50.0), SizeClass::Medium),
            ],
        );
        let cfg = OracleConfig {
            false_positive_rate: 0.0,
            box_jitter_std: 0.0,
            ..OracleConfig::default()
        };
        let small = ActivationMask::from_indices(7, g.len(), [0, 1, 9]);
        let big = ActivationMask::from_indices(7, g.len(), (0..g.len()).filter(|i| i % 2 == 0).chain([1, 9]));
        for seed in 0..300 {
            let a = detect_oracle(&t, &small, &g, &SensorConfig::default(), &cfg, seed).unwrap();
            let b = detect_oracle(&t, &big, &g, &SensorConfig::default(), &cfg, seed).unwrap();
            for d in &a {
                assert!(b.iter().any(|e| e.bbox == d.bbox));
            }
        }
        for o in &t.objects {
            let pa = cfg.detection_probability(
                o.size_class,
                coverage_fraction(&o.bbox, &small, &g).unwrap(),
                1.0,
                &SensorConfig::default(),
            );
            let pb = cfg.detection_probability(
                o.size_class,
                coverage_fraction(&o.bbox, &big, &g).unwrap(),
                1.0,
                &SensorConfig::default(),
            );
            assert!(pb >= pa);
        }
    }

    #[test]
    fn reduced_features_and_noise_lower_probability() {
        let cfg = OracleConfig::default();
        let rgb = SensorConfig::default();
        let compressed = SensorConfig {
            feature_dim: 240,
            ..SensorConfig::default()
        };
        let noisy = SensorConfig {
            noise: NoiseModel::Gaussian { std: 10.0 },
            ..compressed.clone()
        };
        let p = |s: &SensorConfig| cfg.detection_probability(SizeClass::Large, 1.0, 1.0, s);
        assert!((p(&rgb) - 0.95).abs() < 1e-12);
        assert!(p(&compressed) < p(&rgb));
        assert!(p(&noisy) < p(&compressed));
    }

    #[test]
    fn oracle_is_seed_deterministic() {
        let g = grid();
        let t = truth(2, vec![object(1, BBox::new(5.0, 5.0, 30.0, 30.0), SizeClass::Small)]);
        let mask = ActivationMask::full(2, g.len());
        let a = detect_oracle(&t, &mask, &g, &SensorConfig::default(), &OracleConfig::default(), 99).unwrap();
        let b = detect_oracle(&t, &mask, &g, &SensorConfig::default(), &OracleConfig::default(), 99).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|d| (0.0..=1.0).contains(&d.confidence)));
    }

    #[test]
    fn invalid_oracle_config_rejected() {
        let bad = OracleConfig {
            reduced_dim_penalty: 1.5,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OracleConfig {
            miss_persistence: 1.0,
            ..OracleConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
