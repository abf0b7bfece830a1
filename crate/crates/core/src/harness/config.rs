//! Run configuration, per-field overrides and seed derivation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::OracleConfig;
use crate::error::{Error, Result};
use crate::metrics::EdpInputs;
use crate::rng::{derive_seed, tag};
use crate::scene::SceneConfig;
use crate::scheduler::{SchedulerConfig, ScoreWeights, SelectionPolicy};
use crate::sensor::{NoiseModel, PixelFormat, SensorConfig};
use crate::tracker::AssocConfig;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "PIXELCTL_OUT";
const FALLBACK_OUTPUT_DIR: &str = "pixelctl-out";

/// Where detections come from; exactly one source per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionSource {
    Oracle(OracleConfig),
    /// MOT-Challenge `det` file replayed frame by frame.
    File(PathBuf),
}

impl Default for DetectionSource {
    fn default() -> Self {
        DetectionSource::Oracle(OracleConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub sensor: SensorConfig,
    pub detection: DetectionSource,
    pub tracker: AssocConfig,
    pub scheduler: SchedulerConfig,
    /// Weights for the recurrent saliency predictor.
    pub predictor_weights: Option<PathBuf>,
    pub edp: Option<EdpInputs>,
    /// IoU threshold of the CLEAR-MOT matching.
    pub iou_threshold: f64,
    pub output_dir: Option<PathBuf>,
    /// Master seed; every module seed is derived from it.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            sensor: SensorConfig::default(),
            detection: DetectionSource::default(),
            tracker: AssocConfig::default(),
            scheduler: SchedulerConfig::default(),
            predictor_weights: None,
            edp: None,
            iou_threshold: 0.5,
            output_dir: None,
            seed: 0,
        }
    }
}

/// Module seeds derived from the master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub scene: u64,
    pub noise: u64,
    pub projection: u64,
    pub detector: u64,
    pub scheduler: u64,
}

impl DerivedSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            scene: derive_seed(master, tag::SCENE),
            noise: derive_seed(master, tag::NOISE),
            projection: derive_seed(master, tag::PROJECTION),
            detector: derive_seed(master, tag::DETECTOR),
            scheduler: derive_seed(master, tag::SCHEDULER),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.sensor.validate()?;
        self.tracker.validate()?;
        self.scheduler.validate()?;
        if let DetectionSource::Oracle(o) = &self.detection {
            o.validate()?;
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "iou_threshold {} outside (0, 1]",
                self.iou_threshold
            )));
        }
        Ok(())
    }

    pub fn seeds(&self) -> DerivedSeeds {
        DerivedSeeds::from_master(self.seed)
    }

    /// Validated copy with the scene seed tied to the master seed.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        c.scene.seed = c.seeds().scene;
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.pixel_format {
            self.sensor.pixel_format = v;
        }
        if let Some(v) = o.budget {
            self.scheduler.budget_fraction = v;
        }
        if let Some(v) = o.feature_dim {
            self.sensor.feature_dim = v;
        }
        if let Some(v) = &o.noise {
            self.sensor.noise = v.clone();
        }
        if let Some(v) = o.full_sense_period {
            self.scheduler.full_sense_period = v;
        }
        if let Some(v) = o.frames {
            self.scene.num_frames = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = Some(v.clone());
        }
    }

    /// Output directory: configured, else `$PIXELCTL_OUT`, else `pixelctl-out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR))
    }

    /// Copy configured for one ablation mode.
    pub fn with_mode(&self, mode: AblationMode) -> Self {
        let mut c = self.clone();
        let (policy, weights) = mode.selection();
        c.scheduler.policy = policy;
        c.scheduler.weights = weights;
        c
    }
}

/// Per-field overrides, taking precedence over config file values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub pixel_format: Option<PixelFormat>,
    pub budget: Option<f64>,
    pub feature_dim: Option<usize>,
    pub noise: Option<NoiseModel>,
    pub full_sense_period: Option<usize>,
    pub frames: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// Score-function variants compared in an ablation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    Random,
    SaliencyOnly,
    DetectionOnly,
    TrackingOnly,
    All,
}

impl AblationMode {
    pub const ALL: [AblationMode; 5] = [
        AblationMode::Random,
        AblationMode::SaliencyOnly,
        AblationMode::DetectionOnly,
        AblationMode::TrackingOnly,
        AblationMode::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Random => "random",
            AblationMode::SaliencyOnly => "saliency-only",
            AblationMode::DetectionOnly => "detection-only",
            AblationMode::TrackingOnly => "tracking-only",
            AblationMode::All => "all",
        }
    }

    pub fn selection(self) -> (SelectionPolicy, ScoreWeights) {
        match self {
            AblationMode::Random => (SelectionPolicy::Random, ScoreWeights::equal()),
            AblationMode::SaliencyOnly => (SelectionPolicy::Scored, ScoreWeights::saliency_only()),
            AblationMode::DetectionOnly => (SelectionPolicy::Scored, ScoreWeights::detection_only()),
            AblationMode::TrackingOnly => (SelectionPolicy::Scored, ScoreWeights::tracking_only()),
            AblationMode::All => (SelectionPolicy::Scored, ScoreWeights::equal()),
        }
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation mode {s:?}")))
    }
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "sensor": {"feature_dim": 240}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.sensor.feature_dim, 240);
        assert_eq!(c.sensor.patch_size, 16);
        assert_eq!(c.scheduler, SchedulerConfig::default());
    }

    #[test]
    fn detection_source_is_exclusive() {
        let c: RunConfig = serde_json::from_str(r#"{"detection": {"file": "det.txt"}}"#).unwrap();
        assert_eq!(c.detection, DetectionSource::File("det.txt".into()));
        assert!(serde_json::from_str::<RunConfig>(r#"{"detection": {"file": "a", "oracle": {}}}"#).is_err());
    }

    #[test]
    fn partial_section_keeps_sibling_defaults() {
        let c = serde_json::from_str::<RunConfig>(r#"{"scheduler": {"budget_fraction": 0.5}}"#).unwrap();
        assert_eq!(c.scheduler.budget_fraction, 0.5);
        assert_eq!(c.scheduler.full_sense_period, 16);
    }

    #[test]
    fn resolution_ties_scene_seed_to_master() {
        let a = RunConfig {
            seed: 3,
            ..RunConfig::default()
        };
        let r = a.resolved().unwrap();
        assert_eq!(r.scene.seed, DerivedSeeds::from_master(3).scene);
        assert_eq!(r.resolved().unwrap(), r);
    }

    #[test]
    fn modes_parse_and_configure() {
        for m in AblationMode::ALL {
            assert_eq!(m.name().parse::<AblationMode>().unwrap(), m);
        }
        let c = RunConfig::default().with_mode(AblationMode::SaliencyOnly);
        assert_eq!(c.scheduler.weights, ScoreWeights::new(1.0, 0.0, 0.0));
        assert!("bogus".parse::<AblationMode>().is_err());
    }
}
