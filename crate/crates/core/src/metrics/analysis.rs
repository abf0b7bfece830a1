//! Per-object error analysis stratified by size, occlusion and truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::scene::{Scene, SizeClass};
use crate::sensor::ActivationMask;

use super::mot::{match_frame, MotTrace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectOutcome {
    pub object_id: u64,
    pub size_class: SizeClass,
    pub occluded: bool,
    pub truncated: bool,
    pub visible_frames: usize,
    pub detected_frames: usize,
    pub id_switches: usize,
    /// Frames from first appearance to first matched detection.
    pub time_to_detect: Option<usize>,
    /// Frames from first appearance to the first frame with one of its patches active.
    pub time_to_anticipate: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumStats {
    pub objects: usize,
    pub id_switches: Option<MeanStd>,
    pub time_to_detect: Option<MeanStd>,
    pub percent_detected: Option<f64>,
    pub instance_recall: Option<f64>,
    pub time_to_anticipate: Option<MeanStd>,
    pub percent_anticipated: Option<f64>,
}

impl StratumStats {
    fn from_outcomes<'a>(outcomes: impl Iterator<Item = &'a ObjectOutcome>) -> Self {
        let group: Vec<&ObjectOutcome> = outcomes.collect();
        let n = group.len();
        let frac = |count: usize| (n > 0).then(|| count as f64 / n as f64);
        let switches: Vec<f64> = group.iter().map(|o| o.id_switches as f64).collect();
        let ttd: Vec<f64> = group
            .iter()
            .filter_map(|o| o.time_to_detect)
            .map(|t| t as f64)
            .collect();
        let tta: Vec<f64> = group
            .iter()
            .filter_map(|o| o.time_to_anticipate)
            .map(|t| t as f64)
            .collect();
        let visible: usize = group.iter().map(|o| o.visible_frames).sum();
        let detected: usize = group.iter().map(|o| o.detected_frames).sum();
        Self {
            objects: n,
            id_switches: MeanStd::of(&switches),
            time_to_detect: MeanStd::of(&ttd),
            percent_detected: frac(ttd.len()),
            instance_recall: (visible > 0).then(|| detected as f64 / visible as f64),
            time_to_anticipate: MeanStd::of(&tta),
            percent_anticipated: frac(tta.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorAnalysis {
    pub all: StratumStats,
    pub small: StratumStats,
    pub medium: StratumStats,
    pub large: StratumStats,
    pub occluded: StratumStats,
    pub truncated: StratumStats,
    pub objects: Vec<ObjectOutcome>,
}

impl ErrorAnalysis {
    pub fn size(&self, class: SizeClass) -> &StratumStats {
        match class {
            SizeClass::Small => &self.small,
            SizeClass::Medium => &self.medium,
            SizeClass::Large => &self.large,
        }
    }

    /// (name, stats) in reporting order.
    pub fn strata(&self) -> [(&'static str, &StratumStats); 6] {
        [
            ("all", &self.all),
            ("small", &self.small),
            ("medium", &self.medium),
            ("large", &self.large),
            ("occluded", &self.occluded),
            ("truncated", &self.truncated),
        ]
    }
}

/// Stratified detection, association and anticipation outcomes.
///
/// `detections[f]` and `masks[f]` belong to frame `f`; `trace` comes from
/// matching the run's tracks against the same ground truth.
pub fn error_analysis(
    scene: &Scene,
    trace: &MotTrace,
    detections: &[Vec<BBox>],
    masks: &[ActivationMask],
    iou_threshold: f64,
) -> Result<ErrorAnalysis> {
    let frames = scene.frames.len();
    if detections.len() != frames || masks.len() != frames {
        return Err(Error::Dimension {
            expected: frames,
            actual: if detections.len() != frames {
                detections.len()
            } else {
                masks.len()
            },
        });
    }
    let mut first_detection: Vec<Option<usize>> = vec![None; scene.objects.len() + 1];
    let mut detected_frames = vec![0usize; scene.objects.len() + 1];
    let slot = |id: u64| id as usize;
    for (f, truth) in scene.frames.iter().enumerate() {
        let gt: Vec<BBox> = truth.objects.iter().map(|o| o.bbox).collect();
        for (gi, _) in match_frame(&gt, &detections[f], iou_threshold)? {
            let s = slot(truth.objects[gi].object_id);
            detected_frames[s] += 1;
            first_detection[s].get_or_insert(f);
        }
    }

    let mut outcomes = Vec::new();
    for obj in &scene.objects {
        let mut visible = obj.visible_frames().peekable();
        let Some(first) = visible.peek().map(|v| v.frame) else {
            continue;
        };
        let (mut occluded, mut truncated, mut count, mut anticipated) = (false, false, 0, None);
        for v in visible {
            occluded |= v.occluded;
            truncated |= v.truncated;
            count += 1;
            if anticipated.is_none() {
                let mask = &masks[v.frame];
                if scene
                    .grid
                    .patches_overlapping(&v.bbox)
                    .iter()
                    .any(|&p| mask.is_active(p))
                {
                    anticipated = Some(v.frame - first);
                }
            }
        }
        let s = slot(obj.object_id);
        outcomes.push(ObjectOutcome {
            object_id: obj.object_id,
            size_class: obj.size_class,
            occluded,
            truncated,
            visible_frames: count,
            detected_frames: detected_frames.get(s).copied().unwrap_or(0),
            id_switches: trace.switches.get(&obj.object_id).copied().unwrap_or(0),
            time_to_detect: first_detection.get(s).copied().flatten().map(|f| f - first),
            time_to_anticipate: anticipated,
        });
    }

    let by = |pred: &dyn Fn(&ObjectOutcome) -> bool| StratumStats::from_outcomes(outcomes.iter().filter(|o| pred(o)));
    Ok(ErrorAnalysis {
        all: by(&|_| true),
        small: by(&|o| o.size_class == SizeClass::Small),
        medium: by(&|o| o.size_class == SizeClass::Medium),
        large: by(&|o| o.size_class == SizeClass::Large),
        occluded: by(&|o| o.occluded),
        truncated: by(&|o| o.truncated),
        objects: outcomes,
    })
}
