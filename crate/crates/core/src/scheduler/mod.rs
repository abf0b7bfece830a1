//! Anticipatory patch scheduling.
//!
//! Each live track is scored by three components in [0, 1]: mean predicted
//! saliency over the patches it is expected to cover, detection uncertainty
//! (`1 − confidence`) and tracking uncertainty (relative growth of its
//! covariance determinant). The weighted sum orders objects; their patches
//! are admitted until the budget is spent and leftover slots go to the most
//! salient remaining patches. Every `N`-th frame is sensed in full.

mod gru;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::rng;
use crate::sensor::{ActivationMask, PatchGrid};
use crate::tracker::Track;

pub use gru::{
    evaluate_auroc, patch_inputs, train_on_sequences, train_predictor, GruPredictor, OccupancySequence, TrainConfig,
    TrainingOutcome, TrainingSummary, INPUT_DIM,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub saliency: f64,
    pub detection: f64,
    pub tracking: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self::equal()
    }
}

impl ScoreWeights {
    pub fn equal() -> Self {
        Self {
            saliency: 1.0 / 3.0,
            detection: 1.0 / 3.0,
            tracking: 1.0 / 3.0,
        }
    }

    pub fn saliency_only() -> Self {
        Self::new(1.0, 0.0, 0.0)
    }

    pub fn detection_only() -> Self {
        Self::new(0.0, 1.0, 0.0)
    }

    pub fn tracking_only() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn new(saliency: f64, detection: f64, tracking: f64) -> Self {
        Self {
            saliency,
            detection,
            tracking,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.saliency, self.detection, self.tracking];
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("score weights {w:?} must be non-negative")));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("score weights {w:?} must sum to 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    #[default]
    ConstantVelocity,
    Recurrent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionPolicy {
    /// Object scores, then saliency.
    #[default]
    Scored,
    /// Uniform sample without replacement.
    Random,
}

/// Saliency levels of the constant-velocity predictor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvLevels {
    pub overlap: f64,
    pub ring: f64,
    pub background: f64,
}

impl Default for CvLevels {
    fn default() -> Self {
        Self {
            overlap: 0.9,
            ring: 0.5,
            background: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub budget_fraction: f64,
    pub full_sense_period: usize,
    pub weights: ScoreWeights,
    pub epsilon: f64,
    pub predictor: PredictorKind,
    pub policy: SelectionPolicy,
    pub cv_levels: CvLevels,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            budget_fraction: 0.30,
            full_sense_period: 16,
            weights: ScoreWeights::equal(),
            epsilon: 1e-6,
            predictor: PredictorKind::default(),
            policy: SelectionPolicy::default(),
            cv_levels: CvLevels::default(),
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(Error::Config(format!("budget {} outside (0, 1]", self.budget_fraction)));
        }
        if self.full_sense_period == 0 {
            return Err(Error::Config("full-sense period must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        let l = self.cv_levels;
        if [l.overlap, l.ring, l.background]
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Config(
                "constant-velocity saliency levels must be in [0, 1]".into(),
            ));
        }
        self.weights.validate()
    }

    /// Number of active patches on a budgeted frame.
    pub fn budget(&self, n: usize) -> Result<usize> {
        budget_patches(self.budget_fraction, n)
    }
}

/// `floor(fraction · n)`, tolerant of representation error just below an integer.
pub fn budget_patches(fraction: f64, n: usize) -> Result<usize> {
    let b = (fraction * n as f64 + 1e-9).floor() as usize;
    if b == 0 {
        return Err(Error::Config(format!(
            "budget {fraction} of {n} patches selects nothing"
        )));
    }
    Ok(b.min(n))
}

/// Per-patch probability that the patch is occupied next frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchSaliency {
    pub values: Vec<f64>,
}

impl PatchSaliency {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("saliency {v} outside [0, 1]")));
        }
        Ok(Self { values })
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self { values: vec![value; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub object_id: u64,
    pub s_sal: f64,
    pub s_det: f64,
    pub s_trk: f64,
    pub combined: f64,
}

/// An object competing for patches.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledObject {
    pub score: ObjectScore,
    pub patches: Vec<usize>,
}

pub fn full_sense_due(frame_index: usize, period: usize) -> bool {
    period > 0 && frame_index.is_multiple_of(period)
}

/// Mean saliency over `patches`; 0 (with a warning) when there are none.
pub fn object_saliency_score(patches: &[usize], saliency: &PatchSaliency) -> f64 {
    if patches.is_empty() {
        log::warn!("object overlaps no patch; saliency score set to 0");
        return 0.0;
    }
    patches.iter().map(|&p| saliency.values[p]).sum::<f64>() / patches.len() as f64
}

pub fn detection_uncertainty_score(confidence: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::InvalidInput(format!("confidence {confidence} outside [0, 1]")));
    }
    Ok(1.0 - confidence)
}

/// `max((det_t − det_prev) / (det_t + ε), 0)`.
pub fn tracking_uncertainty_score(det_t: f64, det_prev: f64, epsilon: f64) -> Result<f64> {
    if !(det_t >= 0.0 && det_prev >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "covariance determinants must be non-negative, got {det_t} and {det_prev}"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    Ok(((det_t - det_prev) / (det_t + epsilon)).max(0.0))
}

pub fn combine_scores(s_sal: f64, s_det: f64, s_trk: f64, weights: &ScoreWeights) -> f64 {
    weights.saliency * s_sal + weights.detection * s_det + weights.tracking * s_trk
}

/// Every patch in selection order.
///
/// Objects go by descending combined score (ties to the lower id), each
/// contributing its patches by descending saliency; the remaining patches
/// follow by descending saliency, then by distance to the image border,
/// then by index.
pub fn patch_ranking(objects: &[ScheduledObject], saliency: &PatchSaliency, grid: &PatchGrid) -> Result<Vec<usize>> {
    let n = grid.len();
    if saliency.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: saliency.len(),
        });
    }
    let by_saliency = |a: &usize, b: &usize| saliency.values[*b].total_cmp(&saliency.values[*a]).then(a.cmp(b));
    let mut order: Vec<&ScheduledObject> = objects.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .combined
            .total_cmp(&a.score.combined)
            .then(a.score.object_id.cmp(&b.score.object_id))
    });
    let mut taken = vec![false; n];
    let mut ranking = Vec::with_capacity(n);
    for obj in order {
        let mut patches: Vec<usize> = obj.patches.iter().copied().filter(|&p| p < n && !taken[p]).collect();
        patches.sort_by(by_saliency);
        patches.dedup();
        for p in patches {
            taken[p] = true;
            ranking.push(p);
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&p| !taken[p]).collect();
    rest.sort_by(|a, b| {
        saliency.values[*b]
            .total_cmp(&saliency.values[*a])
            .then(grid.border_distance(*a).cmp(&grid.border_distance(*b)))
            .then(a.cmp(b))
    });
    ranking.extend(rest);
    Ok(ranking)
}

/// Exactly `floor(budget_fraction · n)` patches chosen per [`patch_ranking`].
pub fn select_patches(
    objects: &[ScheduledObject],
    saliency: &PatchSaliency,
    grid: &PatchGrid,
    budget_fraction: f64,
    frame_index: usize,
) -> Result<ActivationMask> {
    let budget = budget_patches(budget_fraction, grid.len())?;
    let ranking = patch_ranking(objects, saliency, grid)?;
    Ok(ActivationMask::from_indices(
        frame_index,
        grid.len(),
        ranking.into_iter().take(budget),
    ))
}

/// Saliency from boxes extrapolated one frame: overlapped patches, a
/// one-patch ring around them, and everything else get fixed levels.
pub fn constant_velocity_saliency(predicted: &[BBox], grid: &PatchGrid, levels: &CvLevels) -> PatchSaliency {
    let mut values = vec![levels.background; grid.len()];
    let mut ring = Vec::new();
    for b in predicted {
        for p in grid.patches_overlapping(b) {
            values[p] = values[p].max(levels.overlap);
            ring.extend(grid.neighbours(p));
        }
    }
    for p in ring {
        values[p] = values[p].max(levels.ring);
    }
    PatchSaliency { values }
}

/// Everything the scheduler decided for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub frame_index: usize,
    pub mask: ActivationMask,
    pub full_sense: bool,
    /// Per-patch priority in (0, 1]; higher means selected earlier.
    pub priority: Vec<f64>,
    pub saliency: PatchSaliency,
    pub objects: Vec<ObjectScore>,
}

enum Predictor {
    ConstantVelocity,
    Recurrent { model: GruPredictor, hidden: Vec<f64> },
}

/// Stateful scheduler of one simulation.
pub struct Scheduler {
    config: SchedulerConfig,
    grid: PatchGrid,
    predictor: Predictor,
    seed: u64,
}

impl Scheduler {
    /// `recurrent` supplies the weights when the recurrent predictor is selected.
    pub fn new(config: SchedulerConfig, grid: PatchGrid, seed: u64, recurrent: Option<GruPredictor>) -> Result<Self> {
        config.validate()?;
        config.budget(grid.len())?;
        let predictor = match config.predictor {
            PredictorKind::ConstantVelocity => Predictor::ConstantVelocity,
            PredictorKind::Recurrent => {
                let model =
                    recurrent.ok_or_else(|| Error::Config("recurrent predictor selected without weights".into()))?;
                let hidden = vec![0.0; grid.len() * model.hidden_dim()];
                Predictor::Recurrent { model, hidden }
            }
        };
        Ok(Self {
            config,
            grid,
            predictor,
            seed,
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    /// Mask for `frame_index` from the tracker state and detections of the previous frame.
    pub fn plan(&mut self, frame_index: usize, tracks: &[Track], evidence: &[BBox]) -> Result<Plan> {
        let n = self.grid.len();
        let predicted: Vec<BBox> = tracks.iter().map(Track::predicted_bbox).collect();
        let saliency = match &mut self.predictor {
            Predictor::ConstantVelocity => constant_velocity_saliency(&predicted, &self.grid, &self.config.cv_levels),
            Predictor::Recurrent { model, hidden } => {
                let occ: Vec<f64> = self
                    .grid
                    .occupancy(evidence.iter().copied())
                    .into_iter()
                    .map(|b| if b { 1.0 } else { 0.0 })
                    .collect();
                PatchSaliency::new(model.step(self.grid.rows, self.grid.cols, &occ, hidden)?)?
            }
        };

        let mut scores = Vec::new();
        let ranking = match self.config.policy {
            SelectionPolicy::Random => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng::substream(self.seed, frame_index as u64));
                order
            }
            SelectionPolicy::Scored => {
                let mut objects = Vec::with_capacity(tracks.len());
                for (t, b) in tracks.iter().zip(&predicted) {
                    let patches = self.grid.patches_overlapping(b);
                    if patches.is_empty() {
                        continue;
                    }
                    let s_sal = object_saliency_score(&patches, &saliency);
                    let s_det = match t.last_confidence {
                        Some(c) => detection_uncertainty_score(c)?,
                        None => 1.0,
                    };
                    let s_trk = tracking_uncertainty_score(t.det_current, t.det_prev, self.config.epsilon)?;
                    let score = ObjectScore {
                        object_id: t.track_id,
                        s_sal,
                        s_det,
                        s_trk,
                        combined: combine_scores(s_sal, s_det, s_trk, &self.config.weights),
                    };
                    scores.push(score);
                    objects.push(ScheduledObject { score, patches });
                }
                patch_ranking(&objects, &saliency, &self.grid)?
            }
        };

        let mut priority = vec![0.0; n];
        for (rank, &p) in ranking.iter().enumerate() {
            priority[p] = 1.0 - rank as f64 / n as f64;
        }
        let full_sense = full_sense_due(frame_index, self.config.full_sense_period);
        let mask = if full_sense {
            ActivationMask::full(frame_index, n)
        } else {
            let budget = self.config.budget(n)?;
            ActivationMask::from_indices(frame_index, n, ranking.into_iter().take(budget))
        };
        Ok(Plan {
            frame_index,
            mask,
            full_sense,
            priority,
            saliency,
            objects: scores,
        })
    }
}
