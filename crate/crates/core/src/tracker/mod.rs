//! SORT/DeepSORT-style multi-object tracker.
//!
//! Each frame: predict every track, associate with a single Hungarian pass
//! over a blended IoU/appearance cost, update matched tracks, spawn
//! tentative tracks from leftover detections and delete stale ones.

mod hungarian;
mod kalman;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::geometry::BBox;

pub use hungarian::{hungarian_solve, Assignment};
pub use kalman::{
    correct, propagate, transition, DeterminantScope, KalmanFilter, KalmanState, Measurement, StateCovariance,
    StateVector,
};

/// Cost assigned to gated pairs before the Hungarian pass; any pair at this
/// cost in the solution is discarded.
const GATED_COST: f64 = 1e6;
const MIN_HEIGHT: f64 = 1.0;
const MIN_ASPECT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssocConfig {
    /// Pairs with IoU below this are never matched.
    pub iou_gate: f64,
    /// λ in `λ·appearance + (1−λ)·(1−IoU)`.
    pub appearance_weight: f64,
    pub max_age: usize,
    pub n_init: usize,
    pub gallery_capacity: usize,
    pub kalman: KalmanFilter,
    pub determinant_scope: DeterminantScope,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self {
            iou_gate: 0.3,
            appearance_weight: 0.5,
            max_age: 16,
            n_init: 3,
            gallery_capacity: 10,
            kalman: KalmanFilter::default(),
            determinant_scope: DeterminantScope::default(),
        }
    }
}

impl AssocConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_gate) {
            return Err(Error::Config(format!("iou_gate {} outside [0, 1]", self.iou_gate)));
        }
        if !(0.0..=1.0).contains(&self.appearance_weight) {
            return Err(Error::Config(format!(
                "appearance_weight {} outside [0, 1]",
                self.appearance_weight
            )));
        }
        if self.n_init == 0 || self.gallery_capacity == 0 {
            return Err(Error::Config("n_init and gallery_capacity must be positive".into()));
        }
        let k = &self.kalman;
        if !(k.std_weight_position > 0.0 && k.std_weight_velocity > 0.0 && k.measurement_noise_scale > 0.0) {
            return Err(Error::Config("Kalman noise weights must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub track_id: u64,
    pub state: KalmanState,
    pub hits: usize,
    pub age: usize,
    pub time_since_update: usize,
    pub status: TrackStatus,
    pub gallery: VecDeque<Vec<f64>>,
    /// Covariance determinant at the previous frame.
    pub det_prev: f64,
    /// Covariance determinant after this frame's predict/update.
    pub det_current: f64,
    /// Confidence of the detection matched this frame, if any.
    pub last_confidence: Option<f64>,
}

impl Track {
    pub fn bbox(&self) -> BBox {
        self.state.bbox()
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }

    /// Box expected on the next frame under constant velocity.
    pub fn predicted_bbox(&self) -> BBox {
        let m = &self.state.mean;
        BBox::from_xyah([
            m[0] + m[4],
            m[1] + m[5],
            (m[2] + m[6]).max(MIN_ASPECT),
            (m[3] + m[7]).max(MIN_HEIGHT),
        ])
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Blended association cost, or `None` when the pair is gated out.
///
/// When either side has no appearance vector the cost falls back to `1 − IoU`.
pub fn association_cost(track: &Track, detection: &Detection, config: &AssocConfig) -> Result<Option<f64>> {
    let overlap = track.bbox().iou(&detection.bbox);
    if overlap < config.iou_gate || overlap <= 0.0 {
        return Ok(None);
    }
    let geometric = 1.0 - overlap;
    if track.gallery.is_empty() || detection.appearance.is_empty() {
        return Ok(Some(geometric));
    }
    let mut best = f64::NEG_INFINITY;
    for g in &track.gallery {
        best = best.max(cosine_similarity(g, &detection.appearance)?);
    }
    let lambda = config.appearance_weight;
    Ok(Some(lambda * (1.0 - best) + (1.0 - lambda) * geometric))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Association {
    /// (track index, detection index), sorted by track index.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

pub fn associate(tracks: &[Track], detections: &[Detection], config: &AssocConfig) -> Result<Association> {
    let mut cost = vec![vec![GATED_COST; detections.len()]; tracks.len()];
    for (i, t) in tracks.iter().enumerate() {
        for (j, d) in detections.iter().enumerate() {
            if let Some(c) = association_cost(t, d, config)? {
                cost[i][j] = c;
            }
        }
    }
    let solution = hungarian_solve(&cost)?;
    let matches: Vec<(usize, usize)> = solution
        .pairs
        .into_iter()
        .filter(|&(i, j)| cost[i][j] < GATED_COST)
        .collect();
    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    for &(i, j) in &matches {
        track_used[i] = true;
        det_used[j] = true;
    }
    Ok(Association {
        matches,
        unmatched_tracks: (0..tracks.len()).filter(|&i| !track_used[i]).collect(),
        unmatched_detections: (0..detections.len()).filter(|&j| !det_used[j]).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackDeterminant {
    pub track_id: u64,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackerEvents {
    pub frame_index: usize,
    /// (track id, detection index)
    pub matches: Vec<(u64, usize)>,
    pub births: Vec<u64>,
    pub deaths: Vec<u64>,
    pub confirmed: Vec<u64>,
    pub determinants: Vec<TrackDeterminant>,
}

/// A confirmed track reported for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub frame_index: usize,
    pub track_id: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Clone, Debug)]
pub struct Tracker {
    config: AssocConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<usize>,
}

impl Tracker {
    pub fn new(config: AssocConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &AssocConfig {
        &self.config
    }

    /// Live (tentative or confirmed) tracks.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn step(&mut self, detections: &[Detection], frame_index: usize) -> Result<TrackerEvents> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(Error::InvalidInput(format!(
                    "frame index {frame_index} does not follow {last}"
                )));
            }
        }
        self.last_frame = Some(frame_index);
        for d in detections {
            if !(d.bbox.w > 0.0 && d.bbox.h > 0.0) || !d.bbox.is_finite() {
                return Err(Error::InvalidInput(format!("detection box {:?} is degenerate", d.bbox)));
            }
        }

        let kf = self.config.kalman.clone();
        let scope = self.config.determinant_scope;
        for t in &mut self.tracks {
            t.det_prev = scope.determinant(&t.state.covariance);
            t.state = kf.predict(&t.state)?;
            t.state.mean[2] = t.state.mean[2].max(MIN_ASPECT);
            t.state.mean[3] = t.state.mean[3].max(MIN_HEIGHT);
            t.age += 1;
            t.time_since_update += 1;
            t.last_confidence = None;
        }

        let assoc = associate(&self.tracks, detections, &self.config)?;
        let mut events = TrackerEvents {
            frame_index,
            ..TrackerEvents::default()
        };
        for &(ti, di) in &assoc.matches {
            let det = &detections[di];
            let t = &mut self.tracks[ti];
            match kf.update(&t.state, &det.bbox) {
                Ok(s) => t.state = s,
                Err(Error::Numerical(msg)) => log::warn!("track {}: update skipped: {msg}", t.track_id),
                Err(e) => return Err(e),
            }
            t.hits += 1;
            t.time_since_update = 0;
            t.last_confidence = Some(det.confidence);
            if !det.appearance.is_empty() {
                if t.gallery.len() == self.config.gallery_capacity {
                    t.gallery.pop_front();
                }
                t.gallery.push_back(det.appearance.clone());
            }
            if t.status == TrackStatus::Tentative && t.hits >= self.config.n_init {
                t.status = TrackStatus::Confirmed;
            }
            events.matches.push((t.track_id, di));
        }

        for t in &mut self.tracks {
            let missed = t.time_since_update > 0;
            if (missed && t.status == TrackStatus::Tentative) || t.time_since_update > self.config.max_age {
                t.status = TrackStatus::Deleted;
                events.deaths.push(t.track_id);
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Deleted);

        for &di in &assoc.unmatched_detections {
            let det = &detections[di];
            let state = kf.initiate(&det.bbox)?;
            let d = scope.determinant(&state.covariance);
            let mut gallery = VecDeque::with_capacity(self.config.gallery_capacity);
            if !det.appearance.is_empty() {
                gallery.push_back(det.appearance.clone());
            }
            let status = if self.config.n_init <= 1 {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            };
            self.tracks.push(Track {
                track_id: self.next_id,
                state,
                hits: 1,
                age: 1,
                time_since_update: 0,
                status,
                gallery,
                det_prev: d,
                det_current: d,
                last_confidence: Some(det.confidence),
            });
            events.births.push(self.next_id);
            self.next_id += 1;
        }

        for t in &mut self.tracks {
            t.det_current = scope.determinant(&t.state.covariance);
            if !(t.det_current.is_finite() && t.det_prev.is_finite()) {
                return Err(Error::Numerical(format!(
                    "track {} covariance determinant is not finite",
                    t.track_id
                )));
            }
            events.determinants.push(TrackDeterminant {
                track_id: t.track_id,
                before: t.det_prev,
                after: t.det_current,
            });
            if t.is_confirmed() {
                events.confirmed.push(t.track_id);
            }
        }
        Ok(events)
    }

    /// Confirmed tracks updated on the current frame.
    pub fn outputs(&self) -> Vec<TrackOutput> {
        let frame_index = self.last_frame.unwrap_or(0);
        self.tracks
            .iter()
            .filter(|t| t.is_confirmed() && t.time_since_update == 0)
            .map(|t| TrackOutput {
                frame_index,
                track_id: t.track_id,
                bbox: t.bbox(),
                confidence: t.last_confidence.unwrap_or(1.0),
            })
            .collect()
    }
}
