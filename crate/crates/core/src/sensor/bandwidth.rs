use serde::{Deserialize, Serialize};

use super::ActivationMask;

/// Feature dimension of the full-sense RGB baseline link.
pub const REFERENCE_FEATURE_DIM: usize = 768;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBandwidth {
    pub active_patches: usize,
    pub values: u64,
    pub full_sense: bool,
}

/// Digitized feature values crossing the sensor→backend link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthLedger {
    pub patch_count: usize,
    pub reference_dim: usize,
    pub frames: Vec<FrameBandwidth>,
    pub running_total: u64,
    pub baseline_total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSummary {
    pub frames: usize,
    pub total_values: u64,
    pub baseline_values: u64,
    pub mean_active_fraction: f64,
    pub reduction: Option<f64>,
    pub reduction_excluding_full_sense: Option<f64>,
}

impl BandwidthLedger {
    pub fn new(patch_count: usize) -> Self {
        Self::with_reference(patch_count, REFERENCE_FEATURE_DIM)
    }

    pub fn with_reference(patch_count: usize, reference_dim: usize) -> Self {
        Self {
            patch_count,
            reference_dim,
            frames: Vec::new(),
            running_total: 0,
            baseline_total: 0,
        }
    }

    fn baseline_per_frame(&self) -> u64 {
        (self.patch_count * self.reference_dim) as u64
    }

    pub fn record(&mut self, mask: &ActivationMask, feature_dim: usize, full_sense: bool) {
        let active = mask.active_count();
        let values = (active * feature_dim) as u64;
        self.frames.push(FrameBandwidth {
            active_patches: active,
            values,
            full_sense,
        });
        self.running_total += values;
        self.baseline_total += self.baseline_per_frame();
    }

    /// Baseline volume over transmitted volume, all frames counted.
    pub fn reduction(&self) -> Option<f64> {
        (self.running_total > 0).then(|| self.baseline_total as f64 / self.running_total as f64)
    }

    /// Same ratio over the budgeted frames only.
    pub fn reduction_excluding_full_sense(&self) -> Option<f64> {
        let (sent, base) = self
            .frames
            .iter()
            .filter(|f| !f.full_sense)
            .fold((0u64, 0u64), |(s, b), f| (s + f.values, b + self.baseline_per_frame()));
        (sent > 0).then(|| base as f64 / sent as f64)
    }

    pub fn summary(&self) -> BandwidthSummary {
        let n = self.frames.len();
        let mean_active_fraction = if n == 0 || self.patch_count == 0 {
            0.0
        } else {
            self.frames.iter().map(|f| f.active_patches as f64).sum::<f64>() / (n * self.patch_count) as f64
        };
        BandwidthSummary {
            frames: n,
            total_values: self.running_total,
            baseline_values: self.baseline_total,
            mean_active_fraction,
            reduction: self.reduction(),
            reduction_excluding_full_sense: self.reduction_excluding_full_sense(),
        }
    }
}

/// Functional form of [`BandwidthLedger::record`] for a budgeted frame.
pub fn record_bandwidth(mut ledger: BandwidthLedger, mask: &ActivationMask, feature_dim: usize) -> BandwidthLedger {
    ledger.record(mask, feature_dim, false);
    ledger
}
