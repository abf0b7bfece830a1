//! CLEAR-MOT accuracy and precision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::tracker::hungarian_solve;

/// A box with an identity, either a ground-truth object or a hypothesis track.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labeled {
    pub id: u64,
    pub bbox: BBox,
}

impl Labeled {
    pub fn new(id: u64, bbox: BBox) -> Self {
        Self { id, bbox }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    /// `None` when there are no ground-truth objects.
    pub mota: Option<f64>,
    /// Mean `1 − IoU` over matches; `None` without matches.
    pub motp: Option<f64>,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub id_switches: usize,
    pub gt_count: usize,
    pub matches: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Per-frame correspondences behind a [`MotReport`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MotTrace {
    /// (gt id, hypothesis id, IoU) per frame.
    pub frames: Vec<Vec<(u64, u64, f64)>>,
    /// ID switches charged to each ground-truth id.
    pub switches: BTreeMap<u64, usize>,
}

pub fn evaluate_mot(gt: &[Vec<Labeled>], hyp: &[Vec<Labeled>], iou_threshold: f64) -> Result<MotReport> {
    evaluate_mot_traced(gt, hyp, iou_threshold).map(|(r, _)| r)
}

/// Frame-by-frame CLEAR-MOT matching.
///
/// Correspondences from earlier frames are kept while they still pass the
/// IoU threshold; the rest are matched by a Hungarian pass on `1 − IoU`. A
/// switch is charged when a ground-truth id is matched to a hypothesis other
/// than the one it was last matched to.
pub fn evaluate_mot_traced(
    gt: &[Vec<Labeled>],
    hyp: &[Vec<Labeled>],
    iou_threshold: f64,
) -> Result<(MotReport, MotTrace)> {
    if gt.len() != hyp.len() {
        return Err(Error::Dimension {
            expected: gt.len(),
            actual: hyp.len(),
        });
    }
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "IoU threshold {iou_threshold} outside (0, 1]"
        )));
    }
    let mut last_match: BTreeMap<u64, u64> = BTreeMap::new();
    let mut trace = MotTrace::default();
    let (mut fp, mut fn_, mut idsw, mut gt_count, mut tp) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut distance_sum = 0.0;

    for (g_frame, h_frame) in gt.iter().zip(hyp) {
        let mut g_used = vec![false; g_frame.len()];
        let mut h_used = vec![false; h_frame.len()];
        let mut frame_matches: Vec<(usize, usize, f64)> = Vec::new();

        for (gi, g) in g_frame.iter().enumerate() {
            let Some(&prev) = last_match.get(&g.id) else { continue };
            if let Some(hi) = h_frame.iter().position(|h| h.id == prev) {
                let overlap = g.bbox.iou(&h_frame[hi].bbox);
                if !h_used[hi] && overlap >= iou_threshold {
                    g_used[gi] = true;
                    h_used[hi] = true;
                    frame_matches.push((gi, hi, overlap));
                }
            }
        }

        let free_g: Vec<usize> = (0..g_frame.len()).filter(|&i| !g_used[i]).collect();
        let free_h: Vec<usize> = (0..h_frame.len()).filter(|&i| !h_used[i]).collect();
        let g_boxes: Vec<BBox> = free_g.iter().map(|&i| g_frame[i].bbox).collect();
        let h_boxes: Vec<BBox> = free_h.iter().map(|&i| h_frame[i].bbox).collect();
        for (a, b) in match_frame(&g_boxes, &h_boxes, iou_threshold)? {
            let (gi, hi) = (free_g[a], free_h[b]);
            frame_matches.push((gi, hi, g_frame[gi].bbox.iou(&h_frame[hi].bbox)));
        }

        let mut record = Vec::with_capacity(frame_matches.len());
        for &(gi, hi, overlap) in &frame_matches {
            let (gid, hid) = (g_frame[gi].id, h_frame[hi].id);
            if let Some(prev) = last_match.insert(gid, hid) {
                if prev != hid {
                    idsw += 1;
                    *trace.switches.entry(gid).or_default() += 1;
                }
            }
            distance_sum += 1.0 - overlap;
            record.push((gid, hid, overlap));
        }
        record.sort_by_key(|r| r.0);
        trace.frames.push(record);

        tp += frame_matches.len();
        gt_count += g_frame.len();
        fn_ += g_frame.len() - frame_matches.len();
        fp += h_frame.len() - frame_matches.len();
    }

    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let report = MotReport {
        mota: (gt_count > 0).then(|| 1.0 - (fn_ + fp + idsw) as f64 / gt_count as f64),
        motp: (tp > 0).then(|| distance_sum / tp as f64),
        false_positives: fp,
        false_negatives: fn_,
        id_switches: idsw,
        gt_count,
        matches: tp,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, gt_count),
    };
    Ok((report, trace))
}

/// MOTA from raw counts.
pub fn mota_from_counts(gt: usize, false_negatives: usize, false_positives: usize, id_switches: usize) -> Result<f64> {
    if gt == 0 {
        return Err(Error::Undefined("MOTA with zero ground-truth objects".into()));
    }
    Ok(1.0 - (false_negatives + false_positives + id_switches) as f64 / gt as f64)
}

/// Optimal one-to-one matching of `gt` to `hyp` boxes with IoU ≥ threshold,
/// returned as (gt index, hyp index) pairs sorted by gt index.
pub fn match_frame(gt: &[BBox], hyp: &[BBox], iou_threshold: f64) -> Result<Vec<(usize, usize)>> {
    const BLOCKED: f64 = 1e6;
    if gt.is_empty() || hyp.is_empty() {
        return Ok(Vec::new());
    }
    let cost: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| {
            hyp.iter()
                .map(|h| {
                    let o = g.iou(h);
                    if o >= iou_threshold {
                        1.0 - o
                    } else {
                        BLOCKED
                    }
                })
                .collect()
        })
        .collect();
    Ok(hungarian_solve(&cost)?
        .pairs
        .into_iter()
        .filter(|&(a, b)| cost[a][b] < BLOCKED)
        .collect())
}
