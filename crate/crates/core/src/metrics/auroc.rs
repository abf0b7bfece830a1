use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pooled per-patch saliency quality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyReport {
    pub auroc: Option<f64>,
    pub positives: usize,
    pub negatives: usize,
}

/// Rank-based (Mann–Whitney) area under the ROC curve; tied scores count ½.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("AUROC scores contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined(format!(
            "AUROC needs both classes ({positives} positive, {negatives} negative)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 1-based average ranks of the positives.
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mean_rank = (start + end + 1) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| labels[i]).count();
        positive_rank_sum += mean_rank * tied_pos as f64;
        start = end;
    }
    let (p, n) = (positives as f64, negatives as f64);
    Ok((positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Accumulates (score, label) pairs over frames.
#[derive(Clone, Debug, Default)]
pub struct AurocAccumulator {
    scores: Vec<f64>,
    labels: Vec<bool>,
}

impl AurocAccumulator {
    pub fn extend(&mut self, scores: &[f64], labels: &[bool]) -> Result<()> {
        if scores.len() != labels.len() {
            return Err(Error::Dimension {
                expected: scores.len(),
                actual: labels.len(),
            });
        }
        self.scores.extend_from_slice(scores);
        self.labels.extend_from_slice(labels);
        Ok(())
    }

    pub fn report(&self) -> SaliencyReport {
        let positives = self.labels.iter().filter(|&&l| l).count();
        SaliencyReport {
            auroc: auroc(&self.scores, &self.labels).ok(),
            positives,
            negatives: self.labels.len() - positives,
        }
    }
}
