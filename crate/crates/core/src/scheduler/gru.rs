//! Per-patch GRU saliency predictor with truncated back-propagation through time.
//!
//! Every patch runs the same GRU cell. Its input at frame `t` is the 3×3
//! neighbourhood of evidence around the patch plus the patch's normalized
//! (row, col); a logistic head on the hidden state predicts whether the patch
//! is occupied at `t + 1`.
//!
//! ```text
//! z  = σ(Wz x + Uz h + bz)
//! r  = σ(Wr x + Ur h + br)
//! c  = tanh(Wh x + Uh (r ⊙ h) + bh)
//! h' = (1 − z) ⊙ h + z ⊙ c
//! p  = σ(wo · h' + bo)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::auroc;
use crate::rng;
use crate::scene::Scene;

pub const INPUT_DIM: usize = 11;
const MAGIC: &[u8; 4] = b"PXSG";
const FORMAT_VERSION: u32 = 1;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Offsets of each parameter block inside the flat vector.
#[derive(Clone, Copy, Debug)]
struct Layout {
    h: usize,
}

impl Layout {
    fn w(&self, gate: usize) -> usize {
        gate * self.h * INPUT_DIM
    }
    fn u(&self, gate: usize) -> usize {
        3 * self.h * INPUT_DIM + gate * self.h * self.h
    }
    fn b(&self, gate: usize) -> usize {
        3 * self.h * (INPUT_DIM + self.h) + gate * self.h
    }
    fn wo(&self) -> usize {
        3 * self.h * (INPUT_DIM + self.h + 1)
    }
    fn bo(&self) -> usize {
        self.wo() + self.h
    }
    fn len(&self) -> usize {
        self.bo() + 1
    }
}

const Z: usize = 0;
const R: usize = 1;
const C: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct GruPredictor {
    hidden_dim: usize,
    params: Vec<f64>,
}

/// Patch occupancy evidence over time on a rows×cols grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancySequence {
    pub rows: usize,
    pub cols: usize,
    /// Per frame, one value in [0, 1] per patch.
    pub frames: Vec<Vec<f64>>,
}

impl OccupancySequence {
    pub fn from_scene(scene: &Scene) -> Self {
        Self {
            rows: scene.grid.rows,
            cols: scene.grid.cols,
            frames: scene
                .frames
                .iter()
                .map(|f| f.occupancy.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn patches(&self) -> usize {
        self.rows * self.cols
    }

    fn validate(&self) -> Result<()> {
        let n = self.patches();
        if n == 0 {
            return Err(Error::InvalidInput("empty patch grid".into()));
        }
        for f in &self.frames {
            if f.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: f.len(),
                });
            }
        }
        Ok(())
    }
}

/// Input vector of every patch for one frame of evidence, row-major.
pub fn patch_inputs(rows: usize, cols: usize, evidence: &[f64]) -> Vec<[f64; INPUT_DIM]> {
    let norm = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut x = [0.0; INPUT_DIM];
            let mut k = 0;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols {
                        x[k] = evidence[nr as usize * cols + nc as usize];
                    }
                    k += 1;
                }
            }
            x[9] = norm(r, rows);
            x[10] = norm(c, cols);
            out.push(x);
        }
    }
    out
}

/// Cached activations of one cell step for one patch.
struct StepCache {
    x: [f64; INPUT_DIM],
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    p: f64,
}

impl GruPredictor {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            hidden_dim,
            params: vec![0.0; Layout { h: hidden_dim }.len()],
        }
    }

    /// Uniform initialization in ±1/√H from `seed`.
    pub fn seeded(hidden_dim: usize, seed: u64) -> Self {
        let mut model = Self::zeros(hidden_dim);
        let bound = 1.0 / (hidden_dim.max(1) as f64).sqrt();
        let mut stream = rng::stream(seed);
        for p in &mut model.params {
            *p = stream.random_range(-bound..=bound);
        }
        model
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> Layout {
        Layout { h: self.hidden_dim }
    }

    fn cell(&self, x: &[f64; INPUT_DIM], h_prev: &[f64]) -> StepCache {
        let l = self.layout();
        let hd = self.hidden_dim;
        let p = &self.params;
        let affine = |gate: usize, j: usize, h_in: &[f64]| {
            let w = &p[l.w(gate) + j * INPUT_DIM..l.w(gate) + (j + 1) * INPUT_DIM];
            let u = &p[l.u(gate) + j * hd..l.u(gate) + (j + 1) * hd];
            let mut a = p[l.b(gate) + j];
            for (wi, xi) in w.iter().zip(x) {
                a += wi * xi;
            }
            for (ui, hi) in u.iter().zip(h_in) {
                a += ui * hi;
            }
            a
        };
        let z: Vec<f64> = (0..hd).map(|j| sigmoid(affine(Z, j, h_prev))).collect();
        let r: Vec<f64> = (0..hd).map(|j| sigmoid(affine(R, j, h_prev))).collect();
        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let c: Vec<f64> = (0..hd).map(|j| affine(C, j, &rh).tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * c[j]).collect();
        let logit = p[l.bo()] + p[l.wo()..l.wo() + hd].iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
        StepCache {
            x: *x,
            h_prev: h_prev.to_vec(),
            z,
            r,
            c,
            h,
            p: sigmoid(logit),
        }
    }

    /// One step for every patch; `hidden` holds `n × H` values and is advanced in place.
    pub fn step(&self, rows: usize, cols: usize, evidence: &[f64], hidden: &mut [f64]) -> Result<Vec<f64>> {
        let n = rows * cols;
        let hd = self.hidden_dim;
        if evidence.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: evidence.len(),
            });
        }
        if hidden.len() != n * hd {
            return Err(Error::Dimension {
                expected: n * hd,
                actual: hidden.len(),
            });
        }
        let inputs = patch_inputs(rows, cols, evidence);
        let mut out = Vec::with_capacity(n);
        for (i, x) in inputs.iter().enumerate() {
            let cache = self.cell(x, &hidden[i * hd..(i + 1) * hd]);
            hidden[i * hd..(i + 1) * hd].copy_from_slice(&cache.h);
            out.push(cache.p);
        }
        Ok(out)
    }

    /// Mean binary cross-entropy over a window and its exact gradient.
    ///
    /// `evidence[t]` drives step `t` and `targets[t]` is the label for its
    /// output. Returns (loss, gradient, final hidden state).
    pub fn loss_and_gradient(
        &self,
        rows: usize,
        cols: usize,
        evidence: &[Vec<f64>],
        targets: &[Vec<f64>],
        h0: &[f64],
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = rows * cols;
        let hd = self.hidden_dim;
        let steps = evidence.len();
        if targets.len() != steps || steps == 0 {
            return Err(Error::Dimension {
                expected: steps,
                actual: targets.len(),
            });
        }
        if h0.len() != n * hd {
            return Err(Error::Dimension {
                expected: n * hd,
                actual: h0.len(),
            });
        }
        let l = self.layout();
        let p = &self.params;
        let count = (steps * n) as f64;

        let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(steps);
        let mut hidden = h0.to_vec();
        let mut loss = 0.0;
        for t in 0..steps {
            if evidence[t].len() != n || targets[t].len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: evidence[t].len().min(targets[t].len()),
                });
            }
            let inputs = patch_inputs(rows, cols, &evidence[t]);
            let mut row = Vec::with_capacity(n);
            for (i, x) in inputs.iter().enumerate() {
                let cache = self.cell(x, &hidden[i * hd..(i + 1) * hd]);
                let y = targets[t][i];
                let q = cache.p.clamp(1e-12, 1.0 - 1e-12);
                loss -= y * q.ln() + (1.0 - y) * (1.0 - q).ln();
                hidden[i * hd..(i + 1) * hd].copy_from_slice(&cache.h);
                row.push(cache);
            }
            caches.push(row);
        }
        loss /= count;

        let mut grad = vec![0.0; p.len()];
        let mut dh_next = vec![0.0; n * hd];
        let mut da = [vec![0.0; hd], vec![0.0; hd], vec![0.0; hd]];
        let mut drh = vec![0.0; hd];
        for t in (0..steps).rev() {
            for i in 0..n {
                let cache = &caches[t][i];
                let dlogit = (cache.p - targets[t][i]) / count;
                let dh = &mut dh_next[i * hd..(i + 1) * hd];
                for j in 0..hd {
                    grad[l.wo() + j] += dlogit * cache.h[j];
                    dh[j] += dlogit * p[l.wo() + j];
                }
                grad[l.bo()] += dlogit;

                let mut dh_prev = vec![0.0; hd];
                for j in 0..hd {
                    let (z, c, hp) = (cache.z[j], cache.c[j], cache.h_prev[j]);
                    da[Z][j] = dh[j] * (c - hp) * z * (1.0 - z);
                    da[C][j] = dh[j] * z * (1.0 - c * c);
                    dh_prev[j] = dh[j] * (1.0 - z);
                }
                // Candidate path: a_c = Wh x + Uh (r ⊙ h) + bh.
                drh.iter_mut().for_each(|v| *v = 0.0);
                for j in 0..hd {
                    let g = da[C][j];
                    if g == 0.0 {
                        continue;
                    }
                    let u_row = l.u(C) + j * hd;
                    for k in 0..hd {
                        grad[u_row + k] += g * cache.r[k] * cache.h_prev[k];
                        drh[k] += g * p[u_row + k];
                    }
                }
                for k in 0..hd {
                    let r = cache.r[k];
                    da[R][k] = drh[k] * cache.h_prev[k] * r * (1.0 - r);
                    dh_prev[k] += drh[k] * r;
                }
                for gate in [Z, R] {
                    for j in 0..hd {
                        let g = da[gate][j];
                        if g == 0.0 {
                            continue;
                        }
                        let u_row = l.u(gate) + j * hd;
                        for k in 0..hd {
                            grad[u_row + k] += g * cache.h_prev[k];
                            dh_prev[k] += g * p[u_row + k];
                        }
                    }
                }
                for gate in [Z, R, C] {
                    for j in 0..hd {
                        let g = da[gate][j];
                        grad[l.b(gate) + j] += g;
                        let w_row = l.w(gate) + j * INPUT_DIM;
                        for (k, xk) in cache.x.iter().enumerate() {
                            grad[w_row + k] += g * xk;
                        }
                    }
                }
                dh.copy_from_slice(&dh_prev);
            }
        }
        Ok((loss, grad, hidden))
    }

    /// Write the flat little-endian weight file.
    pub fn save(&self, path: &Path, patch_count: u32) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.to_bytes(patch_count))
            .map_err(|e| Error::io(path, e))
    }

    /// 16-byte header (magic, version, H, patch count) followed by f64 parameters.
    pub fn to_bytes(&self, patch_count: u32) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.hidden_dim as u32).to_le_bytes());
        out.extend_from_slice(&patch_count.to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Returns the predictor and the patch count recorded in the header.
    pub fn load(path: &Path) -> Result<(Self, u32)> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, u32)> {
        if bytes.len() < 16 || &bytes[0..4] != MAGIC {
            return Err(Error::InvalidInput("not a predictor weight file".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice"));
        let version = word(4);
        if version != FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported weight file version {version}"
            )));
        }
        let hidden_dim = word(8) as usize;
        let patch_count = word(12);
        let expected = Layout { h: hidden_dim }.len();
        let body = &bytes[16..];
        if body.len() != 8 * expected {
            return Err(Error::Dimension {
                expected: 8 * expected,
                actual: body.len(),
            });
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok((Self { hidden_dim, params }, patch_count))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Truncated back-propagation window in frames.
    pub bptt_length: usize,
    pub epochs: usize,
    /// Stop after this many gradient steps.
    pub max_steps: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            learning_rate: 0.05,
            bptt_length: 8,
            epochs: 20,
            max_steps: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub predictor: GruPredictor,
    pub steps: usize,
    /// Mean window loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Pooled per-patch AUROC on the held-out sequences.
    pub held_out_auroc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub steps: usize,
    pub epoch_losses: Vec<f64>,
    pub held_out_auroc: Option<f64>,
}

impl TrainingOutcome {
    pub fn summary(&self) -> TrainingSummary {
        TrainingSummary {
            steps: self.steps,
            epoch_losses: self.epoch_losses.clone(),
            held_out_auroc: self.held_out_auroc,
        }
    }
}

/// Gradient descent on next-frame occupancy, starting from a seeded initialization.
pub fn train_predictor(train: &[Scene], held_out: &[Scene], config: &TrainConfig) -> Result<TrainingOutcome> {
    let train: Vec<OccupancySequence> = train.iter().map(OccupancySequence::from_scene).collect();
    let held: Vec<OccupancySequence> = held_out.iter().map(OccupancySequence::from_scene).collect();
    train_on_sequences(
        GruPredictor::seeded(config.hidden_dim, config.seed),
        &train,
        &held,
        config,
    )
}

pub fn train_on_sequences(
    mut model: GruPredictor,
    train: &[OccupancySequence],
    held_out: &[OccupancySequence],
    config: &TrainConfig,
) -> Result<TrainingOutcome> {
    if train.is_empty() {
        return Err(Error::InvalidInput("training needs at least one scene".into()));
    }
    if config.hidden_dim == 0 || config.bptt_length == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Config(
            "hidden_dim, bptt_length and learning_rate must be positive".into(),
        ));
    }
    if model.hidden_dim != config.hidden_dim {
        return Err(Error::Dimension {
            expected: config.hidden_dim,
            actual: model.hidden_dim,
        });
    }
    for s in train.iter().chain(held_out) {
        s.validate()?;
    }
    let limit = config.max_steps.unwrap_or(usize::MAX);
    let mut steps = 0;
    let mut epoch_losses = Vec::new();
    'epochs: for _ in 0..config.epochs {
        let (mut total, mut windows) = (0.0, 0usize);
        for seq in train {
            let n = seq.patches();
            let mut hidden = vec![0.0; n * config.hidden_dim];
            let usable = seq.frames.len().saturating_sub(1);
            let mut start = 0;
            while start < usable {
                if steps >= limit {
                    if windows > 0 {
                        epoch_losses.push(total / windows as f64);
                    }
                    break 'epochs;
                }
                let end = (start + config.bptt_length).min(usable);
                let (loss, grad, h_end) = model.loss_and_gradient(
                    seq.rows,
                    seq.cols,
                    &seq.frames[start..end],
                    &seq.frames[start + 1..end + 1],
                    &hidden,
                )?;
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Divergence { step: steps, loss });
                }
                for (p, g) in model.params.iter_mut().zip(&grad) {
                    *p -= config.learning_rate * g;
                }
                hidden = h_end;
                steps += 1;
                total += loss;
                windows += 1;
                start = end;
            }
        }
        epoch_losses.push(if windows > 0 { total / windows as f64 } else { f64::NAN });
    }
    let held_out_auroc = if held_out.is_empty() {
        None
    } else {
        Some(evaluate_auroc(&model, held_out)?)
    };
    Ok(TrainingOutcome {
        predictor: model,
        steps,
        epoch_losses,
        held_out_auroc,
    })
}

/// Pooled AUROC of next-frame predictions over whole sequences.
pub fn evaluate_auroc(model: &GruPredictor, sequences: &[OccupancySequence]) -> Result<f64> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for seq in sequences {
        let mut hidden = vec![0.0; seq.patches() * model.hidden_dim];
        for t in 0..seq.frames.len().saturating_sub(1) {
            scores.extend(model.step(seq.rows, seq.cols, &seq.frames[t], &mut hidden)?);
            labels.extend(seq.frames[t + 1].iter().map(|&v| v >= 0.5));
        }
    }
    auroc(&scores, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let frames = [
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        (frames[..3].to_vec(), frames[1..].to_vec())
    }

    #[test]
    fn zero_network_predicts_one_half() {
        let m = GruPredictor::zeros(4);
        let mut h = vec![0.0; 9 * 4];
        let p = m.step(3, 3, &[1.0; 9], &mut h).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (ev, tg) = toy();
        let m = GruPredictor::seeded(5, 3);
        let h0: Vec<f64> = (0..20).map(|i| 0.1 * ((i % 7) as f64 - 3.0)).collect();
        let (_, grad, _) = m.loss_and_gradient(2, 2, &ev, &tg, &h0).unwrap();
        let step = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..m.params.len() {
            let mut plus = m.clone();
            plus.params[k] += step;
            let mut minus = m.clone();
            minus.params[k] -= step;
            let lp = plus.loss_and_gradient(2, 2, &ev, &tg, &h0).unwrap().0;
            let lm = minus.loss_and_gradient(2, 2, &ev, &tg, &h0).unwrap().0;
            let numeric = (lp - lm) / (2.0 * step);
            let denom = grad[k].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((grad[k] - numeric).abs() / denom);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn weights_round_trip() {
        let m = GruPredictor::seeded(6, 1);
        let bytes = m.to_bytes(42);
        assert_eq!(bytes.len(), 16 + 8 * m.params.len());
        let (back, n) = GruPredictor::from_bytes(&bytes).unwrap();
        assert_eq!((back, n), (m, 42));
        assert!(GruPredictor::from_bytes(&bytes[..20]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(GruPredictor::from_bytes(&bad).is_err());
    }

    #[test]
    fn zero_steps_leave_predictor_unchanged() {
        let (ev, _) = toy();
        let seq = OccupancySequence {
            rows: 2,
            cols: 2,
            frames: ev,
        };
        let cfg = TrainConfig {
            hidden_dim: 4,
            max_steps: Some(0),
            ..TrainConfig::default()
        };
        let init = GruPredictor::seeded(4, 9);
        let out = train_on_sequences(init.clone(), &[seq], &[], &cfg).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.predictor, init);
    }

    #[test]
    fn divergence_reports_step() {
        let (ev, _) = toy();
        let seq = OccupancySequence {
            rows: 2,
            cols: 2,
            frames: ev,
        };
        let mut init = GruPredictor::seeded(4, 9);
        init.params[0] = f64::NAN;
        let cfg = TrainConfig {
            hidden_dim: 4,
            ..TrainConfig::default()
        };
        let err = train_on_sequences(init, &[seq], &[], &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 0, .. }));
    }

    #[test]
    fn training_reduces_loss() {
        let (ev, _) = toy();
        let seq = OccupancySequence {
            rows: 2,
            cols: 2,
            frames: ev,
        };
        let cfg = TrainConfig {
            hidden_dim: 4,
            epochs: 200,
            learning_rate: 0.5,
            ..TrainConfig::default()
        };
        let out = train_on_sequences(GruPredictor::seeded(4, 2), &[seq], &[], &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);
    }
}
