use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SensedPatch;
use crate::error::{Error, Result};
use crate::rng;

/// Dense D×S linear map applied in-pixel to each active patch.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    dim: usize,
    samples: usize,
    weights: Vec<f64>,
}

impl Projection {
    /// Seeded random basis with entries uniform in [-1/sqrt(S), 1/sqrt(S)].
    pub fn seeded(dim: usize, samples: usize, seed: u64) -> Result<Self> {
        if dim == 0 || samples == 0 {
            return Err(Error::Config(format!("projection shape {dim}x{samples}")));
        }
        let bound = 1.0 / (samples as f64).sqrt();
        let mut stream = rng::stream(seed);
        let weights = (0..dim * samples)
            .map(|_| stream.random_range(-bound..=bound))
            .collect();
        Ok(Self { dim, samples, weights })
    }

    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self {
            dim: n,
            samples: n,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.samples {
            return Err(Error::Dimension {
                expected: self.samples,
                actual: samples.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.samples)
            .map(|row| row.iter().zip(samples).map(|(w, s)| w * s).sum())
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchFeature {
    pub patch: usize,
    pub values: Vec<f64>,
}

pub fn extract_features(patch: &SensedPatch, projection: &Projection) -> Result<PatchFeature> {
    Ok(PatchFeature {
        patch: patch.index,
        values: projection.project(&patch.samples)?,
    })
}
