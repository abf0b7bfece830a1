//! Training the recurrent saliency predictor on generated scenes.

use crate::error::Result;
use crate::rng::derive_seed;
use crate::scene::{generate_scene, Scene};
use crate::scheduler::{train_predictor, TrainConfig, TrainingOutcome};
use crate::sensor::PatchGrid;

use super::config::RunConfig;

/// `count` scenes with the run's scene settings, seeded from `base_seed + i`.
pub fn generate_scenes(config: &RunConfig, base_seed: u64, count: usize) -> Result<Vec<Scene>> {
    let grid = PatchGrid::new(config.scene.width_px, config.scene.height_px, config.sensor.patch_size)?;
    (0..count)
        .map(|i| {
            let mut sc = config.scene.clone();
            sc.seed = derive_seed(base_seed, i as u64);
            generate_scene(&sc, &grid)
        })
        .collect()
}

/// Train on `train_scenes` scenes and score on `held_out` further ones; all
/// seeds derive from the run's master seed.
pub fn train_from_config(
    config: &RunConfig,
    train_scenes: usize,
    held_out: usize,
    train: &TrainConfig,
) -> Result<(TrainingOutcome, usize)> {
    config.validate()?;
    let base = derive_seed(config.seed, 0x74_7261_696e);
    let scenes = generate_scenes(config, base, train_scenes + held_out)?;
    let patches = scenes.first().map_or(0, |s| s.grid.len());
    let (tr, ho) = scenes.split_at(train_scenes);
    Ok((train_predictor(tr, ho, train)?, patches))
}
