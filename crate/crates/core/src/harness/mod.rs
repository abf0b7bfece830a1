//! Run configuration, the closed sensing loop, ablations, sweeps, outputs and rendering.

pub mod config;
pub mod mot_csv;
pub mod output;
pub mod render;
pub mod sim;
pub mod study;
pub mod train;

pub use config::{AblationMode, DerivedSeeds, DetectionSource, Overrides, RunConfig, OUTPUT_DIR_ENV};
pub use output::{replay_manifest, write_outputs, ReplayOutcome, RunManifest};
pub use render::{render_annotated, render_run, render_sensed};
pub use sim::{run_simulation, RunArtifacts, RunReport};
pub use study::{
    run_ablation, run_ablation_seeds, run_sweep, sweep_configs, AblationReport, AblationRow, SweepAxes, SweepResult,
};
pub use train::{generate_scenes, train_from_config};
