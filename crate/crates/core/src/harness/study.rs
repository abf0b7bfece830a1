//! Ablations over scoring modes and cross-product sweeps over sensor axes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sensor::{NoiseModel, PixelFormat};

use super::config::{AblationMode, RunConfig};
use super::output::{summary_header, summary_row};
use super::sim::{run_simulation, RunReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: AblationMode,
    pub runs: usize,
    pub mota: Option<f64>,
    pub motp: Option<f64>,
    pub auroc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub id_switches: f64,
    pub bandwidth_reduction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seeds: Vec<u64>,
    pub frames: usize,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, mode: AblationMode) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("mode,runs,mota,motp,auroc,precision,recall,id_switches,bandwidth_reduction\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.mode,
                r.runs,
                f(r.mota),
                f(r.motp),
                f(r.auroc),
                f(r.precision),
                f(r.recall),
                r.id_switches,
                f(r.bandwidth_reduction)
            ));
        }
        out
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Same scene and seeds for every mode; only the scheduling policy varies.
pub fn run_ablation(config: &RunConfig, modes: &[AblationMode]) -> Result<AblationReport> {
    run_ablation_seeds(config, modes, &[config.seed])
}

/// Ablation averaged over several master seeds.
pub fn run_ablation_seeds(config: &RunConfig, modes: &[AblationMode], seeds: &[u64]) -> Result<AblationReport> {
    let jobs: Vec<(AblationMode, u64)> = modes.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    let reports: Vec<RunReport> = jobs
        .par_iter()
        .map(|&(mode, seed)| {
            let mut c = config.with_mode(mode);
            c.seed = seed;
            run_simulation(&c).map(|a| a.report)
        })
        .collect::<Result<_>>()?;
    let rows = modes
        .iter()
        .enumerate()
        .map(|(i, &mode)| {
            let group = &reports[i * seeds.len()..(i + 1) * seeds.len()];
            AblationRow {
                mode,
                runs: group.len(),
                mota: mean_of(group.iter().map(|r| r.mot.mota)),
                motp: mean_of(group.iter().map(|r| r.mot.motp)),
                auroc: mean_of(group.iter().map(|r| r.saliency.auroc)),
                precision: mean_of(group.iter().map(|r| r.mot.precision)),
                recall: mean_of(group.iter().map(|r| r.mot.recall)),
                id_switches: group.iter().map(|r| r.mot.id_switches as f64).sum::<f64>() / group.len().max(1) as f64,
                bandwidth_reduction: mean_of(group.iter().map(|r| r.bandwidth.reduction)),
            }
        })
        .collect();
    Ok(AblationReport {
        seeds: seeds.to_vec(),
        frames: config.scene.num_frames,
        rows,
    })
}

/// Values per axis; an empty axis keeps the base configuration's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub pixel_format: Vec<PixelFormat>,
    pub feature_dim: Vec<usize>,
    pub budget: Vec<f64>,
    pub noise: Vec<NoiseModel>,
    pub mode: Vec<AblationMode>,
    pub seed: Vec<u64>,
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

/// Cross product of the axes, pixel format outermost and seed innermost.
pub fn sweep_configs(base: &RunConfig, axes: &SweepAxes) -> Vec<RunConfig> {
    let mut out = Vec::new();
    let modes: Vec<Option<AblationMode>> = if axes.mode.is_empty() {
        vec![None]
    } else {
        axes.mode.iter().copied().map(Some).collect()
    };
    for pf in or_base(&axes.pixel_format, base.sensor.pixel_format) {
        for fd in or_base(&axes.feature_dim, base.sensor.feature_dim) {
            for b in or_base(&axes.budget, base.scheduler.budget_fraction) {
                for nz in or_base(&axes.noise, base.sensor.noise.clone()) {
                    for m in &modes {
                        for s in or_base(&axes.seed, base.seed) {
                            let mut c = match m {
                                Some(m) => base.with_mode(*m),
                                None => base.clone(),
                            };
                            c.sensor.pixel_format = pf;
                            c.sensor.feature_dim = fd;
                            c.scheduler.budget_fraction = b;
                            c.sensor.noise = nz.clone();
                            c.seed = s;
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub configs: Vec<RunConfig>,
    pub reports: Vec<RunReport>,
}

impl SweepResult {
    /// Aggregate CSV: header plus one row per run.
    pub fn to_csv(&self) -> String {
        let mut out = summary_header();
        out.push('\n');
        for (c, r) in self.configs.iter().zip(&self.reports) {
            out.push_str(&summary_row(c, r));
            out.push('\n');
        }
        out
    }
}

/// Run every configuration of the sweep; `parallel` only changes scheduling, not results.
pub fn run_sweep(base: &RunConfig, axes: &SweepAxes, parallel: bool) -> Result<SweepResult> {
    let configs = sweep_configs(base, axes);
    let run = |c: &RunConfig| -> Result<(RunConfig, RunReport)> {
        let a = run_simulation(c)?;
        Ok((a.config, a.report))
    };
    let results: Vec<(RunConfig, RunReport)> = if parallel {
        configs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        configs.iter().map(run).collect::<Result<_>>()?
    };
    let (configs, reports) = results.into_iter().unzip();
    Ok(SweepResult { configs, reports })
}
