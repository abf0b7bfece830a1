//! Run persistence: JSON report, flat CSV row, MOT files, masks and the manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scheduler::{ScoreWeights, SelectionPolicy};

use super::config::{DerivedSeeds, RunConfig};
use super::mot_csv::{format_mot_csv, MotRecord};
use super::sim::{run_simulation, RunArtifacts, RunReport};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACKS_FILE: &str = "tracks.txt";
pub const DETECTIONS_FILE: &str = "detections.txt";
pub const GT_FILE: &str = "gt.txt";
pub const MASKS_FILE: &str = "masks.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Columns of the flat per-run CSV, in order.
pub const SUMMARY_COLUMNS: [&str; 20] = [
    "seed",
    "frames",
    "mode",
    "pixel_format",
    "feature_dim",
    "noise",
    "budget",
    "full_sense_period",
    "mota",
    "motp",
    "id_switches",
    "false_positives",
    "false_negatives",
    "gt_count",
    "precision",
    "recall",
    "auroc",
    "mean_active_fraction",
    "bandwidth_reduction",
    "bandwidth_reduction_excluding_full_sense",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub master_seed: u64,
    pub seeds: DerivedSeeds,
    /// Fully resolved configuration.
    pub config: RunConfig,
    /// SHA-256 of each output file.
    pub files: BTreeMap<String, String>,
    /// SHA-256 over the per-file digests in name order.
    pub digest: String,
}

/// Scheduling mode label of a configuration.
pub fn mode_label(config: &RunConfig) -> &'static str {
    let s = &config.scheduler;
    if s.policy == SelectionPolicy::Random {
        return "random";
    }
    let w = s.weights;
    if w == ScoreWeights::saliency_only() {
        "saliency-only"
    } else if w == ScoreWeights::detection_only() {
        "detection-only"
    } else if w == ScoreWeights::tracking_only() {
        "tracking-only"
    } else if w == ScoreWeights::equal() {
        "all"
    } else {
        "custom"
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row (no newline) for a run, in [`SUMMARY_COLUMNS`] order.
pub fn summary_row(config: &RunConfig, report: &RunReport) -> String {
    let m = &report.mot;
    let b = &report.bandwidth;
    [
        config.seed.to_string(),
        report.frames.to_string(),
        mode_label(config).to_string(),
        config.sensor.pixel_format.to_string(),
        config.sensor.feature_dim.to_string(),
        config.sensor.noise.label(),
        config.scheduler.budget_fraction.to_string(),
        config.scheduler.full_sense_period.to_string(),
        opt(m.mota),
        opt(m.motp),
        m.id_switches.to_string(),
        m.false_positives.to_string(),
        m.false_negatives.to_string(),
        m.gt_count.to_string(),
        opt(m.precision),
        opt(m.recall),
        opt(report.saliency.auroc),
        b.mean_active_fraction.to_string(),
        opt(b.reduction),
        opt(b.reduction_excluding_full_sense),
    ]
    .join(",")
}

pub fn summary_header() -> String {
    SUMMARY_COLUMNS.join(",")
}

pub fn gt_records(artifacts: &RunArtifacts) -> Vec<MotRecord> {
    artifacts
        .scene
        .frames
        .iter()
        .flat_map(|f| {
            f.objects.iter().map(move |o| MotRecord {
                frame: f.frame_index + 1,
                id: o.object_id as i64,
                bbox: o.bbox,
                confidence: 1.0,
                class_id: -1,
                visibility: o.visibility,
            })
        })
        .collect()
}

pub fn track_records(artifacts: &RunArtifacts) -> Vec<MotRecord> {
    artifacts
        .tracks
        .iter()
        .flatten()
        .map(|t| MotRecord {
            frame: t.frame_index + 1,
            id: t.track_id as i64,
            bbox: t.bbox,
            confidence: t.confidence,
            class_id: -1,
            visibility: -1.0,
        })
        .collect()
}

pub fn detection_records(artifacts: &RunArtifacts) -> Vec<MotRecord> {
    artifacts
        .detections
        .iter()
        .enumerate()
        .flat_map(|(f, dets)| {
            dets.iter().map(move |d| MotRecord {
                frame: f + 1,
                id: -1,
                bbox: d.bbox,
                confidence: d.confidence,
                class_id: d.class_id,
                visibility: -1.0,
            })
        })
        .collect()
}

/// Serialized outputs by file name, excluding the manifest.
pub fn output_files(artifacts: &RunArtifacts) -> Result<BTreeMap<&'static str, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let mut report = serde_json::to_vec_pretty(&artifacts.report)?;
    report.push(b'\n');
    files.insert(REPORT_FILE, report);
    let mut csv = summary_header();
    let _ = writeln!(csv);
    let _ = writeln!(csv, "{}", summary_row(&artifacts.config, &artifacts.report));
    files.insert(SUMMARY_FILE, csv.into_bytes());
    files.insert(TRACKS_FILE, format_mot_csv(&track_records(artifacts)).into_bytes());
    files.insert(
        DETECTIONS_FILE,
        format_mot_csv(&detection_records(artifacts)).into_bytes(),
    );
    files.insert(GT_FILE, format_mot_csv(&gt_records(artifacts)).into_bytes());
    files.insert(MASKS_FILE, artifacts.masks.iter().flat_map(|m| m.to_bytes()).collect());
    Ok(files)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

pub fn build_manifest(artifacts: &RunArtifacts, files: &BTreeMap<&'static str, Vec<u8>>) -> RunManifest {
    let digests: BTreeMap<String, String> = files.iter().map(|(k, v)| (k.to_string(), sha256_hex(v))).collect();
    let mut combined = Sha256::new();
    for (name, d) in &digests {
        combined.update(name.as_bytes());
        combined.update(b"\0");
        combined.update(d.as_bytes());
        combined.update(b"\n");
    }
    RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: artifacts.config.seed,
        seeds: artifacts.seeds,
        config: artifacts.config.clone(),
        files: digests,
        digest: sha256_hex(&combined.finalize()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write every output and the manifest into `dir`.
pub fn write_outputs(artifacts: &RunArtifacts, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = output_files(artifacts)?;
    for (name, bytes) in &files {
        write_file(&dir.join(name), bytes)?;
    }
    let manifest = build_manifest(artifacts, &files);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_file(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub original: RunManifest,
    pub replayed: RunManifest,
    pub output_dir: PathBuf,
}

impl ReplayOutcome {
    pub fn reproduced(&self) -> bool {
        self.original.digest == self.replayed.digest && self.original.files == self.replayed.files
    }

    /// Names of files whose digest changed.
    pub fn mismatches(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .original
            .files
            .iter()
            .filter(|(k, v)| self.replayed.files.get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect();
        names.extend(
            self.replayed
                .files
                .keys()
                .filter(|k| !self.original.files.contains_key(*k))
                .cloned(),
        );
        names
    }
}

/// Re-run the configuration stored in a manifest and compare output digests.
pub fn replay_manifest(manifest_path: &Path, out_dir: &Path) -> Result<ReplayOutcome> {
    let original = read_manifest(manifest_path)?;
    let artifacts = run_simulation(&original.config)?;
    let replayed = write_outputs(&artifacts, out_dir)?;
    Ok(ReplayOutcome {
        original,
        replayed,
        output_dir: out_dir.to_path_buf(),
    })
}
