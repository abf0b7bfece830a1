//! The closed sensing loop: select → sense → detect → track → score.

use serde::{Deserialize, Serialize};

use crate::detector::{coverage_fraction, detect_oracle, load_detections, Detection, DetectionReplay};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::metrics::{
    edp_report, error_analysis, evaluate_mot_traced, AurocAccumulator, EdpReport, ErrorAnalysis, Labeled, MotReport,
    SaliencyReport,
};
use crate::rng::derive_seed;
use crate::scene::{generate_scene, Renderer, Scene};
use crate::scheduler::{full_sense_due, GruPredictor, PredictorKind, Scheduler};
use crate::sensor::{sense, ActivationMask, BandwidthLedger, BandwidthSummary, PatchGrid, Projection};
use crate::tracker::{TrackOutput, Tracker};

use super::config::{DerivedSeeds, DetectionSource, RunConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub frames: usize,
    pub mot: MotReport,
    pub saliency: SaliencyReport,
    pub errors: ErrorAnalysis,
    pub bandwidth: BandwidthSummary,
    pub edp: Option<EdpReport>,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    /// Resolved configuration.
    pub config: RunConfig,
    pub seeds: DerivedSeeds,
    pub scene: Scene,
    pub masks: Vec<ActivationMask>,
    pub detections: Vec<Vec<Detection>>,
    pub tracks: Vec<Vec<TrackOutput>>,
    pub bandwidth: BandwidthLedger,
    pub report: RunReport,
}

enum Source {
    Oracle,
    Replay(DetectionReplay),
}

pub fn run_simulation(config: &RunConfig) -> Result<RunArtifacts> {
    let config = config.resolved()?;
    let seeds = config.seeds();
    let grid = PatchGrid::new(config.scene.width_px, config.scene.height_px, config.sensor.patch_size)?;
    let scene = generate_scene(&config.scene, &grid)?;
    let renderer = Renderer::new(&scene);
    let n = grid.len();
    let frames = config.scene.num_frames;

    let source = match &config.detection {
        DetectionSource::Oracle(_) => Source::Oracle,
        DetectionSource::File(path) => Source::Replay(load_detections(path)?),
    };
    let recurrent = match (config.scheduler.predictor, &config.predictor_weights) {
        (PredictorKind::Recurrent, Some(path)) => {
            let (model, patches) = GruPredictor::load(path)?;
            if patches != 0 && patches as usize != n {
                log::warn!("predictor trained on {patches} patches, running on {n}");
            }
            Some(model)
        }
        _ => None,
    };
    let projection = Projection::seeded(
        config.sensor.feature_dim,
        config.sensor.samples_per_patch(),
        seeds.projection,
    )?;
    let mut tracker = Tracker::new(config.tracker.clone())?;
    let mut scheduler = Scheduler::new(config.scheduler.clone(), grid, seeds.scheduler, recurrent)?;
    let mut ledger = BandwidthLedger::new(n);
    let mut saliency = AurocAccumulator::default();

    let mut masks = Vec::with_capacity(frames);
    let mut all_detections = Vec::with_capacity(frames);
    let mut all_tracks = Vec::with_capacity(frames);
    let mut next_mask = ActivationMask::full(0, n);

    for t in 0..frames {
        let mask = std::mem::replace(&mut next_mask, ActivationMask::empty(t + 1, n));
        let truth = &scene.frames[t];

        let mut detections = match &source {
            Source::Oracle => {
                let DetectionSource::Oracle(oracle) = &config.detection else {
                    unreachable!()
                };
                detect_oracle(truth, &mask, &grid, &config.sensor, oracle, seeds.detector)
                    .map_err(|e| e.at_stage(t, "detect"))?
            }
            Source::Replay(replay) => replay
                .frame(t + 1)
                .iter()
                .filter(|d| coverage_fraction(&d.bbox, &mask, &grid).is_ok_and(|c| c > 0.0))
                .cloned()
                .collect(),
        };
        attach_appearance(
            &mut detections,
            &renderer,
            &grid,
            &mask,
            &config,
            &projection,
            seeds.noise,
            t,
        )
        .map_err(|e| e.at_stage(t, "sense"))?;

        tracker.step(&detections, t).map_err(|e| e.at_stage(t, "track"))?;
        all_tracks.push(tracker.outputs());

        if t + 1 < frames {
            let evidence: Vec<BBox> = detections.iter().map(|d| d.bbox).collect();
            let plan = scheduler
                .plan(t + 1, tracker.tracks(), &evidence)
                .map_err(|e| e.at_stage(t, "schedule"))?;
            saliency.extend(&plan.priority, &scene.frames[t + 1].occupancy)?;
            next_mask = plan.mask;
        }

        ledger.record(
            &mask,
            config.sensor.feature_dim,
            full_sense_due(t, config.scheduler.full_sense_period),
        );
        masks.push(mask);
        all_detections.push(detections);
    }

    let gt: Vec<Vec<Labeled>> = scene
        .frames
        .iter()
        .map(|f| f.objects.iter().map(|o| Labeled::new(o.object_id, o.bbox)).collect())
        .collect();
    let hyp: Vec<Vec<Labeled>> = all_tracks
        .iter()
        .map(|f: &Vec<TrackOutput>| f.iter().map(|o| Labeled::new(o.track_id, o.bbox)).collect())
        .collect();
    let (mot, trace) = evaluate_mot_traced(&gt, &hyp, config.iou_threshold)?;
    let det_boxes: Vec<Vec<BBox>> = all_detections
        .iter()
        .map(|f: &Vec<Detection>| f.iter().map(|d| d.bbox).collect())
        .collect();
    let errors = error_analysis(&scene, &trace, &det_boxes, &masks, config.iou_threshold)?;
    let edp = config.edp.as_ref().map(edp_report).transpose()?;
    let report = RunReport {
        frames,
        mot,
        saliency: saliency.report(),
        errors,
        bandwidth: ledger.summary(),
        edp,
    };
    Ok(RunArtifacts {
        config,
        seeds,
        scene,
        masks,
        detections: all_detections,
        tracks: all_tracks,
        bandwidth: ledger,
        report,
    })
}

/// Mean-pooled features of the sensed patches under each detection.
///
/// By linearity of the projection this equals projecting the mean of the
/// patches' noisy samples, which is what is computed.
#[allow(clippy::too_many_arguments)]
fn attach_appearance(
    detections: &mut [Detection],
    renderer: &Renderer<'_>,
    grid: &PatchGrid,
    mask: &ActivationMask,
    config: &RunConfig,
    projection: &Projection,
    noise_seed: u64,
    frame: usize,
) -> Result<()> {
    let under: Vec<Vec<usize>> = detections
        .iter()
        .map(|d| {
            grid.patches_overlapping(&d.bbox)
                .into_iter()
                .filter(|&p| mask.is_active(p))
                .collect()
        })
        .collect();
    if under.iter().all(Vec::is_empty) {
        return Ok(());
    }
    let needed = ActivationMask::from_indices(frame, grid.len(), under.iter().flatten().copied());
    let image = renderer.render(frame)?;
    let sensed = sense(
        &image,
        grid,
        &needed,
        config.sensor.pixel_format,
        &config.sensor.noise,
        derive_seed(noise_seed, frame as u64),
    )?;
    let s = sensed.samples_per_patch;
    for (det, patches) in detections.iter_mut().zip(&under) {
        if patches.is_empty() {
            continue;
        }
        let mut mean = vec![0.0; s];
        for &p in patches {
            let patch = sensed
                .patch(p)
                .ok_or_else(|| Error::InvalidInput(format!("patch {p} was not sensed")))?;
            for (m, v) in mean.iter_mut().zip(&patch.samples) {
                *m += v;
            }
        }
        let k = patches.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        det.appearance = projection.project(&mean)?;
    }
    Ok(())
}
