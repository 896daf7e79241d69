//! Detector-threshold-swept evaluation: the tracker runs once per
//! confidence threshold and the CLEAR-MOT bundles are aggregated over the
//! sweep.
//!
//! At each threshold `t` the detections with confidence strictly greater
//! than `t` are kept, the tracker runs end-to-end on that subset, and the
//! result is scored against ground truth alongside the detector's
//! precision/recall at `t`. Aggregated `pr_*` values are the arithmetic
//! mean of each metric over the sweep points — a documented, exactly
//! reproducible approximation of curve integration.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::affinity::CostMatrix;
use crate::assignment::solve;
use crate::error::Result;
use crate::geom::{iou, FrameIndex};
use crate::metrics::{clear_mot, MetricsBundle};
use crate::mot_io::{tracks_to_set, TrackSet};
use crate::tracker::{run_sequence, Detection, FrameInput, TrackerConfig};

/// The standard 11-point sweep: thresholds 0.0 through 1.0, step 0.1.
pub const DEFAULT_THRESHOLDS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// One sweep point: detector quality at the threshold plus the tracking
/// metrics of the run on the surviving detections.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    /// Detections surviving the confidence filter.
    pub kept: u64,
    /// Detector precision at this threshold; absent when no detections
    /// survive.
    pub precision: Option<f64>,
    /// Detector recall at this threshold; absent when there is no ground
    /// truth.
    pub recall: Option<f64>,
    pub metrics: MetricsBundle,
}

/// Mean of each tracking metric over the sweep points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrAggregate {
    /// Absent only when there is no ground truth at all.
    pub pr_mota: Option<f64>,
    pub pr_motp: f64,
    /// Mean mostly-tracked fraction.
    pub pr_mt: f64,
    /// Mean mostly-lost fraction.
    pub pr_ml: f64,
    pub pr_ids: f64,
    pub pr_fm: f64,
    pub pr_fp: f64,
    pub pr_fn: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrSweepResult {
    pub points: Vec<SweepPoint>,
    pub aggregate: PrAggregate,
}

/// Keeps detections with confidence strictly greater than the threshold.
pub fn filter_by_confidence(
    inputs: &BTreeMap<FrameIndex, Vec<Detection>>,
    threshold: f64,
) -> BTreeMap<FrameIndex, Vec<Detection>> {
    let mut out = BTreeMap::new();
    for (&frame, dets) in inputs {
        let kept: Vec<Detection> = dets
            .iter()
            .filter(|d| d.confidence > threshold)
            .cloned()
            .collect();
        if !kept.is_empty() {
            out.insert(frame, kept);
        }
    }
    out
}

/// Runs the tracker over a frame map (frames between map entries are
/// treated as empty) and returns the finalized tracks as a [`TrackSet`].
pub fn track_to_set(
    inputs: &BTreeMap<FrameIndex, Vec<Detection>>,
    config: &TrackerConfig,
) -> Result<TrackSet> {
    let frames = inputs.iter().map(|(&frame, dets)| FrameInput {
        frame,
        detections: dets.clone(),
    });
    let (tracks, _) = run_sequence(config, frames)?;
    Ok(tracks_to_set(&tracks))
}

/// Detector true positives against ground truth at the overlap gate,
/// frame by frame, via minimum-cost assignment.
fn detector_true_positives(
    inputs: &BTreeMap<FrameIndex, Vec<Detection>>,
    gt: &TrackSet,
    match_iou: f64,
) -> u64 {
    let mut tp = 0u64;
    for (frame, dets) in inputs {
        let Some(gt_boxes) = gt.frame(*frame) else {
            continue;
        };
        let gts: Vec<&crate::geom::BBox> = gt_boxes.values().collect();
        let rows = dets.len();
        let cols = gts.len();
        let mut cost = vec![1.0; rows * cols];
        let mut admissible = vec![false; rows * cols];
        for (i, d) in dets.iter().enumerate() {
            for (j, g) in gts.iter().enumerate() {
                let ov = iou(&d.bbox, g);
                if ov >= match_iou {
                    cost[i * cols + j] = 1.0 - ov;
                    admissible[i * cols + j] = true;
                }
            }
        }
        tp += solve(&CostMatrix::from_parts(rows, cols, cost, admissible))
            .matches
            .len() as u64;
    }
    tp
}

/// Evaluates one threshold point: filter, track, score.
pub fn sweep_point(
    gt: &TrackSet,
    inputs: &BTreeMap<FrameIndex, Vec<Detection>>,
    config: &TrackerConfig,
    match_iou: f64,
    threshold: f64,
) -> Result<SweepPoint> {
    let filtered = filter_by_confidence(inputs, threshold);
    let kept: u64 = filtered.values().map(|v| v.len() as u64).sum();
    let hyp = track_to_set(&filtered, config)?;
    let metrics = clear_mot(gt, &hyp, match_iou);
    let tp = detector_true_positives(&filtered, gt, match_iou);
    let precision = (kept > 0).then(|| tp as f64 / kept as f64);
    let recall = (metrics.gt_count > 0).then(|| tp as f64 / metrics.gt_count as f64);
    Ok(SweepPoint {
        threshold,
        kept,
        precision,
        recall,
        metrics,
    })
}

/// Full sweep: one tracker run per threshold (points run in parallel; each
/// point is single-threaded and deterministic, so worker count cannot
/// change results), then mean aggregation.
pub fn pr_sweep(
    gt: &TrackSet,
    inputs: &BTreeMap<FrameIndex, Vec<Detection>>,
    config: &TrackerConfig,
    match_iou: f64,
    thresholds: &[f64],
) -> Result<PrSweepResult> {
    let points: Vec<SweepPoint> = thresholds
        .par_iter()
        .map(|&t| sweep_point(gt, inputs, config, match_iou, t))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&points);
    Ok(PrSweepResult { points, aggregate })
}

fn aggregate(points: &[SweepPoint]) -> PrAggregate {
    let n = points.len().max(1) as f64;
    let mean = |f: &dyn Fn(&SweepPoint) -> f64| points.iter().map(f).sum::<f64>() / n;
    let motas: Vec<f64> = points.iter().filter_map(|p| p.metrics.mota).collect();
    PrAggregate {
        pr_mota: (motas.len() == points.len() && !points.is_empty())
            .then(|| motas.iter().sum::<f64>() / n),
        pr_motp: mean(&|p| p.metrics.motp),
        pr_mt: mean(&|p| p.metrics.mt_fraction),
        pr_ml: mean(&|p| p.metrics.ml_fraction),
        pr_ids: mean(&|p| p.metrics.id_switches as f64),
        pr_fm: mean(&|p| p.metrics.fragmentations as f64),
        pr_fp: mean(&|p| p.metrics.false_positives as f64),
        pr_fn: mean(&|p| p.metrics.false_negatives as f64),
    }
}
