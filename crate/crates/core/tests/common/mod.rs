//! Shared harness for integration tests: contiguous frame feeding, a
//! baseline-config helper, and an independently written plain IOU-gated
//! tracker used as the differential oracle for the beta = 0 reduction.
//!
//! Each test target uses a subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeMap;

use viou_core::affinity::{AssocParams, CostMatrix};
use viou_core::assignment::solve;
use viou_core::geom::{iou, BBox, FrameIndex};
use viou_core::mot_io::tracks_to_set;
use viou_core::predictor::{
    predict_backward, predict_forward, PredictorKind, DEFAULT_VELOCITY_WINDOW,
};
use viou_core::synth::Scenario;
use viou_core::tracker::{run_sequence, BoxSource, Detection, FrameInput, Track, TrackerConfig};

/// Expands a sparse frame map into a contiguous input stream.
pub fn contiguous_inputs(map: &BTreeMap<FrameIndex, Vec<Detection>>) -> Vec<FrameInput> {
    let Some((&first, _)) = map.iter().next() else {
        return Vec::new();
    };
    let &last = map.keys().next_back().unwrap();
    (first..=last)
        .map(|frame| FrameInput {
            frame,
            detections: map.get(&frame).cloned().unwrap_or_default(),
        })
        .collect()
}

/// Runs the production tracker over a scenario.
pub fn run_scenario(config: &TrackerConfig, scenario: &Scenario) -> Vec<Track> {
    let inputs = contiguous_inputs(&scenario.inputs());
    let (tracks, _) = run_sequence(config, inputs).expect("scenario tracks");
    tracks
}

/// Scores scenario output against its own ground truth.
pub fn eval_scenario(config: &TrackerConfig, scenario: &Scenario) -> viou_core::MetricsBundle {
    let tracks = run_scenario(config, scenario);
    viou_core::metrics::clear_mot(&scenario.gt, &tracks_to_set(&tracks), 0.5)
}

/// The plain spatial baseline: full weight on the overlap term.
pub fn beta_zero_config() -> TrackerConfig {
    TrackerConfig {
        assoc: AssocParams::new(1.0, 0.0, 0.6, 0.7, 0.1).expect("valid params"),
        ..TrackerConfig::default()
    }
}

/// Comparable shape of a finalized track: id plus per-frame boxes with a
/// one-letter source tag.
pub type Signature = Vec<(u64, Vec<(u64, f64, f64, f64, f64, char)>)>;

pub fn signature_of(tracks: &[Track]) -> Signature {
    tracks
        .iter()
        .map(|t| {
            (
                t.id,
                t.boxes
                    .iter()
                    .map(|b| {
                        let s = match b.source {
                            BoxSource::Detected => 'd',
                            BoxSource::Predicted => 'p',
                            BoxSource::Interpolated => 'i',
                        };
                        (b.frame, b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h, s)
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Independently written plain V-IOU lifecycle: IOU-gated optimal
/// assignment, TTL-bounded constant-velocity coasting with rollback,
/// IOU-gated backward merging, minimum-length pruning. No appearance
/// anywhere. Kept deliberately tuple-level so it shares no track
/// bookkeeping with the production implementation.
pub struct ReferenceViou {
    pub sigma_iou: f64,
    pub ttl: u32,
    pub t_min: usize,
}

struct RefTrack {
    id: u64,
    boxes: Vec<(u64, BBox, char)>,
    coast: u32,
}

impl RefTrack {
    fn last_detected(&self) -> (u64, BBox) {
        let (f, b, _) = *self
            .boxes
            .iter()
            .rev()
            .find(|(_, _, s)| *s == 'd')
            .expect("reference tracks start from a detection");
        (f, b)
    }

    fn detected_history(&self, window: usize) -> Vec<(u64, BBox)> {
        let mut h: Vec<(u64, BBox)> = self
            .boxes
            .iter()
            .rev()
            .filter(|(_, _, s)| *s == 'd')
            .take(window)
            .map(|(f, b, _)| (*f, *b))
            .collect();
        h.reverse();
        h
    }

    fn trim(&mut self) {
        while self.boxes.last().map(|(_, _, s)| *s != 'd').unwrap_or(false) {
            self.boxes.pop();
        }
    }
}

impl ReferenceViou {
    pub fn run(&self, inputs: &[FrameInput]) -> Signature {
        const W: usize = DEFAULT_VELOCITY_WINDOW;
        const CV: PredictorKind = PredictorKind::ConstantVelocity;
        let mut live: Vec<RefTrack> = Vec::new();
        let mut dead: Vec<RefTrack> = Vec::new();
        let mut next_id = 1u64;

        for input in inputs {
            let frame = input.frame;
            let predictions: Vec<BBox> = live
                .iter()
                .map(|t| {
                    let (lf, _) = t.last_detected();
                    predict_forward(&t.detected_history(W), (frame - lf) as u32, CV, W)
                })
                .collect();

            let rows = input.detections.len();
            let cols = live.len();
            let mut cost = vec![1.0; rows * cols];
            let mut admissible = vec![false; rows * cols];
            for (i, d) in input.detections.iter().enumerate() {
                for (j, p) in predictions.iter().enumerate() {
                    let ov = iou(&d.bbox, p);
                    cost[i * cols + j] = 1.0 - ov;
                    admissible[i * cols + j] = ov >= self.sigma_iou;
                }
            }
            let assignment = solve(&CostMatrix::from_parts(rows, cols, cost, admissible));

            for &(i, j, _) in &assignment.matches {
                let t = &mut live[j];
                t.boxes.push((frame, input.detections[i].bbox, 'd'));
                t.coast = 0;
            }
            let mut expired: Vec<usize> = Vec::new();
            for &j in &assignment.unmatched_tracks {
                let t = &mut live[j];
                t.coast += 1;
                if t.coast > self.ttl {
                    expired.push(j);
                } else {
                    t.boxes.push((frame, predictions[j], 'p'));
                }
            }
            for &j in expired.iter().rev() {
                let mut t = live.remove(j);
                t.trim();
                dead.push(t);
            }

            for &i in &assignment.unmatched_detections {
                let birth_box = input.detections[i].bbox;
                let id = next_id;
                next_id += 1;
                let newborn = RefTrack {
                    id,
                    boxes: vec![(frame, birth_box, 'd')],
                    coast: 0,
                };

                // Backward merge, IOU gate only: compare the newborn's
                // backward extrapolation with each candidate's final
                // detected box.
                let mut best: Option<(f64, u64, bool, usize)> = None;
                let hist = vec![(frame, birth_box)];
                let candidates = live
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.coast > 0)
                    .map(|(k, t)| (true, k, t))
                    .chain(dead.iter().enumerate().map(|(k, t)| (false, k, t)));
                for (in_live, k, t) in candidates {
                    let (lf, lb) = t.last_detected();
                    let age = frame - lf;
                    if age > u64::from(self.ttl) {
                        continue;
                    }
                    let back = predict_backward(&hist, age as u32, CV, W);
                    let ov = iou(&back, &lb);
                    if ov < self.sigma_iou {
                        continue;
                    }
                    let c = 1.0 - ov;
                    let better = match best {
                        None => true,
                        Some((bc, bid, _, _)) => c < bc || (c == bc && t.id < bid),
                    };
                    if better {
                        best = Some((c, t.id, in_live, k));
                    }
                }
                match best {
                    Some((_, _, in_live, k)) => {
                        let mut survivor = if in_live { live.remove(k) } else { dead.remove(k) };
                        survivor.trim();
                        let (af, ab) = survivor.last_detected();
                        let span = (frame - af) as f64;
                        for f in af + 1..frame {
                            let t01 = (f - af) as f64 / span;
                            let l = |a: f64, b: f64| a + (b - a) * t01;
                            survivor.boxes.push((
                                f,
                                BBox::new(
                                    l(ab.x, birth_box.x),
                                    l(ab.y, birth_box.y),
                                    l(ab.w, birth_box.w),
                                    l(ab.h, birth_box.h),
                                ),
                                'i',
                            ));
                        }
                        survivor.boxes.push((frame, birth_box, 'd'));
                        survivor.coast = 0;
                        live.push(survivor);
                    }
                    None => live.push(newborn),
                }
            }
        }

        let mut all: Vec<RefTrack> = dead;
        for mut t in live {
            t.trim();
            all.push(t);
        }
        all.retain(|t| t.boxes.iter().filter(|(_, _, s)| *s == 'd').count() >= self.t_min);
        all.sort_by_key(|t| t.id);
        all.iter()
            .map(|t| {
                (
                    t.id,
                    t.boxes
                        .iter()
                        .map(|(f, b, s)| (*f, b.x, b.y, b.w, b.h, *s))
                        .collect(),
                )
            })
            .collect()
    }
}
