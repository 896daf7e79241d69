//! Online tracking state machine: per-frame association, TTL-bounded
//! coasting, backward merging into recently ended tracks, and minimum-length
//! pruning.
//!
//! One tracker instance owns one sequence and must be fed frames in
//! strictly increasing order. Multiple sequences run in parallel with
//! independent instances.

use std::sync::Arc;

use crate::affinity::{build_cost_matrix, cosine, pair_cost, AssocParams, Candidate, Embedding};
use crate::assignment::solve;
use crate::error::{Error, Result};
use crate::geom::{BBox, FrameIndex, TrackId};
use crate::predictor::{predict_backward, predict_forward, PredictorKind, DEFAULT_VELOCITY_WINDOW};

/// Lifecycle state of a track.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    /// Matched a detection on the most recent frame.
    Active,
    /// Unmatched but within the TTL window, advanced by predicted boxes.
    Coasting,
    /// Completed; no further updates except a backward merge revival.
    Finished,
}

/// Provenance of one per-frame box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxSource {
    /// Real detector evidence.
    Detected,
    /// Motion-model extrapolation appended while coasting.
    Predicted,
    /// Gap fill between boundary detections after a backward merge.
    Interpolated,
}

/// One entry of a track's box sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBox {
    pub frame: FrameIndex,
    pub bbox: BBox,
    pub source: BoxSource,
    /// Detection confidence for detected boxes; carried forward from the
    /// most recent detection for predicted and interpolated boxes.
    pub confidence: f64,
}

/// Identity-stamped trajectory with lifecycle state and appearance summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub state: TrackState,
    /// One box per frame, contiguous from `created_at` to the last entry.
    pub boxes: Vec<TrackBox>,
    /// Exponential moving average of observed embeddings, unit norm.
    pub embedding_ema: Option<Embedding>,
    /// Raw embedding of the most recent matched detection.
    pub last_embedding: Option<Arc<Embedding>>,
    /// Frames spent coasting in the current gap.
    pub coast_count: u32,
    pub created_at: FrameIndex,
    pub finished_at: Option<FrameIndex>,
}

impl Track {
    fn new(id: TrackId, frame: FrameIndex, det: &Detection) -> Self {
        Track {
            id,
            state: TrackState::Active,
            boxes: vec![TrackBox {
                frame,
                bbox: det.bbox,
                source: BoxSource::Detected,
                confidence: det.confidence,
            }],
            embedding_ema: det.embedding.as_deref().cloned(),
            last_embedding: det.embedding.clone(),
            coast_count: 0,
            created_at: frame,
            finished_at: None,
        }
    }

    /// Number of detected (evidence-backed) boxes.
    pub fn detected_count(&self) -> usize {
        self.boxes
            .iter()
            .filter(|b| b.source == BoxSource::Detected)
            .count()
    }

    /// Most recent detected box. Every track starts from a detection, so
    /// this always exists.
    pub fn last_detected(&self) -> &TrackBox {
        self.boxes
            .iter()
            .rev()
            .find(|b| b.source == BoxSource::Detected)
            .expect("track has at least one detected box")
    }

    /// Up to `window` most recent detected entries, oldest first.
    fn recent_detected(&self, window: usize) -> Vec<(FrameIndex, BBox)> {
        let mut hist: Vec<(FrameIndex, BBox)> = self
            .boxes
            .iter()
            .rev()
            .filter(|b| b.source == BoxSource::Detected)
            .take(window)
            .map(|b| (b.frame, b.bbox))
            .collect();
        hist.reverse();
        hist
    }

    /// Rolls the box sequence back to the last detected box, dropping
    /// trailing predictions so finished tracks end at real evidence.
    fn trim_trailing_predictions(&mut self) {
        while matches!(
            self.boxes.last().map(|b| b.source),
            Some(BoxSource::Predicted) | Some(BoxSource::Interpolated)
        ) {
            self.boxes.pop();
        }
        debug_assert!(!self.boxes.is_empty());
    }

    fn finish(&mut self) {
        self.trim_trailing_predictions();
        self.state = TrackState::Finished;
        self.finished_at = Some(self.boxes.last().expect("non-empty track").frame);
    }

    fn update_appearance(&mut self, emb: &Arc<Embedding>, momentum: f64) {
        self.embedding_ema = match self.embedding_ema.take() {
            None => Some((**emb).clone()),
            Some(prev) => {
                let mixed: Vec<f64> = prev
                    .values()
                    .iter()
                    .zip(emb.values())
                    .map(|(a, b)| momentum * a + (1.0 - momentum) * b)
                    .collect();
                match Embedding::new(mixed) {
                    Ok(e) => Some(e),
                    // Opposed vectors cancelled out; restart from the
                    // fresh observation.
                    Err(_) => Some((**emb).clone()),
                }
            }
        };
        self.last_embedding = Some(emb.clone());
    }
}

/// One frame-local detection candidate.
#[derive(Debug, Clone)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    /// Detector class label, passed through untouched (-1 if absent).
    pub class_id: i32,
    pub embedding: Option<Arc<Embedding>>,
}

impl Detection {
    pub fn new(bbox: BBox, confidence: f64) -> Self {
        Detection {
            bbox,
            confidence,
            class_id: -1,
            embedding: None,
        }
    }

    pub fn with_embedding(mut self, embedding: Arc<Embedding>) -> Self {
        self.embedding = Some(embedding);
        self
    }
}

/// All detections of one frame.
#[derive(Debug, Clone)]
pub struct FrameInput {
    pub frame: FrameIndex,
    pub detections: Vec<Detection>,
}

/// Tracker parameters. Defaults are the tuned operating point:
/// `sigma_iou` 0.6, `alpha` 0.7, `beta` 0.3, `ttl` 15, `t_min` 3.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub assoc: AssocParams,
    /// Maximum consecutive frames a track may coast before it ends.
    pub ttl: u32,
    /// Minimum detected-box count for a track to appear in final output.
    pub t_min: u32,
    /// Momentum of the per-track appearance moving average.
    pub ema_momentum: f64,
    /// Attempt to merge new tracks backward into recently ended ones.
    pub backward_enabled: bool,
    /// Gate backward merges on appearance alone instead of the fused cost.
    pub backward_appearance_only: bool,
    pub predictor: PredictorKind,
    /// History entries used for velocity estimation.
    pub velocity_window: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            assoc: AssocParams::default(),
            ttl: 15,
            t_min: 3,
            ema_momentum: 0.9,
            backward_enabled: true,
            backward_appearance_only: false,
            predictor: PredictorKind::ConstantVelocity,
            velocity_window: DEFAULT_VELOCITY_WINDOW,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.assoc.validate()?;
        if self.t_min < 1 {
            return Err(Error::Config("t_min must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ema_momentum) {
            return Err(Error::Config(format!(
                "ema_momentum must be in [0, 1], got {}",
                self.ema_momentum
            )));
        }
        if self.velocity_window < 1 {
            return Err(Error::Config("velocity_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened during one frame step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameEvents {
    pub frame: FrameIndex,
    /// `(track id, detection index, association cost)` per match.
    pub matches: Vec<(TrackId, usize, f64)>,
    pub births: Vec<TrackId>,
    pub coasting: Vec<TrackId>,
    pub deaths: Vec<TrackId>,
    /// `(surviving track id, retired newborn id)` per backward merge.
    pub merges: Vec<(TrackId, TrackId)>,
}

/// Online tracker over one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    live: Vec<Track>,
    finished: Vec<Track>,
    next_id: TrackId,
    last_frame: Option<FrameIndex>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            live: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live (active or coasting) tracks, in association column order.
    pub fn live_tracks(&self) -> &[Track] {
        &self.live
    }

    /// Consumes one frame. Frames must strictly increase; skipped frame
    /// indices are treated as frames with no detections and processed
    /// internally, so track box sequences stay contiguous.
    pub fn step(&mut self, input: FrameInput) -> Result<FrameEvents> {
        if let Some(last) = self.last_frame {
            if input.frame <= last {
                return Err(Error::OutOfOrderFrame {
                    frame: input.frame,
                    last,
                });
            }
            let mut f = last + 1;
            while f < input.frame {
                self.advance(f, Vec::new())?;
                f += 1;
            }
        }
        self.advance(input.frame, input.detections)
    }

    fn advance(&mut self, frame: FrameIndex, detections: Vec<Detection>) -> Result<FrameEvents> {
        let mut events = FrameEvents {
            frame,
            ..FrameEvents::default()
        };

        // Every live track contributes its anticipated box for this frame,
        // extrapolated from detected evidence across the current gap.
        let mut predicted: Vec<BBox> = Vec::with_capacity(self.live.len());
        for track in &self.live {
            let gap = frame - track.last_detected().frame;
            let hist = track.recent_detected(self.config.velocity_window);
            predicted.push(predict_forward(
                &hist,
                gap as u32,
                self.config.predictor,
                self.config.velocity_window,
            ));
        }

        let det_side: Vec<Candidate<'_>> = detections
            .iter()
            .map(|d| (d.bbox, d.embedding.as_deref()))
            .collect();
        let trk_side: Vec<Candidate<'_>> = self
            .live
            .iter()
            .zip(&predicted)
            .map(|(t, b)| (*b, t.embedding_ema.as_ref()))
            .collect();
        let matrix = build_cost_matrix(&det_side, &trk_side, &self.config.assoc)?;
        let assignment = solve(&matrix);

        for &(det_i, col_j, cost) in &assignment.matches {
            let det = &detections[det_i];
            let track = &mut self.live[col_j];
            debug_assert_eq!(
                track.boxes.last().map(|b| b.frame),
                Some(frame - 1),
                "live track boxes must reach the previous frame"
            );
            track.boxes.push(TrackBox {
                frame,
                bbox: det.bbox,
                source: BoxSource::Detected,
                confidence: det.confidence,
            });
            track.coast_count = 0;
            track.state = TrackState::Active;
            if let Some(emb) = &det.embedding {
                track.update_appearance(emb, self.config.ema_momentum);
            }
            events.matches.push((track.id, det_i, cost));
        }

        // Unmatched tracks coast on predictions until the TTL runs out.
        let mut dead: Vec<usize> = Vec::new();
        for &col_j in &assignment.unmatched_tracks {
            let track = &mut self.live[col_j];
            track.coast_count += 1;
            if track.coast_count > self.config.ttl {
                dead.push(col_j);
                events.deaths.push(track.id);
            } else {
                let confidence = track.boxes.last().expect("non-empty track").confidence;
                track.boxes.push(TrackBox {
                    frame,
                    bbox: predicted[col_j],
                    source: BoxSource::Predicted,
                    confidence,
                });
                track.state = TrackState::Coasting;
                events.coasting.push(track.id);
            }
        }
        for &idx in dead.iter().rev() {
            let mut track = self.live.remove(idx);
            track.finish();
            self.finished.push(track);
        }

        let mut newborns: Vec<Track> = Vec::new();
        for &det_i in &assignment.unmatched_detections {
            let id = self.next_id;
            self.next_id += 1;
            newborns.push(Track::new(id, frame, &detections[det_i]));
            events.births.push(id);
        }

        if self.config.backward_enabled {
            for newborn in newborns {
                match self.try_merge_backward(&newborn, frame)? {
                    Some(survivor) => events.merges.push((survivor, newborn.id)),
                    None => self.live.push(newborn),
                }
            }
        } else {
            self.live.extend(newborns);
        }

        self.last_frame = Some(frame);
        Ok(events)
    }

    /// Attempts to splice a track born this frame onto a recently ended
    /// one: the newborn's backward extrapolation is compared against each
    /// candidate's final detected box and appearance summary. On success
    /// the candidate absorbs the newborn under its original id and the gap
    /// is filled by linear interpolation between the boundary detections.
    fn try_merge_backward(&mut self, newborn: &Track, frame: FrameIndex) -> Result<Option<TrackId>> {
        let p = &self.config.assoc;
        let birth_hist = newborn.recent_detected(self.config.velocity_window);
        let birth_emb = newborn.last_embedding.as_deref();

        enum Where {
            Live(usize),
            Finished(usize),
        }
        let mut best: Option<(f64, TrackId, Where)> = None;
        let candidates = self
            .live
            .iter()
            .enumerate()
            .filter(|(_, t)| t.state == TrackState::Coasting)
            .map(|(i, t)| (Where::Live(i), t))
            .chain(
                self.finished
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (Where::Finished(i), t)),
            );
        for (loc, track) in candidates {
            let last = track.last_detected();
            let age = frame - last.frame;
            if age > u64::from(self.config.ttl) {
                continue;
            }
            let back = predict_backward(
                &birth_hist,
                age as u32,
                self.config.predictor,
                self.config.velocity_window,
            );
            let overlap = crate::geom::iou(&back, &last.bbox);
            let cos = match (birth_emb, track.embedding_ema.as_ref()) {
                (Some(a), Some(b)) => Some(cosine(a, b)?),
                _ => None,
            };
            let (admissible, cost) = if self.config.backward_appearance_only {
                let ok = cos.is_some_and(|c| c >= p.sigma_reid);
                (ok, 1.0 - cos.unwrap_or(0.0).max(0.0))
            } else {
                let rescued = p.beta > 0.0
                    && cos.is_some_and(|c| c >= p.sigma_reid)
                    && overlap >= p.sigma_iou_relaxed;
                (
                    overlap >= p.sigma_iou || rescued,
                    pair_cost(overlap, cos.unwrap_or(0.0), p),
                )
            };
            if !admissible {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bc, bid, _)) => {
                    cost < *bc || (cost == *bc && track.id < *bid)
                }
            };
            if better {
                best = Some((cost, track.id, loc));
            }
        }

        let Some((_, _, loc)) = best else {
            return Ok(None);
        };
        let mut survivor = match loc {
            Where::Live(i) => self.live.remove(i),
            Where::Finished(i) => self.finished.remove(i),
        };

        survivor.trim_trailing_predictions();
        let anchor = *survivor.boxes.last().expect("non-empty track");
        debug_assert_eq!(anchor.source, BoxSource::Detected);
        let birth_box = newborn.boxes[0];
        let span = (birth_box.frame - anchor.frame) as f64;
        for f in (anchor.frame + 1)..birth_box.frame {
            let t = (f - anchor.frame) as f64 / span;
            let lerp = |a: f64, b: f64| a + (b - a) * t;
            survivor.boxes.push(TrackBox {
                frame: f,
                bbox: BBox::new(
                    lerp(anchor.bbox.x, birth_box.bbox.x),
                    lerp(anchor.bbox.y, birth_box.bbox.y),
                    lerp(anchor.bbox.w, birth_box.bbox.w),
                    lerp(anchor.bbox.h, birth_box.bbox.h),
                ),
                source: BoxSource::Interpolated,
                confidence: anchor.confidence,
            });
        }
        survivor.boxes.push(birth_box);
        survivor.coast_count = 0;
        survivor.state = TrackState::Active;
        survivor.finished_at = None;
        if let Some(emb) = &newborn.last_embedding {
            survivor.update_appearance(emb, self.config.ema_momentum);
        }
        let id = survivor.id;
        self.live.push(survivor);
        Ok(Some(id))
    }

    /// Completes the run: every track is finished, trailing predictions are
    /// rolled back to the last detection, and tracks with fewer than
    /// `t_min` detected boxes are dropped. Output is sorted by id.
    pub fn finalize(mut self) -> Vec<Track> {
        for mut track in self.live.drain(..) {
            track.finish();
            self.finished.push(track);
        }
        let t_min = self.config.t_min as usize;
        let mut out: Vec<Track> = self
            .finished
            .into_iter()
            .filter(|t| t.detected_count() >= t_min)
            .collect();
        out.sort_by_key(|t| t.id);
        out
    }
}

/// Aggregate statistics of one tracked sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SequenceSummary {
    pub frames: u64,
    pub detections: u64,
    pub matched: u64,
    pub births: u64,
    pub merges: u64,
    pub deaths: u64,
}

/// Runs a tracker over an input stream and finalizes it.
pub fn run_sequence(
    config: &TrackerConfig,
    inputs: impl IntoIterator<Item = FrameInput>,
) -> Result<(Vec<Track>, SequenceSummary)> {
    let mut tracker = Tracker::new(config.clone())?;
    let mut summary = SequenceSummary::default();
    for input in inputs {
        summary.frames += 1;
        summary.detections += input.detections.len() as u64;
        let events = tracker.step(input)?;
        summary.matched += events.matches.len() as u64;
        summary.births += events.births.len() as u64;
        summary.merges += events.merges.len() as u64;
        summary.deaths += events.deaths.len() as u64;
    }
    Ok((tracker.finalize(), summary))
}
