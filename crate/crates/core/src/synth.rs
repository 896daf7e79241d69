//! Deterministic synthetic scenario generation: ground truth, noisy
//! detections, and appearance embeddings for desk-scale verification.
//!
//! Everything derives from a single seeded ChaCha8 stream consumed in a
//! fixed documented order, so identical `(seed, spec)` pairs produce
//! identical artifacts on any platform. Embedding noise is modeled as an
//! angular rotation on the unit sphere, which makes the cosine similarity
//! between same-identity embeddings directly controllable.
//!
//! Draw order per scenario: identity mean directions first (object index
//! order); then per frame, per object in index order, a miss draw followed
//! (if kept) by center/size jitter, confidence, and embedding-noise draws;
//! then the frame's false-positive count, box, confidence, and embedding
//! draws.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::affinity::Embedding;
use crate::error::{Error, Result};
use crate::geom::{BBox, FrameIndex};
use crate::mot_io::{
    write_detections, write_sidecar, write_track_set, DetectionFile, DetectionRecord, TrackSet,
};
use crate::tracker::Detection;

/// Frame canvas, echoing a 960x540 capture; objects may exit the canvas.
pub const CANVAS_WIDTH: f64 = 960.0;
pub const CANVAS_HEIGHT: f64 = 540.0;

/// One simulated object: a piecewise-linear center path over its lifespan
/// and a fixed box size.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub entry: FrameIndex,
    pub exit: FrameIndex,
    /// `(frame, (center x, center y))` waypoints covering `[entry, exit]`,
    /// strictly increasing in frame.
    pub waypoints: Vec<(FrameIndex, (f64, f64))>,
    pub width: f64,
    pub height: f64,
}

/// Detection dropout window for one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionSpec {
    pub object: usize,
    pub start: FrameIndex,
    pub duration: u64,
}

impl OcclusionSpec {
    fn covers(&self, frame: FrameIndex) -> bool {
        frame >= self.start && frame < self.start + self.duration
    }
}

/// Detector imperfection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorNoise {
    /// Standard deviation of center jitter, pixels.
    pub center_jitter: f64,
    /// Standard deviation of relative size jitter.
    pub size_jitter: f64,
    /// Confidence scores drawn uniformly from this range.
    pub score_min: f64,
    pub score_max: f64,
    /// Expected spurious detections per frame.
    pub false_positive_rate: f64,
    /// Probability that a visible object goes undetected in a frame.
    pub miss_rate: f64,
}

impl DetectorNoise {
    pub fn none(score: f64) -> Self {
        DetectorNoise {
            center_jitter: 0.0,
            size_jitter: 0.0,
            score_min: score,
            score_max: score,
            false_positive_rate: 0.0,
            miss_rate: 0.0,
        }
    }
}

/// Appearance model: one mean direction per identity, angular noise per
/// observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    /// Standard deviation of the per-observation angular perturbation,
    /// radians.
    pub angular_noise: f64,
    /// Minimum pairwise angle between identity mean directions, radians.
    pub min_identity_angle: f64,
    /// Optional maximum pairwise angle (identities sampled inside a cone),
    /// for near-identical-appearance stress scenarios.
    pub max_identity_angle: Option<f64>,
}

/// Full scenario description. Frozen presets are available via [`preset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub frames: u64,
    pub objects: Vec<ObjectSpec>,
    pub occlusions: Vec<OcclusionSpec>,
    pub noise: DetectorNoise,
    pub embeddings: EmbeddingModel,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Spec("scenario needs at least one frame".into()));
        }
        for (k, obj) in self.objects.iter().enumerate() {
            if obj.entry > obj.exit || obj.exit >= self.frames {
                return Err(Error::Spec(format!(
                    "object {k}: lifespan [{}, {}] outside 0..{}",
                    obj.entry, obj.exit, self.frames
                )));
            }
            if !(obj.width > 0.0 && obj.height > 0.0) {
                return Err(Error::Spec(format!("object {k}: non-positive size")));
            }
            let Some(first) = obj.waypoints.first() else {
                return Err(Error::Spec(format!("object {k}: no waypoints")));
            };
            let last = obj.waypoints.last().unwrap();
            if first.0 != obj.entry || last.0 != obj.exit {
                return Err(Error::Spec(format!(
                    "object {k}: waypoints must cover [{}, {}]",
                    obj.entry, obj.exit
                )));
            }
            if obj.waypoints.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Spec(format!(
                    "object {k}: waypoint frames must strictly increase"
                )));
            }
        }
        for (i, occ) in self.occlusions.iter().enumerate() {
            if occ.duration == 0 {
                return Err(Error::Spec(format!("occlusion {i}: zero duration")));
            }
            let Some(obj) = self.objects.get(occ.object) else {
                return Err(Error::Spec(format!(
                    "occlusion {i}: object {} out of range",
                    occ.object
                )));
            };
            if occ.start < obj.entry || occ.start + occ.duration - 1 > obj.exit {
                return Err(Error::Spec(format!(
                    "occlusion {i}: window outside object lifespan"
                )));
            }
        }
        let n = &self.noise;
        if !(n.center_jitter >= 0.0 && n.size_jitter >= 0.0) {
            return Err(Error::Spec("negative jitter".into()));
        }
        if !(0.0 <= n.score_min && n.score_min <= n.score_max && n.score_max <= 1.0) {
            return Err(Error::Spec(format!(
                "score range [{}, {}] invalid",
                n.score_min, n.score_max
            )));
        }
        if n.false_positive_rate < 0.0
            || !n.false_positive_rate.is_finite()
            || !(0.0..=1.0).contains(&n.miss_rate)
        {
            return Err(Error::Spec("invalid false-positive or miss rate".into()));
        }
        let e = &self.embeddings;
        if e.dim < 2 {
            return Err(Error::Spec("embedding dim must be at least 2".into()));
        }
        if !(e.angular_noise >= 0.0 && e.min_identity_angle >= 0.0) {
            return Err(Error::Spec("negative embedding angle".into()));
        }
        if let Some(max) = e.max_identity_angle {
            if max < e.min_identity_angle || max > std::f64::consts::PI {
                return Err(Error::Spec("invalid identity angle cone".into()));
            }
        }
        Ok(())
    }
}

/// Generated artifacts of one scenario, in memory.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub gt: TrackSet,
    pub detections: DetectionFile,
    /// Sidecar rows, indexed by `DetectionRecord::embedding_row`.
    pub embeddings: Vec<Embedding>,
}

/// File paths written by [`Scenario::write_to_dir`].
#[derive(Debug, Clone)]
pub struct ScenarioPaths {
    pub detections: PathBuf,
    pub ground_truth: PathBuf,
    pub sidecar: PathBuf,
}

impl Scenario {
    /// Emits `<name>.det.csv`, `<name>.gt.csv`, and `<name>.emb`.
    pub fn write_to_dir(&self, dir: &Path, name: &str) -> Result<ScenarioPaths> {
        std::fs::create_dir_all(dir)?;
        let paths = ScenarioPaths {
            detections: dir.join(format!("{name}.det.csv")),
            ground_truth: dir.join(format!("{name}.gt.csv")),
            sidecar: dir.join(format!("{name}.emb")),
        };
        write_detections(&self.detections, &paths.detections)?;
        write_track_set(&self.gt, &paths.ground_truth)?;
        let dim = self.embeddings.first().map(|e| e.dim()).unwrap_or(0) as u32;
        write_sidecar(
            dim,
            self.embeddings.iter().map(|e| e.values()),
            &paths.sidecar,
        )?;
        Ok(paths)
    }

    /// Tracker inputs with sidecar rows resolved and shared.
    pub fn inputs(&self) -> BTreeMap<FrameIndex, Vec<Detection>> {
        let rows: Vec<Arc<Embedding>> = self
            .embeddings
            .iter()
            .map(|e| Arc::new(e.clone()))
            .collect();
        let mut out = BTreeMap::new();
        for (&frame, records) in &self.detections.frames {
            let dets: Vec<Detection> = records
                .iter()
                .map(|r| {
                    let mut d = Detection::new(r.bbox(), r.confidence);
                    d.class_id = r.class_id;
                    if r.embedding_row >= 0 {
                        d.embedding = Some(rows[r.embedding_row as usize].clone());
                    }
                    d
                })
                .collect();
            out.insert(frame, dets);
        }
        out
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector orthogonal to `d`, sampled uniformly in the orthogonal
/// complement.
fn random_orthogonal(rng: &mut ChaCha8Rng, d: &[f64]) -> Vec<f64> {
    loop {
        let r = random_unit(rng, d.len());
        let proj = dot(&r, d);
        let mut u: Vec<f64> = r.iter().zip(d).map(|(r, d)| r - proj * d).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            u.iter_mut().for_each(|x| *x /= norm);
            return u;
        }
    }
}

/// Rotates `d` by angle `theta` toward a random orthogonal direction.
fn rotate_by(rng: &mut ChaCha8Rng, d: &[f64], theta: f64) -> Vec<f64> {
    let u = random_orthogonal(rng, d);
    d.iter()
        .zip(&u)
        .map(|(d, u)| theta.cos() * d + theta.sin() * u)
        .collect()
}

fn identity_directions(rng: &mut ChaCha8Rng, spec: &ScenarioSpec) -> Result<Vec<Vec<f64>>> {
    let model = &spec.embeddings;
    let count = spec.objects.len();
    for _ in 0..100 {
        let dirs: Vec<Vec<f64>> = match model.max_identity_angle {
            None => (0..count).map(|_| random_unit(rng, model.dim)).collect(),
            Some(max) => {
                // Sample inside a cone of half-angle max/2 around a common
                // base so pairwise angles stay below max.
                let base = random_unit(rng, model.dim);
                (0..count)
                    .map(|_| {
                        let theta = rng.random_range(max / 4.0..=max / 2.0);
                        rotate_by(rng, &base, theta)
                    })
                    .collect()
            }
        };
        let mut ok = true;
        'pairs: for i in 0..count {
            for j in i + 1..count {
                let angle = dot(&dirs[i], &dirs[j]).clamp(-1.0, 1.0).acos();
                if angle < model.min_identity_angle {
                    ok = false;
                    break 'pairs;
                }
                if let Some(max) = model.max_identity_angle {
                    if angle > max {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
        }
        if ok {
            return Ok(dirs);
        }
    }
    Err(Error::Spec(
        "could not satisfy identity angle constraints after 100 attempts".into(),
    ))
}

fn center_at(obj: &ObjectSpec, frame: FrameIndex) -> (f64, f64) {
    let wps = &obj.waypoints;
    if wps.len() == 1 {
        return wps[0].1;
    }
    let seg = wps
        .windows(2)
        .find(|w| frame >= w[0].0 && frame <= w[1].0)
        .expect("frame inside waypoint span");
    let (f0, (x0, y0)) = seg[0];
    let (f1, (x1, y1)) = seg[1];
    let t = (frame - f0) as f64 / (f1 - f0) as f64;
    (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
}

/// Generates the scenario artifacts. Fully deterministic given the spec.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dirs = identity_directions(&mut rng, spec)?;

    let mut gt = TrackSet::default();
    for (k, obj) in spec.objects.iter().enumerate() {
        for f in obj.entry..=obj.exit {
            let (cx, cy) = center_at(obj, f);
            gt.insert(f, k as u64 + 1, BBox::from_center(cx, cy, obj.width, obj.height))
                .expect("one gt box per (frame, object)");
        }
    }

    let noise = &spec.noise;
    let model = &spec.embeddings;
    let mut detections = DetectionFile::default();
    let mut embeddings: Vec<Embedding> = Vec::new();
    let push_embedding = |rng: &mut ChaCha8Rng,
                              embeddings: &mut Vec<Embedding>,
                              dir: &[f64]|
     -> i64 {
        let theta = (model.angular_noise * gauss(rng)).abs();
        let values = rotate_by(rng, dir, theta);
        let row = embeddings.len() as i64;
        embeddings.push(Embedding::new(values).expect("rotated unit vector is non-degenerate"));
        row
    };

    for frame in 0..spec.frames {
        let mut records: Vec<DetectionRecord> = Vec::new();
        for (k, obj) in spec.objects.iter().enumerate() {
            let alive = frame >= obj.entry && frame <= obj.exit;
            let occluded = spec
                .occlusions
                .iter()
                .any(|o| o.object == k && o.covers(frame));
            if !alive || occluded {
                continue;
            }
            if rng.random_range(0.0..1.0) < noise.miss_rate {
                continue;
            }
            let (cx, cy) = center_at(obj, frame);
            let cx = cx + noise.center_jitter * gauss(&mut rng);
            let cy = cy + noise.center_jitter * gauss(&mut rng);
            // Relative size jitter, floored to keep boxes valid.
            let w = obj.width * (1.0 + noise.size_jitter * gauss(&mut rng)).max(0.05);
            let h = obj.height * (1.0 + noise.size_jitter * gauss(&mut rng)).max(0.05);
            let confidence = rng.random_range(noise.score_min..=noise.score_max);
            let row = push_embedding(&mut rng, &mut embeddings, &dirs[k]);
            records.push(DetectionRecord {
                frame,
                x: cx - w / 2.0,
                y: cy - h / 2.0,
                w,
                h,
                confidence,
                class_id: 1,
                embedding_row: row,
            });
        }

        // Spurious detections: expected count = rate, fractional part as a
        // Bernoulli draw; embeddings uniform on the sphere.
        let mut fp_count = noise.false_positive_rate.floor() as u64;
        let frac = noise.false_positive_rate.fract();
        if frac > 0.0 && rng.random_range(0.0..1.0) < frac {
            fp_count += 1;
        }
        for _ in 0..fp_count {
            let w = rng.random_range(20.0..120.0);
            let h = rng.random_range(15.0..90.0);
            let cx = rng.random_range(0.0..CANVAS_WIDTH);
            let cy = rng.random_range(0.0..CANVAS_HEIGHT);
            let confidence = rng.random_range(noise.score_min..=noise.score_max);
            let dir = random_unit(&mut rng, model.dim);
            let row = embeddings.len() as i64;
            embeddings.push(Embedding::new(dir).expect("unit vector"));
            records.push(DetectionRecord {
                frame,
                x: cx - w / 2.0,
                y: cy - h / 2.0,
                w,
                h,
                confidence,
                class_id: -1,
                embedding_row: row,
            });
        }

        if !records.is_empty() {
            detections.frames.insert(frame, records);
        }
    }

    Ok(Scenario {
        gt,
        detections,
        embeddings,
    })
}

/// Named frozen scenarios. Changing any preset is a breaking change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// One object, two-frame detector dropout, linear motion: coasting
    /// alone must bridge the gap.
    ShortOcclusion,
    /// One object hidden for eight frames while turning and stopping: the
    /// coasted prediction drifts away, so recovery needs the
    /// appearance-gated backward merge.
    LongOcclusion,
    /// Two objects meet head-on behind a ten-frame occlusion and reverse;
    /// each reappears exactly where the other's extrapolation lands. IOU
    /// alone swaps the identities; near-orthogonal embeddings keep them.
    Crossing,
    /// One object accelerating to 1.2 box widths per frame (zero overlap
    /// between consecutive ground-truth boxes at peak) and back.
    FastMotion,
    /// Ten objects in parallel lanes with near-identical appearances and
    /// detector noise: the target-similarity stress.
    DenseParallel,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::ShortOcclusion,
        Preset::LongOcclusion,
        Preset::Crossing,
        Preset::FastMotion,
        Preset::DenseParallel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ShortOcclusion => "short_occlusion",
            Preset::LongOcclusion => "long_occlusion",
            Preset::Crossing => "crossing",
            Preset::FastMotion => "fast_motion",
            Preset::DenseParallel => "dense_parallel",
        }
    }

    pub fn spec(&self) -> ScenarioSpec {
        match self {
            Preset::ShortOcclusion => ScenarioSpec {
                seed: 101,
                frames: 20,
                objects: vec![ObjectSpec {
                    entry: 0,
                    exit: 19,
                    waypoints: vec![(0, (80.0, 270.0)), (19, (232.0, 270.0))],
                    width: 70.0,
                    height: 50.0,
                }],
                occlusions: vec![OcclusionSpec {
                    object: 0,
                    start: 3,
                    duration: 2,
                }],
                noise: DetectorNoise::none(0.9),
                embeddings: EmbeddingModel {
                    dim: 2048,
                    angular_noise: 0.03,
                    min_identity_angle: 0.0,
                    max_identity_angle: None,
                },
            },
            Preset::LongOcclusion => ScenarioSpec {
                seed: 202,
                frames: 60,
                objects: vec![ObjectSpec {
                    entry: 0,
                    exit: 59,
                    waypoints: vec![
                        (0, (60.0, 270.0)),
                        (25, (260.0, 270.0)),
                        (30, (272.0, 294.0)),
                        (34, (275.0, 300.0)),
                        (59, (275.0, 300.0)),
                    ],
                    width: 70.0,
                    height: 50.0,
                }],
                occlusions: vec![OcclusionSpec {
                    object: 0,
                    start: 26,
                    duration: 8,
                }],
                noise: DetectorNoise::none(0.9),
                embeddings: EmbeddingModel {
                    dim: 2048,
                    angular_noise: 0.03,
                    min_identity_angle: 0.0,
                    max_identity_angle: None,
                },
            },
            Preset::Crossing => ScenarioSpec {
                seed: 303,
                frames: 72,
                objects: vec![
                    ObjectSpec {
                        entry: 0,
                        exit: 71,
                        waypoints: vec![
                            (0, (70.0, 300.0)),
                            (35, (490.0, 300.0)),
                            (36, (490.0, 300.0)),
                            (71, (70.0, 300.0)),
                        ],
                        width: 70.0,
                        height: 50.0,
                    },
                    ObjectSpec {
                        entry: 0,
                        exit: 71,
                        waypoints: vec![
                            (0, (922.0, 300.0)),
                            (35, (502.0, 300.0)),
                            (36, (502.0, 300.0)),
                            (71, (922.0, 300.0)),
                        ],
                        width: 70.0,
                        height: 50.0,
                    },
                ],
                occlusions: vec![
                    OcclusionSpec {
                        object: 0,
                        start: 26,
                        duration: 10,
                    },
                    OcclusionSpec {
                        object: 1,
                        start: 26,
                        duration: 10,
                    },
                ],
                noise: DetectorNoise::none(0.9),
                embeddings: EmbeddingModel {
                    dim: 2048,
                    angular_noise: 0.03,
                    // Pairs drawn uniformly in 2048 dimensions concentrate
                    // near 90 degrees, comfortably above this floor.
                    min_identity_angle: std::f64::consts::FRAC_PI_3,
                    max_identity_angle: None,
                },
            },
            Preset::FastMotion => ScenarioSpec {
                seed: 404,
                frames: 28,
                objects: vec![ObjectSpec {
                    entry: 0,
                    exit: 27,
                    waypoints: vec![
                        (0, (90.0, 270.0)),
                        (8, (138.0, 270.0)),
                        (9, (164.0, 270.0)),
                        (10, (210.0, 270.0)),
                        (11, (276.0, 270.0)),
                        (16, (636.0, 270.0)),
                        (17, (702.0, 270.0)),
                        (18, (748.0, 270.0)),
                        (19, (774.0, 270.0)),
                        (27, (822.0, 270.0)),
                    ],
                    width: 60.0,
                    height: 45.0,
                }],
                occlusions: vec![],
                noise: DetectorNoise::none(0.9),
                embeddings: EmbeddingModel {
                    dim: 2048,
                    angular_noise: 0.02,
                    min_identity_angle: 0.0,
                    max_identity_angle: None,
                },
            },
            Preset::DenseParallel => ScenarioSpec {
                seed: 505,
                frames: 50,
                objects: (0..10)
                    .map(|k| {
                        let cy = 60.0 + 45.0 * k as f64;
                        let x0 = 80.0 + 13.0 * k as f64;
                        ObjectSpec {
                            entry: 0,
                            exit: 49,
                            waypoints: vec![(0, (x0, cy)), (49, (x0 + 343.0, cy))],
                            width: 60.0,
                            height: 36.0,
                        }
                    })
                    .collect(),
                occlusions: vec![],
                noise: DetectorNoise {
                    center_jitter: 1.0,
                    size_jitter: 0.01,
                    score_min: 0.6,
                    score_max: 0.95,
                    false_positive_rate: 0.15,
                    miss_rate: 0.03,
                },
                embeddings: EmbeddingModel {
                    dim: 2048,
                    angular_noise: 0.02,
                    min_identity_angle: 0.02,
                    max_identity_angle: Some(0.17),
                },
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Returns the frozen spec of a named preset.
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    Ok(name.parse::<Preset>()?.spec())
}
