//! In-memory association workloads for throughput measurement.
//!
//! Boxes are cheap to synthesize per frame; embeddings are not, so each
//! object cycles through a small pool of pre-drawn noisy observations of
//! its identity vector. That keeps workload generation off the timed path
//! while every frame still exercises full-dimension cosine batches.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::affinity::Embedding;
use crate::geom::BBox;
use crate::tracker::{Detection, FrameInput};

const POOL_VARIANTS: usize = 8;

/// Pre-drawn embedding observations per simulated object.
#[derive(Debug, Clone)]
pub struct EmbeddingPool {
    variants: Vec<Vec<Arc<Embedding>>>,
}

impl EmbeddingPool {
    pub fn new(objects: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let variants = (0..objects)
            .map(|_| {
                let dir = random_unit(&mut rng, dim);
                (0..POOL_VARIANTS)
                    .map(|_| {
                        let noisy: Vec<f64> = dir
                            .iter()
                            .map(|&v| v + 0.02 * rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        Arc::new(Embedding::new(noisy).expect("noisy unit vector"))
                    })
                    .collect()
            })
            .collect();
        EmbeddingPool { variants }
    }

    pub fn get(&self, object: usize, frame: u64) -> Arc<Embedding> {
        let v = &self.variants[object % self.variants.len()];
        v[frame as usize % v.len()].clone()
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm.max(1e-12)).collect()
}

/// Box of object `k` at `frame`: parallel lanes, constant velocity, a
/// deterministic sub-pixel wobble so frames are not bit-identical.
pub fn lane_box(object: usize, frame: u64) -> BBox {
    let k = object as f64;
    let lane_y = 40.0 + 50.0 * (k % 10.0) + 4.0 * (k / 10.0).floor();
    let x = 30.0 + 17.0 * k + 4.0 * frame as f64 + 0.3 * ((frame + object as u64) % 3) as f64;
    BBox::new(x, lane_y, 60.0, 40.0)
}

/// One frame of detections for `objects` simulated targets.
pub fn workload_frame(objects: usize, frame: u64, pool: &EmbeddingPool) -> FrameInput {
    let detections = (0..objects)
        .map(|k| {
            let mut d = Detection::new(lane_box(k, frame), 0.9);
            d.class_id = 1;
            d.embedding = Some(pool.get(k, frame));
            d
        })
        .collect();
    FrameInput {
        frame,
        detections,
    }
}

/// A full tracking input stream of `frames` frames at `objects` detections
/// per frame with `dim`-dimensional embeddings.
pub fn tracking_inputs(frames: u64, objects: usize, dim: usize, seed: u64) -> Vec<FrameInput> {
    let pool = EmbeddingPool::new(objects, dim, seed);
    (0..frames)
        .map(|f| workload_frame(objects, f, &pool))
        .collect()
}

/// Times the association step alone — fused cost matrix plus optimal
/// assignment — over `frames` synthetic frames, and returns frames per
/// second. The track side is a fixed gallery of per-object appearance
/// summaries whose boxes advance each frame, mirroring a steady tracking
/// state.
pub fn association_fps(frames: u64, objects: usize, dim: usize, seed: u64) -> f64 {
    use crate::affinity::{build_cost_matrix, AssocParams, Candidate};
    use crate::assignment::solve;

    let pool = EmbeddingPool::new(objects, dim, seed);
    let gallery: Vec<Arc<Embedding>> = (0..objects).map(|k| pool.get(k, 0)).collect();
    let params = AssocParams::default();

    let mut matched = 0usize;
    let start = std::time::Instant::now();
    for f in 1..=frames {
        let input = workload_frame(objects, f, &pool);
        let det_side: Vec<Candidate<'_>> = input
            .detections
            .iter()
            .map(|d| (d.bbox, d.embedding.as_deref()))
            .collect();
        let trk_side: Vec<Candidate<'_>> = gallery
            .iter()
            .enumerate()
            .map(|(k, e)| (lane_box(k, f - 1), Some(&**e)))
            .collect();
        let matrix = build_cost_matrix(&det_side, &trk_side, &params).expect("uniform dims");
        matched += solve(&matrix).matches.len();
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(matched > 0, "workload must produce matches");
    frames as f64 / elapsed
}

/// Times full tracker steps (association, lifecycle, appearance updates)
/// over a synthetic stream; file I/O excluded by construction. Returns
/// frames per second and the number of finalized tracks.
pub fn tracking_fps(frames: u64, objects: usize, dim: usize, seed: u64) -> (f64, usize) {
    use crate::tracker::{Tracker, TrackerConfig};

    let pool = EmbeddingPool::new(objects, dim, seed);
    let mut tracker = Tracker::new(TrackerConfig::default()).expect("default config");
    let start = std::time::Instant::now();
    for f in 0..frames {
        let input = workload_frame(objects, f, &pool);
        tracker.step(input).expect("in-order frames");
    }
    let elapsed = start.elapsed().as_secs_f64();
    let tracks = tracker.finalize().len();
    (frames as f64 / elapsed, tracks)
}

/// Times all-pairs cosine both ways — one batched product versus a scalar
/// loop over [`crate::affinity::cosine`] — and returns the speedup ratio
/// (scalar time / batched time).
pub fn cosine_speedup(queries: usize, gallery: usize, dim: usize, reps: u32, seed: u64) -> f64 {
    use crate::affinity::{batched_cosine, cosine};

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mk = |rng: &mut ChaCha8Rng| {
        Embedding::new((0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .expect("gaussian vector")
    };
    let q: Vec<Embedding> = (0..queries).map(|_| mk(&mut rng)).collect();
    let g: Vec<Embedding> = (0..gallery).map(|_| mk(&mut rng)).collect();

    let start = std::time::Instant::now();
    let mut acc = 0.0;
    for _ in 0..reps {
        let sims = batched_cosine(&q, &g).expect("uniform dims");
        acc += sims[(0, 0)];
    }
    let batched = start.elapsed().as_secs_f64();

    let start = std::time::Instant::now();
    for _ in 0..reps {
        for a in &q {
            for b in &g {
                acc += cosine(a, b).expect("uniform dims");
            }
        }
    }
    let scalar = start.elapsed().as_secs_f64();
    assert!(acc.is_finite());
    scalar / batched.max(1e-12)
}
