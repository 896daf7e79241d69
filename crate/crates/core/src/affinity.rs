//! Appearance similarity and the fused spatial/appearance association cost.
//!
//! The association cost of a (detection, track) pair is
//! `1 - alpha * IOU - beta * max(cosine, 0)` with `alpha + beta = 1`, so the
//! cost always lands in `[0, 1]`. A pair enters the assignment problem only
//! if it passes the overlap gate, or — when the appearance term is active —
//! if the appearance is strong and a loose spatial sanity check holds.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geom::{iou, BBox};

/// Fixed-dimension appearance vector, stored L2-normalized.
///
/// Normalizing once at ingestion makes every later cosine a plain dot
/// product, which is the hot operation of the association loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Builds an embedding from raw values, normalizing to unit L2 norm.
    ///
    /// Rejects empty, non-finite, and zero-norm inputs.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateVector {
                detail: "empty vector".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateVector {
                detail: "non-finite component".into(),
            });
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateVector {
                detail: "zero norm".into(),
            });
        }
        let values = values.into_iter().map(|v| v / norm).collect();
        Ok(Embedding { values })
    }

    /// Builds an embedding from single-precision storage (the sidecar format).
    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Embedding::new(values.iter().map(|&v| v as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Normalized components.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Weights and gates of the fused association cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssocParams {
    /// Weight on the IOU term.
    pub alpha: f64,
    /// Weight on the cosine term.
    pub beta: f64,
    /// Minimum-overlap gate for plain spatial association.
    pub sigma_iou: f64,
    /// Minimum cosine similarity for an appearance rescue.
    pub sigma_reid: f64,
    /// Loose spatial sanity gate applied to appearance-rescued pairs.
    pub sigma_iou_relaxed: f64,
}

impl AssocParams {
    /// Validates `alpha, beta >= 0`, `alpha + beta = 1` (within 1e-9), and
    /// all gates in `[0, 1]`.
    pub fn new(
        alpha: f64,
        beta: f64,
        sigma_iou: f64,
        sigma_reid: f64,
        sigma_iou_relaxed: f64,
    ) -> Result<Self> {
        let p = AssocParams {
            alpha,
            beta,
            sigma_iou,
            sigma_reid,
            sigma_iou_relaxed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config("alpha and beta must be non-negative".into()));
        }
        if (self.alpha + self.beta - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "alpha + beta must equal 1, got {}",
                self.alpha + self.beta
            )));
        }
        for (name, v) in [
            ("sigma_iou", self.sigma_iou),
            ("sigma_reid", self.sigma_reid),
            ("sigma_iou_relaxed", self.sigma_iou_relaxed),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for AssocParams {
    fn default() -> Self {
        AssocParams {
            alpha: 0.7,
            beta: 0.3,
            sigma_iou: 0.6,
            sigma_reid: 0.7,
            sigma_iou_relaxed: 0.1,
        }
    }
}

/// Cosine similarity of two embeddings, in `[-1, 1]`.
pub fn cosine(u: &Embedding, v: &Embedding) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let dot: f64 = u
        .values
        .iter()
        .zip(v.values.iter())
        .map(|(a, b)| a * b)
        .sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Fused association cost: `1 - alpha * iou - beta * max(cos, 0)`.
///
/// The cosine term is clamped at zero so that arbitrary user-supplied
/// embeddings cannot push the cost above 1; realistic re-identification
/// features are non-negative, where the clamp never engages. With
/// `beta = 0` this reduces exactly to `1 - iou`.
pub fn pair_cost(iou_score: f64, cos_score: f64, p: &AssocParams) -> f64 {
    1.0 - p.alpha * iou_score - p.beta * cos_score.max(0.0)
}

/// Dense fused cost matrix with a per-cell admissibility mask.
///
/// Rows are detections, columns are tracks. Inadmissible cells carry no
/// meaningful cost and are structurally excluded by the assignment solver.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
    admissible: Vec<bool>,
}

impl CostMatrix {
    pub fn from_parts(rows: usize, cols: usize, cost: Vec<f64>, admissible: Vec<bool>) -> Self {
        assert_eq!(cost.len(), rows * cols);
        assert_eq!(admissible.len(), rows * cols);
        CostMatrix {
            rows,
            cols,
            cost,
            admissible,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost(&self, row: usize, col: usize) -> f64 {
        self.cost[row * self.cols + col]
    }

    pub fn is_admissible(&self, row: usize, col: usize) -> bool {
        self.admissible[row * self.cols + col]
    }

    pub fn admissible_count(&self) -> usize {
        self.admissible.iter().filter(|&&a| a).count()
    }
}

/// One association side: a box plus an optional appearance vector.
pub type Candidate<'a> = (BBox, Option<&'a Embedding>);

/// Builds the fused cost matrix for one frame.
///
/// A cell is admissible iff `iou >= sigma_iou`, or — when `beta > 0` and
/// both sides carry embeddings — `cosine >= sigma_reid` and
/// `iou >= sigma_iou_relaxed`. Pairs where either side lacks an embedding
/// fall back to a zero cosine term and the plain overlap gate, so detection
/// files without a sidecar remain usable.
pub fn build_cost_matrix(
    detections: &[Candidate<'_>],
    tracks: &[Candidate<'_>],
    p: &AssocParams,
) -> Result<CostMatrix> {
    let rows = detections.len();
    let cols = tracks.len();
    let mut cost = vec![1.0; rows * cols];
    let mut admissible = vec![false; rows * cols];

    // Batch all present embeddings into one matrix product.
    let det_emb: Vec<(usize, &Embedding)> = detections
        .iter()
        .enumerate()
        .filter_map(|(i, (_, e))| e.map(|e| (i, e)))
        .collect();
    let trk_emb: Vec<(usize, &Embedding)> = tracks
        .iter()
        .enumerate()
        .filter_map(|(j, (_, e))| e.map(|e| (j, e)))
        .collect();

    let mut cos = vec![0.0; rows * cols];
    let mut has_cos = vec![false; rows * cols];
    if !det_emb.is_empty() && !trk_emb.is_empty() {
        let queries: Vec<&Embedding> = det_emb.iter().map(|(_, e)| *e).collect();
        let gallery: Vec<&Embedding> = trk_emb.iter().map(|(_, e)| *e).collect();
        let sims = batched_cosine_refs(&queries, &gallery)?;
        for (qi, &(i, _)) in det_emb.iter().enumerate() {
            for (gj, &(j, _)) in trk_emb.iter().enumerate() {
                cos[i * cols + j] = sims[(qi, gj)];
                has_cos[i * cols + j] = true;
            }
        }
    }

    for (i, (dbox, _)) in detections.iter().enumerate() {
        for (j, (tbox, _)) in tracks.iter().enumerate() {
            let idx = i * cols + j;
            let ov = iou(dbox, tbox);
            let c = if has_cos[idx] { cos[idx] } else { 0.0 };
            // The appearance rescue is only live while the cosine term
            // actually contributes: at beta = 0 the gate reduces to the
            // plain overlap criterion.
            let rescued = p.beta > 0.0
                && has_cos[idx]
                && c >= p.sigma_reid
                && ov >= p.sigma_iou_relaxed;
            admissible[idx] = ov >= p.sigma_iou || rescued;
            cost[idx] = pair_cost(ov, c, p);
        }
    }

    Ok(CostMatrix::from_parts(rows, cols, cost, admissible))
}

/// All-pairs cosine similarity as one normalized matrix product.
///
/// Equivalent to calling [`cosine`] per cell, but amortized through a
/// single dense product over the stacked (already normalized) vectors.
pub fn batched_cosine(queries: &[Embedding], gallery: &[Embedding]) -> Result<Array2<f64>> {
    let q: Vec<&Embedding> = queries.iter().collect();
    let g: Vec<&Embedding> = gallery.iter().collect();
    batched_cosine_refs(&q, &g)
}

fn batched_cosine_refs(queries: &[&Embedding], gallery: &[&Embedding]) -> Result<Array2<f64>> {
    let dim = queries
        .first()
        .or_else(|| gallery.first())
        .map(|e| e.dim())
        .unwrap_or(0);
    for e in queries.iter().chain(gallery.iter()) {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.dim(),
            });
        }
    }
    if queries.is_empty() || gallery.is_empty() {
        return Ok(Array2::zeros((queries.len(), gallery.len())));
    }

    let mut q = Array2::zeros((queries.len(), dim));
    for (i, e) in queries.iter().enumerate() {
        q.row_mut(i)
            .iter_mut()
            .zip(e.values())
            .for_each(|(dst, &src)| *dst = src);
    }
    let mut g = Array2::zeros((gallery.len(), dim));
    for (j, e) in gallery.iter().enumerate() {
        g.row_mut(j)
            .iter_mut()
            .zip(e.values())
            .for_each(|(dst, &src)| *dst = src);
    }

    let mut sims = q.dot(&g.t());
    sims.mapv_inplace(|v| v.clamp(-1.0, 1.0));
    Ok(sims)
}
