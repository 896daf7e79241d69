//! Shared fixtures for the criterion benchmark targets.

use viou_core::affinity::{Candidate, Embedding};
use viou_core::geom::BBox;
use viou_core::workload::{workload_frame, EmbeddingPool};

/// One association round's inputs: detection and track candidate sides
/// with owned embeddings kept alive alongside.
pub struct AssociationFixture {
    pub det_boxes: Vec<BBox>,
    pub det_embs: Vec<Embedding>,
    pub trk_boxes: Vec<BBox>,
    pub trk_embs: Vec<Embedding>,
}

impl AssociationFixture {
    pub fn new(objects: usize, dim: usize, seed: u64) -> Self {
        let pool = EmbeddingPool::new(objects, dim, seed);
        let dets = workload_frame(objects, 1, &pool);
        let trks = workload_frame(objects, 0, &pool);
        AssociationFixture {
            det_boxes: dets.detections.iter().map(|d| d.bbox).collect(),
            det_embs: dets
                .detections
                .iter()
                .map(|d| (**d.embedding.as_ref().unwrap()).clone())
                .collect(),
            trk_boxes: trks.detections.iter().map(|d| d.bbox).collect(),
            trk_embs: trks
                .detections
                .iter()
                .map(|d| (**d.embedding.as_ref().unwrap()).clone())
                .collect(),
        }
    }

    pub fn det_side(&self) -> Vec<Candidate<'_>> {
        self.det_boxes
            .iter()
            .zip(&self.det_embs)
            .map(|(b, e)| (*b, Some(e)))
            .collect()
    }

    pub fn trk_side(&self) -> Vec<Candidate<'_>> {
        self.trk_boxes
            .iter()
            .zip(&self.trk_embs)
            .map(|(b, e)| (*b, Some(e)))
            .collect()
    }
}
