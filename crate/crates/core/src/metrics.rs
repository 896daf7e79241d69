//! CLEAR-MOT scoring of hypothesis tracks against ground truth.
//!
//! Frame by frame, existing (ground truth, hypothesis) correspondences
//! persist while their overlap stays above the gate; remaining pairs are
//! matched by minimum-cost assignment on `1 - IOU` with the same gate,
//! reusing the tracker's assignment solver. Identity switches count
//! correspondence changes per ground-truth identity; fragmentations count
//! interruptions of its tracked status.
//!
//! MOTP here is the mean IOU over matched pairs — higher is better. Some
//! toolkits report the complement `1 - IOU` instead.

use std::collections::BTreeMap;

use crate::affinity::CostMatrix;
use crate::assignment::solve;
use crate::geom::{iou, FrameIndex, TrackId};
use crate::mot_io::TrackSet;

/// Default overlap gate for ground-truth/hypothesis correspondence.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Fraction of its lifespan a trajectory must be tracked to count as
/// mostly tracked, and the complementary bound for mostly lost.
pub const MOSTLY_TRACKED_MIN: f64 = 0.8;
pub const MOSTLY_LOST_MAX: f64 = 0.2;

/// Matched pairs of one frame: `(gt id, hyp id, iou)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatches {
    pub frame: FrameIndex,
    pub pairs: Vec<(TrackId, TrackId, f64)>,
}

/// CLEAR-MOT counters and derived scores for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBundle {
    /// `1 - (FN + FP + IDS) / gt_count`; `None` when there is no ground
    /// truth to normalize by. Can be negative.
    pub mota: Option<f64>,
    /// Mean IOU over matched pairs (0 when nothing matched).
    pub motp: f64,
    /// Ground-truth trajectories tracked at least 80% of their lifespan.
    pub mostly_tracked: usize,
    /// Ground-truth trajectories tracked at most 20% of their lifespan.
    pub mostly_lost: usize,
    pub mt_fraction: f64,
    pub ml_fraction: f64,
    pub id_switches: u64,
    pub fragmentations: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// Total matched (gt, hyp) box pairs.
    pub matched: u64,
    /// Total ground-truth boxes.
    pub gt_count: u64,
    /// Distinct ground-truth trajectories.
    pub gt_tracks: usize,
    /// Per-frame match log.
    pub frame_matches: Vec<FrameMatches>,
}

#[derive(Default)]
struct GtState {
    /// Hypothesis id of the most recent correspondence, across gaps.
    corr: Option<TrackId>,
    presence: u64,
    matched: u64,
    ever_matched: bool,
    last_presence_matched: bool,
}

/// Scores hypothesis tracks against ground truth at the given overlap gate.
pub fn clear_mot(gt: &TrackSet, hyp: &TrackSet, match_iou: f64) -> MetricsBundle {
    let mut states: BTreeMap<TrackId, GtState> = BTreeMap::new();
    let mut id_switches = 0u64;
    let mut fragmentations = 0u64;
    let mut false_positives = 0u64;
    let mut false_negatives = 0u64;
    let mut matched_total = 0u64;
    let mut motp_sum = 0.0f64;
    let mut frame_matches = Vec::new();

    let frames: Vec<FrameIndex> = gt
        .frames()
        .keys()
        .chain(hyp.frames().keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let empty = BTreeMap::new();
    for frame in frames {
        let gt_boxes = gt.frame(frame).unwrap_or(&empty);
        let hyp_boxes = hyp.frame(frame).unwrap_or(&empty);

        let mut pairs: Vec<(TrackId, TrackId, f64)> = Vec::new();
        let mut gt_free: Vec<TrackId> = Vec::new();
        let mut hyp_used: std::collections::BTreeSet<TrackId> = std::collections::BTreeSet::new();

        // A continuing correspondence that still clears the gate is kept;
        // it cannot be stolen by a closer new hypothesis.
        for (&gid, gbox) in gt_boxes {
            let kept = states.get(&gid).and_then(|s| s.corr).and_then(|hid| {
                let hbox = hyp_boxes.get(&hid)?;
                let ov = iou(gbox, hbox);
                (ov >= match_iou && !hyp_used.contains(&hid)).then_some((hid, ov))
            });
            match kept {
                Some((hid, ov)) => {
                    hyp_used.insert(hid);
                    pairs.push((gid, hid, ov));
                }
                None => gt_free.push(gid),
            }
        }

        // Remaining pairs: minimum-cost assignment on 1 - IOU, gated.
        let hyp_free: Vec<TrackId> = hyp_boxes
            .keys()
            .copied()
            .filter(|h| !hyp_used.contains(h))
            .collect();
        if !gt_free.is_empty() && !hyp_free.is_empty() {
            let rows = gt_free.len();
            let cols = hyp_free.len();
            let mut cost = vec![1.0; rows * cols];
            let mut admissible = vec![false; rows * cols];
            for (i, gid) in gt_free.iter().enumerate() {
                for (j, hid) in hyp_free.iter().enumerate() {
                    let ov = iou(&gt_boxes[gid], &hyp_boxes[hid]);
                    if ov >= match_iou {
                        cost[i * cols + j] = 1.0 - ov;
                        admissible[i * cols + j] = true;
                    }
                }
            }
            let matrix = CostMatrix::from_parts(rows, cols, cost, admissible);
            for (i, j, c) in solve(&matrix).matches {
                pairs.push((gt_free[i], hyp_free[j], 1.0 - c));
            }
        }
        pairs.sort_by_key(|&(gid, _, _)| gid);

        let mut matched_gt: std::collections::BTreeSet<TrackId> =
            std::collections::BTreeSet::new();
        for &(gid, hid, ov) in &pairs {
            matched_gt.insert(gid);
            let state = states.entry(gid).or_default();
            if let Some(prev) = state.corr {
                if prev != hid {
                    id_switches += 1;
                }
            }
            state.corr = Some(hid);
            matched_total += 1;
            motp_sum += ov;
        }

        false_positives += (hyp_boxes.len() - pairs.len()) as u64;
        false_negatives += (gt_boxes.len() - pairs.len()) as u64;

        for &gid in gt_boxes.keys() {
            let state = states.entry(gid).or_default();
            let m = matched_gt.contains(&gid);
            state.presence += 1;
            if m {
                state.matched += 1;
                if state.ever_matched && !state.last_presence_matched {
                    fragmentations += 1;
                }
                state.ever_matched = true;
            }
            state.last_presence_matched = m;
        }

        if !pairs.is_empty() {
            frame_matches.push(FrameMatches { frame, pairs });
        }
    }

    let gt_count = gt.total_boxes();
    let gt_tracks = states.values().filter(|s| s.presence > 0).count();
    let mut mostly_tracked = 0;
    let mut mostly_lost = 0;
    for s in states.values().filter(|s| s.presence > 0) {
        let ratio = s.matched as f64 / s.presence as f64;
        if ratio >= MOSTLY_TRACKED_MIN {
            mostly_tracked += 1;
        }
        if ratio <= MOSTLY_LOST_MAX {
            mostly_lost += 1;
        }
    }

    MetricsBundle {
        mota: (gt_count > 0).then(|| {
            1.0 - (false_negatives + false_positives + id_switches) as f64 / gt_count as f64
        }),
        motp: if matched_total > 0 {
            motp_sum / matched_total as f64
        } else {
            0.0
        },
        mostly_tracked,
        mostly_lost,
        mt_fraction: if gt_tracks > 0 {
            mostly_tracked as f64 / gt_tracks as f64
        } else {
            0.0
        },
        ml_fraction: if gt_tracks > 0 {
            mostly_lost as f64 / gt_tracks as f64
        } else {
            0.0
        },
        id_switches,
        fragmentations,
        false_positives,
        false_negatives,
        matched: matched_total,
        gt_count,
        gt_tracks,
        frame_matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BBox;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn b(x: f64, y: f64) -> BBox {
        BBox::new(x, y, 10.0, 10.0)
    }

    /// Random track sets on a grid, so boxes of distinct ids never overlap.
    fn random_set(seed: u64, ids: u64, frames: u64) -> TrackSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = TrackSet::default();
        for id in 1..=ids {
            let start = rng.random_range(0..frames.max(1));
            let len = rng.random_range(1..=frames - start.min(frames - 1));
            for f in start..(start + len).min(frames) {
                set.insert(f, id, b((id as f64) * 40.0, (f as f64) * 2.0))
                    .unwrap();
            }
        }
        set
    }

    #[test]
    fn perfect_hypothesis() {
        let set = random_set(5, 6, 20);
        let m = clear_mot(&set, &set, 0.5);
        assert_eq!(m.mota, Some(1.0));
        assert_eq!(m.motp, 1.0);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.false_negatives, 0);
        assert_eq!(m.id_switches, 0);
        assert_eq!(m.fragmentations, 0);
        assert_eq!(m.mostly_tracked, m.gt_tracks);
        assert_eq!(m.mostly_lost, 0);
    }

    #[test]
    fn empty_hypothesis() {
        let gt = random_set(6, 4, 15);
        let m = clear_mot(&gt, &TrackSet::default(), 0.5);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.id_switches, 0);
        assert_eq!(m.false_negatives, m.gt_count);
        assert_eq!(m.mota, Some(0.0));
        assert_eq!(m.mostly_lost, m.gt_tracks);
    }

    #[test]
    fn empty_ground_truth_mota_absent() {
        let hyp = random_set(7, 2, 10);
        let m = clear_mot(&TrackSet::default(), &hyp, 0.5);
        assert_eq!(m.mota, None);
        assert_eq!(m.false_positives, hyp.total_boxes());
        assert_eq!(m.gt_count, 0);
    }

    /// One object over 10 frames; the hypothesis covers frames 1-4 as id A
    /// and 5-10 as id B with perfect overlap. Exactly one identity switch,
    /// no fragmentation, MOTA 0.9.
    #[test]
    fn split_identity_hand_oracle() {
        let mut gt = TrackSet::default();
        let mut hyp = TrackSet::default();
        for f in 1..=10u64 {
            gt.insert(f, 1, b(0.0, 0.0)).unwrap();
            let hid = if f <= 4 { 100 } else { 200 };
            hyp.insert(f, hid, b(0.0, 0.0)).unwrap();
        }
        let m = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(m.false_negatives, 0);
        assert_eq!(m.false_positives, 0);
        assert_eq!(m.id_switches, 1);
        assert_eq!(m.fragmentations, 0);
        assert_eq!(m.mota, Some(0.9));
        assert_eq!(m.motp, 1.0);
        assert_eq!(m.mostly_tracked, 1);
    }

    /// A continuing match above the gate is never stolen by a closer new
    /// hypothesis.
    #[test]
    fn correspondence_persists_against_closer_newcomer() {
        let mut gt = TrackSet::default();
        let mut hyp = TrackSet::default();
        // Hypothesis A overlaps gt at IOU ~0.54 every frame.
        for f in 0..6u64 {
            gt.insert(f, 1, b(0.0, 0.0)).unwrap();
            hyp.insert(f, 10, b(3.0, 0.0)).unwrap();
        }
        // From frame 2, hypothesis B sits exactly on the ground truth.
        for f in 2..6u64 {
            hyp.insert(f, 20, b(0.0, 0.0)).unwrap();
        }
        let m = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(m.id_switches, 0, "continuing match must persist");
        // B's boxes all count as false positives.
        assert_eq!(m.false_positives, 4);
        for fm in &m.frame_matches {
            assert_eq!(fm.pairs[0].1, 10);
        }
    }

    #[test]
    fn gap_then_new_id_is_a_switch_and_fragmentation() {
        let mut gt = TrackSet::default();
        let mut hyp = TrackSet::default();
        for f in 0..10u64 {
            gt.insert(f, 1, b(0.0, 0.0)).unwrap();
        }
        for f in 0..4u64 {
            hyp.insert(f, 10, b(0.0, 0.0)).unwrap();
        }
        // Frames 4-5 untracked, then a different id resumes.
        for f in 6..10u64 {
            hyp.insert(f, 20, b(0.0, 0.0)).unwrap();
        }
        let m = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(m.id_switches, 1);
        assert_eq!(m.fragmentations, 1);
        assert_eq!(m.false_negatives, 2);
    }

    #[test]
    fn hyp_frames_beyond_gt_range_count_as_false_positives() {
        let mut gt = TrackSet::default();
        let mut hyp = TrackSet::default();
        for f in 0..5u64 {
            gt.insert(f, 1, b(0.0, 0.0)).unwrap();
            hyp.insert(f, 10, b(0.0, 0.0)).unwrap();
        }
        for f in 5..9u64 {
            hyp.insert(f, 10, b(0.0, 0.0)).unwrap();
        }
        let m = clear_mot(&gt, &hyp, 0.5);
        assert_eq!(m.false_positives, 4);
        assert_eq!(m.false_negatives, 0);
    }

    proptest! {
        #[test]
        fn self_evaluation_is_perfect(seed in 0u64..400) {
            let set = random_set(seed, 1 + seed % 8, 12);
            let m = clear_mot(&set, &set, 0.5);
            prop_assert_eq!(m.mota, Some(1.0));
            prop_assert_eq!(m.motp, 1.0);
            prop_assert_eq!(m.false_positives + m.false_negatives + m.id_switches + m.fragmentations, 0);
        }

        /// Deleting k matched hypothesis boxes adds exactly k false
        /// negatives and never adds false positives.
        #[test]
        fn deletion_degrades_symmetrically(seed in 0u64..200, k in 1usize..6) {
            let gt = random_set(seed, 4, 12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1E7);
            let mut hyp = gt.clone();
            let mut all: Vec<(u64, u64)> = hyp
                .frames()
                .iter()
                .flat_map(|(f, m)| m.keys().map(|id| (*f, *id)).collect::<Vec<_>>())
                .collect();
            prop_assume!(all.len() > k);
            // Deterministic random subset.
            for i in (1..all.len()).rev() {
                let j = rng.random_range(0..=i);
                all.swap(i, j);
            }
            let mut removed = 0;
            let mut pruned = TrackSet::default();
            let to_remove: std::collections::BTreeSet<(u64, u64)> =
                all.into_iter().take(k).collect();
            for (f, boxes) in hyp.frames() {
                for (id, bx) in boxes {
                    if to_remove.contains(&(*f, *id)) {
                        removed += 1;
                    } else {
                        pruned.insert(*f, *id, *bx).unwrap();
                    }
                }
            }
            hyp = pruned;
            let base = clear_mot(&gt, &gt, 0.5);
            let m = clear_mot(&gt, &hyp, 0.5);
            prop_assert_eq!(m.false_negatives, base.false_negatives + removed);
            prop_assert!(m.false_positives <= base.false_positives);
        }

        /// IDS and FM are invariant under bijective relabeling of
        /// hypothesis ids.
        #[test]
        fn relabeling_invariance(seed in 0u64..200) {
            let gt = random_set(seed, 5, 12);
            // Derive an imperfect hypothesis: drop every 4th frame's box of
            // id 2 and rename ids.
            let mut hyp = TrackSet::default();
            for (f, boxes) in gt.frames() {
                for (id, bx) in boxes {
                    if *id == 2 && f % 4 == 0 {
                        continue;
                    }
                    hyp.insert(*f, *id, *bx).unwrap();
                }
            }
            let m1 = clear_mot(&gt, &hyp, 0.5);
            let mut renamed = TrackSet::default();
            for (f, boxes) in hyp.frames() {
                for (id, bx) in boxes {
                    renamed.insert(*f, id * 7 + 1000, *bx).unwrap();
                }
            }
            let m2 = clear_mot(&gt, &renamed, 0.5);
            prop_assert_eq!(m1.id_switches, m2.id_switches);
            prop_assert_eq!(m1.fragmentations, m2.fragmentations);
            prop_assert_eq!(m1.false_negatives, m2.false_negatives);
            prop_assert_eq!(m1.false_positives, m2.false_positives);
        }

        #[test]
        fn mota_bounded_above(seed in 0u64..200) {
            let gt = random_set(seed, 3, 10);
            let hyp = random_set(seed + 999, 3, 10);
            let m = clear_mot(&gt, &hyp, 0.5);
            if let Some(mota) = m.mota {
                prop_assert!(mota <= 1.0);
            }
            prop_assert!((0.0..=1.0).contains(&m.motp));
        }
    }
}
