//! Box-trajectory extrapolation for coasting gaps and backward re-linking.
//!
//! The tracker is detections-only: where a pixel-level visual tracker would
//! follow a target through a gap, these predictors extrapolate its box
//! trajectory instead. The interface takes only a box history, so an
//! image-based implementation can slot in later without tracker changes.

use std::str::FromStr;

use crate::error::Error;
use crate::geom::{BBox, FrameIndex};

/// Number of trailing (or leading, for backward prediction) history
/// entries used to estimate velocity: short enough to follow turning
/// vehicles, long enough to damp detector jitter.
pub const DEFAULT_VELOCITY_WINDOW: usize = 3;

/// Which box-trajectory model fills detection gaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    /// Repeats the boundary box.
    ConstantPosition,
    /// Extrapolates the center by the mean per-frame displacement over the
    /// velocity window, holding size fixed.
    ConstantVelocity,
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "constant_position" => Ok(PredictorKind::ConstantPosition),
            "constant_velocity" => Ok(PredictorKind::ConstantVelocity),
            other => Err(Error::Config(format!(
                "unknown predictor {other:?}; expected constant_velocity or constant_position"
            ))),
        }
    }
}

impl PredictorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictorKind::ConstantPosition => "constant_position",
            PredictorKind::ConstantVelocity => "constant_velocity",
        }
    }
}

/// Extrapolates `steps` frames past the newest history entry.
///
/// The history must be non-empty and frame-ordered; `steps` must be at
/// least 1 (predicting zero steps is a caller bug, not an identity).
pub fn predict_forward(
    history: &[(FrameIndex, BBox)],
    steps: u32,
    kind: PredictorKind,
    window: usize,
) -> BBox {
    assert!(!history.is_empty(), "prediction needs at least one box");
    assert!(steps >= 1, "prediction must advance at least one frame");
    let last = history[history.len() - 1].1;
    match kind {
        PredictorKind::ConstantPosition => last,
        PredictorKind::ConstantVelocity => {
            let tail_start = history.len().saturating_sub(window.max(1));
            let (vx, vy) = mean_velocity(&history[tail_start..]);
            let (cx, cy) = last.center();
            let s = steps as f64;
            BBox::from_center(cx + vx * s, cy + vy * s, last.w, last.h)
        }
    }
}

/// Mirror of [`predict_forward`]: extrapolates `steps` frames before the
/// oldest history entry, using the leading window with negated displacement.
pub fn predict_backward(
    history: &[(FrameIndex, BBox)],
    steps: u32,
    kind: PredictorKind,
    window: usize,
) -> BBox {
    assert!(!history.is_empty(), "prediction needs at least one box");
    assert!(steps >= 1, "prediction must advance at least one frame");
    let first = history[0].1;
    match kind {
        PredictorKind::ConstantPosition => first,
        PredictorKind::ConstantVelocity => {
            let head_end = window.max(1).min(history.len());
            let (vx, vy) = mean_velocity(&history[..head_end]);
            let (cx, cy) = first.center();
            let s = steps as f64;
            BBox::from_center(cx - vx * s, cy - vy * s, first.w, first.h)
        }
    }
}

/// Mean per-frame center displacement over consecutive entry pairs.
/// A single entry yields zero velocity.
fn mean_velocity(entries: &[(FrameIndex, BBox)]) -> (f64, f64) {
    if entries.len() < 2 {
        return (0.0, 0.0);
    }
    let mut vx = 0.0;
    let mut vy = 0.0;
    for pair in entries.windows(2) {
        let (f0, b0) = pair[0];
        let (f1, b1) = pair[1];
        debug_assert!(f1 > f0, "history frames must be strictly increasing");
        let dt = (f1 - f0) as f64;
        let (cx0, cy0) = b0.center();
        let (cx1, cy1) = b1.center();
        vx += (cx1 - cx0) / dt;
        vy += (cy1 - cy0) / dt;
    }
    let n = (entries.len() - 1) as f64;
    (vx / n, vy / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const CV: PredictorKind = PredictorKind::ConstantVelocity;
    const W: usize = DEFAULT_VELOCITY_WINDOW;

    fn b(x: f64, y: f64) -> BBox {
        BBox::new(x, y, 10.0, 10.0)
    }

    #[test]
    fn forward_linear_two_entries() {
        let h = vec![(0, b(0.0, 0.0)), (1, b(10.0, 0.0))];
        let p = predict_forward(&h, 1, CV, W);
        assert_relative_eq!(p.x, 20.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn forward_single_entry_holds_position() {
        let h = vec![(4, b(3.0, 7.0))];
        let p = predict_forward(&h, 5, CV, W);
        assert_eq!(p, b(3.0, 7.0));
    }

    #[test]
    fn forward_mean_displacement() {
        let h = vec![(0, b(0.0, 0.0)), (1, b(4.0, 0.0)), (2, b(8.0, 0.0))];
        let p = predict_forward(&h, 2, CV, W);
        assert_relative_eq!(p.x, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn backward_linear() {
        let h = vec![(5, b(20.0, 0.0)), (6, b(30.0, 0.0))];
        let p = predict_backward(&h, 1, CV, W);
        assert_relative_eq!(p.x, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn backward_single_entry_holds_position() {
        let h = vec![(9, b(5.0, 5.0))];
        assert_eq!(predict_backward(&h, 3, CV, W), b(5.0, 5.0));
    }

    #[test]
    fn backward_mean_displacement() {
        let h = vec![(3, b(16.0, 0.0)), (4, b(20.0, 0.0)), (5, b(24.0, 0.0))];
        let p = predict_backward(&h, 3, CV, W);
        assert_relative_eq!(p.x, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_position_repeats_boundary() {
        let h = vec![(0, b(0.0, 0.0)), (1, b(10.0, 4.0))];
        assert_eq!(
            predict_forward(&h, 7, PredictorKind::ConstantPosition, W),
            b(10.0, 4.0)
        );
        assert_eq!(
            predict_backward(&h, 7, PredictorKind::ConstantPosition, W),
            b(0.0, 0.0)
        );
    }

    #[test]
    #[should_panic(expected = "advance at least one frame")]
    fn zero_steps_rejected() {
        let h = vec![(0, b(0.0, 0.0))];
        predict_forward(&h, 0, CV, W);
    }

    #[test]
    fn window_uses_recent_entries_only() {
        // Early slow motion must not dilute the recent fast segment.
        let h = vec![
            (0, b(0.0, 0.0)),
            (1, b(1.0, 0.0)),
            (2, b(2.0, 0.0)),
            (3, b(12.0, 0.0)),
            (4, b(22.0, 0.0)),
        ];
        let p = predict_forward(&h, 1, CV, 3);
        assert_relative_eq!(p.x, 32.0, epsilon = 1e-12);
    }

    proptest! {
        /// On a perfectly linear history, extrapolating forward off a
        /// prefix and backward off a suffix recovers the endpoints.
        #[test]
        fn forward_backward_symmetry(
            x0 in -100.0f64..100.0,
            y0 in -100.0f64..100.0,
            vx in -20.0f64..20.0,
            vy in -20.0f64..20.0,
            n in 4usize..10,
            steps in 1u32..5,
        ) {
            let hist: Vec<(FrameIndex, BBox)> = (0..n)
                .map(|i| {
                    let t = i as f64;
                    (i as u64, BBox::from_center(x0 + vx * t, y0 + vy * t, 8.0, 6.0))
                })
                .collect();
            let k = steps as usize;
            // Both the prefix and the suffix need two entries to measure
            // velocity.
            prop_assume!(k + 2 <= n);

            let fwd = predict_forward(&hist[..n - k], steps, CV, W);
            let expect = hist[n - 1].1;
            prop_assert!((fwd.x - expect.x).abs() < 1e-9);
            prop_assert!((fwd.y - expect.y).abs() < 1e-9);

            let bwd = predict_backward(&hist[k..], steps, CV, W);
            let expect = hist[0].1;
            prop_assert!((bwd.x - expect.x).abs() < 1e-9);
            prop_assert!((bwd.y - expect.y).abs() < 1e-9);
        }

        /// Predicted boxes keep the boundary entry's size.
        #[test]
        fn size_preserved(w in 1.0f64..40.0, h in 1.0f64..40.0, steps in 1u32..10) {
            let hist = vec![
                (0, BBox::new(0.0, 0.0, w, h)),
                (1, BBox::new(5.0, 3.0, w, h)),
            ];
            let p = predict_forward(&hist, steps, CV, W);
            prop_assert_eq!(p.w, w);
            prop_assert_eq!(p.h, h);
            let p = predict_backward(&hist, steps, CV, W);
            prop_assert_eq!(p.w, w);
            prop_assert_eq!(p.h, h);
        }
    }
}
