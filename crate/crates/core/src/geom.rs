//! Bounding-box geometry shared by association, prediction, and evaluation.

/// Frame number within a sequence. Strictly increasing along any track.
pub type FrameIndex = u64;

/// Track identifier, unique within a run and never reused.
pub type TrackId = u64;

/// Axis-aligned box in pixel coordinates: `(left, top, width, height)`.
///
/// Coordinates are real-valued; negative `x`/`y` are allowed since
/// predictors may extrapolate off-frame. Width and height must stay
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Creates a box from `(left, top, width, height)`.
    ///
    /// Panics if width or height is not strictly positive or any
    /// coordinate is non-finite.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        assert!(
            x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite(),
            "box coordinates must be finite: ({x}, {y}, {w}, {h})"
        );
        assert!(w > 0.0 && h > 0.0, "box size must be positive: {w}x{h}");
        BBox { x, y, w, h }
    }

    /// Creates a box from its center point and size.
    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BBox::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Box area in square pixels. Always positive for a valid box.
pub fn area(b: &BBox) -> f64 {
    b.w * b.h
}

/// Intersection over union of two boxes, in `[0, 1]`.
///
/// Symmetric; boxes touching only at an edge score exactly 0. Box areas
/// are computed from corner differences, the same expressions that produce
/// the intersection, so identical boxes score exactly 1.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let iy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let area_a = (a.right() - a.x) * (a.bottom() - a.y);
    let area_b = (b.right() - b.x) * (b.bottom() - b.y);
    inter / (area_a + area_b - inter)
}
