//! Signed separation between oriented rectangles, used as the collision
//! check. It works on plant poses only and knows nothing about the MPC.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    /// Rectangle spanning `[-rear, front]` along `heading` from `(x, y)`.
    pub fn from_reference(x: f64, y: f64, heading: f64, front: f64, rear: f64, width: f64) -> Self {
        let shift = 0.5 * (front - rear);
        Self {
            cx: x + shift * heading.cos(),
            cy: y + shift * heading.sin(),
            heading,
            half_length: 0.5 * (front + rear),
            half_width: 0.5 * width,
        }
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.heading.sin_cos();
        let (l, w) = (self.half_length, self.half_width);
        [(l, w), (-l, w), (-l, -w), (l, -w)].map(|(a, b)| (self.cx + a * c - b * s, self.cy + a * s + b * c))
    }

    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }
}

/// Largest gap between the projections of the two rectangles over the four
/// edge normals. Positive values separate the rectangles (and bound their
/// distance from below); a nonpositive value means they overlap.
pub fn separation(a: &OrientedRect, b: &OrientedRect) -> f64 {
    let (ca, cb) = (a.corners(), b.corners());
    let project = |corners: &[(f64, f64); 4], axis: (f64, f64)| {
        corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let d = p.0 * axis.0 + p.1 * axis.1;
            (lo.min(d), hi.max(d))
        })
    };
    a.axes()
        .into_iter()
        .chain(b.axes())
        .map(|axis| {
            let (alo, ahi) = project(&ca, axis);
            let (blo, bhi) = project(&cb, axis);
            (blo - ahi).max(alo - bhi)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
