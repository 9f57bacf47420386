//! Sampled reference paths with arc-length stations, plus closest-point
//! projection.

use thiserror::Error;

use crate::scalar::wrap_angle;
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("a path needs at least two points")]
    TooFewPoints,
    #[error("stations must be strictly increasing (at index {0})")]
    NonIncreasingStations(usize),
    #[error("adjacent samples {spacing:.3} m apart exceed the 0.5 m density limit (at index {index})")]
    TooSparse { index: usize, spacing: f64 },
    #[error("position projects outside the path extent")]
    OutOfRange,
    #[error("station {0:.3} m is outside the path extent")]
    StationOutOfRange(f64),
    #[error("path samples must be finite")]
    NonFinite,
}

/// Maximum distance between adjacent samples.
pub const MAX_SPACING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint<T> {
    pub x: T,
    pub y: T,
    pub station: T,
    pub heading: T,
    pub curvature: T,
}

/// Result of projecting a position onto the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    pub station: T,
    /// Signed lateral offset, positive to the left of the direction of travel.
    pub lateral: T,
    pub heading: T,
    pub curvature: T,
    pub segment: usize,
}

/// Densely sampled centerline with a constant reference speed.
///
/// The longitudinal reference moves along the path as
/// `reference_origin + speed·t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath<T> {
    points: Vec<PathPoint<T>>,
    speed: T,
    reference_origin: T,
}

impl<T: Real> ReferencePath<T> {
    /// Builds a path from fully specified samples.
    pub fn from_samples(points: Vec<PathPoint<T>>, speed: T) -> Result<Self, PathError> {
        if points.len() < 2 {
            return Err(PathError::TooFewPoints);
        }
        let max_spacing = T::lit(MAX_SPACING) * T::lit(1.0 + 1e-9);
        for (i, w) in points.windows(2).enumerate() {
            let finite = [w[1].x, w[1].y, w[1].station, w[1].heading, w[1].curvature]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(PathError::NonFinite);
            }
            if w[1].station <= w[0].station {
                return Err(PathError::NonIncreasingStations(i + 1));
            }
            let spacing = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
            if spacing > max_spacing {
                return Err(PathError::TooSparse { index: i + 1, spacing: spacing.as_f64() });
            }
        }
        let reference_origin = points[0].station;
        Ok(Self { points, speed, reference_origin })
    }

    /// Builds a path from raw positions; stations are cumulative chord
    /// lengths starting at `first_station`, headings and curvatures come from
    /// finite differences.
    pub fn from_points(xy: &[(T, T)], first_station: T, speed: T) -> Result<Self, PathError> {
        if xy.len() < 2 {
            return Err(PathError::TooFewPoints);
        }
        let n = xy.len();
        let mut stations = Vec::with_capacity(n);
        let mut s = first_station;
        stations.push(s);
        for w in xy.windows(2) {
            s += (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            stations.push(s);
        }
        let heading_between = |i: usize, j: usize| (xy[j].1 - xy[i].1).atan2(xy[j].0 - xy[i].0);
        let mut headings = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            headings.push(heading_between(a, b));
        }
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            let ds = stations[b] - stations[a];
            let curvature = if ds > T::zero() { wrap_angle(headings[b] - headings[a]) / ds } else { T::zero() };
            points.push(PathPoint { x: xy[i].0, y: xy[i].1, station: stations[i], heading: headings[i], curvature });
        }
        Self::from_samples(points, speed)
    }

    /// Straight segment starting at `(x0, y0)`; the start has station `first_station`.
    pub fn straight(x0: T, y0: T, heading: T, first_station: T, length: T, spacing: T, speed: T) -> Result<Self, PathError> {
        let count = (length / spacing).ceil().to_usize().unwrap_or(1).max(1);
        let step = length / T::lit(count as f64);
        let (sh, ch) = heading.sin_cos();
        let points = (0..=count)
            .map(|i| {
                let d = step * T::lit(i as f64);
                PathPoint { x: x0 + ch * d, y: y0 + sh * d, station: first_station + d, heading, curvature: T::zero() }
            })
            .collect();
        Self::from_samples(points, speed)
    }

    /// Counter-clockwise circular arc starting at the origin heading along +x.
    pub fn circle_arc(radius: T, length: T, spacing: T, speed: T) -> Result<Self, PathError> {
        let count = (length / spacing).ceil().to_usize().unwrap_or(1).max(1);
        let step = length / T::lit(count as f64);
        let points = (0..=count)
            .map(|i| {
                let s = step * T::lit(i as f64);
                let phi = s / radius;
                PathPoint {
                    x: radius * phi.sin(),
                    y: radius * (T::one() - phi.cos()),
                    station: s,
                    heading: phi,
                    curvature: T::one() / radius,
                }
            })
            .collect();
        Self::from_samples(points, speed)
    }

    /// Centerline `y = amplitude·sin(omega·x) + offset` for `x ∈ [x_start, x_end]`,
    /// with station zero at `x = 0`.
    pub fn sinusoid(
        amplitude: T,
        omega: T,
        offset: T,
        x_start: T,
        x_end: T,
        spacing: T,
        speed: T,
    ) -> Result<Self, PathError> {
        let y = |x: T| amplitude * (omega * x).sin() + offset;
        let dy = |x: T| amplitude * omega * (omega * x).cos();
        let ddy = |x: T| -amplitude * omega * omega * (omega * x).sin();
        // Parameter step chosen so that chords never exceed `spacing`.
        let max_slope = (amplitude * omega).abs();
        let dx = spacing / (T::one() + max_slope * max_slope).sqrt();
        let count = ((x_end - x_start) / dx).ceil().to_usize().ok_or(PathError::NonFinite)?.max(1);
        let step = (x_end - x_start) / T::lit(count as f64);
        let xs: Vec<T> = (0..=count).map(|i| x_start + step * T::lit(i as f64)).collect();
        let mut stations = Vec::with_capacity(xs.len());
        let mut s = T::zero();
        stations.push(s);
        for w in xs.windows(2) {
            s += (w[1] - w[0]).hypot(y(w[1]) - y(w[0]));
            stations.push(s);
        }
        // Shift so the station at x = 0 is zero (interpolated on the chord containing it).
        let zero_shift = if x_start <= T::zero() && x_end >= T::zero() {
            let idx = xs.iter().position(|&x| x >= T::zero()).unwrap_or(0);
            if idx == 0 {
                stations[0]
            } else {
                let t = (T::zero() - xs[idx - 1]) / (xs[idx] - xs[idx - 1]);
                stations[idx - 1] + t * (stations[idx] - stations[idx - 1])
            }
        } else {
            T::zero()
        };
        let points = xs
            .iter()
            .zip(stations.iter())
            .map(|(&x, &st)| {
                let slope = dy(x);
                let norm = T::one() + slope * slope;
                PathPoint {
                    x,
                    y: y(x),
                    station: st - zero_shift,
                    heading: slope.atan(),
                    curvature: ddy(x) / (norm * norm.sqrt()),
                }
            })
            .collect();
        Self::from_samples(points, speed)
    }

    /// Path displaced along the left normal by `offset(station)`, resampled
    /// every `spacing` metres of the base path. Stations restart at the
    /// first station of the base path.
    pub fn with_lateral_offset(&self, offset: impl Fn(T) -> T, spacing: T) -> Result<Self, PathError> {
        let (s0, s1) = (self.first_station(), self.last_station());
        let count = ((s1 - s0) / spacing).ceil().to_usize().ok_or(PathError::NonFinite)?.max(1);
        let step = (s1 - s0) / T::lit(count as f64);
        let mut xy = Vec::with_capacity(count + 1);
        for i in 0..=count {
            let s = if i == count { s1 } else { s0 + step * T::lit(i as f64) };
            let p = self.sample(s)?;
            let d = offset(s);
            let (sh, ch) = p.heading.sin_cos();
            xy.push((p.x - sh * d, p.y + ch * d));
        }
        // An offset path can be longer than its base; refine if chords grew past the limit.
        let limit = T::lit(MAX_SPACING);
        let mut dense = Vec::with_capacity(xy.len());
        for w in xy.windows(2) {
            dense.push(w[0]);
            let chord = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            if chord > limit {
                let pieces = (chord / limit).ceil().to_usize().unwrap_or(1);
                for k in 1..pieces {
                    let t = T::lit(k as f64 / pieces as f64);
                    dense.push((w[0].0 + (w[1].0 - w[0].0) * t, w[0].1 + (w[1].1 - w[0].1) * t));
                }
            }
        }
        dense.push(*xy.last().expect("non-empty"));
        let mut path = Self::from_points(&dense, s0, self.speed)?;
        path.reference_origin = self.reference_origin;
        Ok(path)
    }

    pub fn points(&self) -> &[PathPoint<T>] {
        &self.points
    }

    pub fn speed(&self) -> T {
        self.speed
    }

    pub fn with_reference_origin(mut self, origin: T) -> Self {
        self.reference_origin = origin;
        self
    }

    pub fn reference_origin(&self) -> T {
        self.reference_origin
    }

    /// Station of the longitudinal reference at time `t`.
    pub fn reference_station(&self, t: T) -> T {
        self.reference_origin + self.speed * t
    }

    pub fn first_station(&self) -> T {
        self.points[0].station
    }

    pub fn last_station(&self) -> T {
        self.points[self.points.len() - 1].station
    }

    /// Interpolated sample at `station`.
    pub fn sample(&self, station: T) -> Result<PathPoint<T>, PathError> {
        let tol = T::lit(1e-9);
        if !(station >= self.first_station() - tol && station <= self.last_station() + tol) {
            return Err(PathError::StationOutOfRange(station.as_f64()));
        }
        let idx = match self
            .points
            .binary_search_by(|p| p.station.partial_cmp(&station).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => return Ok(self.points[i]),
            Err(i) => i.clamp(1, self.points.len() - 1),
        };
        let (a, b) = (&self.points[idx - 1], &self.points[idx]);
        let t = ((station - a.station) / (b.station - a.station)).clamp(T::zero(), T::one());
        Ok(PathPoint {
            x: a.x + (b.x - a.x) * t,
            y: a.y + (b.y - a.y) * t,
            station,
            heading: a.heading + wrap_angle(b.heading - a.heading) * t,
            curvature: a.curvature + (b.curvature - a.curvature) * t,
        })
    }

    /// Curvature at `station`, clamped to the path ends.
    pub fn curvature_at(&self, station: T) -> T {
        let s = station.clamp(self.first_station(), self.last_station());
        self.sample(s).map(|p| p.curvature).unwrap_or_else(|_| T::zero())
    }

    /// Closest point on the polyline to `(x, y)`.
    pub fn project(&self, x: T, y: T) -> Result<Projection<T>, PathError> {
        let mut best: Option<(T, usize, T)> = None;
        for (i, w) in self.points.windows(2).enumerate() {
            let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
            let len2 = dx * dx + dy * dy;
            let raw = ((x - w[0].x) * dx + (y - w[0].y) * dy) / len2;
            let t = raw.clamp(T::zero(), T::one());
            let (px, py) = (w[0].x + dx * t, w[0].y + dy * t);
            let dist2 = (x - px) * (x - px) + (y - py) * (y - py);
            if best.is_none_or(|(d, _, _)| dist2 < d) {
                best = Some((dist2, i, raw));
            }
        }
        let (_, i, raw) = best.ok_or(PathError::TooFewPoints)?;
        let last = self.points.len() - 2;
        let eps = T::lit(1e-9);
        if (i == 0 && raw < -eps) || (i == last && raw > T::one() + eps) {
            return Err(PathError::OutOfRange);
        }
        let t = raw.clamp(T::zero(), T::one());
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len = dx.hypot(dy);
        let lateral = (dx * (y - a.y) - dy * (x - a.x)) / len;
        Ok(Projection {
            station: a.station + (b.station - a.station) * t,
            lateral,
            heading: a.heading + wrap_angle(b.heading - a.heading) * t,
            curvature: a.curvature + (b.curvature - a.curvature) * t,
            segment: i,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_projection_offsets() {
        let path = ReferencePath::<f64>::straight(0.0, 0.0, 0.0, 0.0, 50.0, 0.25, 10.0).unwrap();
        let p = path.project(12.3, 1.0).unwrap();
        assert!((p.station - 12.3).abs() < 1e-12);
        assert!((p.lateral - 1.0).abs() < 1e-12);
        let p = path.project(12.3, -0.4).unwrap();
        assert!((p.lateral + 0.4).abs() < 1e-12);
    }

    #[test]
    fn projection_outside_extent_is_rejected() {
        let path = ReferencePath::<f64>::straight(0.0, 0.0, 0.0, 0.0, 10.0, 0.25, 10.0).unwrap();
        assert_eq!(path.project(-1.0, 0.0), Err(PathError::OutOfRange));
        assert_eq!(path.project(10.5, 0.3), Err(PathError::OutOfRange));
        assert!(path.sample(11.0).is_err());
    }

    #[test]
    fn rejects_sparse_and_decreasing_samples() {
        let sparse = [(0.0, 0.0), (1.0, 0.0)];
        assert!(matches!(ReferencePath::from_points(&sparse, 0.0, 1.0), Err(PathError::TooSparse { .. })));
        let pts = vec![
            PathPoint { x: 0.0, y: 0.0, station: 0.0, heading: 0.0, curvature: 0.0 },
            PathPoint { x: 0.1, y: 0.0, station: 0.0, heading: 0.0, curvature: 0.0 },
        ];
        assert_eq!(ReferencePath::from_samples(pts, 1.0), Err(PathError::NonIncreasingStations(1)));
    }

    #[test]
    fn sinusoid_station_origin_and_curvature() {
        let path = ReferencePath::<f64>::sinusoid(5.0, 0.06, 3.0, -10.0, 200.0, 0.25, 10.0).unwrap();
        let p = path.project(0.0, 3.0).unwrap();
        assert!(p.station.abs() < 1e-6);
        // Peak curvature of 5·sin(0.06x) is 5·0.06² at the crest x = π/(2·0.06).
        let crest = std::f64::consts::PI / 0.12;
        let q = path.project(crest, 8.0).unwrap();
        assert!((q.curvature + 5.0 * 0.06 * 0.06).abs() < 1e-4);
        for w in path.points().windows(2) {
            assert!((w[1].x - w[0].x).hypot(w[1].y - w[0].y) <= MAX_SPACING);
        }
    }

    #[test]
    fn offset_path_is_displaced_along_normal() {
        let base = ReferencePath::<f64>::straight(0.0, 0.0, 0.0, 0.0, 40.0, 0.25, 10.0).unwrap();
        let shifted = base.with_lateral_offset(|_| -2.0, 0.25).unwrap();
        let p = base.project(shifted.points()[10].x, shifted.points()[10].y).unwrap();
        assert!((p.lateral + 2.0).abs() < 1e-12);
    }

    #[test]
    fn numeric_curvature_of_circle() {
        let r = 25.0;
        let exact = ReferencePath::<f64>::circle_arc(r, 30.0, 0.2, 5.0).unwrap();
        let xy: Vec<(f64, f64)> = exact.points().iter().map(|p| (p.x, p.y)).collect();
        let numeric = ReferencePath::from_points(&xy, 0.0, 5.0).unwrap();
        let mid = &numeric.points()[xy.len() / 2];
        assert!((mid.curvature - 1.0 / r).abs() < 1e-4);
    }
}
