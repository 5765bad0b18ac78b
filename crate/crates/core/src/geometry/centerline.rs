use nalgebra::{Point3, Vector3};

use super::GeometryError;

/// Tolerance on the arc-length/edge-length consistency invariant.
const ARCLENGTH_TOL: f64 = 1e-9;

/// Arc-length parameterized polyline along the ego track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackCenterline {
    vertices: Vec<Point3<f64>>,
    arclengths: Vec<f64>,
}

/// Closest point of the centerline to a query, measured in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineProjection {
    /// Closest point on the polyline; z is interpolated along the segment.
    pub point: Point3<f64>,
    pub arclength: f64,
    pub segment: usize,
    /// Horizontal (x, y) distance from the query to `point`.
    pub distance: f64,
    /// Signed horizontal offset, positive to the left of the travel direction.
    pub signed_offset: f64,
}

impl TrackCenterline {
    /// Builds the polyline and its cumulative arc lengths. Consecutive
    /// duplicate vertices are rejected, since they would break strict
    /// monotonicity of the arc length.
    pub fn new(vertices: Vec<Point3<f64>>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::Centerline(format!(
                "need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if !vertices.iter().all(|p| p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        let mut arclengths = Vec::with_capacity(vertices.len());
        arclengths.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            let d = (w[1] - w[0]).norm();
            if !(d > 0.0) {
                return Err(GeometryError::Centerline(format!("zero-length edge at vertex {i}")));
            }
            arclengths.push(arclengths[i] + d);
        }
        Ok(Self { vertices, arclengths })
    }

    /// Like [`TrackCenterline::new`] but silently drops consecutive duplicates.
    pub fn from_points_dedup(points: impl IntoIterator<Item = Point3<f64>>) -> Result<Self, GeometryError> {
        let mut vertices: Vec<Point3<f64>> = Vec::new();
        for p in points {
            if vertices.last().is_some_and(|q| (p - q).norm() == 0.0) {
                continue;
            }
            vertices.push(p);
        }
        Self::new(vertices)
    }

    /// Rebuilds from stored vertices and arc lengths, checking every invariant.
    pub fn from_parts(vertices: Vec<Point3<f64>>, arclengths: Vec<f64>) -> Result<Self, GeometryError> {
        let built = Self::new(vertices)?;
        if arclengths.len() != built.arclengths.len() {
            return Err(GeometryError::LengthMismatch { expected: built.arclengths.len(), got: arclengths.len() });
        }
        for (i, (a, b)) in arclengths.iter().zip(&built.arclengths).enumerate() {
            if (a - b).abs() > ARCLENGTH_TOL {
                return Err(GeometryError::Centerline(format!("arclength {i} is {a}, edge lengths give {b}")));
            }
        }
        Ok(Self { vertices: built.vertices, arclengths })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn arclengths(&self) -> &[f64] {
        &self.arclengths
    }

    pub fn length(&self) -> f64 {
        *self.arclengths.last().expect("at least two vertices")
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    fn segment_at(&self, s: f64) -> usize {
        let i = self.arclengths.partition_point(|&a| a <= s);
        i.saturating_sub(1).min(self.segment_count() - 1)
    }

    /// Point at arc length `s`, or `None` outside `[0, length]`.
    pub fn point_at(&self, s: f64) -> Option<Point3<f64>> {
        if !(0.0..=self.length()).contains(&s) {
            return None;
        }
        let i = self.segment_at(s);
        let (a, b) = (self.vertices[i], self.vertices[i + 1]);
        let t = (s - self.arclengths[i]) / (self.arclengths[i + 1] - self.arclengths[i]);
        Some(a + (b - a) * t)
    }

    /// Unit direction of the segment containing `s` (clamped to the ends).
    pub fn tangent_at(&self, s: f64) -> Vector3<f64> {
        let i = self.segment_at(s.clamp(0.0, self.length()));
        (self.vertices[i + 1] - self.vertices[i]).normalize()
    }

    /// Heading of the tangent averaged over `window` neighbouring segments
    /// on either side of the one containing `s`.
    pub fn smoothed_heading(&self, s: f64, window: usize) -> f64 {
        let i = self.segment_at(s.clamp(0.0, self.length()));
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(self.segment_count() - 1);
        let mut sum = Vector3::zeros();
        for k in lo..=hi {
            let d = self.vertices[k + 1] - self.vertices[k];
            sum += Vector3::new(d.x, d.y, 0.0);
        }
        if sum.x == 0.0 && sum.y == 0.0 {
            let t = self.tangent_at(s);
            return t.y.atan2(t.x);
        }
        sum.y.atan2(sum.x)
    }

    /// Exact point-to-segment projection over all segments, in the x-y plane.
    /// Ties go to the lower segment index.
    pub fn project_xy(&self, q: &Point3<f64>) -> CenterlineProjection {
        let mut best: Option<CenterlineProjection> = None;
        let mut best_d2 = f64::INFINITY;
        for i in 0..self.segment_count() {
            let (a, b) = (self.vertices[i], self.vertices[i + 1]);
            let (ex, ey) = (b.x - a.x, b.y - a.y);
            let len2 = ex * ex + ey * ey;
            let t = if len2 > 0.0 {
                (((q.x - a.x) * ex + (q.y - a.y) * ey) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let px = a.x + ex * t;
            let py = a.y + ey * t;
            let d2 = (q.x - px).powi(2) + (q.y - py).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                let point = if t == 0.0 {
                    a
                } else if t == 1.0 {
                    b
                } else {
                    Point3::new(px, py, a.z + (b.z - a.z) * t)
                };
                let cross = ex * (q.y - a.y) - ey * (q.x - a.x);
                let seg_len = self.arclengths[i + 1] - self.arclengths[i];
                best = Some(CenterlineProjection {
                    point,
                    arclength: self.arclengths[i] + t * seg_len,
                    segment: i,
                    distance: d2.sqrt(),
                    signed_offset: if len2 > 0.0 { cross / len2.sqrt() } else { d2.sqrt() },
                });
            }
        }
        best.expect("centerline has at least one segment")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_axis(n: usize) -> TrackCenterline {
        TrackCenterline::new((0..n).map(|i| Point3::new(i as f64 * 10.0, 0.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn arclength_invariants() {
        let c = TrackCenterline::new(vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(3.0, 4.0, 0.0),
            Point3::new(3.0, 4.0, 2.0),
        ])
        .unwrap();
        assert_eq!(c.arclengths(), &[0.0, 5.0, 7.0]);
        assert!(TrackCenterline::new(vec![Point3::origin()]).is_err());
        assert!(TrackCenterline::new(vec![Point3::origin(), Point3::origin()]).is_err());
    }

    #[test]
    fn point_and_tangent() {
        let c = x_axis(3);
        assert_eq!(c.point_at(15.0), Some(Point3::new(15.0, 0.0, 0.0)));
        assert_eq!(c.point_at(20.0), Some(Point3::new(20.0, 0.0, 0.0)));
        assert_eq!(c.point_at(20.5), None);
        assert_eq!(c.tangent_at(5.0), Vector3::x());
    }

    #[test]
    fn projection_onto_axis() {
        let p = x_axis(3).project_xy(&Point3::new(3.0, 1.0, 0.0));
        assert_eq!(p.point, Point3::new(3.0, 0.0, 0.0));
        assert_eq!(p.arclength, 3.0);
        assert_eq!(p.distance, 1.0);
        assert_eq!(p.signed_offset, 1.0);
    }

    #[test]
    fn projection_clamps_to_ends() {
        let p = x_axis(3).project_xy(&Point3::new(-5.0, 0.0, 0.0));
        assert_eq!(p.arclength, 0.0);
        assert_eq!(p.distance, 5.0);
    }

    #[test]
    fn dedup_constructor() {
        let c = TrackCenterline::from_points_dedup(vec![
            Point3::origin(),
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(c.vertices().len(), 2);
    }
}
