use nalgebra::{Point2, Point3, Vector2, Vector3};

use crate::geometry::TrackCenterline;
use crate::scene::{Plane, PoleCluster};

use super::{RenderError, TriangleMesh};

/// Minimum pole height, for clusters whose points all share one z.
pub const MIN_POLE_HEIGHT: f64 = 0.1;

/// Twelve outward-facing triangles over eight corners ordered
/// bottom (0..4) then top (4..8), each ring counter-clockwise seen from above.
const BOX_TRIANGLES: [[u32; 3]; 12] = [
    [0, 2, 1],
    [0, 3, 2],
    [4, 5, 6],
    [4, 6, 7],
    [0, 1, 5],
    [0, 5, 4],
    [1, 2, 6],
    [1, 6, 5],
    [2, 3, 7],
    [2, 7, 6],
    [3, 0, 4],
    [3, 4, 7],
];

fn append_box(vertices: &mut Vec<Point3<f64>>, triangles: &mut Vec<[u32; 3]>, corners: [Point3<f64>; 8]) {
    let base = vertices.len() as u32;
    vertices.extend(corners);
    triangles.extend(BOX_TRIANGLES.iter().map(|t| t.map(|i| i + base)));
}

/// Axis-aligned box between `min` and `max`.
pub fn box_mesh(min: Point3<f64>, max: Point3<f64>, color: [u8; 3], stencil_id: u16) -> Result<TriangleMesh, RenderError> {
    let mut v = Vec::new();
    let mut t = Vec::new();
    let ring = |z: f64| {
        [Point3::new(min.x, min.y, z), Point3::new(max.x, min.y, z), Point3::new(max.x, max.y, z), Point3::new(min.x, max.y, z)]
    };
    let (b, top) = (ring(min.z), ring(max.z));
    append_box(&mut v, &mut t, [b[0], b[1], b[2], b[3], top[0], top[1], top[2], top[3]]);
    TriangleMesh::new(v, t, color, stencil_id)
}

/// One box per centerline edge: it spans the edge, is `width` wide along
/// the horizontal normal of the edge, and reaches from the centerline up to
/// `height` above it.
pub fn build_track_mesh(
    centerline: &TrackCenterline,
    width: f64,
    height: f64,
    color: [u8; 3],
    stencil_id: u16,
) -> Result<TriangleMesh, RenderError> {
    let mut v = Vec::new();
    let mut t = Vec::new();
    let up = Vector3::new(0.0, 0.0, height);
    for w in centerline.vertices().windows(2) {
        let (a, b) = (w[0], w[1]);
        let horiz = Vector3::new(b.x - a.x, b.y - a.y, 0.0);
        let lateral = if horiz.norm() > 0.0 { Vector3::z().cross(&horiz).normalize() } else { Vector3::y() };
        let half = lateral * (width / 2.0);
        // bottom ring counter-clockwise from above: right-back, right-front, left-front, left-back
        let ring = [a - half, b - half, b + half, a + half];
        append_box(&mut v, &mut t, [ring[0], ring[1], ring[2], ring[3], ring[0] + up, ring[1] + up, ring[2] + up, ring[3] + up]);
    }
    TriangleMesh::new(v, t, color, stencil_id)
}

/// Square-footprint box at the cluster's horizontal centroid spanning its
/// z extent (at least [`MIN_POLE_HEIGHT`]).
pub fn build_pole_mesh(cluster: &PoleCluster, footprint: f64, color: [u8; 3], stencil_id: u16) -> Result<TriangleMesh, RenderError> {
    let h = footprint / 2.0;
    let (z0, z1) = cluster.z_extent;
    let z1 = z1.max(z0 + MIN_POLE_HEIGHT);
    let c = cluster.centroid;
    box_mesh(Point3::new(c.x - h, c.y - h, z0), Point3::new(c.x + h, c.y + h, z1), color, stencil_id)
}

/// Orthonormal in-plane axes for a unit normal.
pub fn plane_basis(normal: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let a = normal.cross(&helper).normalize();
    let b = normal.cross(&a);
    (a, b)
}

fn cross2(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by the monotone chain, counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(points: &[Point2<f64>]) -> Vec<Point2<f64>> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Point2<f64>> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2<f64>>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while hull.len() >= start + 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle of 2D points: for each hull edge
/// direction, the bounding box in that frame. Returns corners
/// counter-clockwise and the area.
pub(crate) fn min_area_rectangle(points: &[Point2<f64>]) -> Option<([Point2<f64>; 4], f64)> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return None;
    }
    let mut best: Option<([Point2<f64>; 4], f64)> = None;
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()] - hull[i];
        let u = e / e.norm();
        let w = Vector2::new(-u.y, u.x);
        let (mut a0, mut a1, mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let (a, b) = (p.coords.dot(&u), p.coords.dot(&w));
            a0 = a0.min(a);
            a1 = a1.max(a);
            b0 = b0.min(b);
            b1 = b1.max(b);
        }
        let area = (a1 - a0) * (b1 - b0);
        if best.as_ref().is_none_or(|(_, ba)| area < *ba) {
            let c = |a: f64, b: f64| Point2::from(u * a + w * b);
            best = Some(([c(a0, b0), c(a1, b0), c(a1, b1), c(a0, b1)], area));
        }
    }
    best.filter(|(_, a)| *a > 1e-12)
}

/// Two-triangle rectangle in the plane covering the projections of all
/// inliers with minimal area.
pub fn build_plane_mesh(
    plane: &Plane,
    inliers: &[Point3<f64>],
    color: [u8; 3],
    stencil_id: u16,
) -> Result<TriangleMesh, RenderError> {
    if inliers.len() < 3 {
        return Err(RenderError::DegenerateInput(format!("plane mesh needs 3 inliers, got {}", inliers.len())));
    }
    let n = plane.normal;
    let (a, b) = plane_basis(&n);
    let origin = -n * plane.offset;
    let flat: Vec<Point2<f64>> =
        inliers.iter().map(|p| Point2::new((p.coords - origin).dot(&a), (p.coords - origin).dot(&b))).collect();
    let (rect, _) = min_area_rectangle(&flat)
        .ok_or_else(|| RenderError::DegenerateInput("plane inliers are collinear".into()))?;
    let lift = |q: &Point2<f64>| Point3::from(origin + a * q.x + b * q.y);
    let vertices = rect.iter().map(lift).collect();
    TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]], color, stencil_id)
}

/// Latitude-longitude sphere. Triangle count is `2·slices·(stacks − 1)`.
pub fn uv_sphere(center: Point3<f64>, radius: f64, stacks: u32, slices: u32, color: [u8; 3], stencil_id: u16) -> TriangleMesh {
    assert!(stacks >= 2 && slices >= 3);
    let mut v = vec![center + Vector3::new(0.0, 0.0, radius)];
    for i in 1..stacks {
        let phi = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let theta = std::f64::consts::TAU * j as f64 / slices as f64;
            v.push(center + radius * Vector3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()));
        }
    }
    v.push(center - Vector3::new(0.0, 0.0, radius));
    let bottom = v.len() as u32 - 1;
    let ring = |i: u32, j: u32| 1 + (i - 1) * slices + j % slices;
    let mut t = Vec::new();
    for j in 0..slices {
        t.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            t.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            t.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..slices {
        t.push([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriangleMesh::new(v, t, color, stencil_id).expect("sphere indices are in range")
}
