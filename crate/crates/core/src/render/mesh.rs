use nalgebra::{Point3, Vector3};

use crate::geometry::RigidTransform;

use super::RenderError;

/// Smallest triangle area kept by [`TriangleMesh::new`], square meters.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub base_color: [u8; 3],
    pub stencil_id: u16,
}

pub(crate) fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

impl TriangleMesh {
    /// Validates indices and stencil id; triangles with area at or below
    /// [`MIN_TRIANGLE_AREA`] are dropped, as loaded meshes often carry
    /// slivers that no ray can hit anyway.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
        base_color: [u8; 3],
        stencil_id: u16,
    ) -> Result<Self, RenderError> {
        if stencil_id == 0 {
            return Err(RenderError::InvalidMesh("stencil id 0 is reserved for empty pixels".into()));
        }
        if !vertices.iter().all(|v| v.iter().all(|c| c.is_finite())) {
            return Err(RenderError::InvalidMesh("non-finite vertex".into()));
        }
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i as usize >= vertices.len())) {
            return Err(RenderError::InvalidMesh(format!("triangle {t:?} indexes past {} vertices", vertices.len())));
        }
        let triangles = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                triangle_area(&a, &b, &c) > MIN_TRIANGLE_AREA
            })
            .collect();
        Ok(Self { vertices, triangles, base_color, stencil_id })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, tri: usize) -> [Point3<f64>; 3] {
        self.triangles[tri].map(|i| self.vertices[i as usize])
    }

    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|p| t.apply(p)).collect(), ..self.clone() }
    }

    /// Uniform scale about the mesh origin.
    pub fn scaled(&self, s: f64) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|p| Point3::from(p.coords * s)).collect(), ..self.clone() }
    }

    pub fn translated(&self, d: &Vector3<f64>) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|p| p + d).collect(), ..self.clone() }
    }

    /// Axis-aligned bounds `(min, max)`; `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.corners(i);
                triangle_area(&a, &b, &c)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let v = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(2.0, 0.0, 0.0)];
        let m = TriangleMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]], [1, 2, 3], 16).unwrap();
        assert_eq!(m.triangle_count(), 1);
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 4]], [0; 3], 16).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 2]], [0; 3], 0).is_err());
        assert_eq!(m.bounds().unwrap(), (Point3::origin(), Point3::new(2.0, 1.0, 0.0)));
        assert!((m.surface_area() - 0.5).abs() < 1e-15);
    }
}
