use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

/// Smallest ray parameter counted as a hit, so rays do not hit their origin.
pub const RAY_T_MIN: f64 = 1e-9;

/// Boxes are padded by this much so the slab test never rejects a box whose
/// triangle the intersection routine would hit.
const BOX_PAD: f64 = 1e-7;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter: the hit point is `origin + t·dir`.
    pub t: f64,
    /// Global triangle index across all meshes, in mesh order.
    pub triangle: usize,
    pub mesh: usize,
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    v0: Vector3<f64>,
    e1: Vector3<f64>,
    e2: Vector3<f64>,
}

/// Möller–Trumbore ray/triangle intersection. Returns the ray parameter of
/// the hit, counting only `t > RAY_T_MIN`. Both faces are hit.
pub fn intersect_triangle(
    origin: &Point3<f64>,
    dir: &Vector3<f64>,
    v0: &Point3<f64>,
    v1: &Point3<f64>,
    v2: &Point3<f64>,
) -> Option<f64> {
    Tri { v0: v0.coords, e1: v1 - v0, e2: v2 - v0 }.intersect(origin, dir)
}

impl Tri {
    #[inline]
    fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let p = dir.cross(&self.e2);
        let det = self.e1.dot(&p);
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        let s = origin.coords - self.v0;
        let u = s.dot(&p) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(&self.e1);
        let v = dir.dot(&q) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = self.e2.dot(&q) * inv;
        (t > RAY_T_MIN).then_some(t)
    }
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vector3<f64>,
    max: Vector3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Self { min: Vector3::repeat(f64::INFINITY), max: Vector3::repeat(f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn union(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    fn padded(mut self) -> Self {
        let pad = Vector3::repeat(BOX_PAD) + (self.max - self.min).abs() * 1e-9;
        self.min -= pad;
        self.max += pad;
        self
    }

    /// Entry parameter of the ray into the box, if it reaches it before `t_max`.
    #[inline]
    fn entry(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = t_max;
        for a in 0..3 {
            let o = origin[a];
            if inv_dir[a].is_infinite() {
                if o < self.min[a] || o > self.max[a] {
                    return None;
                }
                continue;
            }
            let t0 = (self.min[a] - o) * inv_dir[a];
            let t1 = (self.max[a] - o) * inv_dir[a];
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            lo = lo.max(t0);
            hi = hi.min(t1);
            if lo > hi {
                return None;
            }
        }
        (hi >= 0.0).then_some(lo)
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Nearest-hit queries over a set of meshes, with a BVH and an equivalent
/// brute-force path. Both return the smallest `t`, ties going to the lower
/// global triangle index, so their results are bit-identical.
#[derive(Debug, Clone)]
pub struct Raycaster {
    meshes: Vec<TriangleMesh>,
    tris: Vec<Tri>,
    tri_mesh: Vec<u32>,
    /// Triangle indices in BVH leaf order.
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl Raycaster {
    pub fn new(meshes: Vec<TriangleMesh>) -> Self {
        let mut tris = Vec::new();
        let mut tri_mesh = Vec::new();
        for (m, mesh) in meshes.iter().enumerate() {
            for k in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.corners(k);
                tris.push(Tri { v0: a.coords, e1: b - a, e2: c - a });
                tri_mesh.push(m as u32);
            }
        }
        let mut rc = Self { meshes, tris, tri_mesh, order: Vec::new(), nodes: Vec::new() };
        rc.build();
        rc
    }

    pub fn meshes(&self) -> &[TriangleMesh] {
        &self.meshes
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Geometric unit normal of a global triangle.
    pub fn normal(&self, triangle: usize) -> Vector3<f64> {
        let t = &self.tris[triangle];
        t.e1.cross(&t.e2).normalize()
    }

    pub fn mesh_of(&self, triangle: usize) -> &TriangleMesh {
        &self.meshes[self.tri_mesh[triangle] as usize]
    }

    fn tri_bounds(&self, i: usize) -> Aabb {
        let t = &self.tris[i];
        let mut b = Aabb::empty();
        b.grow(&t.v0);
        b.grow(&(t.v0 + t.e1));
        b.grow(&(t.v0 + t.e2));
        b
    }

    fn build(&mut self) {
        if self.tris.is_empty() {
            return;
        }
        let bounds: Vec<Aabb> = (0..self.tris.len()).map(|i| self.tri_bounds(i)).collect();
        let centroids: Vec<Vector3<f64>> = bounds.iter().map(|b| (b.min + b.max) * 0.5).collect();
        let mut order: Vec<u32> = (0..self.tris.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(&mut nodes, &mut order, 0, self.tris.len(), &bounds, &centroids);
        self.order = order;
        self.nodes = nodes;
    }

    #[inline]
    fn consider(&self, i: usize, origin: &Point3<f64>, dir: &Vector3<f64>, best: &mut Option<(f64, usize)>) {
        if let Some(t) = self.tris[i].intersect(origin, dir) {
            if best.is_none_or(|(bt, bi)| t < bt || (t == bt && i < bi)) {
                *best = Some((t, i));
            }
        }
    }

    fn hit_from(&self, best: Option<(f64, usize)>) -> Option<Hit> {
        best.map(|(t, i)| Hit { t, triangle: i, mesh: self.tri_mesh[i] as usize })
    }

    /// Nearest hit by testing every triangle.
    pub fn intersect_brute_force(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best = None;
        for i in 0..self.tris.len() {
            self.consider(i, origin, dir, &mut best);
        }
        self.hit_from(best)
    }

    /// Nearest hit using the BVH.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = dir.map(|d| 1.0 / d);
        let mut best: Option<(f64, usize)> = None;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let t_max = best.map_or(f64::INFINITY, |(t, _)| t);
            // strict comparison inside `entry` keeps boxes touching t_max,
            // which may still hold an equal-t hit with a lower index
            if self.nodes[n].bounds().entry(origin, &inv_dir, t_max).is_none() {
                continue;
            }
            match self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for k in start..end {
                        self.consider(self.order[k] as usize, origin, dir, &mut best);
                    }
                }
                Node::Inner { left, right, .. } => {
                    let el = self.nodes[left].bounds().entry(origin, &inv_dir, t_max);
                    let er = self.nodes[right].bounds().entry(origin, &inv_dir, t_max);
                    match (el, er) {
                        (Some(a), Some(b)) if a <= b => {
                            stack.push(right);
                            stack.push(left);
                        }
                        (Some(_), Some(_)) => {
                            stack.push(left);
                            stack.push(right);
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        self.hit_from(best)
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    start: usize,
    end: usize,
    bounds: &[Aabb],
    centroids: &[Vector3<f64>],
) -> usize {
    let mut b = Aabb::empty();
    let mut cb = Aabb::empty();
    for &i in &order[start..end] {
        b.union(&bounds[i as usize]);
        cb.grow(&centroids[i as usize]);
    }
    let b = b.padded();
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds: b, start, end });
        return id;
    }
    let extent = cb.max - cb.min;
    let axis = extent.imax();
    let slice = &mut order[start..end];
    slice.sort_unstable_by(|&x, &y| {
        centroids[x as usize][axis].total_cmp(&centroids[y as usize][axis]).then(x.cmp(&y))
    });
    let mid = start + (end - start) / 2;
    nodes.push(Node::Leaf { bounds: b, start, end });
    let left = build_node(nodes, order, start, mid, bounds, centroids);
    let right = build_node(nodes, order, mid, end, bounds, centroids);
    nodes[id] = Node::Inner { bounds: b, left, right };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::procedural::uv_sphere;
    use proptest::prelude::*;

    fn quad(z: f64, stencil: u16) -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(-1.0, -1.0, z),
                Point3::new(1.0, -1.0, z),
                Point3::new(1.0, 1.0, z),
                Point3::new(-1.0, 1.0, z),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            [200, 200, 200],
            stencil,
        )
        .unwrap()
    }

    #[test]
    fn nearest_and_ties() {
        let rc = Raycaster::new(vec![quad(7.0, 2), quad(5.0, 1)]);
        let h = rc.intersect(&Point3::origin(), &Vector3::new(0.1, 0.2, 1.0)).unwrap();
        assert_eq!(h.t, 5.0);
        assert_eq!(h.mesh, 1);
        // the shared diagonal: both triangles of the quad report t = 5
        let h = rc.intersect(&Point3::origin(), &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(h.triangle, 2);
        assert!(rc.intersect(&Point3::origin(), &Vector3::new(0.0, 0.0, -1.0)).is_none());
        let dup = Raycaster::new(vec![quad(5.0, 1), quad(5.0, 2)]);
        assert_eq!(dup.intersect(&Point3::origin(), &Vector3::new(0.1, -0.1, 1.0)).unwrap().mesh, 0);
    }

    #[test]
    fn empty_scene() {
        let rc = Raycaster::new(Vec::new());
        assert!(rc.intersect(&Point3::origin(), &Vector3::x()).is_none());
    }

    proptest! {
        #[test]
        fn bvh_matches_brute_force(
            dirs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..200),
            ox in -0.5f64..0.5,
        ) {
            let meshes = vec![
                uv_sphere(Point3::new(3.0, 0.0, 0.0), 1.0, 9, 12, [1, 1, 1], 16),
                uv_sphere(Point3::new(0.0, 2.5, 0.5), 0.7, 7, 8, [1, 1, 1], 17),
                quad(-2.0, 3),
                quad(2.0, 4),
            ];
            let rc = Raycaster::new(meshes);
            let o = Point3::new(ox, 0.0, 0.0);
            for (x, y, z) in dirs {
                let d = Vector3::new(x, y, z);
                let a = rc.intersect(&o, &d);
                let b = rc.intersect_brute_force(&o, &d);
                prop_assert_eq!(a.map(|h| (h.t.to_bits(), h.triangle)), b.map(|h| (h.t.to_bits(), h.triangle)));
            }
        }
    }
}
