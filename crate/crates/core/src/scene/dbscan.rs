use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleCluster {
    pub member_indices: Vec<usize>,
    pub centroid: Point3<f64>,
    pub z_extent: (f64, f64),
}

impl PoleCluster {
    fn from_members(points: &[Point3<f64>], member_indices: Vec<usize>) -> Self {
        let sum: Vector3<f64> = member_indices.iter().map(|&i| points[i].coords).sum();
        let centroid = Point3::from(sum / member_indices.len() as f64);
        let z_extent = member_indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(points[i].z), hi.max(points[i].z))
        });
        Self { member_indices, centroid, z_extent }
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn height(&self) -> f64 {
        self.z_extent.1 - self.z_extent.0
    }
}

struct Grid<'a> {
    points: &'a [Point3<f64>],
    eps: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Point3<f64>], eps: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn key(p: &Point3<f64>, eps: f64) -> [i64; 3] {
        [(p.x / eps).floor() as i64, (p.y / eps).floor() as i64, (p.z / eps).floor() as i64]
    }

    /// Indices within `eps` of point `i` (inclusive, `i` itself included),
    /// ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let [kx, ky, kz] = Self::key(p, self.eps);
        let eps2 = self.eps * self.eps;
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cell) = self.cells.get(&[kx + dx, ky + dy, kz + dz]) {
                        out.extend(cell.iter().copied().filter(|&j| (self.points[j] - p).norm_squared() <= eps2));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Density-based clustering of pole points.
///
/// A point is core when at least `min_pts` points (itself included) lie
/// within `eps`. Seeds are taken in index order and each cluster grows
/// breadth first, so numbering and border-point assignment are
/// deterministic. A cluster left with fewer than `min_pts` members because
/// its border points were claimed earlier is dropped. Member indices are
/// sorted.
pub fn cluster_poles(points: &[Point3<f64>], eps: f64, min_pts: usize) -> Vec<PoleCluster> {
    assert!(eps > 0.0 && min_pts >= 1, "eps must be positive and min_pts at least 1");
    let grid = Grid::new(points, eps);
    let mut assigned = vec![false; points.len()];
    let mut visited = vec![false; points.len()];
    let mut clusters = Vec::new();
    for seed in 0..points.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let nb = grid.neighbors(seed);
        if nb.len() < min_pts {
            continue;
        }
        let mut members = vec![seed];
        assigned[seed] = true;
        let mut queue = std::collections::VecDeque::from(nb);
        while let Some(j) = queue.pop_front() {
            if !assigned[j] {
                assigned[j] = true;
                members.push(j);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            let nbj = grid.neighbors(j);
            if nbj.len() >= min_pts {
                queue.extend(nbj.into_iter().filter(|&k| !visited[k] || !assigned[k]));
            }
        }
        // border points already claimed by earlier clusters can leave a
        // cluster below min_pts; such clusters are reported as noise
        if members.len() < min_pts {
            continue;
        }
        members.sort_unstable();
        clusters.push(PoleCluster::from_members(points, members));
    }
    clusters
}
