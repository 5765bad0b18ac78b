use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SceneError;

/// `normal · p + offset = 0` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub inlier_indices: Vec<usize>,
}

impl Plane {
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacParams {
    pub iters: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iters: 500, threshold: 0.05, seed: 7 }
    }
}

fn plane_through(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<(Vector3<f64>, f64)> {
    let n = (b - a).cross(&(c - a));
    let scale = (b - a).norm() * (c - a).norm();
    let len = n.norm();
    if !(len > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return None;
    }
    let n = n / len;
    Some((n, -n.dot(&a.coords)))
}

fn inliers(points: &[Point3<f64>], n: &Vector3<f64>, d: f64, threshold: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| ((n.dot(&p.coords) + d).abs() <= threshold).then_some(i))
        .collect()
}

/// Orthogonal least-squares plane: centroid and the covariance eigenvector
/// of the smallest eigenvalue.
pub fn fit_plane_least_squares(points: &[Point3<f64>]) -> Option<(Vector3<f64>, f64)> {
    if points.len() < 3 {
        return None;
    }
    let centroid: Vector3<f64> = points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / points.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (imin, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |(bi, bv), (i, &v)| {
        if v < bv { (i, v) } else { (bi, bv) }
    });
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    // all points on a line: two vanishing eigenvalues
    if sorted[1] <= 1e-18 * sorted[2].max(f64::MIN_POSITIVE) {
        return None;
    }
    let n = eig.eigenvectors.column(imin).into_owned().normalize();
    Some((n, -n.dot(&centroid)))
}

fn orient(n: Vector3<f64>, d: f64) -> (Vector3<f64>, f64) {
    if n.z < 0.0 { (-n, -d) } else { (n, d) }
}

/// RANSAC plane fit with a seeded ChaCha8 stream.
///
/// Each iteration draws three distinct indices; the hypothesis with the most
/// inliers wins, ties going to the earlier iteration. Hypotheses are scored
/// in parallel and reduced in iteration order, so the result does not depend
/// on the thread count. The winner is refit by orthogonal least squares on
/// its inliers and the normal is oriented to non-negative z.
pub fn fit_plane_ransac(points: &[Point3<f64>], params: &RansacParams) -> Result<Plane, SceneError> {
    if points.len() < 3 {
        return Err(SceneError::DegenerateInput(format!("{} points, need 3", points.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let samples: Vec<[usize; 3]> = (0..params.iters)
        .map(|_| {
            let s = rand::seq::index::sample(&mut rng, points.len(), 3);
            [s.index(0), s.index(1), s.index(2)]
        })
        .collect();
    let scored: Vec<Option<(usize, Vector3<f64>, f64)>> = samples
        .par_iter()
        .map(|&[a, b, c]| {
            let (n, d) = plane_through(&points[a], &points[b], &points[c])?;
            let count = points.iter().filter(|p| (n.dot(&p.coords) + d).abs() <= params.threshold).count();
            Some((count, n, d))
        })
        .collect();
    let mut best: Option<(usize, Vector3<f64>, f64)> = None;
    for s in scored.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| s.0 > b.0) {
            best = Some(s);
        }
    }
    let (_, n, d) = best.ok_or_else(|| SceneError::DegenerateInput("every sample was collinear".into()))?;

    let support: Vec<Point3<f64>> = inliers(points, &n, d, params.threshold).into_iter().map(|i| points[i]).collect();
    let (n, d) = fit_plane_least_squares(&support).unwrap_or((n, d));
    let (n, d) = orient(n, d);
    Ok(Plane { normal: n, offset: d, inlier_indices: inliers(points, &n, d, params.threshold) })
}

/// Repeated RANSAC: fit, remove inliers, continue while at least
/// `min_inliers` support the next plane. Returned inlier indices refer to
/// the input slice.
pub fn fit_planes_sequential(
    points: &[Point3<f64>],
    params: &RansacParams,
    max_planes: usize,
    min_inliers: usize,
) -> Vec<Plane> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut planes = Vec::new();
    while planes.len() < max_planes && remaining.len() >= min_inliers.max(3) {
        let subset: Vec<Point3<f64>> = remaining.iter().map(|&i| points[i]).collect();
        let Ok(plane) = fit_plane_ransac(&subset, &RansacParams { seed: params.seed + planes.len() as u64, ..*params })
        else {
            break;
        };
        if plane.inlier_indices.len() < min_inliers {
            break;
        }
        let mut taken = vec![false; subset.len()];
        for &i in &plane.inlier_indices {
            taken[i] = true;
        }
        let global = plane.inlier_indices.iter().map(|&i| remaining[i]).collect();
        remaining = remaining.iter().zip(&taken).filter(|(_, &t)| !t).map(|(&i, _)| i).collect();
        planes.push(Plane { inlier_indices: global, ..plane });
    }
    planes
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn exact_plane() {
        let pts: Vec<_> = (0..100).map(|i| Point3::new((i % 10) as f64, (i / 10) as f64 * 0.7, 1.0)).collect();
        for seed in [0, 1, 99] {
            let p = fit_plane_ransac(&pts, &RansacParams { iters: 50, threshold: 1e-6, seed }).unwrap();
            assert!((p.normal - Vector3::z()).amax() < 1e-9);
            assert!((p.offset + 1.0).abs() < 1e-9);
            assert_eq!(p.inlier_indices.len(), 100);
        }
    }

    #[test]
    fn noisy_plane_with_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = rand_distr::Normal::new(0.0, 0.01).unwrap();
        let mut pts: Vec<_> = (0..80)
            .map(|_| Point3::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 1.0 + rng.sample(normal)))
            .collect();
        pts.extend((0..20).map(|_| {
            Point3::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))
        }));
        let p = fit_plane_ransac(&pts, &RansacParams { iters: 500, threshold: 0.03, seed: 7 }).unwrap();
        // oracle: exhaustive least squares on the known inlier set
        let (n_ref, _) = fit_plane_least_squares(&pts[..80]).unwrap();
        let n_ref = if n_ref.z < 0.0 { -n_ref } else { n_ref };
        assert!(p.normal.angle(&Vector3::z()).to_degrees() < 1.0);
        assert!(p.normal.angle(&n_ref).to_degrees() < 0.5);
        assert!(p.inlier_indices.iter().all(|&i| p.signed_distance(&pts[i]).abs() <= 0.03));
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0), Point3::new(2.0, 2.0, 2.0)];
        assert!(matches!(
            fit_plane_ransac(&pts, &RansacParams::default()),
            Err(SceneError::DegenerateInput(_))
        ));
        assert!(fit_plane_ransac(&pts[..2], &RansacParams::default()).is_err());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..200)
            .map(|_| Point3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-0.1..0.1)))
            .collect();
        let params = RansacParams { iters: 100, threshold: 0.05, seed: 5 };
        let a = fit_plane_ransac(&pts, &params).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| fit_plane_ransac(&pts, &params).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn sequential_finds_two_planes() {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push(Point3::new(i as f64 * 0.5, j as f64 * 0.5, 0.0));
                if i < 10 {
                    pts.push(Point3::new(i as f64 * 0.5, j as f64 * 0.5, 1.0));
                }
            }
        }
        let planes = fit_planes_sequential(&pts, &RansacParams { iters: 200, threshold: 0.01, seed: 1 }, 3, 50);
        assert_eq!(planes.len(), 2);
        assert_eq!(planes[0].inlier_indices.len(), 400);
        assert_eq!(planes[1].inlier_indices.len(), 200);
        assert!((planes[1].offset + 1.0).abs() < 1e-9);
    }
}
