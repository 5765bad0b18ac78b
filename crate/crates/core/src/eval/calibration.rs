use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraModel, LabeledPointCloud, Pose, SemanticClassMap};
use crate::ingest::CalibrationAnnotation;
use crate::localization::PoseSequence;
use crate::render::{calibration_sphere_mesh, render_frame, Raycaster};

use super::{EvalError, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub position: Point3<f64>,
    /// Index of the selected point in the cloud it was taken from.
    pub index: usize,
    pub reference_frame: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Minimize the pixel distance in one annotated frame.
    SingleFrame(usize),
    /// Minimize the summed pixel distance over all annotated frames.
    AllAnnotated,
}

impl Default for SelectionMode {
    fn default() -> Self {
        SelectionMode::SingleFrame(0)
    }
}

const PRUNE_CHUNK: usize = 4096;

/// Lowest score, ties to the lower index.
fn lowest(scores: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    scores.fold(None, |b, (i, s)| match b {
        Some((bi, bs)) if bs < s || (bs == s && bi < i) => b,
        _ => Some((i, s)),
    })
}

fn pixel_distance(cam: &CameraModel, pose: &Pose, p: &Point3<f64>, gt: [f64; 2], require_inside: bool) -> Option<f64> {
    let pr = cam.project_world(pose, p).ok()?;
    if require_inside && !cam.contains(pr.u, pr.v) {
        return None;
    }
    Some((pr.u - gt[0]).hypot(pr.v - gt[1]))
}

/// Picks the cloud point whose projection lands closest to the annotation.
/// In single-frame mode only points projecting inside the image count; in
/// multi-frame mode a point must be in front of the camera in every
/// annotated frame. Ties go to the lower point index.
pub fn select_calibration_point(
    cloud: &LabeledPointCloud,
    ann: &CalibrationAnnotation,
    cam: &CameraModel,
    poses: &[Pose],
    mode: SelectionMode,
) -> Result<CalibrationPoint, EvalError> {
    let frames: Vec<(usize, [f64; 2])> = match mode {
        SelectionMode::SingleFrame(f) => vec![(f, ann.get(f).ok_or(EvalError::NoAnnotationAtFrame(f))?)],
        SelectionMode::AllAnnotated => ann.points.iter().map(|(&f, &uv)| (f, uv)).collect(),
    };
    let Some(&(reference_frame, _)) = frames.first() else {
        return Err(EvalError::TooFewAnnotations { found: 0, required: 1 });
    };
    if let Some(&(f, _)) = frames.iter().find(|(f, _)| *f >= poses.len()) {
        return Err(EvalError::NoAnnotationAtFrame(f));
    }
    let points = cloud.points();
    let best = if frames.len() == 1 {
        let (f, gt) = frames[0];
        let scores: Vec<Option<f64>> = points.par_iter().map(|p| pixel_distance(cam, &poses[f], p, gt, true)).collect();
        lowest(scores.iter().enumerate().filter_map(|(i, s)| s.map(|s| (i, s))))
    } else {
        // Sums run from the last annotated frame backwards. Candidates are
        // visited in order of their last-frame distance, a lower bound of the
        // sum, and a sum is abandoned once it exceeds the best one so far.
        let &(bf, bgt) = frames.last().expect("non-empty");
        let partial = |p: &Point3<f64>, limit: f64| {
            let mut acc = 0.0;
            for &(f, gt) in frames.iter().rev() {
                acc += pixel_distance(cam, &poses[f], p, gt, false)?;
                if acc > limit {
                    return None;
                }
            }
            Some(acc)
        };
        let bounds: Vec<Option<f64>> = points.par_iter().map(|p| pixel_distance(cam, &poses[bf], p, bgt, false)).collect();
        let mut order: Vec<(usize, f64)> = bounds.iter().enumerate().filter_map(|(i, b)| b.map(|b| (i, b))).collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut best: Option<(usize, f64)> = None;
        for chunk in order.chunks(PRUNE_CHUNK) {
            let limit = best.map_or(f64::INFINITY, |(_, bs)| bs);
            if chunk[0].1 > limit {
                break;
            }
            let scored: Vec<Option<(usize, f64)>> =
                chunk.par_iter().map(|&(i, _)| partial(&points[i], limit).map(|s| (i, s))).collect();
            best = lowest(best.into_iter().chain(scored.into_iter().flatten()));
        }
        best
    };
    let (index, _) = best.ok_or(EvalError::NoVisiblePoints)?;
    Ok(CalibrationPoint { position: cloud.point(index), index, reference_frame })
}

/// Projects the calibration point into every annotated frame and scores it
/// against the annotation.
pub fn evaluate_sequence(
    sequence: &str,
    cam_id: &str,
    cam: &CameraModel,
    poses: &PoseSequence,
    calib: &CalibrationPoint,
    ann: &CalibrationAnnotation,
) -> Result<MetricsReport, EvalError> {
    let frames: Vec<usize> = ann.points.keys().copied().filter(|&f| f < poses.len()).collect();
    if frames.len() < 2 {
        return Err(EvalError::TooFewAnnotations { found: frames.len(), required: 2 });
    }
    let gt: Vec<[f64; 2]> = frames.iter().map(|f| ann.points[f]).collect();
    let projections = frames
        .iter()
        .map(|&f| {
            cam.project_world(&poses.poses[f], &calib.position)
                .map(|p| [p.u, p.v])
                .map_err(|_| EvalError::CalibrationPointNotVisible { frame: f })
        })
        .collect::<Result<Vec<_>, _>>()?;
    MetricsReport::from_projections(sequence, cam_id, poses.source.as_str(), frames, &gt, projections)
}

/// Cross-check of the analytic projection: renders the calibration sphere
/// alone and returns the centroid of its mask pixels.
pub fn rendered_sphere_centroid(
    cam: &CameraModel,
    pose: &Pose,
    center: Point3<f64>,
    radius: f64,
    classes: &SemanticClassMap,
) -> Option<[f64; 2]> {
    let mesh = calibration_sphere_mesh(center, radius, classes)?;
    let id = mesh.stencil_id;
    let render = render_frame(&Raycaster::new(vec![mesh]), cam, pose, &Default::default());
    mask_centroid(render.mask.as_label16()?, cam.width, id)
}

/// Mean pixel coordinate of the pixels carrying `stencil`.
pub fn mask_centroid(mask: &[u16], width: u32, stencil: u16) -> Option<[f64; 2]> {
    let (mut n, mut su, mut sv) = (0usize, 0.0, 0.0);
    for (i, &s) in mask.iter().enumerate() {
        if s == stencil {
            n += 1;
            su += (i % width as usize) as f64;
            sv += (i / width as usize) as f64;
        }
    }
    (n > 0).then(|| [su / n as f64, sv / n as f64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CloudFrame, RigidTransform};
    use crate::localization::PoseSource;
    use nalgebra::Vector3;
    use std::collections::BTreeMap;

    fn cam() -> CameraModel {
        CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480, RigidTransform::identity()).unwrap()
    }

    fn ann(points: &[(usize, [f64; 2])]) -> CalibrationAnnotation {
        CalibrationAnnotation { camera_id: "c".into(), points: points.iter().copied().collect::<BTreeMap<_, _>>() }
    }

    fn poses(n: usize) -> Vec<Pose> {
        (0..n).map(|i| Pose::new(i as f64, RigidTransform::from_translation(0.0, 0.0, -(i as f64)))).collect()
    }

    #[test]
    fn exact_back_projection_is_selected() {
        let c = cam();
        let gt = [400.0, 200.0];
        let target = Point3::from(c.back_project(gt[0], gt[1], 10.0));
        let cloud = LabeledPointCloud::from_points(
            vec![Point3::new(1.0, 1.0, 5.0), target, Point3::new(0.0, 0.0, -3.0)],
            CloudFrame::World,
        )
        .unwrap();
        let cp = select_calibration_point(&cloud, &ann(&[(0, gt)]), &c, &poses(1), SelectionMode::default()).unwrap();
        assert_eq!(cp.index, 1);
        assert!(pixel_distance(&c, &poses(1)[0], &cp.position, gt, true).unwrap() < 1e-9);
    }

    #[test]
    fn ties_and_errors() {
        let c = cam();
        let cloud = LabeledPointCloud::from_points(
            vec![Point3::new(-0.1, 0.0, 5.0), Point3::new(0.1, 0.0, 5.0), Point3::new(0.0, 0.0, -1.0)],
            CloudFrame::World,
        )
        .unwrap();
        let a = ann(&[(0, [320.0, 240.0])]);
        assert_eq!(select_calibration_point(&cloud, &a, &c, &poses(1), SelectionMode::default()).unwrap().index, 0);
        let behind = LabeledPointCloud::from_points(vec![Point3::new(0.0, 0.0, -1.0)], CloudFrame::World).unwrap();
        assert!(matches!(
            select_calibration_point(&behind, &a, &c, &poses(1), SelectionMode::default()),
            Err(EvalError::NoVisiblePoints)
        ));
        assert!(matches!(
            select_calibration_point(&cloud, &a, &c, &poses(1), SelectionMode::SingleFrame(3)),
            Err(EvalError::NoAnnotationAtFrame(3))
        ));
    }

    #[test]
    fn ground_truth_poses_score_zero() {
        let c = cam();
        let feature = Point3::new(0.5, -0.3, 12.0);
        let ps = poses(6);
        let points: Vec<(usize, [f64; 2])> = (0..6)
            .map(|f| {
                let p = c.project_world(&ps[f], &feature).unwrap();
                (f, [p.u, p.v])
            })
            .collect();
        let a = ann(&points);
        let cloud = LabeledPointCloud::from_points(vec![Point3::new(3.0, 3.0, 20.0), feature], CloudFrame::World).unwrap();
        let cp = select_calibration_point(&cloud, &a, &c, &ps, SelectionMode::AllAnnotated).unwrap();
        assert_eq!(cp.index, 1);
        let seq = PoseSequence::new(PoseSource::RawGnss, ps);
        let r = evaluate_sequence("s", "c", &c, &seq, &cp, &a).unwrap();
        assert!(r.rpe.iter().chain(&r.jitter).all(|&v| v == 0.0));
        assert_eq!(r.source, "raw_gnss");
        let few = ann(&points[..1]);
        assert!(matches!(evaluate_sequence("s", "c", &c, &seq, &cp, &few), Err(EvalError::TooFewAnnotations { .. })));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn pruned_search_matches_exhaustive(seed in 0u64..1000, n in 1usize..12_000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point3<f64>> = (0..n)
                .map(|_| Point3::new(rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0), rng.random_range(-2.0..30.0)))
                .collect();
            let cloud = LabeledPointCloud::from_points(pts, CloudFrame::World).unwrap();
            let c = cam();
            let ps = poses(5);
            let a = ann(&[(0, [300.0, 250.0]), (2, [310.0, 245.0]), (4, [290.0, 260.0])]);
            let oracle = cloud
                .points()
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let mut acc = 0.0;
                    for (&f, &gt) in a.points.iter().rev() {
                        acc += pixel_distance(&c, &ps[f], p, gt, false)?;
                    }
                    Some((i, acc))
                })
                .fold(None::<(usize, f64)>, |b, (i, s)| match b {
                    Some((_, bs)) if bs <= s => b,
                    _ => Some((i, s)),
                });
            let got = select_calibration_point(&cloud, &a, &c, &ps, SelectionMode::AllAnnotated).ok().map(|cp| cp.index);
            proptest::prop_assert_eq!(got, oracle.map(|(i, _)| i));
        }
    }

    #[test]
    fn rendering_cross_check_agrees() {
        let c = cam();
        let pose = Pose::new(0.0, RigidTransform::from_euler(0.01, 0.02, 0.03, Vector3::new(0.2, 0.1, 0.0)));
        let center = Point3::new(0.8, -0.4, 15.0);
        let analytic = c.project_world(&pose, &center).unwrap();
        let rendered = rendered_sphere_centroid(&c, &pose, center, 0.3, &SemanticClassMap::standard()).unwrap();
        assert!((rendered[0] - analytic.u).abs() < 0.5 && (rendered[1] - analytic.v).abs() < 0.5, "{rendered:?}");
    }
}
