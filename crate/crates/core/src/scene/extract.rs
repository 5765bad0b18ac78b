use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::geometry::{LabeledPointCloud, Pose, SemanticClassMap, TrackCenterline};
use crate::ingest::{load_pointcloud, read_json, save_pointcloud, write_json};

use super::{cluster_poles, extract_centerline, fit_planes_sequential, CenterlineParams, Plane, PoleCluster, RansacParams, SceneError};

pub const REGISTERED_PLY: &str = "registered.ply";
pub const CENTERLINE_JSON: &str = "centerline.json";
pub const PLANES_JSON: &str = "planes.json";
pub const POLES_JSON: &str = "poles.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractParams {
    pub centerline: CenterlineParams,
    pub ransac: RansacParams,
    /// Points of one plane class are split into regions by density
    /// clustering with this radius before fitting, so that e.g. platforms on
    /// both sides of the track become separate planes.
    pub plane_region_eps: f64,
    /// Plane-class points are thinned to one per cell of this size before
    /// region clustering and fitting. Zero keeps every point.
    pub plane_voxel: f64,
    pub max_planes_per_region: usize,
    pub min_plane_inliers: usize,
    pub pole_eps: f64,
    pub pole_min_pts: usize,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            centerline: CenterlineParams::default(),
            ransac: RansacParams::default(),
            plane_region_eps: 1.5,
            plane_voxel: 0.3,
            max_planes_per_region: 2,
            min_plane_inliers: 50,
            pole_eps: 0.5,
            pole_min_pts: 5,
        }
    }
}

/// A fitted plane tagged with the class of its points. Inlier indices refer
/// to the registered cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlane {
    pub class: String,
    #[serde(flatten)]
    pub plane: Plane,
}

/// Pole clusters index into the registered cloud as well.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedScene {
    pub registered: LabeledPointCloud,
    pub centerline: TrackCenterline,
    pub planes: Vec<ScenePlane>,
    pub poles: Vec<PoleCluster>,
}

impl ExtractedScene {
    pub fn plane_inliers(&self, plane: usize) -> Vec<Point3<f64>> {
        self.planes[plane].plane.inlier_indices.iter().map(|&i| self.registered.point(i)).collect()
    }
}

fn subset(cloud: &LabeledPointCloud, label: u16) -> (Vec<usize>, Vec<Point3<f64>>) {
    let idx = cloud.indices_with_label(label);
    let pts = idx.iter().map(|&i| cloud.point(i)).collect();
    (idx, pts)
}

fn thinned(cloud: &LabeledPointCloud, label: u16, voxel: f64) -> (Vec<usize>, Vec<Point3<f64>>) {
    let (idx, pts) = subset(cloud, label);
    if !(voxel > 0.0) {
        return (idx, pts);
    }
    let mut seen = std::collections::HashSet::new();
    idx.into_iter().zip(pts).filter(|(_, p)| seen.insert(super::register::voxel_key(p, voxel))).unzip()
}

/// Runs every extraction step on a registered, labeled world cloud.
pub fn extract_scene(
    registered: LabeledPointCloud,
    raw_trajectory: &[Pose],
    classes: &SemanticClassMap,
    params: &ExtractParams,
) -> Result<ExtractedScene, SceneError> {
    let centerline = extract_centerline(&registered, classes.track(), raw_trajectory, &params.centerline)?;

    let mut planes = Vec::new();
    for class in [crate::geometry::class_names::NEAR_TRACK_GROUND, crate::geometry::class_names::PLATFORM] {
        let Some(id) = classes.id(class) else { continue };
        let (idx, pts) = thinned(&registered, id, params.plane_voxel);
        if pts.len() < params.min_plane_inliers {
            continue;
        }
        for region in cluster_poles(&pts, params.plane_region_eps, 1) {
            if region.len() < params.min_plane_inliers {
                continue;
            }
            let rpts: Vec<Point3<f64>> = region.member_indices.iter().map(|&i| pts[i]).collect();
            let seed = params.ransac.seed.wrapping_add(planes.len() as u64 * 1000);
            let fitted = fit_planes_sequential(
                &rpts,
                &RansacParams { seed, ..params.ransac },
                params.max_planes_per_region,
                params.min_plane_inliers,
            );
            for plane in fitted {
                let inlier_indices =
                    plane.inlier_indices.iter().map(|&i| idx[region.member_indices[i]]).collect();
                planes.push(ScenePlane { class: class.to_string(), plane: Plane { inlier_indices, ..plane } });
            }
        }
    }

    let (idx, pts) = subset(&registered, classes.pole());
    let poles: Vec<PoleCluster> = cluster_poles(&pts, params.pole_eps, params.pole_min_pts)
        .into_iter()
        .map(|c| PoleCluster { member_indices: c.member_indices.iter().map(|&i| idx[i]).collect(), ..c })
        .collect();
    log::info!(
        "extracted centerline {:.1} m, {} planes, {} poles",
        centerline.length(),
        planes.len(),
        poles.len()
    );
    Ok(ExtractedScene { registered, centerline, planes, poles })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CenterlineJson {
    vertices: Vec<[f64; 3]>,
    arclengths: Vec<f64>,
}

pub fn save_centerline(centerline: &TrackCenterline, path: &Path) -> Result<(), SceneError> {
    let json = CenterlineJson {
        vertices: centerline.vertices().iter().map(|p| [p.x, p.y, p.z]).collect(),
        arclengths: centerline.arclengths().to_vec(),
    };
    Ok(write_json(path, &json)?)
}

pub fn load_centerline(path: &Path) -> Result<TrackCenterline, SceneError> {
    let json: CenterlineJson = read_json(path)?;
    let vertices = json.vertices.iter().map(|v| Point3::new(v[0], v[1], v[2])).collect();
    TrackCenterline::from_parts(vertices, json.arclengths).map_err(|e| {
        crate::ingest::schema(path, "vertices", e.to_string()).into()
    })
}

/// Writes `registered.ply`, `centerline.json`, `planes.json` and `poles.json`.
pub fn save_extracted(scene: &ExtractedScene, dir: &Path) -> Result<(), SceneError> {
    save_pointcloud(&scene.registered, &dir.join(REGISTERED_PLY))?;
    save_centerline(&scene.centerline, &dir.join(CENTERLINE_JSON))?;
    write_json(&dir.join(PLANES_JSON), &scene.planes)?;
    write_json(&dir.join(POLES_JSON), &scene.poles)?;
    Ok(())
}

pub fn load_extracted(dir: &Path) -> Result<ExtractedScene, SceneError> {
    let registered = load_pointcloud(&dir.join(REGISTERED_PLY))?;
    let centerline = load_centerline(&dir.join(CENTERLINE_JSON))?;
    let planes: Vec<ScenePlane> = read_json(&dir.join(PLANES_JSON))?;
    let poles: Vec<PoleCluster> = read_json(&dir.join(POLES_JSON))?;
    let n = registered.len();
    let in_range = |i: &usize| *i < n;
    for (k, p) in planes.iter().enumerate() {
        if !p.plane.inlier_indices.iter().all(in_range) || ((p.plane.normal.norm() - 1.0).abs() > 1e-6) {
            return Err(crate::ingest::schema(&dir.join(PLANES_JSON), format!("[{k}]"), "invalid plane").into());
        }
    }
    for (k, p) in poles.iter().enumerate() {
        if p.member_indices.is_empty() || !p.member_indices.iter().all(in_range) {
            return Err(crate::ingest::schema(&dir.join(POLES_JSON), format!("[{k}]"), "invalid cluster").into());
        }
    }
    Ok(ExtractedScene { registered, centerline, planes, poles })
}
