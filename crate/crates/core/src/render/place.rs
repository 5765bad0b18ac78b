use nalgebra::{Point3, Vector3};

use crate::geometry::{RigidTransform, SemanticClassMap, TrackCenterline};
use crate::ingest::{load_mesh, Placement, SceneConfig};
use crate::scene::ExtractedScene;

use super::{build_plane_mesh, build_pole_mesh, build_track_mesh, uv_sphere, RenderError, TriangleMesh};

pub const TRACK_COLOR: [u8; 3] = [90, 80, 70];
pub const POLE_COLOR: [u8; 3] = [150, 150, 150];
pub const PLANE_COLOR: [u8; 3] = [110, 120, 100];
pub const SPHERE_COLOR: [u8; 3] = [255, 0, 255];

/// Where a plane sits, for `on_plane` placements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneAnchor {
    pub normal: Vector3<f64>,
    pub offset: f64,
    /// Centroid of the plane's inliers.
    pub centroid: Point3<f64>,
}

impl PlaneAnchor {
    /// Height of the plane above `(x, y)`; `None` for near-vertical planes.
    pub fn z_at(&self, x: f64, y: f64) -> Option<f64> {
        (self.normal.z.abs() > 1e-6).then(|| -(self.normal.x * x + self.normal.y * y + self.offset) / self.normal.z)
    }
}

pub fn plane_anchors(scene: &ExtractedScene) -> Vec<PlaneAnchor> {
    (0..scene.planes.len())
        .map(|k| {
            let pts = scene.plane_inliers(k);
            let sum: Vector3<f64> = pts.iter().map(|p| p.coords).sum();
            let p = &scene.planes[k].plane;
            PlaneAnchor { normal: p.normal, offset: p.offset, centroid: Point3::from(sum / pts.len().max(1) as f64) }
        })
        .collect()
}

/// Rotates by `yaw` about z, then shifts so the origin lands at `(x, y)` and
/// the bounding-box bottom at `ground`.
fn rest_on(mesh: &TriangleMesh, yaw: f64, x: f64, y: f64, ground: f64) -> TriangleMesh {
    let rotated = mesh.transformed(&RigidTransform::from_yaw(yaw, Vector3::zeros()));
    let bottom = rotated.bounds().map_or(0.0, |(lo, _)| lo.z);
    rotated.translated(&Vector3::new(x, y, ground - bottom))
}

/// World-space meshes of the configured objects, in configuration order.
///
/// `on_track` objects stand on the track box top when their lateral offset
/// keeps them within the track width, otherwise at centerline height.
pub fn place_objects(
    config: &SceneConfig,
    centerline: &TrackCenterline,
    planes: &[PlaneAnchor],
) -> Result<Vec<TriangleMesh>, RenderError> {
    config
        .objects
        .iter()
        .map(|obj| {
            let (vertices, triangles) = load_mesh(&config.mesh_path(obj))?;
            let mesh = TriangleMesh::new(vertices, triangles, obj.base_color, obj.stencil_id)?.scaled(obj.scale);
            Ok(match &obj.placement {
                Placement::Absolute(pose) => {
                    let t = pose.to_transform().map_err(|e| RenderError::InvalidPlacement {
                        name: obj.name.clone(),
                        message: e,
                    })?;
                    mesh.transformed(&t)
                }
                Placement::OnTrack { arclength, lateral, yaw_deg } => {
                    let p = centerline.point_at(*arclength).ok_or(RenderError::ArclengthOutOfRange {
                        name: obj.name.clone(),
                        arclength: *arclength,
                        length: centerline.length(),
                    })?;
                    let t = centerline.tangent_at(*arclength);
                    let heading = t.y.atan2(t.x);
                    let left = Vector3::new(-heading.sin(), heading.cos(), 0.0);
                    let q = p + left * *lateral;
                    let on_box = lateral.abs() <= config.track_mesh.width / 2.0;
                    let ground = if on_box { p.z + config.track_mesh.height } else { p.z };
                    rest_on(&mesh, heading + yaw_deg.to_radians(), q.x, q.y, ground)
                }
                Placement::OnPlane { plane, offset, yaw_deg } => {
                    let anchor = planes.get(*plane).ok_or(RenderError::InvalidPlacement {
                        name: obj.name.clone(),
                        message: format!("plane {plane} does not exist ({} planes)", planes.len()),
                    })?;
                    let (x, y) = (anchor.centroid.x + offset[0], anchor.centroid.y + offset[1]);
                    let z = anchor.z_at(x, y).ok_or(RenderError::InvalidPlacement {
                        name: obj.name.clone(),
                        message: format!("plane {plane} is vertical"),
                    })?;
                    rest_on(&mesh, yaw_deg.to_radians(), x, y, z)
                }
            })
        })
        .collect()
}

/// Track boxes, pole boxes and plane rectangles reconstructed from the
/// extracted scene, each carrying its class id as stencil.
pub fn build_environment(
    scene: &ExtractedScene,
    config: &SceneConfig,
    classes: &SemanticClassMap,
) -> Result<Vec<TriangleMesh>, RenderError> {
    let mut meshes = vec![build_track_mesh(
        &scene.centerline,
        config.track_mesh.width,
        config.track_mesh.height,
        TRACK_COLOR,
        classes.track(),
    )?];
    for pole in &scene.poles {
        meshes.push(build_pole_mesh(pole, config.pole_footprint, POLE_COLOR, classes.pole())?);
    }
    for (k, p) in scene.planes.iter().enumerate() {
        let stencil = classes.id(&p.class).unwrap_or(classes.near_track_ground());
        match build_plane_mesh(&p.plane, &scene.plane_inliers(k), PLANE_COLOR, stencil) {
            Ok(m) => meshes.push(m),
            Err(e) => log::warn!("skipping plane {k}: {e}"),
        }
    }
    Ok(meshes)
}

/// Sphere marking the calibration point, with the calibration-sphere class
/// as stencil. `None` when the class map has no such class.
pub fn calibration_sphere_mesh(center: Point3<f64>, radius: f64, classes: &SemanticClassMap) -> Option<TriangleMesh> {
    classes.calibration_sphere().map(|id| uv_sphere(center, radius, 12, 16, SPHERE_COLOR, id))
}
