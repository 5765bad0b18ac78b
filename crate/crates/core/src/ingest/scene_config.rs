use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::json::{read_json, schema, write_json, TransformJson};
use super::IngestError;
use crate::geometry::SemanticClassMap;

/// Where an object goes in the reconstructed scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// World pose of the mesh origin.
    Absolute(TransformJson),
    /// Arc length along the centerline, lateral offset (positive left) and
    /// yaw relative to the track tangent.
    OnTrack { arclength: f64, lateral: f64, yaw_deg: f64 },
    /// Horizontal offset from the centroid of a plane's inliers.
    OnPlane { plane: usize, offset: [f64; 2], yaw_deg: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectPlacement {
    #[serde(default)]
    pub name: String,
    pub mesh: PathBuf,
    pub placement: Placement,
    #[serde(default = "one")]
    pub scale: f64,
    pub stencil_id: u16,
    pub base_color: [u8; 3],
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackMeshSpec {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSphereSpec {
    /// World position; `None` uses the calibration point selected from the cloud.
    #[serde(default)]
    pub point: Option<[f64; 3]>,
    pub radius: f64,
}

/// Directional light; `direction` is the direction the light travels in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    pub direction: [f64; 3],
    pub intensity: f64,
    pub ambient: f64,
}

impl Default for LightSpec {
    fn default() -> Self {
        Self { direction: [-0.3, 0.2, -1.0], intensity: 0.75, ambient: 0.35 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub objects: Vec<ObjectPlacement>,
    pub track_mesh: TrackMeshSpec,
    #[serde(default)]
    pub calibration_sphere: Option<CalibrationSphereSpec>,
    #[serde(default)]
    pub light: LightSpec,
    #[serde(default = "default_footprint")]
    pub pole_footprint: f64,
    /// Directory that relative mesh paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_footprint() -> f64 {
    0.3
}

impl SceneConfig {
    pub fn mesh_path(&self, object: &ObjectPlacement) -> PathBuf {
        self.base_dir.join(&object.mesh)
    }

    pub fn validate(&self, path: &Path, classes: &SemanticClassMap) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            let field = |f: &str| format!("objects[{i}].{f}");
            if !classes.is_obstacle(o.stencil_id) {
                return Err(schema(
                    path,
                    field("stencil_id"),
                    format!("{} is below obstacle_base {}", o.stencil_id, classes.obstacle_base()),
                ));
            }
            if !seen.insert(o.stencil_id) {
                return Err(schema(path, field("stencil_id"), format!("duplicate stencil id {}", o.stencil_id)));
            }
            if !(o.scale > 0.0 && o.scale.is_finite()) {
                return Err(schema(path, field("scale"), "must be positive"));
            }
            if let Placement::Absolute(t) = &o.placement {
                t.to_transform().map_err(|e| schema(path, field("placement.absolute"), e))?;
            }
        }
        let tm = self.track_mesh;
        if !(tm.width > 0.0 && tm.height > 0.0) {
            return Err(schema(path, "track_mesh", "width and height must be positive"));
        }
        if let Some(s) = &self.calibration_sphere {
            if !(s.radius > 0.0) {
                return Err(schema(path, "calibration_sphere.radius", "must be positive"));
            }
        }
        let l = self.light;
        if l.direction.iter().all(|&c| c == 0.0) || l.intensity < 0.0 || l.ambient < 0.0 {
            return Err(schema(path, "light", "direction must be nonzero and intensities non-negative"));
        }
        if !(self.pole_footprint > 0.0) {
            return Err(schema(path, "pole_footprint", "must be positive"));
        }
        Ok(())
    }
}

pub fn load_scene_config(path: &Path, classes: &SemanticClassMap) -> Result<SceneConfig, IngestError> {
    let mut cfg: SceneConfig = read_json(path)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate(path, classes)?;
    Ok(cfg)
}

pub fn save_scene_config(cfg: &SceneConfig, path: &Path) -> Result<(), IngestError> {
    write_json(path, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "objects": [
            {"name": "rock", "mesh": "rock.obj", "placement": {"on_track": {"arclength": 50, "lateral": 0, "yaw_deg": 0}},
             "stencil_id": 16, "base_color": [120, 110, 100]},
            {"mesh": "cow.ply", "placement": {"absolute": {"R": [1,0,0,0,1,0,0,0,1], "t": [1,2,3]}},
             "scale": 2.0, "stencil_id": 17, "base_color": [20, 20, 20]}
        ],
        "track_mesh": {"width": 1.5, "height": 0.2},
        "calibration_sphere": {"radius": 0.25}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        std::fs::write(&p, DOC).unwrap();
        let cfg = load_scene_config(&p, &SemanticClassMap::standard()).unwrap();
        assert_eq!(cfg.objects.len(), 2);
        assert_eq!(cfg.objects[0].scale, 1.0);
        assert_eq!(cfg.mesh_path(&cfg.objects[1]), dir.path().join("cow.ply"));
        assert_eq!(cfg.light, LightSpec::default());
        let q = dir.path().join("again.json");
        save_scene_config(&cfg, &q).unwrap();
        assert_eq!(load_scene_config(&q, &SemanticClassMap::standard()).unwrap(), cfg);
    }

    #[test]
    fn stencil_rules() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        std::fs::write(&p, DOC.replace("\"stencil_id\": 17", "\"stencil_id\": 16")).unwrap();
        assert!(matches!(load_scene_config(&p, &SemanticClassMap::standard()), Err(IngestError::SchemaViolation { .. })));
        std::fs::write(&p, DOC.replace("\"stencil_id\": 17", "\"stencil_id\": 3")).unwrap();
        assert!(load_scene_config(&p, &SemanticClassMap::standard()).is_err());
    }

    #[test]
    fn missing_field_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        std::fs::write(&p, r#"{"objects": []}"#).unwrap();
        match load_scene_config(&p, &SemanticClassMap::standard()) {
            Err(IngestError::SchemaViolation { message, .. }) => assert!(message.contains("track_mesh"), "{message}"),
            other => panic!("{other:?}"),
        }
    }
}
