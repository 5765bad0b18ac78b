use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::json::{read_json, schema, write_json};
use super::IngestError;
use crate::geometry::CameraModel;

/// Sparse per-frame pixel coordinates of a manually located image feature.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationAnnotation {
    pub camera_id: String,
    pub points: BTreeMap<usize, [f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationJson {
    camera_id: String,
    frames: BTreeMap<String, [f64; 2]>,
}

impl CalibrationAnnotation {
    pub fn get(&self, frame: usize) -> Option<[f64; 2]> {
        self.points.get(&frame).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks that every coordinate lies inside the camera image.
    pub fn check_bounds(&self, cam: &CameraModel) -> Result<(), IngestError> {
        for (&frame, &[u, v]) in &self.points {
            if !cam.contains(u, v) {
                return Err(IngestError::OutOfBoundsAnnotation { frame, u, v });
            }
        }
        Ok(())
    }
}

pub fn load_annotations(path: &Path) -> Result<CalibrationAnnotation, IngestError> {
    let raw: AnnotationJson = read_json(path)?;
    let mut points = BTreeMap::new();
    for (k, uv) in raw.frames {
        let frame: usize = k
            .parse()
            .map_err(|_| schema(path, format!("frames.{k}"), "frame key must be a non-negative integer"))?;
        if !uv.iter().all(|c| c.is_finite()) {
            return Err(schema(path, format!("frames.{k}"), "coordinates must be finite"));
        }
        points.insert(frame, uv);
    }
    Ok(CalibrationAnnotation { camera_id: raw.camera_id, points })
}

/// Loads annotations and binds them to a camera, validating bounds.
pub fn load_annotations_for(path: &Path, cam: &CameraModel) -> Result<CalibrationAnnotation, IngestError> {
    let a = load_annotations(path)?;
    a.check_bounds(cam)?;
    Ok(a)
}

pub fn save_annotations(a: &CalibrationAnnotation, path: &Path) -> Result<(), IngestError> {
    let raw = AnnotationJson {
        camera_id: a.camera_id.clone(),
        frames: a.points.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    };
    write_json(path, &raw)
}
