use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ply::write_atomic, IngestError};
use crate::geometry::RigidTransform;

/// `{"R": [9 row-major], "t": [3]}`, or `{"q": [w, x, y, z], "t": [3]}` on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformJson {
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<[f64; 4]>,
    pub t: [f64; 3],
}

/// Rotations read from disk may deviate from orthonormality by this much
/// before being rejected; smaller deviations are repaired.
const INGEST_ROTATION_TOL: f64 = 1e-6;

impl TransformJson {
    pub fn from_transform(t: &RigidTransform) -> Self {
        Self { r: Some(t.rotation_row_major()), q: None, t: t.translation_array() }
    }

    pub fn to_transform(&self) -> Result<RigidTransform, String> {
        let t = Vector3::from(self.t);
        match (&self.r, &self.q) {
            (Some(r), None) => RigidTransform::new_reorthonormalized(Matrix3::from_row_slice(r), t, INGEST_ROTATION_TOL)
                .map_err(|e| e.to_string()),
            (None, Some(q)) => RigidTransform::from_quaternion(*q, t).map_err(|e| e.to_string()),
            (Some(_), Some(_)) => Err("give either R or q, not both".into()),
            (None, None) => Err("missing rotation (R or q)".into()),
        }
    }
}

pub(crate) fn schema(path: &Path, field: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError::SchemaViolation { path: path.to_path_buf(), field: field.into(), message: message.into() }
}

/// Reads and deserializes a JSON document, reporting the failing field path.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile { path: path.to_path_buf() });
    }
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        schema(path, field, e.into_inner().to_string())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IngestError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
