use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::json::{read_json, schema, write_json, TransformJson};
use super::{imageio, ply, IngestError};
use crate::geometry::{CameraModel, ImageBuffer, LabeledPointCloud, Pose, RigidTransform, SemanticClassMap};

pub const MANIFEST: &str = "manifest.json";

/// One synchronized record: a pose, a LiDAR cloud and per-camera images.
/// Paths are relative to the bundle root.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub index: usize,
    pub pose: Pose,
    pub cloud_path: PathBuf,
    pub image_paths: BTreeMap<String, PathBuf>,
    pub label_mask_paths: Option<BTreeMap<String, PathBuf>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub root: PathBuf,
    pub name: String,
    pub frames: Vec<FrameRecord>,
    pub cameras: BTreeMap<String, CameraModel>,
    pub body_from_lidar: RigidTransform,
    pub class_map: SemanticClassMap,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraJson {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    body_from_camera: TransformJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distortion: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LidarJson {
    body_from_lidar: TransformJson,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameJson {
    index: usize,
    timestamp: f64,
    pose: TransformJson,
    cloud: String,
    images: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sequence: Option<String>,
    cameras: BTreeMap<String, CameraJson>,
    lidar: LidarJson,
    frames: Vec<FrameJson>,
    class_map: BTreeMap<String, u16>,
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

impl SequenceBundle {
    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn camera(&self, id: &str) -> Option<&CameraModel> {
        self.cameras.get(id)
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.frames.iter().map(|f| f.pose).collect()
    }

    pub fn load_cloud(&self, frame: usize) -> Result<LabeledPointCloud, IngestError> {
        ply::load_pointcloud(&self.resolve(&self.frames[frame].cloud_path))
    }

    /// All clouds, loaded in parallel and returned in frame order.
    pub fn load_clouds(&self) -> Result<Vec<LabeledPointCloud>, IngestError> {
        (0..self.frames.len()).into_par_iter().map(|i| self.load_cloud(i)).collect()
    }

    pub fn load_image(&self, frame: usize, camera: &str) -> Result<ImageBuffer, IngestError> {
        let rel = self.frames[frame]
            .image_paths
            .get(camera)
            .ok_or_else(|| schema(&self.root.join(MANIFEST), format!("frames[{frame}].images.{camera}"), "missing"))?;
        imageio::load_image(&self.resolve(rel))
    }

    pub fn load_label_mask(&self, frame: usize, camera: &str) -> Result<Option<ImageBuffer>, IngestError> {
        match self.frames[frame].label_mask_paths.as_ref().and_then(|m| m.get(camera)) {
            Some(rel) => imageio::load_label_mask(&self.resolve(rel)).map(Some),
            None => Ok(None),
        }
    }

    fn to_json(&self) -> ManifestJson {
        ManifestJson {
            sequence: Some(self.name.clone()),
            cameras: self
                .cameras
                .iter()
                .map(|(id, c)| {
                    (
                        id.clone(),
                        CameraJson {
                            fx: c.fx,
                            fy: c.fy,
                            cx: c.cx,
                            cy: c.cy,
                            width: c.width,
                            height: c.height,
                            body_from_camera: TransformJson::from_transform(&c.body_from_camera),
                            distortion: None,
                        },
                    )
                })
                .collect(),
            lidar: LidarJson { body_from_lidar: TransformJson::from_transform(&self.body_from_lidar) },
            frames: self
                .frames
                .iter()
                .map(|f| FrameJson {
                    index: f.index,
                    timestamp: f.pose.timestamp,
                    pose: TransformJson::from_transform(&f.pose.transform),
                    cloud: path_string(&f.cloud_path),
                    images: f.image_paths.iter().map(|(k, v)| (k.clone(), path_string(v))).collect(),
                    labels: f
                        .label_mask_paths
                        .as_ref()
                        .map(|m| m.iter().map(|(k, v)| (k.clone(), path_string(v))).collect()),
                })
                .collect(),
            class_map: self.class_map.clone().into(),
        }
    }

    /// Every file path referenced by the manifest, relative to the root.
    pub fn referenced_files(&self) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for f in &self.frames {
            out.push(f.cloud_path.clone());
            out.extend(f.image_paths.values().cloned());
            if let Some(m) = &f.label_mask_paths {
                out.extend(m.values().cloned());
            }
        }
        out
    }
}

/// Loads and fully validates `root/manifest.json` and checks that every
/// referenced file exists.
pub fn load_sequence(root: &Path) -> Result<SequenceBundle, IngestError> {
    let mpath = root.join(MANIFEST);
    let m: ManifestJson = read_json(&mpath)?;

    let class_map = SemanticClassMap::new(m.class_map).map_err(|e| schema(&mpath, "class_map", e.to_string()))?;

    let mut cameras = BTreeMap::new();
    for (id, c) in m.cameras {
        let field = |f: &str| format!("cameras.{id}.{f}");
        if let Some(d) = &c.distortion {
            if d.iter().any(|&k| k != 0.0) {
                return Err(schema(
                    &mpath,
                    field("distortion"),
                    "lens distortion is not supported; rectify the images first",
                ));
            }
        }
        let body_from_camera =
            c.body_from_camera.to_transform().map_err(|e| schema(&mpath, field("body_from_camera"), e))?;
        let cam = CameraModel::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height, body_from_camera)
            .map_err(|e| schema(&mpath, format!("cameras.{id}"), e.to_string()))?;
        cameras.insert(id, cam);
    }
    let body_from_lidar = m
        .lidar
        .body_from_lidar
        .to_transform()
        .map_err(|e| schema(&mpath, "lidar.body_from_lidar", e))?;

    let mut frames = Vec::with_capacity(m.frames.len());
    for (pos, f) in m.frames.into_iter().enumerate() {
        let field = |s: &str| format!("frames[{pos}].{s}");
        if f.index != pos {
            return Err(schema(&mpath, field("index"), format!("expected {pos}, got {}", f.index)));
        }
        if !f.timestamp.is_finite() {
            return Err(schema(&mpath, field("timestamp"), "not finite"));
        }
        if let Some(prev) = frames.last().map(|p: &FrameRecord| p.pose.timestamp) {
            if !(f.timestamp > prev) {
                return Err(IngestError::NonMonotoneTimestamps { path: mpath, index: pos, previous: prev, current: f.timestamp });
            }
        }
        let transform = f.pose.to_transform().map_err(|e| schema(&mpath, field("pose"), e))?;
        for (kind, map) in [("images", Some(&f.images)), ("labels", f.labels.as_ref())] {
            for cam in map.into_iter().flat_map(|m| m.keys()) {
                if !cameras.contains_key(cam) {
                    return Err(schema(&mpath, field(&format!("{kind}.{cam}")), "unknown camera id"));
                }
            }
        }
        frames.push(FrameRecord {
            index: f.index,
            pose: Pose::new(f.timestamp, transform),
            cloud_path: PathBuf::from(f.cloud),
            image_paths: f.images.into_iter().map(|(k, v)| (k, PathBuf::from(v))).collect(),
            label_mask_paths: f.labels.map(|m| m.into_iter().map(|(k, v)| (k, PathBuf::from(v))).collect()),
        });
    }

    let bundle = SequenceBundle {
        root: root.to_path_buf(),
        name: m.sequence.unwrap_or_else(|| {
            root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "sequence".into())
        }),
        frames,
        cameras,
        body_from_lidar,
        class_map,
    };
    for rel in bundle.referenced_files() {
        let p = bundle.resolve(&rel);
        if !p.is_file() {
            return Err(IngestError::MissingFile { path: p });
        }
    }
    Ok(bundle)
}

/// Writes only the manifest for `bundle` to `root/manifest.json`; the
/// referenced payload files must be placed there by the caller.
pub fn write_manifest(bundle: &SequenceBundle, root: &Path) -> Result<(), IngestError> {
    write_json(&root.join(MANIFEST), &bundle.to_json())
}

/// Writes the manifest to `dest` and copies every referenced file from the
/// bundle root, preserving relative paths.
pub fn save_sequence(bundle: &SequenceBundle, dest: &Path) -> Result<(), IngestError> {
    let same_root = fs::canonicalize(&bundle.root).ok() == fs::canonicalize(dest).ok();
    if !same_root {
        for rel in bundle.referenced_files() {
            let (src, dst) = (bundle.resolve(&rel), dest.join(&rel));
            let io = |source| IngestError::Io { path: dst.clone(), source };
            if let Some(d) = dst.parent() {
                fs::create_dir_all(d).map_err(io)?;
            }
            fs::copy(&src, &dst).map_err(io)?;
        }
    }
    write_manifest(bundle, dest)
}
