use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composite::CompositeParams;
use crate::eval::SelectionMode;
use crate::ingest::{read_json, write_json};
use crate::localization::{IcpParams, PoseSource, RefineParams};
use crate::render::{OcclusionMode, OCCLUSION_EPSILON};
use crate::scene::{ExtractParams, LabelMode, MapRegistrationParams};

use super::PipelineError;

/// Pose source the registered cloud used for extraction is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Registration {
    /// Manifest poses as they are.
    RawPoses,
    /// Scan-to-map alignment started from the manifest poses.
    #[default]
    ScanToMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractStageParams {
    pub registration: Registration,
    pub map: MapRegistrationParams,
    /// Cell size for deduplicating the registered cloud.
    pub voxel: f64,
    pub label_mode: LabelMode,
    pub scene: ExtractParams,
}

impl Default for ExtractStageParams {
    fn default() -> Self {
        Self {
            registration: Registration::ScanToMap,
            map: MapRegistrationParams::default(),
            voxel: 0.05,
            label_mode: LabelMode::Direct,
            scene: ExtractParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderStageParams {
    pub occlusion_mode: OcclusionMode,
    pub epsilon: f64,
}

impl Default for RenderStageParams {
    fn default() -> Self {
        Self { occlusion_mode: OcclusionMode::Replace, epsilon: OCCLUSION_EPSILON }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationParams {
    pub selection: SelectionMode,
}

/// Everything one pipeline run needs. Relative paths in a config file are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub bundle: PathBuf,
    pub out: PathBuf,
    pub scene_config: Option<PathBuf>,
    /// Calibration annotation file per camera id.
    pub annotations: BTreeMap<String, PathBuf>,
    /// Cameras to process; empty means every camera of the bundle.
    pub cameras: Vec<String>,
    pub sources: Vec<PoseSource>,
    /// Poses used for rendering, occlusion and compositing.
    pub render_source: PoseSource,
    /// Overrides the RANSAC seed.
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub extract: ExtractStageParams,
    pub icp: IcpParams,
    pub refine: RefineParams,
    pub render: RenderStageParams,
    pub composite: CompositeParams,
    pub calibration: CalibrationParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            bundle: PathBuf::new(),
            out: PathBuf::new(),
            scene_config: None,
            annotations: BTreeMap::new(),
            cameras: Vec::new(),
            sources: PoseSource::ALL.to_vec(),
            render_source: PoseSource::SegmentationRefined,
            seed: None,
            workers: None,
            extract: ExtractStageParams::default(),
            icp: IcpParams::default(),
            refine: RefineParams::default(),
            render: RenderStageParams::default(),
            composite: CompositeParams::default(),
            calibration: CalibrationParams::default(),
        }
    }
}

fn config_err(field: impl Into<String>, message: impl Into<String>) -> PipelineError {
    PipelineError::Config { field: field.into(), message: message.into() }
}

fn require_exists(field: &str, path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(config_err(field, format!("{} does not exist", path.display())))
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = read_json(path).map_err(|e| PipelineError::Input { stage: "config", source: e })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_json(path, self).map_err(|e| PipelineError::Input { stage: "config", source: e })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.bundle);
        join(&mut self.out);
        if let Some(p) = self.scene_config.as_mut() {
            join(p);
        }
        self.annotations.values_mut().for_each(join);
    }

    /// RANSAC parameters with the seed override applied.
    pub fn extract_params(&self) -> ExtractParams {
        let mut p = self.extract.scene;
        if let Some(seed) = self.seed {
            p.ransac.seed = seed;
        }
        p
    }

    /// Checks values and that every referenced path exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.bundle.as_os_str().is_empty() {
            return Err(config_err("bundle", "is required"));
        }
        require_exists("bundle", &self.bundle)?;
        if self.out.as_os_str().is_empty() {
            return Err(config_err("out", "is required"));
        }
        if let Some(p) = &self.scene_config {
            require_exists("scene_config", p)?;
        }
        for (cam, p) in &self.annotations {
            require_exists(&format!("annotations.{cam}"), p)?;
        }
        if self.sources.is_empty() {
            return Err(config_err("sources", "must name at least one pose source"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers", "must be at least 1"));
        }
        self.icp.validate().map_err(|m| config_err("icp", m))?;
        self.extract.map.icp.validate().map_err(|m| config_err("extract.map.icp", m))?;
        if !(self.extract.voxel >= 0.0) {
            return Err(config_err("extract.voxel", "must be non-negative"));
        }
        if !(self.render.epsilon >= 0.0 && self.render.epsilon < 1.0) {
            return Err(config_err("render.epsilon", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn scene_config_path(&self) -> Result<&Path, PipelineError> {
        self.scene_config.as_deref().ok_or_else(|| config_err("scene_config", "is required for this stage"))
    }
}
