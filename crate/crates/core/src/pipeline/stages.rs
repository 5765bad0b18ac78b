use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::composite::{augment_frame, sequence_lightness_stats, FrameReport, LightnessAccumulator, LightnessScope, LightnessStats};
use crate::eval::{
    evaluate_sequence, select_calibration_point, write_metrics_json, write_report, write_summary, CalibrationPoint,
    MetricsReport,
};
use crate::geometry::{CameraModel, ImageBuffer, LabeledPointCloud, Pose, SemanticClassMap};
use crate::ingest::{
    load_annotations_for, load_image, load_scene_config, load_sequence, read_json, save_png, save_pointcloud,
    write_json, CalibrationAnnotation, IngestError, SequenceBundle, TransformJson,
};
use crate::localization::{icp_odometry, raw_gnss, refine_with_centerline, PoseSequence, PoseSource};
use crate::render::{
    build_environment, calibration_sphere_mesh, load_frame_render, occlude_pointcloud, place_objects, plane_anchors,
    render_frame, save_frame_render, Raycaster, TriangleMesh,
};
use crate::scene::{
    extract_scene, label_points, load_centerline, load_extracted, register_loaded, register_scan_to_map,
    save_extracted, ExtractedScene, CENTERLINE_JSON,
};

use super::*;

pub const STAGES: [&str; 6] = ["extract", "localize", "render", "composite", "evaluate", "report"];

/// Machine-readable completion record of one stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub stage: &'static str,
    pub status: &'static str,
    pub elapsed_s: f64,
    pub details: serde_json::Value,
}

impl StageSummary {
    fn ok(stage: &'static str, started: Instant, details: serde_json::Value) -> Self {
        let s = Self { stage, status: "ok", elapsed_s: started.elapsed().as_secs_f64(), details };
        log::info!("{}", s.to_json_line());
        s
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("summary serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct TimedPose {
    timestamp: f64,
    #[serde(flatten)]
    transform: TransformJson,
}

#[derive(Serialize, Deserialize)]
struct RenderInfo {
    camera: String,
    source: PoseSource,
    calibration_sphere: Option<[f64; 3]>,
    frames: usize,
}

#[derive(Serialize)]
struct CompositeDoc<'a> {
    camera: &'a str,
    source: PoseSource,
    target: Option<LightnessStats>,
    frames: &'a [FrameReport],
}

fn input(stage: &'static str) -> impl Fn(IngestError) -> PipelineError {
    move |source| PipelineError::Input { stage, source }
}

fn failed<E: std::fmt::Display>(stage: &'static str, frame: Option<usize>) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::stage(stage, frame, e)
}

fn scene_err(stage: &'static str) -> impl Fn(crate::scene::SceneError) -> PipelineError {
    move |e| match e {
        crate::scene::SceneError::Ingest(source) => PipelineError::Input { stage, source },
        e => PipelineError::stage(stage, None, e),
    }
}

/// A validated configuration bound to its loaded bundle.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub bundle: SequenceBundle,
    cameras: Vec<String>,
}

impl Pipeline {
    pub fn open(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let bundle = load_sequence(&config.bundle).map_err(input("ingest"))?;
        let cameras: Vec<String> = if config.cameras.is_empty() {
            bundle.cameras.keys().cloned().collect()
        } else {
            config.cameras.clone()
        };
        for cam in cameras.iter().chain(config.annotations.keys()) {
            if bundle.camera(cam).is_none() {
                return Err(PipelineError::Config {
                    field: "cameras".into(),
                    message: format!("camera `{cam}` is not in the bundle"),
                });
            }
        }
        Ok(Self { config, bundle, cameras })
    }

    pub fn out(&self) -> &Path {
        &self.config.out
    }

    pub fn cameras(&self) -> &[String] {
        &self.cameras
    }

    fn classes(&self) -> &SemanticClassMap {
        &self.bundle.class_map
    }

    fn camera(&self, id: &str) -> &CameraModel {
        self.bundle.camera(id).expect("checked in open")
    }

    /// Runs `f` on a pool with the configured worker count.
    pub fn with_workers<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        with_workers(self.config.workers, f)
    }

    /// Runs one stage by name on the configured pool.
    pub fn run_stage(&self, stage: &str) -> Result<StageSummary, PipelineError> {
        self.with_workers(|| match stage {
            "extract" => self.extract(),
            "localize" => self.localize(),
            "render" => self.render(),
            "composite" => self.composite(),
            "evaluate" => self.evaluate(),
            "report" => self.report(),
            other => Err(PipelineError::Config { field: "stage".into(), message: format!("unknown stage `{other}`") }),
        })
    }

    /// extract → localize → render → composite → evaluate.
    pub fn run_all(&self) -> Result<Vec<StageSummary>, PipelineError> {
        STAGES[..5].iter().map(|s| self.run_stage(s)).collect()
    }

    fn annotation(&self, cam: &str) -> Result<Option<CalibrationAnnotation>, PipelineError> {
        let Some(path) = self.config.annotations.get(cam) else { return Ok(None) };
        let ann = load_annotations_for(path, self.camera(cam)).map_err(input("annotations"))?;
        if ann.camera_id != cam {
            return Err(PipelineError::Config {
                field: format!("annotations.{cam}"),
                message: format!("file is for camera `{}`", ann.camera_id),
            });
        }
        Ok(Some(ann))
    }

    fn load_poses(&self, stage: &'static str, source: PoseSource) -> Result<PoseSequence, PipelineError> {
        let seq = PoseSequence::load(&poses_path(self.out(), source)).map_err(input(stage))?;
        if seq.len() != self.bundle.len() {
            return Err(PipelineError::stage(
                stage,
                None,
                format!("{source} has {} poses for {} frames", seq.len(), self.bundle.len()),
            ));
        }
        Ok(seq)
    }

    fn load_scene(&self, stage: &'static str) -> Result<ExtractedScene, PipelineError> {
        load_extracted(&self.out().join(EXTRACTED_DIR)).map_err(scene_err(stage))
    }

    fn calibration(
        &self,
        stage: &'static str,
        cam: &str,
        ann: &CalibrationAnnotation,
        cloud: &LabeledPointCloud,
        poses: &PoseSequence,
    ) -> Result<CalibrationPoint, PipelineError> {
        select_calibration_point(cloud, ann, self.camera(cam), &poses.poses, self.config.calibration.selection)
            .map_err(failed(stage, None))
    }

    /// Labels every cloud from the camera masks, registers the sequence and
    /// extracts centerline, planes and poles.
    pub fn extract(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "extract";
        let started = Instant::now();
        let p = &self.config.extract;
        let b = self.bundle.body_from_lidar;
        let lidar_pose = Pose::new(0.0, b.inverse());
        let labeled: Vec<LabeledPointCloud> = (0..self.bundle.len())
            .into_par_iter()
            .map(|k| {
                let mut cloud = self.bundle.load_cloud(k).map_err(input(STAGE))?;
                for cam in &self.cameras {
                    if let Some(mask) = self.bundle.load_label_mask(k, cam).map_err(input(STAGE))? {
                        cloud = label_points(&cloud, &mask, self.camera(cam), &lidar_pose, p.label_mode)
                            .map_err(failed(STAGE, Some(k)))?;
                    }
                }
                Ok(cloud)
            })
            .collect::<Result<_, PipelineError>>()?;

        let raw = self.bundle.poses();
        let poses = match p.registration {
            Registration::RawPoses => raw,
            Registration::ScanToMap => register_scan_to_map(&labeled, &raw, &b, &p.map).map_err(scene_err(STAGE))?,
        };
        let registered = register_loaded(&labeled, &poses, &b, p.voxel).map_err(scene_err(STAGE))?;
        drop(labeled);
        let n_points = registered.len();
        let scene = extract_scene(registered, &poses, self.classes(), &self.config.extract_params())
            .map_err(scene_err(STAGE))?;

        let dir = self.out().join(EXTRACTED_DIR);
        save_extracted(&scene, &dir).map_err(scene_err(STAGE))?;
        let doc: Vec<TimedPose> = poses
            .iter()
            .map(|q| TimedPose { timestamp: q.timestamp, transform: TransformJson::from_transform(&q.transform) })
            .collect();
        write_json(&dir.join(REGISTRATION_POSES_JSON), &doc).map_err(input(STAGE))?;
        Ok(StageSummary::ok(
            STAGE,
            started,
            json!({
                "registered_points": n_points,
                "centerline_length": scene.centerline.length(),
                "centerline_vertices": scene.centerline.vertices().len(),
                "planes": scene.planes.len(),
                "poles": scene.poles.len(),
                "output": dir,
            }),
        ))
    }

    /// Writes one pose file per configured source.
    pub fn localize(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "localize";
        let started = Instant::now();
        let raw = raw_gnss(&self.bundle);
        let mut written = BTreeMap::new();
        for &source in &self.config.sources {
            let seq = match source {
                PoseSource::RawGnss => raw.clone(),
                PoseSource::IcpOdometry => icp_odometry(&self.bundle, &self.config.icp).map_err(failed(STAGE, None))?,
                PoseSource::SegmentationRefined => {
                    let path = self.out().join(EXTRACTED_DIR).join(CENTERLINE_JSON);
                    let centerline = load_centerline(&path).map_err(scene_err(STAGE))?;
                    refine_with_centerline(&raw, &centerline, &self.config.refine).map_err(failed(STAGE, None))?
                }
            };
            let path = poses_path(self.out(), source);
            seq.save(&path).map_err(input(STAGE))?;
            written.insert(source.as_str(), path);
        }
        Ok(StageSummary::ok(STAGE, started, json!({ "frames": raw.len(), "outputs": written })))
    }

    /// Renders every camera with the render source's poses and occludes the
    /// bundle clouds with the placed obstacles.
    pub fn render(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "render";
        let started = Instant::now();
        let scene_cfg = load_scene_config(self.config.scene_config_path()?, self.classes()).map_err(input(STAGE))?;
        let scene = self.load_scene(STAGE)?;
        let source = self.config.render_source;
        let poses = self.load_poses(STAGE, source)?;
        let env = build_environment(&scene, &scene_cfg, self.classes()).map_err(failed(STAGE, None))?;
        let objects = place_objects(&scene_cfg, &scene.centerline, &plane_anchors(&scene)).map_err(failed(STAGE, None))?;

        let mut spheres = BTreeMap::new();
        for cam_id in &self.cameras {
            let cam = self.camera(cam_id);
            let mut meshes: Vec<TriangleMesh> = env.iter().chain(&objects).cloned().collect();
            let center = match &scene_cfg.calibration_sphere {
                Some(spec) => match spec.point {
                    Some(p) => Some(Point3::from(p)),
                    None => match self.annotation(cam_id)? {
                        Some(ann) => Some(self.calibration(STAGE, cam_id, &ann, &scene.registered, &poses)?.position),
                        None => None,
                    },
                },
                None => None,
            };
            if let (Some(c), Some(spec)) = (center, &scene_cfg.calibration_sphere) {
                meshes.extend(calibration_sphere_mesh(c, spec.radius, self.classes()));
            }
            let raycaster = Raycaster::new(meshes);
            let dir = self.out().join(RENDER_DIR).join(cam_id);
            (0..poses.len()).into_par_iter().try_for_each(|k| {
                let r = render_frame(&raycaster, cam, &poses.poses[k], &scene_cfg.light);
                save_frame_render(&r, &dir, k).map_err(failed(STAGE, Some(k)))
            })?;
            let info = RenderInfo {
                camera: cam_id.clone(),
                source,
                calibration_sphere: center.map(|c| [c.x, c.y, c.z]),
                frames: poses.len(),
            };
            write_json(&dir.join(RENDER_JSON), &info).map_err(input(STAGE))?;
            spheres.insert(cam_id.clone(), info.calibration_sphere);
        }

        let b = self.bundle.body_from_lidar;
        let mode = self.config.render.occlusion_mode;
        let eps = self.config.render.epsilon;
        let dir = self.out().join(CLOUDS_AUG_DIR);
        let changed: Vec<usize> = (0..poses.len())
            .into_par_iter()
            .map(|k| {
                let cloud = self.bundle.load_cloud(k).map_err(input(STAGE))?;
                let lidar_from_world = poses.poses[k].transform.compose(&b).inverse();
                let local = Raycaster::new(objects.iter().map(|m| m.transformed(&lidar_from_world)).collect());
                let out = occlude_pointcloud(&cloud, &local, mode, eps);
                let changed = if out.len() != cloud.len() {
                    cloud.len() - out.len()
                } else {
                    out.points().iter().zip(cloud.points()).filter(|(a, b)| a != b).count()
                };
                save_pointcloud(&out, &dir.join(frame_name(k, "ply"))).map_err(input(STAGE))?;
                Ok(changed)
            })
            .collect::<Result<_, PipelineError>>()?;
        Ok(StageSummary::ok(
            STAGE,
            started,
            json!({
                "source": source,
                "frames": poses.len(),
                "cameras": self.cameras,
                "objects": objects.len(),
                "calibration_spheres": spheres,
                "occlusion_mode": mode,
                "occluded_points": changed.iter().sum::<usize>(),
            }),
        ))
    }

    /// Per-frame offsets `GT − p` of the render source, for annotated frames.
    fn offsets(
        &self,
        cam: &str,
        scene: &Option<ExtractedScene>,
        poses: &PoseSequence,
    ) -> Result<BTreeMap<usize, (f64, f64)>, PipelineError> {
        const STAGE: &str = "composite";
        let (Some(scene), Some(ann)) = (scene, self.annotation(cam)?) else { return Ok(BTreeMap::new()) };
        let calib = self.calibration(STAGE, cam, &ann, &scene.registered, poses)?;
        let report = evaluate_sequence(&self.bundle.name, cam, self.camera(cam), poses, &calib, &ann)
            .map_err(failed(STAGE, None))?;
        Ok(report.frames.iter().filter_map(|&f| Some((f, report.offset_at(f)?))).collect())
    }

    /// Blends the rendered obstacles into the real frames.
    pub fn composite(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "composite";
        let started = Instant::now();
        let params = self.config.composite;
        let source = self.config.render_source;
        let poses = self.load_poses(STAGE, source)?;
        let classes = self.classes();
        let sphere = classes.calibration_sphere();
        let layer = |s: u16| classes.is_obstacle(s) || (params.include_calibration_sphere && Some(s) == sphere);
        let scene = if params.offset_compensation && self.cameras.iter().any(|c| self.config.annotations.contains_key(c)) {
            Some(self.load_scene(STAGE)?)
        } else {
            None
        };

        let mut summary = BTreeMap::new();
        for cam_id in &self.cameras {
            let target = match params.lightness {
                LightnessScope::Sequence => {
                    let mut acc = LightnessAccumulator::default();
                    for k in 0..self.bundle.len() {
                        let img = self.bundle.load_image(k, cam_id).map_err(input(STAGE))?;
                        acc.add_image(&img).map_err(failed(STAGE, Some(k)))?;
                    }
                    Some(acc.finish().map_err(failed(STAGE, None))?)
                }
                LightnessScope::Frame => None,
            };
            let offsets = if params.offset_compensation { self.offsets(cam_id, &scene, &poses)? } else { BTreeMap::new() };
            let render_dir = self.out().join(RENDER_DIR).join(cam_id);
            let out_dir = self.out().join(AUGMENTED_DIR).join(cam_id);
            let reports: Vec<FrameReport> = (0..self.bundle.len())
                .into_par_iter()
                .map(|k| {
                    let real = self.bundle.load_image(k, cam_id).map_err(input(STAGE))?;
                    let render = load_frame_render(&render_dir, k).map_err(failed(STAGE, Some(k)))?;
                    let target = match target {
                        Some(t) => t,
                        None => sequence_lightness_stats(std::slice::from_ref(&real)).map_err(failed(STAGE, Some(k)))?,
                    };
                    let offset = offsets.get(&k).copied().unwrap_or((0.0, 0.0));
                    let (img, report) =
                        augment_frame(k, &real, &render, layer, &target, &params, offset).map_err(failed(STAGE, Some(k)))?;
                    save_png(&img, &out_dir.join(frame_name(k, "png"))).map_err(input(STAGE))?;
                    Ok(report)
                })
                .collect::<Result<_, PipelineError>>()?;
            let doc = CompositeDoc { camera: cam_id, source, target, frames: &reports };
            write_json(&out_dir.join(COMPOSITE_REPORT_JSON), &doc).map_err(input(STAGE))?;
            let with_objects = reports.iter().filter(|r| !r.objects.is_empty()).count();
            summary.insert(cam_id.clone(), json!({ "frames": reports.len(), "frames_with_objects": with_objects }));
        }
        Ok(StageSummary::ok(STAGE, started, json!({ "source": source, "cameras": summary })))
    }

    /// Scores every (annotated camera, source) pair.
    pub fn evaluate(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "evaluate";
        let started = Instant::now();
        let annotated: Vec<(&String, CalibrationAnnotation)> = self
            .cameras
            .iter()
            .filter_map(|c| self.annotation(c).transpose().map(|a| a.map(|a| (c, a))))
            .collect::<Result<_, _>>()?;
        if annotated.is_empty() {
            return Err(PipelineError::Config {
                field: "annotations".into(),
                message: "no selected camera has calibration annotations".into(),
            });
        }
        let scene = self.load_scene(STAGE)?;
        let mut reports = Vec::new();
        let mut points: BTreeMap<String, BTreeMap<PoseSource, CalibrationPoint>> = BTreeMap::new();
        for &source in &self.config.sources {
            let poses = self.load_poses(STAGE, source)?;
            for (cam, ann) in &annotated {
                let calib = self.calibration(STAGE, cam, ann, &scene.registered, &poses)?;
                let report = evaluate_sequence(&self.bundle.name, cam, self.camera(cam), &poses, &calib, ann)
                    .map_err(failed(STAGE, None))?;
                points.entry(cam.to_string()).or_default().insert(source, calib);
                reports.push(report);
            }
        }
        reports.sort_by(|a, b| (&a.camera, &a.source).cmp(&(&b.camera, &b.source)));
        let out = self.out();
        write_report(&reports, &out.join(METRICS_CSV)).map_err(failed(STAGE, None))?;
        write_metrics_json(&reports, &out.join(METRICS_JSON)).map_err(failed(STAGE, None))?;
        write_json(&out.join(CALIBRATION_POINTS_JSON), &points).map_err(input(STAGE))?;
        let rows: Vec<_> = reports
            .iter()
            .map(|r| json!({ "camera": r.camera, "source": r.source, "mean_rpe": r.mean_rpe, "mean_jitter": r.mean_jitter }))
            .collect();
        Ok(StageSummary::ok(STAGE, started, json!({ "reports": rows, "output": out.join(METRICS_CSV) })))
    }

    /// Summary table plus one review image per annotated frame: the
    /// augmented frame with the annotation and every source's projection
    /// of the calibration point marked.
    pub fn report(&self) -> Result<StageSummary, PipelineError> {
        const STAGE: &str = "report";
        let started = Instant::now();
        let out = self.out();
        let reports: Vec<MetricsReport> = read_json(&out.join(METRICS_JSON)).map_err(input(STAGE))?;
        write_summary(&reports, &out.join(SUMMARY_TXT)).map_err(failed(STAGE, None))?;
        let mut images = 0;
        for cam_id in &self.cameras {
            let cam_reports: Vec<&MetricsReport> = reports.iter().filter(|r| &r.camera == cam_id).collect();
            let Some(first) = cam_reports.first() else { continue };
            let dir = out.join(REPORT_DIR).join(cam_id);
            let frames = first.frames.clone();
            frames.par_iter().enumerate().try_for_each(|(i, &k)| {
                let augmented = out.join(AUGMENTED_DIR).join(cam_id).join(frame_name(k, "png"));
                let mut img = if augmented.exists() {
                    load_image(&augmented).map_err(input(STAGE))?
                } else {
                    self.bundle.load_image(k, cam_id).map_err(input(STAGE))?
                };
                for r in &cam_reports {
                    if let Ok(j) = r.frames.binary_search(&k) {
                        draw_cross(&mut img, r.projections[j], source_color(&r.source));
                    }
                }
                let gt = [first.projections[i][0] + first.offsets[i][0], first.projections[i][1] + first.offsets[i][1]];
                draw_ring(&mut img, gt, 6.0, [0, 255, 0]);
                save_png(&img, &dir.join(frame_name(k, "png"))).map_err(input(STAGE))
            })?;
            images += frames.len();
        }
        Ok(StageSummary::ok(
            STAGE,
            started,
            json!({ "summary": out.join(SUMMARY_TXT), "images": images, "output": out.join(REPORT_DIR) }),
        ))
    }
}

fn source_color(source: &str) -> [u8; 3] {
    match source.parse::<PoseSource>() {
        Ok(PoseSource::RawGnss) => [255, 40, 40],
        Ok(PoseSource::IcpOdometry) => [40, 120, 255],
        Ok(PoseSource::SegmentationRefined) => [255, 230, 0],
        Err(_) => [255, 255, 255],
    }
}

fn put(img: &mut ImageBuffer, x: i64, y: i64, color: [u8; 3]) {
    let (w, h) = img.dimensions();
    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
        return;
    }
    if let Some(data) = img.as_rgb8_mut() {
        let i = 3 * (y as usize * w as usize + x as usize);
        data[i..i + 3].copy_from_slice(&color);
    }
}

fn draw_cross(img: &mut ImageBuffer, uv: [f64; 2], color: [u8; 3]) {
    let (x, y) = (uv[0].floor() as i64, uv[1].floor() as i64);
    for d in -5..=5 {
        put(img, x + d, y, color);
        put(img, x, y + d, color);
    }
}

fn draw_ring(img: &mut ImageBuffer, uv: [f64; 2], r: f64, color: [u8; 3]) {
    for step in 0..64 {
        let a = step as f64 * std::f64::consts::TAU / 64.0;
        put(img, (uv[0] + r * a.cos()).floor() as i64, (uv[1] + r * a.sin()).floor() as i64, color);
    }
}
