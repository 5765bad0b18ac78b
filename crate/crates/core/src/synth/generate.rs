use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use rayon::prelude::*;

use crate::geometry::{Pose, SemanticClassMap};
use crate::ingest::{
    save_annotations, save_obj, save_png, save_pointcloud, save_scene_config, write_json, write_manifest,
    CalibrationAnnotation, CalibrationSphereSpec, FrameRecord, LightSpec, ObjectPlacement, Placement, SceneConfig,
    SequenceBundle, TrackMeshSpec,
};
use crate::eval::SelectionMode;
use crate::pipeline::PipelineConfig;
use crate::render::{box_mesh, uv_sphere};

use super::scenario::SynthScenario;
use super::sensors::{body_from_lidar, camera_frame, camera_model, corrupt_gnss, frame_rng, scan, Stream};
use super::truth::{GroundTruth, TRUTH_JSON};
use super::world::SynthWorld;
use super::SynthError;

pub const SCENARIO_JSON: &str = "scenario.json";
pub const SCENE_JSON: &str = "scene.json";
pub const PIPELINE_JSON: &str = "pipeline.json";

pub fn annotation_path(root: &Path, camera: &str) -> PathBuf {
    root.join("annotations").join(format!("{camera}.json"))
}

/// A generated bundle together with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub bundle: SequenceBundle,
    pub truth: GroundTruth,
    pub annotations: BTreeMap<String, CalibrationAnnotation>,
    pub scene_config: PathBuf,
}

/// Exact projections of the calibration feature for every frame where it
/// lies in front of the camera and inside the image.
pub fn feature_annotations(bundle: &SequenceBundle, truth: &GroundTruth) -> BTreeMap<String, CalibrationAnnotation> {
    bundle
        .cameras
        .iter()
        .map(|(id, cam)| {
            let points = truth
                .poses
                .iter()
                .enumerate()
                .filter_map(|(k, pose)| {
                    let p = cam.project_world(pose, &truth.calibration_feature).ok()?;
                    cam.contains(p.u, p.v).then_some((k, [p.u, p.v]))
                })
                .collect();
            (id.clone(), CalibrationAnnotation { camera_id: id.clone(), points })
        })
        .collect()
}

fn write_scene_config(root: &Path, scenario: &SynthScenario, classes: &SemanticClassMap) -> Result<PathBuf, SynthError> {
    let meshes = root.join("meshes");
    let pedestrian = box_mesh(Point3::new(-0.3, -0.25, 0.0), Point3::new(0.3, 0.25, 1.8), [0, 0, 0], 1)?;
    save_obj(&pedestrian.vertices, &pedestrian.triangles, &meshes.join("obstacle.obj"))?;
    let ball = uv_sphere(Point3::origin(), 0.4, 10, 16, [0, 0, 0], 1);
    save_obj(&ball.vertices, &ball.triangles, &meshes.join("ball.obj"))?;
    let base = classes.obstacle_base();
    let length = scenario.track.length;
    let objects = vec![
        ObjectPlacement {
            name: "obstacle".into(),
            mesh: "meshes/obstacle.obj".into(),
            placement: Placement::OnTrack { arclength: 0.75 * length, lateral: 0.0, yaw_deg: 0.0 },
            scale: 1.0,
            stencil_id: base,
            base_color: [200, 60, 40],
        },
        ObjectPlacement {
            name: "ball".into(),
            mesh: "meshes/ball.obj".into(),
            placement: Placement::OnTrack { arclength: 0.55 * length, lateral: 2.6, yaw_deg: 0.0 },
            scale: 1.0,
            stencil_id: base + 1,
            base_color: [40, 90, 200],
        },
    ];
    let cfg = SceneConfig {
        objects,
        track_mesh: TrackMeshSpec { width: 2.0 * scenario.half_gauge + 0.3, height: 0.02 },
        calibration_sphere: Some(CalibrationSphereSpec { point: None, radius: 0.3 }),
        light: LightSpec::default(),
        pole_footprint: scenario.scene.pole_footprint,
        base_dir: root.to_path_buf(),
    };
    let path = root.join(SCENE_JSON);
    save_scene_config(&cfg, &path)?;
    Ok(path)
}

/// Pipeline config for a generated bundle, with paths relative to its root
/// and outputs under `out/`. The calibration point is chosen over all
/// annotated frames.
pub fn pipeline_config(output: &SynthOutput) -> PipelineConfig {
    let root = &output.bundle.root;
    let rel = |p: &Path| p.strip_prefix(root).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
    let mut cfg = PipelineConfig {
        bundle: PathBuf::from("."),
        out: PathBuf::from("out"),
        scene_config: Some(rel(&output.scene_config)),
        annotations: output.annotations.keys().map(|id| (id.clone(), rel(&annotation_path(root, id)))).collect(),
        seed: Some(output.truth.scenario.seed),
        ..Default::default()
    };
    cfg.calibration.selection = SelectionMode::AllAnnotated;
    cfg
}

/// Writes a complete sequence bundle for `scenario` under `root`: manifest,
/// lidar clouds, camera images and label masks, plus `truth.json`,
/// `scenario.json`, a scene config with two obstacles, exact
/// calibration-feature annotations per camera and a `pipeline.json`.
pub fn generate(scenario: &SynthScenario, root: &Path) -> Result<SynthOutput, SynthError> {
    scenario.validate()?;
    let classes = SemanticClassMap::standard();
    let world = SynthWorld::build(scenario, &classes);
    let poses = GroundTruth::true_poses(scenario);
    let truth = GroundTruth { scenario: scenario.clone(), poses: poses.clone(), calibration_feature: world.calibration_feature };
    let lidar_mount = body_from_lidar(&scenario.lidar);
    let cameras: BTreeMap<String, _> = scenario.cameras.iter().map(|c| (c.id.clone(), camera_model(c))).collect();
    let light = LightSpec::default();

    for dir in ["clouds", "images", "labels", "annotations", "meshes"] {
        fs::create_dir_all(root.join(dir)).map_err(|source| crate::ingest::IngestError::Io { path: root.join(dir), source })?;
    }

    let frames = (0..scenario.n_frames)
        .into_par_iter()
        .map(|k| -> Result<FrameRecord, SynthError> {
            let truth_pose = poses[k];
            let cloud_path = PathBuf::from(format!("clouds/{k:06}.ply"));
            let cloud = scan(
                &world,
                &scenario.lidar,
                &truth_pose.transform.compose(&lidar_mount),
                &mut frame_rng(scenario.seed, Stream::Lidar, k),
            );
            save_pointcloud(&cloud, &root.join(&cloud_path))?;
            let mut rng = frame_rng(scenario.seed, Stream::Image, k);
            let mut image_paths = BTreeMap::new();
            let mut label_paths = BTreeMap::new();
            for (id, cam) in &cameras {
                let (img, labels) = camera_frame(&world, cam, &truth_pose, &light, &mut rng);
                let ip = PathBuf::from(format!("images/{id}/{k:06}.png"));
                let lp = PathBuf::from(format!("labels/{id}/{k:06}.png"));
                save_png(&img, &root.join(&ip))?;
                save_png(&labels, &root.join(&lp))?;
                image_paths.insert(id.clone(), ip);
                label_paths.insert(id.clone(), lp);
            }
            let raw = corrupt_gnss(&scenario.gnss_noise, scenario, k, &truth_pose.transform);
            Ok(FrameRecord {
                index: k,
                pose: Pose::new(truth_pose.timestamp, raw),
                cloud_path,
                image_paths,
                label_mask_paths: Some(label_paths),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let bundle = SequenceBundle {
        root: root.to_path_buf(),
        name: scenario.name.clone(),
        frames,
        cameras,
        body_from_lidar: lidar_mount,
        class_map: classes.clone(),
    };
    write_manifest(&bundle, root)?;
    truth.save(&root.join(TRUTH_JSON))?;
    write_json(&root.join(SCENARIO_JSON), scenario)?;
    let annotations = feature_annotations(&bundle, &truth);
    for (id, a) in &annotations {
        save_annotations(a, &annotation_path(root, id))?;
    }
    let scene_config = write_scene_config(root, scenario, &classes)?;
    let output = SynthOutput { bundle, truth, annotations, scene_config };
    write_json(&root.join(PIPELINE_JSON), &pipeline_config(&output))?;
    log::info!("generated {} frames of `{}` in {}", scenario.n_frames, scenario.name, root.display());
    Ok(output)
}
