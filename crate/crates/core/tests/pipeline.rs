mod common;

use std::fs;

use railar::ingest::load_sequence;
use railar::localization::{PoseSequence, PoseSource};
use railar::pipeline::{poses_path, Pipeline, PipelineConfig, PipelineError, METRICS_CSV, SUMMARY_TXT};
use railar::synth::PIPELINE_JSON;

fn count(dir: &std::path::Path, ext: &str) -> usize {
    fs::read_dir(dir).map_or(0, |d| d.filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext)).count())
}

#[test]
fn small_sequence_runs_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = common::small_bundle(dir.path());
    let cfg = PipelineConfig::load(&dir.path().join(PIPELINE_JSON)).unwrap();
    let pipeline = Pipeline::open(cfg).unwrap();
    let summaries = pipeline.run_all().unwrap();
    assert_eq!(summaries.iter().map(|s| s.stage).collect::<Vec<_>>(), ["extract", "localize", "render", "composite", "evaluate"]);
    pipeline.run_stage("report").unwrap();

    let o = pipeline.out();
    let n = out.bundle.len();
    for source in PoseSource::ALL {
        let seq = PoseSequence::load(&poses_path(o, source)).unwrap();
        assert_eq!(seq.len(), n);
        assert!(seq.timestamps_increasing());
    }
    for cam in out.bundle.cameras.keys() {
        assert_eq!(count(&o.join("augmented").join(cam), "png"), n, "{cam}");
    }
    assert_eq!(count(&o.join("clouds_aug"), "ply"), n);
    let csv = fs::read_to_string(o.join(METRICS_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * out.bundle.cameras.len());
    assert!(fs::read_to_string(o.join(SUMMARY_TXT)).unwrap().contains("segmentation_refined"));
}

#[test]
fn stages_fail_cleanly_without_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    common::small_bundle(dir.path());
    let mut cfg = PipelineConfig::load(&dir.path().join(PIPELINE_JSON)).unwrap();
    cfg.scene_config = None;
    let pipeline = Pipeline::open(cfg).unwrap();
    match pipeline.run_stage("render") {
        Err(e @ PipelineError::Config { .. }) => {
            assert_eq!(e.exit_code(), 2);
            assert!(e.to_string().contains("scene_config"));
        }
        other => panic!("{other:?}"),
    }
    // localize before extract has no centerline to refine with
    let err = pipeline.run_stage("localize").unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    assert!(pipeline.run_stage("frobnicate").is_err());
}

#[test]
fn unknown_camera_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    common::small_bundle(dir.path());
    let mut cfg = PipelineConfig::load(&dir.path().join(PIPELINE_JSON)).unwrap();
    cfg.cameras = vec!["thermal".into()];
    match Pipeline::open(cfg) {
        Err(PipelineError::Config { field, .. }) => assert_eq!(field, "cameras"),
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn generated_bundle_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let out = common::small_bundle(dir.path());
    let bundle = load_sequence(dir.path()).unwrap();
    assert_eq!(bundle.len(), out.bundle.len());
    assert_eq!(bundle.poses(), out.bundle.poses());
    assert_eq!(bundle.load_cloud(3).unwrap(), out.bundle.load_cloud(3).unwrap());
}
