mod common;

use std::fs;
use std::path::Path;

use railar::synth::{verify_against_truth, GroundTruth, TRUTH_JSON};

fn files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generation_is_reproducible_across_pool_sizes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    railar::pipeline::with_workers(Some(1), || common::small_bundle(a.path()));
    railar::pipeline::with_workers(Some(3), || common::small_bundle(b.path()));
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(!fa.is_empty());
    let names = |f: &[(String, Vec<u8>)]| f.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    assert_eq!(names(&fa), names(&fb));
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn truth_round_trips_and_scores_itself_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = common::small_bundle(dir.path());
    let truth = GroundTruth::load(&dir.path().join(TRUTH_JSON)).unwrap();
    assert_eq!(truth, out.truth);
    let report = verify_against_truth(&truth, Some(&truth.centerline(0.5)), Some(&truth.poses)).unwrap();
    let poses = report.poses.unwrap();
    assert!(poses.max_lateral < 1e-9 && poses.mean_position < 1e-9);
    assert!(report.centerline.unwrap().max_lateral < 1e-9);
}

#[test]
fn raw_poses_drift_laterally_within_the_configured_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = common::small_bundle(dir.path());
    let noise = &out.truth.scenario.gnss_noise;
    let report = verify_against_truth(&out.truth, None, Some(&out.bundle.poses())).unwrap().poses.unwrap();
    assert!(report.mean_lateral > 0.05);
    assert!(report.max_lateral < noise.lateral_drift_amp + 5.0 * noise.white_sigma);
}
