mod common;

use std::fs;

use railar::ingest::{load_sequence, IngestError, MANIFEST};
use serde_json::Value;

fn edit_manifest(root: &std::path::Path, f: impl FnOnce(&mut Value)) {
    let path = root.join(MANIFEST);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut v);
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn field_of(e: IngestError) -> String {
    match e {
        IngestError::SchemaViolation { field, .. } => field,
        other => panic!("expected a schema violation, got {other}"),
    }
}

#[test]
fn manifest_violations_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    common::small_bundle(dir.path());
    let pristine = fs::read(dir.path().join(MANIFEST)).unwrap();
    let reset = || fs::write(dir.path().join(MANIFEST), &pristine).unwrap();

    edit_manifest(dir.path(), |v| v["frames"][2]["pose"]["R"][0] = Value::from(2.0));
    assert!(field_of(load_sequence(dir.path()).unwrap_err()).starts_with("frames[2]"));
    reset();

    edit_manifest(dir.path(), |v| v["cameras"]["rgb_center"]["fx"] = Value::from(-1.0));
    assert!(field_of(load_sequence(dir.path()).unwrap_err()).contains("rgb_center"));
    reset();

    edit_manifest(dir.path(), |v| v["frames"][5]["timestamp"] = Value::from(0.0));
    assert!(matches!(load_sequence(dir.path()).unwrap_err(), IngestError::NonMonotoneTimestamps { index: 5, .. }));
    reset();

    fs::remove_file(dir.path().join("clouds/000007.ply")).unwrap();
    assert!(matches!(load_sequence(dir.path()).unwrap_err(), IngestError::MissingFile { .. }));
}
