use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::ingest::write_json;

use super::{EvalError, MetricsReport};

#[derive(Serialize)]
struct Row<'a> {
    sequence: &'a str,
    camera: &'a str,
    source: &'a str,
    mean_rpe: String,
    std_rpe: String,
    mean_jitter: String,
    std_jitter: String,
    n_frames: usize,
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io { path: path.to_path_buf(), source }
}

/// `metrics.csv`: one row per (camera, source), two decimals.
pub fn write_report(reports: &[MetricsReport], path: &Path) -> Result<(), EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyReports);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(Row {
            sequence: &r.sequence,
            camera: &r.camera,
            source: &r.source,
            mean_rpe: format!("{:.2}", r.mean_rpe),
            std_rpe: format!("{:.2}", r.std_rpe),
            mean_jitter: format!("{:.2}", r.mean_jitter),
            std_jitter: format!("{:.2}", r.std_jitter),
            n_frames: r.n_frames(),
        })
        .map_err(|e| EvalError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io(path))?;
    }
    std::fs::write(path, bytes).map_err(io(path))
}

/// Table-style text: `RPE 81.3 ± 50.1` and `J 7.25 ± 3.10` per row.
pub fn summary_table(reports: &[MetricsReport]) -> String {
    let mut s = String::from("camera\tsource\tRPE [px]\tJ [px]\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{}\t{}\t{:.1} ± {:.1}\t{:.2} ± {:.2}",
            r.camera, r.source, r.mean_rpe, r.std_rpe, r.mean_jitter, r.std_jitter
        );
    }
    s
}

pub fn write_summary(reports: &[MetricsReport], path: &Path) -> Result<(), EvalError> {
    std::fs::write(path, summary_table(reports)).map_err(io(path))
}

/// `metrics.json` with the full per-frame arrays.
pub fn write_metrics_json(reports: &[MetricsReport], path: &Path) -> Result<(), EvalError> {
    Ok(write_json(path, &reports)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(source: &str, camera: &str) -> MetricsReport {
        let gt = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]];
        let p = vec![[81.3, 0.0], [10.0, 0.0], [152.6049, 0.0]];
        MetricsReport::from_projections("seq", camera, source, vec![0, 1, 2], &gt, p).unwrap()
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rs: Vec<_> = ["raw_gnss", "icp_odometry", "segmentation_refined"]
            .iter()
            .flat_map(|s| [report(s, "a"), report(s, "b")])
            .collect();
        let path = dir.path().join("metrics.csv");
        write_report(&rs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "sequence,camera,source,mean_rpe,std_rpe,mean_jitter,std_jitter,n_frames");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines.iter().filter(|l| l.contains(",a,")).count(), 3);
        assert!(lines[1].starts_with("seq,a,raw_gnss,81.30,"));
        assert!(matches!(write_report(&[], &path), Err(EvalError::EmptyReports)));
    }

    #[test]
    fn summary_layout() {
        let r = report("raw_gnss", "a");
        let t = summary_table(&[r.clone()]);
        assert!(t.contains(&format!("{:.1} ± {:.1}", r.mean_rpe, r.std_rpe)));
        let mut fixed = r;
        fixed.mean_rpe = 81.3;
        fixed.std_rpe = 50.1;
        assert!(summary_table(&[fixed]).contains("81.3 ± 50.1"));
    }
}
