//! AR quality metrics: calibration point selection, per-frame reprojection
//! error and jitter, and report files.

mod calibration;
mod metrics;
mod report;

pub use calibration::{
    evaluate_sequence, mask_centroid, rendered_sphere_centroid, select_calibration_point, CalibrationPoint, SelectionMode,
};
pub use metrics::{compute_jitter, compute_rpe, mean_std, MetricsReport};
pub use report::{summary_table, write_metrics_json, write_report, write_summary};

use std::path::PathBuf;

use crate::ingest::IngestError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no annotation at frame {0}")]
    NoAnnotationAtFrame(usize),
    #[error("no cloud point projects into the reference frame")]
    NoVisiblePoints,
    #[error("jitter needs at least 2 values, got {len}")]
    TooShort { len: usize },
    #[error("{found} annotated frames, need {required}")]
    TooFewAnnotations { found: usize, required: usize },
    #[error("calibration point is behind the camera in frame {frame}")]
    CalibrationPointNotVisible { frame: usize },
    #[error("no reports to write")]
    EmptyReports,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
