use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::ingest::{read_json, schema, write_json, IngestError, TransformJson};

/// Which localization strategy produced a pose sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseSource {
    RawGnss,
    IcpOdometry,
    SegmentationRefined,
}

impl PoseSource {
    pub const ALL: [PoseSource; 3] = [PoseSource::RawGnss, PoseSource::IcpOdometry, PoseSource::SegmentationRefined];

    pub fn as_str(self) -> &'static str {
        match self {
            PoseSource::RawGnss => "raw_gnss",
            PoseSource::IcpOdometry => "icp_odometry",
            PoseSource::SegmentationRefined => "segmentation_refined",
        }
    }
}

impl fmt::Display for PoseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PoseSource {
    type Err = String;

    /// Accepts the canonical names and the short CLI aliases `icp` and `refined`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw_gnss" | "raw" | "gnss" => Ok(PoseSource::RawGnss),
            "icp_odometry" | "icp" => Ok(PoseSource::IcpOdometry),
            "segmentation_refined" | "refined" => Ok(PoseSource::SegmentationRefined),
            _ => Err(format!("unknown pose source `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    pub source: PoseSource,
    pub poses: Vec<Pose>,
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    timestamp: f64,
    #[serde(flatten)]
    transform: TransformJson,
}

#[derive(Serialize, Deserialize)]
struct SequenceJson {
    source: PoseSource,
    poses: Vec<PoseJson>,
}

impl PoseSequence {
    pub fn new(source: PoseSource, poses: Vec<Pose>) -> Self {
        Self { source, poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn timestamps_increasing(&self) -> bool {
        self.poses.windows(2).all(|w| w[1].timestamp > w[0].timestamp)
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let doc = SequenceJson {
            source: self.source,
            poses: self
                .poses
                .iter()
                .map(|p| PoseJson { timestamp: p.timestamp, transform: TransformJson::from_transform(&p.transform) })
                .collect(),
        };
        write_json(path, &doc)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let doc: SequenceJson = read_json(path)?;
        let mut poses = Vec::with_capacity(doc.poses.len());
        for (i, p) in doc.poses.into_iter().enumerate() {
            let t = p.transform.to_transform().map_err(|e| schema(path, format!("poses[{i}]"), e))?;
            if let Some(prev) = poses.last().map(|q: &Pose| q.timestamp) {
                if !(p.timestamp > prev) {
                    return Err(IngestError::NonMonotoneTimestamps {
                        path: path.to_path_buf(),
                        index: i,
                        previous: prev,
                        current: p.timestamp,
                    });
                }
            }
            poses.push(Pose::new(p.timestamp, t));
        }
        Ok(Self { source: doc.source, poses })
    }
}
