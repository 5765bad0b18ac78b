use nalgebra::Point3;

use super::{GeometryError, RigidTransform, SemanticClassMap};

/// Coordinate frame a cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CloudFrame {
    Lidar,
    Body,
    World,
}

impl CloudFrame {
    pub fn as_str(self) -> &'static str {
        match self {
            CloudFrame::Lidar => "lidar",
            CloudFrame::Body => "body",
            CloudFrame::World => "world",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lidar" => Some(CloudFrame::Lidar),
            "body" => Some(CloudFrame::Body),
            "world" => Some(CloudFrame::World),
            _ => None,
        }
    }
}

/// Points with per-point semantic labels (0 = unlabeled) and optional intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    points: Vec<Point3<f64>>,
    labels: Vec<u16>,
    intensity: Option<Vec<f32>>,
    frame: CloudFrame,
}

impl LabeledPointCloud {
    pub fn new(
        points: Vec<Point3<f64>>,
        labels: Vec<u16>,
        intensity: Option<Vec<f32>>,
        frame: CloudFrame,
    ) -> Result<Self, GeometryError> {
        if labels.len() != points.len() {
            return Err(GeometryError::LengthMismatch { expected: points.len(), got: labels.len() });
        }
        if let Some(i) = &intensity {
            if i.len() != points.len() {
                return Err(GeometryError::LengthMismatch { expected: points.len(), got: i.len() });
            }
        }
        if !points.iter().all(|p| p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { points, labels, intensity, frame })
    }

    /// Unlabeled cloud without intensities.
    pub fn from_points(points: Vec<Point3<f64>>, frame: CloudFrame) -> Result<Self, GeometryError> {
        let n = points.len();
        Self::new(points, vec![0; n], None, frame)
    }

    pub fn empty(frame: CloudFrame, with_intensity: bool) -> Self {
        Self {
            points: Vec::new(),
            labels: Vec::new(),
            intensity: with_intensity.then(Vec::new),
            frame,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }

    pub fn frame(&self) -> CloudFrame {
        self.frame
    }

    pub fn with_frame(mut self, frame: CloudFrame) -> Self {
        self.frame = frame;
        self
    }

    pub fn point(&self, i: usize) -> Point3<f64> {
        self.points[i]
    }

    /// Appends a point. `intensity` is ignored for clouds without intensities
    /// and treated as 0 when missing for clouds that carry them.
    pub fn push(&mut self, p: Point3<f64>, label: u16, intensity: Option<f32>) {
        self.points.push(p);
        self.labels.push(label);
        if let Some(i) = &mut self.intensity {
            i.push(intensity.unwrap_or(0.0));
        }
    }

    /// Concatenates `other`. Intensities survive only if both clouds carry them.
    pub fn extend(&mut self, other: &LabeledPointCloud) {
        self.points.extend_from_slice(&other.points);
        self.labels.extend_from_slice(&other.labels);
        match (&mut self.intensity, &other.intensity) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (Some(_), None) => self.intensity = None,
            _ => {}
        }
    }

    /// Copy with the selected indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> LabeledPointCloud {
        LabeledPointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            intensity: self.intensity.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect()),
            frame: self.frame,
        }
    }

    /// Indices of points carrying `label`.
    pub fn indices_with_label(&self, label: u16) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == label).then_some(i))
            .collect()
    }

    pub fn transformed(&self, t: &RigidTransform) -> LabeledPointCloud {
        LabeledPointCloud {
            points: self.points.iter().map(|p| t.apply(p)).collect(),
            labels: self.labels.clone(),
            intensity: self.intensity.clone(),
            frame: self.frame,
        }
    }

    pub fn validate_labels(&self, classes: &SemanticClassMap) -> Result<(), GeometryError> {
        match self.labels.iter().find(|&&l| !classes.contains_id(l)) {
            Some(&l) => Err(GeometryError::UnknownLabel(l)),
            None => Ok(()),
        }
    }

    pub(crate) fn from_parts_unchecked(
        points: Vec<Point3<f64>>,
        labels: Vec<u16>,
        intensity: Option<Vec<f32>>,
        frame: CloudFrame,
    ) -> Self {
        debug_assert_eq!(points.len(), labels.len());
        Self { points, labels, intensity, frame }
    }
}

/// Maps every point through `t`; labels, intensities and frame tag are kept.
pub fn transform_cloud(t: &RigidTransform, cloud: &LabeledPointCloud) -> LabeledPointCloud {
    cloud.transformed(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sample() -> LabeledPointCloud {
        LabeledPointCloud::new(
            vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-4.0, 0.5, 9.0)],
            vec![1, 4],
            Some(vec![0.25, 0.75]),
            CloudFrame::Lidar,
        )
        .unwrap()
    }

    #[test]
    fn identity_is_noop() {
        let c = sample();
        assert_eq!(transform_cloud(&RigidTransform::identity(), &c), c);
    }

    #[test]
    fn translation_moves_points() {
        let c = sample();
        let t = transform_cloud(&RigidTransform::from_translation(0.0, 0.0, 1.0), &c);
        assert_eq!(t.point(0), Point3::new(1.0, 2.0, 4.0));
        assert_eq!(t.labels(), c.labels());
        assert_eq!(t.intensity(), c.intensity());
        assert_eq!(c.point(0), Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn round_trip_through_inverse() {
        let c = sample();
        let t = RigidTransform::from_euler(0.4, -0.1, 2.2, Vector3::new(5.0, -3.0, 1.0));
        let back = transform_cloud(&t.inverse(), &transform_cloud(&t, &c));
        for (a, b) in back.points().iter().zip(c.points()) {
            assert!((a - b).amax() < 1e-9);
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(LabeledPointCloud::new(vec![Point3::origin()], vec![], None, CloudFrame::World).is_err());
        assert!(LabeledPointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)], vec![0], None, CloudFrame::World).is_err());
    }

    #[test]
    fn extend_drops_intensity_when_partner_lacks_it() {
        let mut a = sample();
        let b = LabeledPointCloud::from_points(vec![Point3::origin()], CloudFrame::Lidar).unwrap();
        a.extend(&b);
        assert_eq!(a.len(), 3);
        assert!(a.intensity().is_none());
    }
}
