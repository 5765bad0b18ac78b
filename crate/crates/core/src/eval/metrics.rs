use serde::{Deserialize, Serialize};

use super::EvalError;

/// Euclidean pixel distance between the annotated and projected feature.
pub fn compute_rpe(gt: [f64; 2], p: [f64; 2]) -> f64 {
    (gt[0] - p[0]).hypot(gt[1] - p[1])
}

/// `|rpe[i+1] − rpe[i]|` for consecutive entries.
pub fn compute_jitter(rpe: &[f64]) -> Result<Vec<f64>, EvalError> {
    if rpe.len() < 2 {
        return Err(EvalError::TooShort { len: rpe.len() });
    }
    Ok(rpe.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// Mean and population standard deviation; `(0, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sequence: String,
    pub camera: String,
    pub source: String,
    /// Annotated frames, ascending.
    pub frames: Vec<usize>,
    pub rpe: Vec<f64>,
    pub jitter: Vec<f64>,
    /// `GT_i − p_i` per annotated frame, pixels.
    pub offsets: Vec<[f64; 2]>,
    pub projections: Vec<[f64; 2]>,
    pub mean_rpe: f64,
    pub std_rpe: f64,
    pub mean_jitter: f64,
    pub std_jitter: f64,
}

impl MetricsReport {
    pub fn from_projections(
        sequence: &str,
        camera: &str,
        source: &str,
        frames: Vec<usize>,
        gt: &[[f64; 2]],
        projections: Vec<[f64; 2]>,
    ) -> Result<Self, EvalError> {
        let rpe: Vec<f64> = gt.iter().zip(&projections).map(|(g, p)| compute_rpe(*g, *p)).collect();
        let jitter = compute_jitter(&rpe)?;
        let offsets = gt.iter().zip(&projections).map(|(g, p)| [g[0] - p[0], g[1] - p[1]]).collect();
        let (mean_rpe, std_rpe) = mean_std(&rpe);
        let (mean_jitter, std_jitter) = mean_std(&jitter);
        Ok(Self {
            sequence: sequence.to_string(),
            camera: camera.to_string(),
            source: source.to_string(),
            frames,
            rpe,
            jitter,
            offsets,
            projections,
            mean_rpe,
            std_rpe,
            mean_jitter,
            std_jitter,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.rpe.len()
    }

    pub fn offset_at(&self, frame: usize) -> Option<(f64, f64)> {
        self.frames.binary_search(&frame).ok().map(|k| (self.offsets[k][0], self.offsets[k][1]))
    }

    /// Recomputes the aggregates from the per-frame arrays and returns the
    /// largest absolute difference to the stored ones.
    pub fn aggregate_discrepancy(&self) -> f64 {
        let (mr, sr) = mean_std(&self.rpe);
        let (mj, sj) = mean_std(&self.jitter);
        [mr - self.mean_rpe, sr - self.std_rpe, mj - self.mean_jitter, sj - self.std_jitter]
            .iter()
            .fold(0.0_f64, |m, d| m.max(d.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_values() {
        assert_eq!(compute_rpe([0.0, 0.0], [3.0, 4.0]), 5.0);
        assert_eq!(compute_rpe([1.0, 1.0], [1.0, 1.0]), 0.0);
        assert_eq!(compute_rpe([10.0, 10.0], [10.0, 11.0]), 1.0);
        assert_eq!(compute_jitter(&[2.0, 2.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(compute_jitter(&[1.0, 4.0, 2.0]).unwrap(), vec![3.0, 2.0]);
        assert!(matches!(compute_jitter(&[1.0]), Err(EvalError::TooShort { len: 1 })));
    }

    #[test]
    fn constant_bias() {
        let gt: Vec<[f64; 2]> = (0..5).map(|i| [100.0 + i as f64, 50.0]).collect();
        let p: Vec<[f64; 2]> = gt.iter().map(|g| [g[0] + 3.0, g[1] + 4.0]).collect();
        let r = MetricsReport::from_projections("s", "c", "raw_gnss", (0..5).collect(), &gt, p).unwrap();
        assert_eq!((r.mean_rpe, r.std_rpe, r.mean_jitter, r.std_jitter), (5.0, 0.0, 0.0, 0.0));
        assert_eq!(r.offset_at(2), Some((-3.0, -4.0)));
        assert_eq!(r.offset_at(7), None);
    }

    proptest! {
        #[test]
        fn rpe_symmetric(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3, d in -1e3f64..1e3) {
            prop_assert_eq!(compute_rpe([a, b], [c, d]), compute_rpe([c, d], [a, b]));
        }

        #[test]
        fn aggregates_recomputable(pts in proptest::collection::vec((0.0f64..640.0, 0.0f64..480.0), 2..50)) {
            let gt: Vec<[f64; 2]> = pts.iter().map(|&(u, v)| [u, v]).collect();
            let p: Vec<[f64; 2]> = pts.iter().map(|&(u, v)| [v * 0.5, u * 0.7]).collect();
            let r = MetricsReport::from_projections("s", "c", "x", (0..gt.len()).collect(), &gt, p).unwrap();
            prop_assert!(r.aggregate_discrepancy() <= 1e-12);
            prop_assert_eq!(r.jitter.len(), r.rpe.len() - 1);
            prop_assert!(r.rpe.iter().chain(&r.jitter).all(|v| *v >= 0.0));
        }
    }
}
