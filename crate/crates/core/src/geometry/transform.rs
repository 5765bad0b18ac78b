use std::ops::Mul;

use nalgebra::{Matrix3, Point3, Rotation3, UnitQuaternion, Vector3};

use super::GeometryError;

/// Entry-wise tolerance on `R·Rᵀ = I` accepted without re-orthonormalization.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// A proper rigid motion `p ↦ R·p + t`.
///
/// The rotation is stored as an orthonormal matrix with determinant +1. Every
/// constructor either checks this or produces it by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from a rotation matrix that must already be
    /// orthonormal within [`ORTHONORMAL_TOL`].
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let err = orthonormality_error(&rotation);
        if err > ORTHONORMAL_TOL || rotation.determinant() <= 0.0 {
            return Err(GeometryError::NotOrthonormal { max_error: err });
        }
        Ok(Self { rotation, translation })
    }

    /// For rotations produced by SVD or composition, already on SO(3).
    pub(crate) fn new_unchecked(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Accepts a nearly orthonormal matrix (within `tol`) and projects it
    /// onto SO(3) when it is off by more than [`ORTHONORMAL_TOL`].
    pub fn new_reorthonormalized(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        tol: f64,
    ) -> Result<Self, GeometryError> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let err = orthonormality_error(&rotation);
        if err > tol || rotation.determinant() <= 0.0 {
            return Err(GeometryError::NotOrthonormal { max_error: err });
        }
        let rotation = if err > ORTHONORMAL_TOL {
            nearest_rotation(&rotation)
        } else {
            rotation
        };
        Ok(Self { rotation, translation })
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    /// Rotation `Rz(yaw)·Ry(pitch)·Rx(roll)` followed by `translation`.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64, translation: Vector3<f64>) -> Self {
        Self {
            rotation: *Rotation3::from_euler_angles(roll, pitch, yaw).matrix(),
            translation,
        }
    }

    pub fn from_yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        Self::from_euler(0.0, 0.0, yaw, translation)
    }

    /// Quaternion input in `(w, x, y, z)` order. The quaternion is normalized
    /// and the resulting matrix re-orthonormalized.
    pub fn from_quaternion(wxyz: [f64; 4], translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let [w, x, y, z] = wxyz;
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(GeometryError::NonFinite);
        }
        let q = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(w, x, y, z));
        let rotation = nearest_rotation(q.to_rotation_matrix().matrix());
        Self::new_reorthonormalized(rotation, translation, 1e-6)
    }

    pub fn from_row_major(r: &[f64; 9], t: &[f64; 3]) -> Result<Self, GeometryError> {
        Self::new(Matrix3::from_row_slice(r), Vector3::from_column_slice(t))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_row_major(&self) -> [f64; 9] {
        let r = &self.rotation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
        ]
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    /// `(roll, pitch, yaw)` of the ZYX decomposition.
    pub fn euler_angles(&self) -> (f64, f64, f64) {
        Rotation3::from_matrix_unchecked(self.rotation).euler_angles()
    }

    pub fn yaw(&self) -> f64 {
        self.euler_angles().2
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn with_translation(mut self, translation: Vector3<f64>) -> Self {
        self.translation = translation;
        self
    }

    /// Rotation angle of the relative rotation, radians.
    pub fn rotation_angle(&self) -> f64 {
        let r = &self.rotation;
        let s = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]).norm();
        s.atan2(r.trace() - 1.0)
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a RigidTransform> for &'a RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// Maximum absolute entry of `R·Rᵀ − I`.
pub fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
    (r * r.transpose() - Matrix3::identity())
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Closest rotation in the Frobenius sense (`U·Vᵀ` with a determinant fix).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}
