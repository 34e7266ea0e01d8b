//! Rotation representations and the conversions between them.
//!
//! Conventions used throughout the crate:
//!
//! * Euler angles are extrinsic fixed-axis roll-pitch-yaw, i.e. the rotation
//!   matrix is `Rz(yaw) * Ry(pitch) * Rx(roll)`.
//! * Quaternions store the scalar part first, `(q0, q1, q2, q3)`.
//! * The quaternion logarithm uses the half-angle convention: the log of a
//!   rotation by `theta` about `u` is `(theta / 2) * u`. As a consequence the
//!   displacement distance between the identity and a rotation by `theta` is
//!   `(theta / 2)^2`, bounded above by `(pi / 2)^2`.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Quaternions whose norm is within this distance of one are renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// `|sin(pitch)|` above this threshold is treated as gimbal lock.
const GIMBAL_LOCK_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("non-finite rotation component")]
    NonFinite,
    #[error("quaternion norm {0} deviates from 1 by more than {RENORMALIZE_TOLERANCE}")]
    NotUnitQuaternion(f64),
    #[error("rotation axis norm {0} deviates from 1 by more than {RENORMALIZE_TOLERANCE}")]
    NotUnitAxis(f64),
}

/// Roll, pitch and yaw in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.roll, self.pitch, self.yaw]
    }

    pub fn to_quaternion(self) -> Result<UnitQuaternion, RotationError> {
        euler_to_quat(self)
    }
}

/// A rotation as a unit axis and an angle in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    axis: Vector3<f64>,
    angle: f64,
}

impl AxisAngle {
    /// Builds an axis-angle pair. The axis is renormalized if its norm is
    /// within [`RENORMALIZE_TOLERANCE`] of one and rejected otherwise.
    pub fn new(axis: Vector3<f64>, angle: f64) -> Result<Self, RotationError> {
        if !angle.is_finite() || axis.iter().any(|v| !v.is_finite()) {
            return Err(RotationError::NonFinite);
        }
        let norm = axis.norm();
        if (norm - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(RotationError::NotUnitAxis(norm));
        }
        Ok(Self {
            axis: axis / norm,
            angle,
        })
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// `[ux, uy, uz, theta]`, the layout used by the axis-angle spaces.
    pub fn to_array(self) -> [f64; 4] {
        [self.axis.x, self.axis.y, self.axis.z, self.angle]
    }

    pub fn to_quaternion(self) -> UnitQuaternion {
        let (s, c) = (0.5 * self.angle).sin_cos();
        UnitQuaternion::from_parts_unchecked(c, self.axis.x * s, self.axis.y * s, self.axis.z * s)
    }
}

/// Unit quaternion `(q0, q1, q2, q3)` with `q0` the scalar part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    q: [f64; 4],
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self {
        q: [1.0, 0.0, 0.0, 0.0],
    };

    /// Builds a unit quaternion, renormalizing drift up to
    /// [`RENORMALIZE_TOLERANCE`].
    pub fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self, RotationError> {
        let q = [q0, q1, q2, q3];
        if q.iter().any(|v| !v.is_finite()) {
            return Err(RotationError::NonFinite);
        }
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(RotationError::NotUnitQuaternion(norm));
        }
        Ok(Self { q: q.map(|v| v / norm) })
    }

    pub fn from_array(q: [f64; 4]) -> Result<Self, RotationError> {
        Self::new(q[0], q[1], q[2], q[3])
    }

    /// Normalizes an arbitrary nonzero 4-vector.
    pub fn normalize(q0: f64, q1: f64, q2: f64, q3: f64) -> Result<Self, RotationError> {
        let q = [q0, q1, q2, q3];
        if q.iter().any(|v| !v.is_finite()) {
            return Err(RotationError::NonFinite);
        }
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(RotationError::NotUnitQuaternion(0.0));
        }
        Ok(Self { q: q.map(|v| v / norm) })
    }

    // Callers guarantee unit norm up to rounding.
    pub(crate) fn from_parts_unchecked(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Self { q: [q0, q1, q2, q3] }
    }

    pub fn q0(&self) -> f64 {
        self.q[0]
    }
    pub fn q1(&self) -> f64 {
        self.q[1]
    }
    pub fn q2(&self) -> f64 {
        self.q[2]
    }
    pub fn q3(&self) -> f64 {
        self.q[3]
    }

    pub fn to_array(self) -> [f64; 4] {
        self.q
    }

    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.q[1], self.q[2], self.q[3])
    }

    /// Rotation about a unit axis; the axis is not checked.
    pub fn from_unit_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::from_parts_unchecked(c, axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn conjugate(&self) -> Self {
        Self::from_parts_unchecked(self.q[0], -self.q[1], -self.q[2], -self.q[3])
    }

    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.q.iter().zip(other.q.iter()).map(|(a, b)| a * b).sum()
    }

    /// The representative with a nonnegative scalar part.
    pub fn canonical(&self) -> Self {
        if self.q[0] < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        // v' = v + 2 w (u x v) + 2 u x (u x v)
        let u = self.vector_part();
        let t = 2.0 * u.cross(v);
        v + self.q[0] * t + u.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let [w, x, y, z] = self.q;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Converts a proper rotation matrix using Shepperd's method.
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Result<Self, RotationError> {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > m[(0, 0)].max(m[(1, 1)]).max(m[(2, 2)]) {
            let s = (1.0 + trace).sqrt() * 2.0;
            [
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            ]
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            [
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            ]
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            [
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            ]
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            [
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            ]
        };
        Self::normalize(q[0], q[1], q[2], q[3])
    }

    pub fn to_euler(&self) -> EulerAngles {
        quat_to_euler(self)
    }

    pub fn to_axis_angle(&self) -> AxisAngle {
        quat_to_axis_angle(self)
    }

    pub fn log(&self) -> Vector3<f64> {
        quat_log(self)
    }

    /// Rotation angle of `self^-1 * other` in `[0, pi]`, ignoring sign.
    pub fn geodesic_angle(&self, other: &Self) -> f64 {
        let rel = self.inverse() * *other;
        2.0 * rel.vector_part().norm().atan2(rel.q[0].abs())
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, rhs: Self) -> Self {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = rhs.q;
        Self::from_parts_unchecked(
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        )
    }
}

impl Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> Self {
        Self { q: self.q.map(|v| -v) }
    }
}

/// Quaternion of `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn euler_to_quat(e: EulerAngles) -> Result<UnitQuaternion, RotationError> {
    if !(e.roll.is_finite() && e.pitch.is_finite() && e.yaw.is_finite()) {
        return Err(RotationError::NonFinite);
    }
    let (sr, cr) = (0.5 * e.roll).sin_cos();
    let (sp, cp) = (0.5 * e.pitch).sin_cos();
    let (sy, cy) = (0.5 * e.yaw).sin_cos();
    Ok(UnitQuaternion::from_parts_unchecked(
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    ))
}

/// Canonical roll, pitch, yaw with roll and yaw in `(-pi, pi]` and pitch in
/// `[-pi/2, pi/2]`. At gimbal lock the roll is set to zero and the free
/// angle is carried by the yaw.
pub fn quat_to_euler(q: &UnitQuaternion) -> EulerAngles {
    let [w, x, y, z] = q.q;
    let sin_pitch = (2.0 * (w * y - x * z)).clamp(-1.0, 1.0);
    let r21 = 2.0 * (y * z + w * x);
    let r22 = 1.0 - 2.0 * (x * x + y * y);
    let mut e = if sin_pitch.abs() > GIMBAL_LOCK_THRESHOLD {
        let r01 = 2.0 * (x * y - w * z);
        let r11 = 1.0 - 2.0 * (x * x + z * z);
        EulerAngles::new(0.0, FRAC_PI_2.copysign(sin_pitch), (-r01).atan2(r11))
    } else {
        let r10 = 2.0 * (x * y + w * z);
        let r00 = 1.0 - 2.0 * (y * y + z * z);
        EulerAngles::new(r21.atan2(r22), sin_pitch.atan2(r21.hypot(r22)), r10.atan2(r00))
    };
    e.roll = wrap_half_open(e.roll);
    e.yaw = wrap_half_open(e.yaw);
    e
}

// atan2 returns [-pi, pi]; fold -pi onto pi.
fn wrap_half_open(angle: f64) -> f64 {
    if angle <= -std::f64::consts::PI {
        angle + 2.0 * std::f64::consts::PI
    } else {
        angle
    }
}

/// Canonical axis-angle with `theta` in `[0, pi]`. The identity maps to the
/// axis `[0, 0, 1]`.
pub fn quat_to_axis_angle(q: &UnitQuaternion) -> AxisAngle {
    let q = q.canonical();
    let v = q.vector_part();
    let norm = v.norm();
    let angle = 2.0 * norm.atan2(q.q[0]);
    let axis = if norm > 0.0 { v / norm } else { Vector3::z() };
    AxisAngle { axis, angle }
}

/// Half-angle quaternion logarithm `(theta / 2) * u` of the canonical
/// representative.
pub fn quat_log(q: &UnitQuaternion) -> Vector3<f64> {
    let q = q.canonical();
    let v = q.vector_part();
    let norm = v.norm();
    if norm > 0.0 {
        v * (norm.atan2(q.q[0]) / norm)
    } else {
        Vector3::zeros()
    }
}

/// `min(|ln(r1^-1 r2)|^2, |ln(r1^-1 (-r2))|^2)`.
pub fn quat_displacement_distance(r1: &UnitQuaternion, r2: &UnitQuaternion) -> f64 {
    let inv = r1.inverse();
    let direct = quat_log(&(inv * *r2)).norm_squared();
    let flipped = quat_log(&(inv * -*r2)).norm_squared();
    direct.min(flipped)
}
