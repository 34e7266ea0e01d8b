//! Objective functions for the dual-arm and look-at solvers.
//!
//! Position terms (m^2) and rotation terms (rad^2, half-angle log) are summed
//! without weights.

use nalgebra::Vector3;

use super::{DualArmTarget, IkError, LookAtParams, LookAtTarget};
use crate::kinematics::{forward_kinematics_raw, view_frame, DualArmPose, Pose};
use crate::robot_model::{JointConfig, RobotModel};
use crate::rotations::{quat_displacement_distance, UnitQuaternion};

/// `|p - p*|^2 + d(R, R*)`.
pub fn single_arm_objective(pose: &Pose, position: &Vector3<f64>, orientation: &UnitQuaternion) -> f64 {
    (pose.position - position).norm_squared() + quat_displacement_distance(&pose.orientation, orientation)
}

/// Sum of the manipulation and viewpoint single-arm objectives at `FK(c)`.
pub fn dual_arm_objective(model: &RobotModel, c: &JointConfig, target: &DualArmTarget) -> f64 {
    dual_arm_objective_raw(model, c.values(), target)
}

pub(crate) fn dual_arm_objective_raw(model: &RobotModel, values: &[f64], target: &DualArmTarget) -> f64 {
    let fk = forward_kinematics_raw(model, values);
    single_arm_objective(
        &fk.manipulation,
        &target.manipulation_position,
        &target.manipulation_orientation,
    ) + single_arm_objective(&fk.viewpoint, &target.viewpoint_position, &target.viewpoint_orientation)
}

/// `t * u` with `t = clamp((v . u) / (u . u), 0, 1)`.
pub fn clamped_projection(v: &Vector3<f64>, u: &Vector3<f64>) -> Result<Vector3<f64>, IkError> {
    let uu = u.norm_squared();
    if uu == 0.0 {
        return Err(IkError::ZeroVector);
    }
    Ok(clamped_projection_unchecked(v, u, uu))
}

fn clamped_projection_unchecked(v: &Vector3<f64>, u: &Vector3<f64>, uu: f64) -> Vector3<f64> {
    let t = (v.dot(u) / uu).clamp(0.0, 1.0);
    u * t
}

/// Closest point to `p_t` on the segment from `p_v` to `p_f`.
pub fn line_segment_projection(
    p_t: &Vector3<f64>,
    p_v: &Vector3<f64>,
    p_f: &Vector3<f64>,
) -> Result<Vector3<f64>, IkError> {
    clamped_projection(&(p_t - p_v), &(p_f - p_v))
        .map(|proj| proj + p_v)
        .map_err(|_| IkError::DegenerateSegment)
}

/// Squared distance from the visual target to the viewing segment.
pub fn viewpoint_orientation_loss(p_t: &Vector3<f64>, p_v: &Vector3<f64>, p_f: &Vector3<f64>) -> Result<f64, IkError> {
    Ok((line_segment_projection(p_t, p_v, p_f)? - p_t).norm_squared())
}

/// `(w_y . z)^2`.
pub fn viewpoint_stability_loss(w_y: &Vector3<f64>) -> f64 {
    w_y.z * w_y.z
}

/// The four additive terms of the look-at objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookAtTerms {
    /// Manipulation single-arm objective.
    pub manipulation: f64,
    /// `|p_v - p_v*|^2`.
    pub viewpoint_position: f64,
    pub viewpoint_orientation: f64,
    pub viewpoint_stability: f64,
}

impl LookAtTerms {
    pub fn total(&self) -> f64 {
        self.manipulation + self.viewpoint_position + self.viewpoint_orientation + self.viewpoint_stability
    }
}

/// Visual target `p_t` and far point `p_f` for a given FK result.
pub fn lookat_geometry(fk: &DualArmPose, params: &LookAtParams) -> (Vector3<f64>, Vector3<f64>) {
    let frame = view_frame(&fk.viewpoint);
    let p_t = fk.manipulation.position + params.target_offset;
    let p_f = fk.viewpoint.position + frame.w_z * params.delta;
    (p_t, p_f)
}

pub fn lookat_terms(model: &RobotModel, c: &JointConfig, target: &LookAtTarget, params: &LookAtParams) -> LookAtTerms {
    lookat_terms_raw(model, c.values(), target, params)
}

pub(crate) fn lookat_terms_raw(
    model: &RobotModel,
    values: &[f64],
    target: &LookAtTarget,
    params: &LookAtParams,
) -> LookAtTerms {
    let fk = forward_kinematics_raw(model, values);
    let frame = view_frame(&fk.viewpoint);
    let (p_t, p_f) = lookat_geometry(&fk, params);
    let p_v = fk.viewpoint.position;
    // delta > 0 and |w_z| = 1 keep the segment non-degenerate.
    let axis = p_f - p_v;
    let proj = clamped_projection_unchecked(&(p_t - p_v), &axis, axis.norm_squared()) + p_v;
    LookAtTerms {
        manipulation: single_arm_objective(
            &fk.manipulation,
            &target.manipulation_position,
            &target.manipulation_orientation,
        ),
        viewpoint_position: (p_v - target.viewpoint_position).norm_squared(),
        viewpoint_orientation: (proj - p_t).norm_squared(),
        viewpoint_stability: viewpoint_stability_loss(&frame.w_y),
    }
}

/// `J_manip + |p_v - p_v*|^2 + J_orientation + J_stability`.
pub fn lookat_objective(model: &RobotModel, c: &JointConfig, target: &LookAtTarget, params: &LookAtParams) -> f64 {
    lookat_terms(model, c, target, params).total()
}
