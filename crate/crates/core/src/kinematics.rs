//! Forward kinematics of the manipulation and viewpoint chains.
//!
//! Each joint contributes its origin transform followed by its motion
//! (rotation about the axis for revolute joints, translation along it for
//! prismatic ones), composed from the base outwards. Everything is computed
//! with quaternions.

use nalgebra::Vector3;

use crate::par::{self, Execution};
use crate::robot_model::{JointConfig, JointKind, RobotModel, Transform};
use crate::rotations::UnitQuaternion;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub const IDENTITY: Self = Self {
        position: Vector3::new(0.0, 0.0, 0.0),
        orientation: UnitQuaternion::IDENTITY,
    };

    fn then(&self, t: &Transform) -> Self {
        Self {
            position: self.position + self.orientation.rotate(&t.translation),
            orientation: self.orientation * t.rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualArmPose {
    pub manipulation: Pose,
    pub viewpoint: Pose,
}

/// World-frame local y and z axes of the viewpoint end-effector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewFrame {
    pub w_y: Vector3<f64>,
    pub w_z: Vector3<f64>,
}

/// End-effector poses of both chains.
pub fn forward_kinematics(model: &RobotModel, c: &JointConfig) -> DualArmPose {
    forward_kinematics_raw(model, c.values())
}

/// FK over unchecked joint values. Used by the optimizers, which probe
/// inside the joint box.
pub(crate) fn forward_kinematics_raw(model: &RobotModel, values: &[f64]) -> DualArmPose {
    DualArmPose {
        manipulation: chain_pose(
            model,
            model.manipulation_chain(),
            model.manipulation_ee_offset(),
            values,
        ),
        viewpoint: chain_pose(model, model.viewpoint_chain(), model.viewpoint_ee_offset(), values),
    }
}

fn chain_pose(model: &RobotModel, chain: &[usize], ee: &Transform, values: &[f64]) -> Pose {
    let joints = model.joints();
    let mut pose = Pose::IDENTITY;
    for &i in chain {
        let j = &joints[i];
        pose.position += pose.orientation.rotate(&j.origin_translation);
        pose.orientation = pose.orientation * j.origin_rotation;
        match j.kind {
            JointKind::Revolute => {
                pose.orientation = pose.orientation * UnitQuaternion::from_unit_axis_angle(&j.axis, values[i]);
            }
            JointKind::Prismatic => {
                pose.position += pose.orientation.rotate(&(j.axis * values[i]));
            }
        }
    }
    pose.then(ee)
}

/// Second and third columns of the orientation's rotation matrix.
pub fn view_frame(pose: &Pose) -> ViewFrame {
    ViewFrame {
        w_y: pose.orientation.rotate(&Vector3::y()),
        w_z: pose.orientation.rotate(&Vector3::z()),
    }
}

/// FK over many configurations.
pub fn batch_forward_kinematics(model: &RobotModel, configs: &[JointConfig], exec: Execution) -> Vec<DualArmPose> {
    par::map(exec, configs, |c| forward_kinematics(model, c))
}
