//! Kinematics and optimization toolkit for a 17-DOF dual-arm robot with a
//! camera on one arm.
//!
//! * [`robot_model`]: model documents and joint configurations
//! * [`rotations`]: Euler, quaternion and axis-angle conversions, quaternion
//!   log and displacement distance
//! * [`kinematics`]: forward kinematics of both end-effectors
//! * [`ik`]: dual-arm and look-at inverse kinematics
//! * [`state_spaces`]: the seven state-action encodings and retargeting
//! * [`freq`]: log-magnitude frequency profiles and heatmaps
//! * [`policy`]: the denoising recurrence with injected noise predictors
//! * [`cli`]: the `lookat` command-line tool

pub mod cli;
pub mod freq;
pub mod ik;
pub mod io;
pub mod kinematics;
pub mod par;
pub mod policy;
pub mod robot_model;
pub mod rotations;
pub mod state_spaces;

pub use ik::{DualArmTarget, IkResult, IkTarget, LookAtParams, LookAtTarget, SolveOptions};
pub use kinematics::{forward_kinematics, view_frame, DualArmPose, Pose, ViewFrame};
pub use par::Execution;
pub use robot_model::{default_model, load_robot_model, JointConfig, RobotModel};
pub use rotations::{AxisAngle, EulerAngles, UnitQuaternion};
pub use state_spaces::{space_dim, SpaceId, SpaceVector, Trajectory};
