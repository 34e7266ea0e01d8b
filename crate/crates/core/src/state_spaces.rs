//! The seven state-action spaces and trajectory retargeting between them.
//!
//! Vector layouts, with the gripper value always last:
//!
//! | space | layout | dim |
//! |-------|--------|-----|
//! | `C`    | joint values in model order | 17 |
//! | `E_E`  | `p_m, rpy_m, p_v, rpy_v, g` | 13 |
//! | `E_Q`  | `p_m, q_m, p_v, q_v, g` | 15 |
//! | `E_AA` | `p_m, (u, theta)_m, p_v, (u, theta)_v, g` | 15 |
//! | `L_E`  | `p_m, rpy_m, p_v, g` | 10 |
//! | `L_Q`  | `p_m, q_m, p_v, g` | 11 |
//! | `L_AA` | `p_m, (u, theta)_m, p_v, g` | 11 |
//!
//! Quaternions are scalar-first. Axis-angle blocks are canonical per frame
//! (`theta` in `[0, pi]`) and never smoothed. Quaternion blocks of encoded
//! trajectories are sign-aligned frame to frame unless that is disabled.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use thiserror::Error;

use crate::ik::{self, DualArmTarget, IkError, IkResult, IkTarget, LookAtParams, LookAtTarget, SolveOptions};
use crate::kinematics::{forward_kinematics, DualArmPose, Pose};
use crate::par::{self, Execution};
use crate::robot_model::{ConfigError, JointConfig, RobotModel};
use crate::rotations::{euler_to_quat, AxisAngle, EulerAngles, RotationError, UnitQuaternion};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("unknown space identifier `{0}`")]
    UnknownSpace(String),
    #[error("{space} vector must have {expected} elements, got {actual}")]
    Dimension {
        space: SpaceId,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0} vector")]
    NonFinite(SpaceId),
    #[error("malformed rotation in {space} vector: {source}")]
    Rotation {
        space: SpaceId,
        #[source]
        source: RotationError,
    },
    #[error("trajectory must contain at least one frame")]
    EmptyTrajectory,
    #[error("trajectory frame {frame} is in {found}, expected {expected}")]
    MixedSpaces {
        frame: usize,
        expected: SpaceId,
        found: SpaceId,
    },
    #[error("trajectory frame {frame} has {actual} elements, expected {expected}")]
    RaggedFrames {
        frame: usize,
        expected: usize,
        actual: usize,
    },
    #[error("trajectory dt must be positive and finite, got {0}")]
    InvalidDt(f64),
    #[error("frame {frame}: {source}")]
    Config {
        frame: usize,
        #[source]
        source: ConfigError,
    },
    #[error(transparent)]
    Ik(#[from] IkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceId {
    C,
    EE,
    EQ,
    EAA,
    LE,
    LQ,
    LAA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationRepr {
    Euler,
    Quaternion,
    AxisAngle,
}

impl RotationRepr {
    pub fn width(self) -> usize {
        match self {
            RotationRepr::Euler => 3,
            RotationRepr::Quaternion | RotationRepr::AxisAngle => 4,
        }
    }
}

impl SpaceId {
    pub const ALL: [SpaceId; 7] = [
        SpaceId::C,
        SpaceId::EE,
        SpaceId::EQ,
        SpaceId::EAA,
        SpaceId::LE,
        SpaceId::LQ,
        SpaceId::LAA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SpaceId::C => "C",
            SpaceId::EE => "E_E",
            SpaceId::EQ => "E_Q",
            SpaceId::EAA => "E_AA",
            SpaceId::LE => "L_E",
            SpaceId::LQ => "L_Q",
            SpaceId::LAA => "L_AA",
        }
    }

    /// Rotation representation of the end-effector blocks, `None` for `C`.
    pub fn rotation_repr(self) -> Option<RotationRepr> {
        match self {
            SpaceId::C => None,
            SpaceId::EE | SpaceId::LE => Some(RotationRepr::Euler),
            SpaceId::EQ | SpaceId::LQ => Some(RotationRepr::Quaternion),
            SpaceId::EAA | SpaceId::LAA => Some(RotationRepr::AxisAngle),
        }
    }

    pub fn is_look_at(self) -> bool {
        matches!(self, SpaceId::LE | SpaceId::LQ | SpaceId::LAA)
    }

    pub fn is_end_effector(self) -> bool {
        matches!(self, SpaceId::EE | SpaceId::EQ | SpaceId::EAA)
    }

    /// The end-effector space with the same rotation representation.
    pub fn full_counterpart(self) -> SpaceId {
        match self {
            SpaceId::LE => SpaceId::EE,
            SpaceId::LQ => SpaceId::EQ,
            SpaceId::LAA => SpaceId::EAA,
            other => other,
        }
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpaceId {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SpaceId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| SpaceError::UnknownSpace(s.to_owned()))
    }
}

/// Number of C-space dimensions of the 17-DOF system.
pub const CONFIGURATION_DIM: usize = 17;

/// Dimensionality of each space for the 17-DOF system.
pub fn space_dim(space: SpaceId) -> usize {
    match space.rotation_repr() {
        None => CONFIGURATION_DIM,
        Some(repr) => {
            let arms = if space.is_look_at() { 1 } else { 2 };
            3 + 3 + arms * repr.width() + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceVector {
    space: SpaceId,
    values: Vec<f64>,
}

impl SpaceVector {
    /// Validates the length and embedded rotations. `C` vectors may have any
    /// nonzero length so that models other than the 17-DOF default work.
    pub fn new(space: SpaceId, values: Vec<f64>) -> Result<Self, SpaceError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpaceError::NonFinite(space));
        }
        let expected = space_dim(space);
        let valid_len = if space == SpaceId::C {
            !values.is_empty()
        } else {
            values.len() == expected
        };
        if !valid_len {
            return Err(SpaceError::Dimension {
                space,
                expected,
                actual: values.len(),
            });
        }
        let v = Self { space, values };
        v.decode_poses()?;
        Ok(v)
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn gripper(&self) -> f64 {
        *self.values.last().expect("space vectors are nonempty")
    }

    fn decode_poses(&self) -> Result<Option<DecodedPoses>, SpaceError> {
        let Some(repr) = self.space.rotation_repr() else {
            return Ok(None);
        };
        let err = |source| SpaceError::Rotation {
            space: self.space,
            source,
        };
        let w = repr.width();
        let v = &self.values;
        let p_m = Vector3::new(v[0], v[1], v[2]);
        let r_m = decode_rotation(repr, &v[3..3 + w]).map_err(err)?;
        let p_v = Vector3::new(v[3 + w], v[4 + w], v[5 + w]);
        let r_v = if self.space.is_look_at() {
            None
        } else {
            Some(decode_rotation(repr, &v[6 + w..6 + 2 * w]).map_err(err)?)
        };
        Ok(Some(DecodedPoses { p_m, r_m, p_v, r_v }))
    }
}

struct DecodedPoses {
    p_m: Vector3<f64>,
    r_m: UnitQuaternion,
    p_v: Vector3<f64>,
    r_v: Option<UnitQuaternion>,
}

fn decode_rotation(repr: RotationRepr, block: &[f64]) -> Result<UnitQuaternion, RotationError> {
    match repr {
        RotationRepr::Euler => euler_to_quat(EulerAngles::new(block[0], block[1], block[2])),
        RotationRepr::Quaternion => UnitQuaternion::new(block[0], block[1], block[2], block[3]),
        RotationRepr::AxisAngle => {
            AxisAngle::new(Vector3::new(block[0], block[1], block[2]), block[3]).map(AxisAngle::to_quaternion)
        }
    }
}

fn push_rotation(out: &mut Vec<f64>, repr: RotationRepr, q: &UnitQuaternion) {
    match repr {
        RotationRepr::Euler => out.extend(q.to_euler().to_array()),
        RotationRepr::Quaternion => out.extend(q.to_array()),
        RotationRepr::AxisAngle => out.extend(q.to_axis_angle().to_array()),
    }
}

/// Encodes end-effector poses into an `E_*` or `L_*` space.
///
/// # Panics
///
/// If `space` is `C`, which cannot be built from poses.
pub fn encode_poses(pose: &DualArmPose, gripper: f64, space: SpaceId) -> SpaceVector {
    let repr = space.rotation_repr().expect("C-space vectors need joint values");
    let mut values = Vec::with_capacity(space_dim(space));
    push_pose(&mut values, repr, &pose.manipulation);
    values.extend(pose.viewpoint.position.iter());
    if !space.is_look_at() {
        push_rotation(&mut values, repr, &pose.viewpoint.orientation);
    }
    values.push(gripper);
    SpaceVector { space, values }
}

fn push_pose(out: &mut Vec<f64>, repr: RotationRepr, pose: &Pose) {
    out.extend(pose.position.iter());
    push_rotation(out, repr, &pose.orientation);
}

fn gripper_value(model: &RobotModel, c: &JointConfig) -> f64 {
    model.gripper_joint().map_or(0.0, |g| c.values()[g])
}

/// Encodes a joint configuration into `space`.
pub fn encode_state(model: &RobotModel, c: &JointConfig, space: SpaceId) -> SpaceVector {
    if space == SpaceId::C {
        return SpaceVector {
            space,
            values: c.values().to_vec(),
        };
    }
    encode_poses(&forward_kinematics(model, c), gripper_value(model, c), space)
}

/// Start offsets of quaternion blocks within vectors of `space`.
fn quaternion_blocks(space: SpaceId) -> &'static [usize] {
    match space {
        SpaceId::EQ => &[3, 10],
        SpaceId::LQ => &[3],
        _ => &[],
    }
}

/// Flips quaternion blocks so that `q_t . q_{t-1} >= 0` between frames.
pub fn enforce_quaternion_continuity(frames: &mut [SpaceVector]) {
    for t in 1..frames.len() {
        let (prev, rest) = frames.split_at_mut(t);
        let prev = &prev[t - 1];
        let cur = &mut rest[0];
        for &start in quaternion_blocks(cur.space) {
            let d: f64 = (start..start + 4).map(|i| prev.values[i] * cur.values[i]).sum();
            if d < 0.0 {
                for v in &mut cur.values[start..start + 4] {
                    *v = -*v;
                }
            }
        }
    }
}

/// Encodes a sequence of poses (`E_*`/`L_*` only).
pub fn encode_pose_trajectory(
    poses: &[(DualArmPose, f64)],
    space: SpaceId,
    dt: f64,
    quaternion_continuity: bool,
) -> Result<Trajectory, SpaceError> {
    let mut frames: Vec<SpaceVector> = poses.iter().map(|(p, g)| encode_poses(p, *g, space)).collect();
    if quaternion_continuity {
        enforce_quaternion_continuity(&mut frames);
    }
    Trajectory::new(space, dt, frames)
}

/// Encodes a configuration sequence into `space`.
pub fn encode_trajectory(
    model: &RobotModel,
    configs: &[JointConfig],
    space: SpaceId,
    dt: f64,
    quaternion_continuity: bool,
) -> Result<Trajectory, SpaceError> {
    let mut frames: Vec<SpaceVector> = configs.iter().map(|c| encode_state(model, c, space)).collect();
    if quaternion_continuity {
        enforce_quaternion_continuity(&mut frames);
    }
    Trajectory::new(space, dt, frames)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodedTarget {
    /// Raw joint values of a `C` vector.
    Config(Vec<f64>),
    DualArm(DualArmTarget),
    LookAt(LookAtTarget),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub target: DecodedTarget,
    /// Final element of the vector (for `C`, the last joint value).
    pub gripper: f64,
}

/// Converts a space vector into the solver target it describes.
pub fn decode_target(v: &SpaceVector) -> Result<Decoded, SpaceError> {
    let gripper = v.gripper();
    let target = match v.decode_poses()? {
        None => DecodedTarget::Config(v.values.clone()),
        Some(DecodedPoses { p_m, r_m, p_v, r_v }) => match r_v {
            Some(r_v) => DecodedTarget::DualArm(DualArmTarget {
                manipulation_position: p_m,
                manipulation_orientation: r_m,
                viewpoint_position: p_v,
                viewpoint_orientation: r_v,
            }),
            None => DecodedTarget::LookAt(LookAtTarget {
                manipulation_position: p_m,
                manipulation_orientation: r_m,
                viewpoint_position: p_v,
            }),
        },
    };
    Ok(Decoded { target, gripper })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    space: SpaceId,
    dt: f64,
    frames: Vec<SpaceVector>,
}

impl Trajectory {
    pub fn new(space: SpaceId, dt: f64, frames: Vec<SpaceVector>) -> Result<Self, SpaceError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SpaceError::InvalidDt(dt));
        }
        let Some(first) = frames.first() else {
            return Err(SpaceError::EmptyTrajectory);
        };
        let width = first.values.len();
        for (i, f) in frames.iter().enumerate() {
            if f.space != space {
                return Err(SpaceError::MixedSpaces {
                    frame: i,
                    expected: space,
                    found: f.space,
                });
            }
            if f.values.len() != width {
                return Err(SpaceError::RaggedFrames {
                    frame: i,
                    expected: width,
                    actual: f.values.len(),
                });
            }
        }
        Ok(Self { space, dt, frames })
    }

    /// Builds a trajectory from raw rows, validating each as a space vector.
    pub fn from_rows(space: SpaceId, dt: f64, rows: Vec<Vec<f64>>) -> Result<Self, SpaceError> {
        let frames = rows
            .into_iter()
            .map(|r| SpaceVector::new(space, r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(space, dt, frames)
    }

    pub fn space(&self) -> SpaceId {
        self.space
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frames(&self) -> &[SpaceVector] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Elements per frame.
    pub fn width(&self) -> usize {
        self.frames[0].values.len()
    }
}

/// Re-expresses `traj` in `to`. `C` sources are encoded directly; every other
/// source is solved back to `C` frame by frame (warm-started) first. The
/// diagnostics are empty when no IK was needed.
pub fn retarget_trajectory(
    model: &RobotModel,
    traj: &Trajectory,
    to: SpaceId,
    params: &LookAtParams,
    options: &SolveOptions,
) -> Result<(Trajectory, Vec<IkResult>), SpaceError> {
    retarget_trajectory_with(model, traj, to, params, options, true)
}

pub fn retarget_trajectory_with(
    model: &RobotModel,
    traj: &Trajectory,
    to: SpaceId,
    params: &LookAtParams,
    options: &SolveOptions,
    quaternion_continuity: bool,
) -> Result<(Trajectory, Vec<IkResult>), SpaceError> {
    let (configs, diagnostics) = if traj.space == SpaceId::C {
        let configs = traj
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                JointConfig::new(model, f.values.clone()).map_err(|source| SpaceError::Config { frame: i, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        (configs, Vec::new())
    } else {
        let decoded = traj.frames.iter().map(decode_target).collect::<Result<Vec<_>, _>>()?;
        let targets: Vec<IkTarget> = decoded
            .iter()
            .map(|d| match d.target {
                DecodedTarget::DualArm(t) => IkTarget::DualArm(t),
                DecodedTarget::LookAt(t) => IkTarget::LookAt(t),
                DecodedTarget::Config(_) => unreachable!("non-C trajectory"),
            })
            .collect();
        let mut opts = options.clone();
        if let Some(g) = model.gripper_joint() {
            let mut seed = opts.seed_config.values().to_vec();
            seed[g] = decoded[0].gripper;
            opts.seed_config = model
                .clamp_to_limits(&seed)
                .map_err(|source| SpaceError::Config { frame: 0, source })?;
        }
        let mut results = ik::solve_trajectory(model, &targets, params, &opts)?;
        if let Some(g) = model.gripper_joint() {
            for (i, (r, d)) in results.iter_mut().zip(&decoded).enumerate() {
                let mut values = r.config.values().to_vec();
                values[g] = d.gripper;
                r.config = model
                    .clamp_to_limits(&values)
                    .map_err(|source| SpaceError::Config { frame: i, source })?;
            }
        }
        (results.iter().map(|r| r.config.clone()).collect(), results)
    };
    let out = encode_trajectory(model, &configs, to, traj.dt, quaternion_continuity)?;
    Ok((out, diagnostics))
}

/// Retargets independent trajectories, possibly in parallel. Output order
/// matches input order.
pub fn retarget_many(
    model: &RobotModel,
    trajs: &[Trajectory],
    to: SpaceId,
    params: &LookAtParams,
    options: &SolveOptions,
    exec: Execution,
) -> Vec<Result<(Trajectory, Vec<IkResult>), SpaceError>> {
    par::map(exec, trajs, |t| retarget_trajectory(model, t, to, params, options))
}
