//! Dual-arm and look-at inverse kinematics.
//!
//! Both solvers minimize their objective over the joint box with the
//! quasi-Newton descent in [`optimizer`]. Non-convergence is reported through
//! [`IkResult::converged`], never as an error, so trajectories can be solved
//! past hard frames.

mod objective;
mod optimizer;

use nalgebra::Vector3;
use thiserror::Error;

pub use objective::{
    clamped_projection, dual_arm_objective, line_segment_projection, lookat_geometry, lookat_objective, lookat_terms,
    single_arm_objective, viewpoint_orientation_loss, viewpoint_stability_loss, LookAtTerms,
};
pub use optimizer::{Termination, STALL_IMPROVEMENT};

use crate::kinematics::DualArmPose;
use crate::par::{self, Execution};
use crate::robot_model::{ConfigError, JointConfig, RobotModel};
use crate::rotations::UnitQuaternion;

/// Distance from the viewpoint to the far point of the viewing segment.
pub const DEFAULT_DELTA: f64 = 999.0;
/// Visual target offset from the manipulation end-effector, in meters.
pub const DEFAULT_TARGET_OFFSET: [f64; 3] = [0.0, 0.0, 0.15];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("projection onto a zero vector")]
    ZeroVector,
    #[error("line segment endpoints coincide")]
    DegenerateSegment,
    #[error("look-at delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("invalid solver option: {0}")]
    InvalidOption(&'static str),
    #[error("trajectory has no frames")]
    EmptyTrajectory,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualArmTarget {
    pub manipulation_position: Vector3<f64>,
    pub manipulation_orientation: UnitQuaternion,
    pub viewpoint_position: Vector3<f64>,
    pub viewpoint_orientation: UnitQuaternion,
}

impl DualArmTarget {
    pub fn from_pose(pose: &DualArmPose) -> Self {
        Self {
            manipulation_position: pose.manipulation.position,
            manipulation_orientation: pose.manipulation.orientation,
            viewpoint_position: pose.viewpoint.position,
            viewpoint_orientation: pose.viewpoint.orientation,
        }
    }
}

/// Look-at target: the viewpoint orientation is left to the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookAtTarget {
    pub manipulation_position: Vector3<f64>,
    pub manipulation_orientation: UnitQuaternion,
    pub viewpoint_position: Vector3<f64>,
}

impl LookAtTarget {
    pub fn from_pose(pose: &DualArmPose) -> Self {
        Self {
            manipulation_position: pose.manipulation.position,
            manipulation_orientation: pose.manipulation.orientation,
            viewpoint_position: pose.viewpoint.position,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IkTarget {
    DualArm(DualArmTarget),
    LookAt(LookAtTarget),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookAtParams {
    pub delta: f64,
    pub target_offset: Vector3<f64>,
}

impl LookAtParams {
    pub fn new(delta: f64, target_offset: Vector3<f64>) -> Result<Self, IkError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(IkError::InvalidDelta(delta));
        }
        Ok(Self { delta, target_offset })
    }
}

impl Default for LookAtParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            target_offset: Vector3::from(DEFAULT_TARGET_OFFSET),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub objective_tolerance: f64,
    pub max_iterations: usize,
    pub finite_difference_step: f64,
    pub seed_config: JointConfig,
}

impl SolveOptions {
    /// Default tolerances seeded from the given configuration.
    pub fn new(seed_config: JointConfig) -> Self {
        Self {
            objective_tolerance: 1e-8,
            max_iterations: 200,
            finite_difference_step: 1e-6,
            seed_config,
        }
    }

    /// Default tolerances seeded from the model's home configuration.
    pub fn for_model(model: &RobotModel) -> Self {
        Self::new(model.home_config())
    }

    pub fn validate(&self) -> Result<(), IkError> {
        if !(self.objective_tolerance > 0.0 && self.objective_tolerance.is_finite()) {
            return Err(IkError::InvalidOption("objective tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(IkError::InvalidOption("max iterations must be positive"));
        }
        if !(self.finite_difference_step > 0.0 && self.finite_difference_step.is_finite()) {
            return Err(IkError::InvalidOption("finite difference step must be positive"));
        }
        Ok(())
    }

    fn settings(&self) -> optimizer::Settings {
        optimizer::Settings {
            tolerance: self.objective_tolerance,
            max_iterations: self.max_iterations,
            fd_step: self.finite_difference_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub config: JointConfig,
    pub objective_value: f64,
    pub iterations: usize,
    /// `objective_value < objective_tolerance`.
    pub converged: bool,
    pub termination: Termination,
}

fn run(
    model: &RobotModel,
    seed: &JointConfig,
    options: &SolveOptions,
    f: impl FnMut(&[f64]) -> f64,
) -> Result<IkResult, IkError> {
    options.validate()?;
    model.check_values(seed.values())?;
    let lower = model.lower_limits();
    let upper = model.upper_limits();
    let out = optimizer::minimize(f, seed.values(), &lower, &upper, options.settings());
    let mut x = out.x;
    model.clamp_in_place(&mut x);
    Ok(IkResult {
        config: JointConfig::from_clamped(x),
        objective_value: out.value,
        iterations: out.iterations,
        converged: out.value < options.objective_tolerance,
        termination: out.termination,
    })
}

/// Locally minimizes the dual-arm objective from `options.seed_config`.
pub fn solve_dual_arm_ik(
    model: &RobotModel,
    target: &DualArmTarget,
    options: &SolveOptions,
) -> Result<IkResult, IkError> {
    run(model, &options.seed_config, options, |x| {
        objective::dual_arm_objective_raw(model, x, target)
    })
}

/// Locally minimizes the look-at objective from `options.seed_config`.
pub fn solve_lookat_ik(
    model: &RobotModel,
    target: &LookAtTarget,
    params: &LookAtParams,
    options: &SolveOptions,
) -> Result<IkResult, IkError> {
    LookAtParams::new(params.delta, params.target_offset)?;
    run(model, &options.seed_config, options, |x| {
        objective::lookat_terms_raw(model, x, target, params).total()
    })
}

pub fn solve(
    model: &RobotModel,
    target: &IkTarget,
    params: &LookAtParams,
    options: &SolveOptions,
) -> Result<IkResult, IkError> {
    match target {
        IkTarget::DualArm(t) => solve_dual_arm_ik(model, t, options),
        IkTarget::LookAt(t) => solve_lookat_ik(model, t, params, options),
    }
}

/// Solves frames in order, warm-starting each from the previous solution.
pub fn solve_trajectory(
    model: &RobotModel,
    targets: &[IkTarget],
    params: &LookAtParams,
    options: &SolveOptions,
) -> Result<Vec<IkResult>, IkError> {
    if targets.is_empty() {
        return Err(IkError::EmptyTrajectory);
    }
    let mut frame_options = options.clone();
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let result = solve(model, target, params, &frame_options)?;
        frame_options.seed_config = result.config.clone();
        out.push(result);
    }
    Ok(out)
}

/// Independent solves, each with its own seed, in input order.
pub fn solve_batch(
    model: &RobotModel,
    problems: &[(IkTarget, JointConfig)],
    params: &LookAtParams,
    options: &SolveOptions,
    exec: Execution,
) -> Vec<Result<IkResult, IkError>> {
    par::map(exec, problems, |(target, seed)| {
        let opts = SolveOptions {
            seed_config: seed.clone(),
            ..options.clone()
        };
        solve(model, target, params, &opts)
    })
}
