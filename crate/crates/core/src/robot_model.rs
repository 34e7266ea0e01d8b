//! Kinematic structure of the dual-arm system.
//!
//! A model is loaded from a JSON document (see `models/dual_arm_17dof.json`
//! for the bundled default) and validated before use. After construction a
//! [`RobotModel`] is immutable.

use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;
use serde::Deserialize;
use thiserror::Error;

use crate::rotations::{euler_to_quat, EulerAngles, UnitQuaternion};

/// The bundled 17-DOF model document.
pub const DEFAULT_MODEL_DOCUMENT: &str = include_str!("../models/dual_arm_17dof.json");

/// Name used for the root of both chains in `parent` fields.
pub const BASE: &str = "base";

const AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model document parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate joint name `{0}`")]
    DuplicateJoint(String),
    #[error("joint `{joint}` has dangling parent `{parent}`")]
    DanglingParent { joint: String, parent: String },
    #[error("joint graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("joint `{joint}` axis has norm {norm}, expected a unit vector")]
    NonUnitAxis { joint: String, norm: f64 },
    #[error("joint `{joint}` has inverted limits: min {min} >= max {max}")]
    InvertedLimits { joint: String, min: f64, max: f64 },
    #[error("joint `{0}` has a non-finite field")]
    NonFinite(String),
    #[error("{chain} chain references unknown joint `{joint}`")]
    UnknownChainJoint { chain: &'static str, joint: String },
    #[error("{chain} chain is not a connected path from the base at joint `{joint}`")]
    BrokenChain { chain: &'static str, joint: String },
    #[error("joint `{0}` appears in more than one chain")]
    SharedJoint(String),
    #[error("gripper joint `{0}` is unknown")]
    UnknownGripper(String),
    #[error("gripper joint `{0}` must not be part of a chain")]
    GripperInChain(String),
    #[error("gripper joint `{joint}` must hang off the manipulation side, found parent `{parent}`")]
    GripperParent { joint: String, parent: String },
    #[error("joint `{0}` belongs to neither chain nor is it the gripper")]
    UnassignedJoint(String),
    #[error("home configuration: {0}")]
    Home(ConfigError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("expected {expected} joint values, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("joint `{joint}` value {value} outside [{min}, {max}]")]
    OutOfLimits {
        joint: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("joint `{0}` value is not finite")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// A rigid transform, rotation applied after translation is composed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion,
}

impl Transform {
    pub const IDENTITY: Self = Self {
        translation: Vector3::new(0.0, 0.0, 0.0),
        rotation: UnitQuaternion::IDENTITY,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub axis: Vector3<f64>,
    pub origin_translation: Vector3<f64>,
    /// Origin rotation as given in the document (extrinsic roll-pitch-yaw).
    pub origin_rpy: EulerAngles,
    pub origin_rotation: UnitQuaternion,
    pub limit_min: f64,
    pub limit_max: f64,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    name: String,
    joints: Vec<JointSpec>,
    manipulation_chain: Vec<usize>,
    viewpoint_chain: Vec<usize>,
    gripper: Option<usize>,
    manipulation_ee: Transform,
    viewpoint_ee: Transform,
    home: Option<Vec<f64>>,
}

/// Joint values ordered as [`RobotModel::joints`], within limits.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    values: Vec<f64>,
}

impl JointConfig {
    /// Validates length and limits against `model`.
    pub fn new(model: &RobotModel, values: Vec<f64>) -> Result<Self, ConfigError> {
        model.check_values(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    // Values already known to satisfy the model's limits.
    pub(crate) fn from_clamped(values: Vec<f64>) -> Self {
        Self { values }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    name: String,
    joints: Vec<JointDocument>,
    manipulation_chain: Vec<String>,
    #[serde(default)]
    viewpoint_chain: Vec<String>,
    #[serde(default)]
    gripper_joint: Option<String>,
    #[serde(default)]
    end_effectors: EndEffectorsDocument,
    #[serde(default)]
    home: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDocument {
    name: String,
    kind: JointKind,
    axis: [f64; 3],
    #[serde(default)]
    origin_translation: [f64; 3],
    #[serde(default)]
    origin_rotation: [f64; 3],
    limit_min: f64,
    limit_max: f64,
    parent: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EndEffectorsDocument {
    #[serde(default)]
    manipulation_ee: OffsetDocument,
    #[serde(default)]
    viewpoint_ee: OffsetDocument,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OffsetDocument {
    #[serde(default)]
    translation: [f64; 3],
    #[serde(default)]
    rotation: [f64; 3],
}

impl OffsetDocument {
    fn to_transform(&self, what: &str) -> Result<Transform, ModelError> {
        let rpy = EulerAngles::new(self.rotation[0], self.rotation[1], self.rotation[2]);
        let rotation = euler_to_quat(rpy).map_err(|_| ModelError::NonFinite(what.to_owned()))?;
        if self.translation.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(what.to_owned()));
        }
        Ok(Transform {
            translation: Vector3::from(self.translation),
            rotation,
        })
    }
}

/// Parses and validates a model document.
pub fn load_robot_model(document: &str) -> Result<RobotModel, ModelError> {
    let doc: ModelDocument = serde_json::from_str(document)?;
    RobotModel::from_document(doc)
}

/// The bundled 17-DOF dual-arm model.
pub fn default_model() -> RobotModel {
    load_robot_model(DEFAULT_MODEL_DOCUMENT).expect("bundled model document is valid")
}

impl RobotModel {
    fn from_document(doc: ModelDocument) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, j) in doc.joints.into_iter().enumerate() {
            if index.insert(j.name.clone(), i).is_some() {
                return Err(ModelError::DuplicateJoint(j.name));
            }
            joints.push(build_joint(j)?);
        }

        for j in &joints {
            if j.parent != BASE && !index.contains_key(&j.parent) {
                return Err(ModelError::DanglingParent {
                    joint: j.name.clone(),
                    parent: j.parent.clone(),
                });
            }
        }
        check_acyclic(&joints, &index)?;

        let manipulation_chain = resolve_chain("manipulation", &doc.manipulation_chain, &joints, &index)?;
        let viewpoint_chain = resolve_chain("viewpoint", &doc.viewpoint_chain, &joints, &index)?;

        let mut seen = HashSet::new();
        for &i in manipulation_chain.iter().chain(&viewpoint_chain) {
            if !seen.insert(i) {
                return Err(ModelError::SharedJoint(joints[i].name.clone()));
            }
        }

        let gripper = match doc.gripper_joint {
            None => None,
            Some(name) => {
                let &g = index
                    .get(&name)
                    .ok_or_else(|| ModelError::UnknownGripper(name.clone()))?;
                if seen.contains(&g) {
                    return Err(ModelError::GripperInChain(name));
                }
                let parent = &joints[g].parent;
                let on_manipulation_side = if parent == BASE {
                    manipulation_chain.is_empty()
                } else {
                    manipulation_chain.contains(&index[parent])
                };
                if !on_manipulation_side {
                    return Err(ModelError::GripperParent {
                        joint: name,
                        parent: parent.clone(),
                    });
                }
                seen.insert(g);
                Some(g)
            }
        };

        if let Some(j) = joints.iter().enumerate().find(|(i, _)| !seen.contains(i)) {
            return Err(ModelError::UnassignedJoint(j.1.name.clone()));
        }

        let model = RobotModel {
            name: doc.name,
            joints,
            manipulation_chain,
            viewpoint_chain,
            gripper,
            manipulation_ee: doc.end_effectors.manipulation_ee.to_transform("manipulation_ee")?,
            viewpoint_ee: doc.end_effectors.viewpoint_ee.to_transform("viewpoint_ee")?,
            home: None,
        };
        if let Some(home) = &doc.home {
            model.check_values(home).map_err(ModelError::Home)?;
        }
        Ok(RobotModel {
            home: doc.home,
            ..model
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Joint indices from the base to the manipulation end-effector.
    pub fn manipulation_chain(&self) -> &[usize] {
        &self.manipulation_chain
    }

    /// Joint indices from the base to the viewpoint end-effector.
    pub fn viewpoint_chain(&self) -> &[usize] {
        &self.viewpoint_chain
    }

    pub fn gripper_joint(&self) -> Option<usize> {
        self.gripper
    }

    pub fn manipulation_ee_offset(&self) -> &Transform {
        &self.manipulation_ee
    }

    pub fn viewpoint_ee_offset(&self) -> &Transform {
        &self.viewpoint_ee
    }

    pub fn lower_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.limit_min).collect()
    }

    pub fn upper_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.limit_max).collect()
    }

    /// The document's `home` configuration, or the midpoint of every joint
    /// range when none is given.
    pub fn home_config(&self) -> JointConfig {
        match &self.home {
            Some(home) => JointConfig::from_clamped(home.clone()),
            None => JointConfig::from_clamped(self.joints.iter().map(|j| 0.5 * (j.limit_min + j.limit_max)).collect()),
        }
    }

    pub fn check_values(&self, values: &[f64]) -> Result<(), ConfigError> {
        if values.len() != self.dof() {
            return Err(ConfigError::Length {
                expected: self.dof(),
                actual: values.len(),
            });
        }
        for (j, &v) in self.joints.iter().zip(values) {
            if !v.is_finite() {
                return Err(ConfigError::NonFinite(j.name.clone()));
            }
            if v < j.limit_min || v > j.limit_max {
                return Err(ConfigError::OutOfLimits {
                    joint: j.name.clone(),
                    value: v,
                    min: j.limit_min,
                    max: j.limit_max,
                });
            }
        }
        Ok(())
    }

    pub fn config(&self, values: Vec<f64>) -> Result<JointConfig, ConfigError> {
        JointConfig::new(self, values)
    }

    /// Clamps each value into its joint's range.
    pub fn clamp_to_limits(&self, raw: &[f64]) -> Result<JointConfig, ConfigError> {
        if raw.len() != self.dof() {
            return Err(ConfigError::Length {
                expected: self.dof(),
                actual: raw.len(),
            });
        }
        let mut values = Vec::with_capacity(raw.len());
        for (j, &v) in self.joints.iter().zip(raw) {
            if v.is_nan() {
                return Err(ConfigError::NonFinite(j.name.clone()));
            }
            values.push(v.clamp(j.limit_min, j.limit_max));
        }
        Ok(JointConfig::from_clamped(values))
    }

    pub(crate) fn clamp_in_place(&self, values: &mut [f64]) {
        for (j, v) in self.joints.iter().zip(values.iter_mut()) {
            *v = v.clamp(j.limit_min, j.limit_max);
        }
    }
}

/// Free-function form of [`RobotModel::clamp_to_limits`].
pub fn clamp_to_limits(model: &RobotModel, raw: &[f64]) -> Result<JointConfig, ConfigError> {
    model.clamp_to_limits(raw)
}

fn build_joint(j: JointDocument) -> Result<JointSpec, ModelError> {
    let finite = j
        .axis
        .iter()
        .chain(&j.origin_translation)
        .chain(&j.origin_rotation)
        .all(|v| v.is_finite())
        && !j.limit_min.is_nan()
        && !j.limit_max.is_nan();
    if !finite {
        return Err(ModelError::NonFinite(j.name));
    }
    let axis = Vector3::from(j.axis);
    let norm = axis.norm();
    if (norm - 1.0).abs() > AXIS_TOLERANCE {
        return Err(ModelError::NonUnitAxis { joint: j.name, norm });
    }
    if j.limit_min >= j.limit_max {
        return Err(ModelError::InvertedLimits {
            joint: j.name,
            min: j.limit_min,
            max: j.limit_max,
        });
    }
    let origin_rpy = EulerAngles::new(j.origin_rotation[0], j.origin_rotation[1], j.origin_rotation[2]);
    let origin_rotation = euler_to_quat(origin_rpy).map_err(|_| ModelError::NonFinite(j.name.clone()))?;
    Ok(JointSpec {
        name: j.name,
        kind: j.kind,
        axis,
        origin_translation: Vector3::from(j.origin_translation),
        origin_rpy,
        origin_rotation,
        limit_min: j.limit_min,
        limit_max: j.limit_max,
        parent: j.parent,
    })
}

fn check_acyclic(joints: &[JointSpec], index: &HashMap<String, usize>) -> Result<(), ModelError> {
    for start in 0..joints.len() {
        let mut path = vec![start];
        let mut current = start;
        while joints[current].parent != BASE {
            current = index[&joints[current].parent];
            if let Some(pos) = path.iter().position(|&p| p == current) {
                let mut names: Vec<String> = path[pos..].iter().map(|&i| joints[i].name.clone()).collect();
                names.push(joints[current].name.clone());
                return Err(ModelError::Cycle(names));
            }
            path.push(current);
        }
    }
    Ok(())
}

fn resolve_chain(
    chain: &'static str,
    names: &[String],
    joints: &[JointSpec],
    index: &HashMap<String, usize>,
) -> Result<Vec<usize>, ModelError> {
    let mut expected_parent = BASE;
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let &i = index.get(name).ok_or_else(|| ModelError::UnknownChainJoint {
            chain,
            joint: name.clone(),
        })?;
        if joints[i].parent != expected_parent {
            return Err(ModelError::BrokenChain {
                chain,
                joint: name.clone(),
            });
        }
        expected_parent = &joints[i].name;
        out.push(i);
    }
    Ok(out)
}
