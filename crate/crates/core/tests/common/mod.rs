//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lookat::robot_model::{JointKind, RobotModel, Transform};
use lookat::{DualArmTarget, JointConfig, LookAtTarget, UnitQuaternion};
use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rz(yaw) Ry(pitch) Rx(roll)` by explicit matrix products.
pub fn rpy_matrix(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    rot_z(yaw) * rot_y(pitch) * rot_x(roll)
}

/// Rodrigues' formula.
pub fn axis_angle_matrix(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let k = Matrix3::new(0.0, -axis.z, axis.y, axis.z, 0.0, -axis.x, -axis.y, axis.x, 0.0);
    Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Textbook matrix-to-quaternion: magnitudes from the diagonal, signs from
/// the off-diagonal differences.
pub fn matrix_to_quat(r: &Matrix3<f64>) -> [f64; 4] {
    let w = (1.0 + r[(0, 0)] + r[(1, 1)] + r[(2, 2)]).max(0.0).sqrt() / 2.0;
    let x = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).max(0.0).sqrt() / 2.0;
    let y = (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).max(0.0).sqrt() / 2.0;
    let z = (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).max(0.0).sqrt() / 2.0;
    let x = x.copysign(r[(2, 1)] - r[(1, 2)]);
    let y = y.copysign(r[(0, 2)] - r[(2, 0)]);
    let z = z.copysign(r[(1, 0)] - r[(0, 1)]);
    [w, x, y, z]
}

/// Rotation angle between two rotation matrices, accurate for small angles.
pub fn matrix_geodesic(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let r = a.transpose() * b;
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    (0.5 * skew.norm()).atan2(0.5 * (trace - 1.0))
}

/// Rotation matrix of a scalar-first quaternion, by the explicit formula.
pub fn quat_matrix(q: &[f64; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = *q;
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Angle between two quaternions up to sign, via `acos`-free formula.
pub fn quat_angle(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    matrix_geodesic(&quat_matrix(a), &quat_matrix(b))
}

/// Uniform random rotation (Shoemake).
pub fn random_quat(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random::<f64>() * 2.0 * PI;
    let u3: f64 = rng.random::<f64>() * 2.0 * PI;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    UnitQuaternion::new(a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos()).unwrap()
}

fn homogeneous(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Matrix4<f64> {
    let mut t = Matrix4::<f64>::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
    t
}

/// End-effector transform of a chain as a 4x4 matrix product.
/// The end-effector offset rotation enters through its quaternion.
pub fn chain_matrix(model: &RobotModel, chain: &[usize], ee: &Transform, values: &[f64]) -> Matrix4<f64> {
    let mut t = Matrix4::<f64>::identity();
    for &i in chain {
        let j = &model.joints()[i];
        let rpy = j.origin_rpy;
        t *= homogeneous(rpy_matrix(rpy.roll, rpy.pitch, rpy.yaw), j.origin_translation);
        t *= match j.kind {
            JointKind::Revolute => homogeneous(axis_angle_matrix(&j.axis, values[i]), Vector3::zeros()),
            JointKind::Prismatic => homogeneous(Matrix3::identity(), j.axis * values[i]),
        };
    }
    t * homogeneous(quat_matrix(&ee.rotation.to_array()), ee.translation)
}

pub fn top_left(t: &Matrix4<f64>) -> Matrix3<f64> {
    t.fixed_view::<3, 3>(0, 0).into_owned()
}

pub fn translation(t: &Matrix4<f64>) -> Vector3<f64> {
    t.fixed_view::<3, 1>(0, 3).into_owned()
}

/// Uniformly random configuration within the joint limits.
pub fn random_config(model: &RobotModel, rng: &mut ChaCha8Rng) -> JointConfig {
    let values = model
        .joints()
        .iter()
        .map(|j| rng.random_range(j.limit_min..=j.limit_max))
        .collect();
    model.config(values).unwrap()
}

/// `center` plus a uniform perturbation of `amplitude` per joint, clamped.
pub fn perturbed(model: &RobotModel, center: &JointConfig, amplitude: f64, rng: &mut ChaCha8Rng) -> JointConfig {
    let raw: Vec<f64> = center
        .values()
        .iter()
        .map(|v| v + rng.random_range(-amplitude..=amplitude))
        .collect();
    model.clamp_to_limits(&raw).unwrap()
}

/// O(N^2) direct DFT magnitudes for `k = 0..=N/2`.
pub fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let phase = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * phase.cos();
                im += v * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

/// Profile `X_k` by direct summation over rows `[frame][element]`.
pub fn naive_profile(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows[0].len();
    let n = rows.len();
    let mut out = vec![0.0; n / 2 + 1];
    for e in 0..m {
        let series: Vec<f64> = rows.iter().map(|r| r[e]).collect();
        for (o, mag) in out.iter_mut().zip(naive_dft_magnitudes(&series)) {
            *o += (1.0 + mag).ln();
        }
    }
    out.iter().map(|v| v / m as f64).collect()
}

/// Distance from `p` to the segment `[a, b]` by dense sampling plus golden
/// section refinement.
pub fn brute_segment_distance(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let f = |t: f64| (a + (b - a) * t - p).norm();
    let samples = 10_000;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let d = f(t);
        if d < best {
            best = d;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = (
        (best_t - 1.0 / samples as f64).max(0.0),
        (best_t + 1.0 / samples as f64).min(1.0),
    );
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best.min(f(0.5 * (lo + hi)))
}

/// Per-arm `(position term, rotation term)` pairs of the dual-arm objective,
/// from the matrix-chain FK and the matrix geodesic angle.
pub fn oracle_dual_arm_terms(model: &RobotModel, values: &[f64], target: &DualArmTarget) -> [(f64, f64); 2] {
    let m = chain_matrix(
        model,
        model.manipulation_chain(),
        model.manipulation_ee_offset(),
        values,
    );
    let v = chain_matrix(model, model.viewpoint_chain(), model.viewpoint_ee_offset(), values);
    let arm = |t: &Matrix4<f64>, p: &Vector3<f64>, q: &UnitQuaternion| {
        let angle = matrix_geodesic(&top_left(t), &quat_matrix(&q.to_array()));
        ((translation(t) - p).norm_squared(), (angle / 2.0).powi(2))
    };
    [
        arm(&m, &target.manipulation_position, &target.manipulation_orientation),
        arm(&v, &target.viewpoint_position, &target.viewpoint_orientation),
    ]
}

/// Squared distance from `p` to the segment `p_v + s w` with `s` in
/// `[0, length]` by cases, using Pythagoras for the interior.
pub fn segment_distance_sq(p: &Vector3<f64>, p_v: &Vector3<f64>, w: &Vector3<f64>, length: f64) -> f64 {
    let d = p - p_v;
    let along = d.dot(w);
    if along <= 0.0 {
        d.norm_squared()
    } else if along >= length {
        (p - (p_v + w * length)).norm_squared()
    } else {
        (d.norm_squared() - along * along).max(0.0)
    }
}

/// `[manipulation, viewpoint position, orientation, stability]`.
pub fn oracle_lookat_terms(
    model: &RobotModel,
    values: &[f64],
    target: &LookAtTarget,
    delta: f64,
    offset: &Vector3<f64>,
) -> [f64; 4] {
    let m = chain_matrix(
        model,
        model.manipulation_chain(),
        model.manipulation_ee_offset(),
        values,
    );
    let v = chain_matrix(model, model.viewpoint_chain(), model.viewpoint_ee_offset(), values);
    let angle = matrix_geodesic(&top_left(&m), &quat_matrix(&target.manipulation_orientation.to_array()));
    let manipulation = (translation(&m) - target.manipulation_position).norm_squared() + (angle / 2.0).powi(2);
    let p_v = translation(&v);
    let p_t = translation(&m) + offset;
    let r = top_left(&v);
    let w_y: Vector3<f64> = r.column(1).into_owned();
    let w_z: Vector3<f64> = r.column(2).into_owned();
    [
        manipulation,
        (p_v - target.viewpoint_position).norm_squared(),
        segment_distance_sq(&p_t, &p_v, &w_z, delta),
        w_y.z * w_y.z,
    ]
}

/// Angle between the camera axis and the ray to the visual target, plus
/// `w_y . z`, from the matrix-chain FK.
pub fn oracle_lookat_geometry(model: &RobotModel, values: &[f64], offset: &Vector3<f64>) -> (f64, f64) {
    let m = chain_matrix(
        model,
        model.manipulation_chain(),
        model.manipulation_ee_offset(),
        values,
    );
    let v = chain_matrix(model, model.viewpoint_chain(), model.viewpoint_ee_offset(), values);
    let ray = translation(&m) + offset - translation(&v);
    let r = top_left(&v);
    let w_z: Vector3<f64> = r.column(2).into_owned();
    let angle = w_z.cross(&ray).norm().atan2(w_z.dot(&ray));
    (angle, r[(2, 1)])
}

pub fn sample_trajectory_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_trajectory.json")
}

/// Runs the `lookat` binary.
pub fn run_cli<S: AsRef<OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lookat"))
        .args(args)
        .output()
        .expect("lookat binary runs")
}

/// The bundled model document cut off halfway.
pub fn truncated_model() -> String {
    let doc = lookat::robot_model::DEFAULT_MODEL_DOCUMENT;
    doc[..doc.len() / 2].to_owned()
}

/// Two joints that are each other's parent.
pub const CYCLE_MODEL: &str = r#"{
  "name": "loop",
  "joints": [
    {"name": "a", "kind": "revolute", "axis": [0, 0, 1], "limit_min": -1, "limit_max": 1, "parent": "b"},
    {"name": "b", "kind": "revolute", "axis": [0, 0, 1], "limit_min": -1, "limit_max": 1, "parent": "a"}
  ],
  "manipulation_chain": ["a", "b"]
}"#;

/// An `E_E` trajectory whose targets sit a kilometre from the robot.
pub fn unreachable_trajectory() -> String {
    let row = "[1000.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1000.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.04]";
    format!("{{\"space\": \"E_E\", \"dt\": 0.1, \"frames\": [{row}, {row}, {row}]}}")
}
