//! Regenerates `data/sample_trajectory.json`: 100 frames of smooth joint
//! motion around the bundled model's home configuration.
//!
//! cargo run --example make_sample_trajectory > data/sample_trajectory.json

use std::f64::consts::PI;

use lookat::io::render_trajectory;
use lookat::{default_model, SpaceId, Trajectory};

fn main() {
    let model = default_model();
    let home = model.home_config();
    let frames = 100;
    let dt = 0.05;
    let gripper = model.gripper_joint();
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|n| {
            let t = n as f64 * dt;
            let raw: Vec<f64> = home
                .values()
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    if Some(i) == gripper {
                        0.04 + 0.03 * (2.0 * PI * 0.2 * t).sin()
                    } else {
                        let freq = 0.1 + 0.02 * i as f64;
                        h + 0.15 * (2.0 * PI * freq * t + 0.4 * i as f64).sin()
                    }
                })
                .collect();
            model.clamp_to_limits(&raw).expect("finite").into_values()
        })
        .collect();
    let traj = Trajectory::from_rows(SpaceId::C, dt, rows).expect("valid trajectory");
    print!("{}", render_trajectory(&traj).expect("finite"));
}
