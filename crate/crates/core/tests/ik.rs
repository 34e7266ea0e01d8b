mod common;

use common::*;
use lookat::ik::{
    clamped_projection, dual_arm_objective, line_segment_projection, lookat_objective, lookat_terms,
    single_arm_objective, viewpoint_orientation_loss, viewpoint_stability_loss,
};
use lookat::ik::{solve_batch, solve_dual_arm_ik, solve_lookat_ik, solve_trajectory};
use lookat::{
    default_model, forward_kinematics, DualArmTarget, Execution, IkTarget, LookAtParams, LookAtTarget, SolveOptions,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

#[test]
fn clamped_projection_examples() {
    let u = Vector3::new(0.3, -1.0, 2.0);
    assert!((clamped_projection(&u, &u).unwrap() - u).norm() < 1e-15);
    assert!((clamped_projection(&(u * 2.0), &u).unwrap() - u).norm() < 1e-15);
    let p = clamped_projection(&Vector3::new(1.0, 1.0, 0.0), &Vector3::new(2.0, 0.0, 0.0)).unwrap();
    assert_eq!(p, Vector3::new(1.0, 0.0, 0.0));
    assert!(clamped_projection(&u, &Vector3::zeros()).is_err());
}

#[test]
fn segment_projection_examples() {
    let (p_v, p_f) = (Vector3::zeros(), Vector3::new(2.0, 0.0, 0.0));
    let on = Vector3::new(0.7, 0.0, 0.0);
    assert_eq!(line_segment_projection(&on, &p_v, &p_f).unwrap(), on);
    let behind = Vector3::new(-1.0, 0.3, 0.0);
    assert_eq!(line_segment_projection(&behind, &p_v, &p_f).unwrap(), p_v);
    let p_t = Vector3::new(0.0, 1.0, 0.0);
    assert_eq!(line_segment_projection(&p_t, &p_v, &p_f).unwrap(), p_v);
    assert!((brute_segment_distance(&p_t, &p_v, &p_f) - 1.0).abs() < 1e-12);
    assert!(line_segment_projection(&p_t, &p_v, &p_v).is_err());
}

#[test]
fn orientation_and_stability_examples() {
    let p_v = Vector3::new(0.1, 0.2, 0.3);
    let p_f = p_v + Vector3::new(0.0, 0.0, 999.0);
    let aligned = p_v + Vector3::new(0.0, 0.0, 0.4);
    assert_eq!(viewpoint_orientation_loss(&aligned, &p_v, &p_f).unwrap(), 0.0);
    let off = p_v + Vector3::new(0.5, 0.0, 0.4);
    assert!((viewpoint_orientation_loss(&off, &p_v, &p_f).unwrap() - 0.25).abs() < 1e-12);
    let off = p_v + Vector3::new(0.0, 0.2, 0.4);
    assert!((viewpoint_orientation_loss(&off, &p_v, &p_f).unwrap() - 0.04).abs() < 1e-12);

    assert_eq!(viewpoint_stability_loss(&Vector3::z()), 1.0);
    assert_eq!(viewpoint_stability_loss(&Vector3::x()), 0.0);
    let h = 0.5f64.sqrt();
    assert!((viewpoint_stability_loss(&Vector3::new(0.0, h, h)) - 0.5).abs() < 1e-15);
}

#[test]
fn dual_arm_objective_is_additive_over_arms() {
    let model = default_model();
    let c = model.home_config();
    let fk = forward_kinematics(&model, &c);
    let mut target = DualArmTarget::from_pose(&fk);
    assert!(dual_arm_objective(&model, &c, &target) < 1e-24);
    target.viewpoint_position.x += 0.1;
    assert!((dual_arm_objective(&model, &c, &target) - 0.01).abs() < 1e-15);
}

#[test]
fn objectives_decompose_into_oracle_terms() {
    let model = default_model();
    let params = LookAtParams::default();
    let mut rng = rng(31);
    for _ in 0..100 {
        let c = random_config(&model, &mut rng);
        let fk_target = forward_kinematics(&model, &random_config(&model, &mut rng));
        let target = DualArmTarget::from_pose(&fk_target);
        let terms = oracle_dual_arm_terms(&model, c.values(), &target);
        let summed: f64 = terms.iter().map(|(p, r)| p + r).sum();
        assert!((dual_arm_objective(&model, &c, &target) - summed).abs() < 1e-12);

        let target = LookAtTarget::from_pose(&fk_target);
        let oracle = oracle_lookat_terms(&model, c.values(), &target, params.delta, &params.target_offset);
        let terms = lookat_terms(&model, &c, &target, &params);
        let lib = [
            terms.manipulation,
            terms.viewpoint_position,
            terms.viewpoint_orientation,
            terms.viewpoint_stability,
        ];
        for (a, b) in lib.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-12, "{lib:?} vs {oracle:?}");
        }
        assert!((lookat_objective(&model, &c, &target, &params) - oracle.iter().sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn self_target_is_solved_immediately() {
    let model = default_model();
    let c = model.home_config();
    let target = DualArmTarget::from_pose(&forward_kinematics(&model, &c));
    let r = solve_dual_arm_ik(&model, &target, &SolveOptions::new(c)).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 2);
    assert!(r.objective_value < 1e-12);
}

#[test]
fn aligned_lookat_configuration_is_near_optimal() {
    // The bundled home configuration was chosen with the camera aimed at the
    // visual target and held upright.
    let model = default_model();
    let c = model.home_config();
    let params = LookAtParams::default();
    let target = LookAtTarget::from_pose(&forward_kinematics(&model, &c));
    let (angle, wy_z) = oracle_lookat_geometry(&model, c.values(), &params.target_offset);
    assert!(angle < 1f64.to_radians());
    assert!(wy_z.abs() < 0.1);
    let start = lookat_objective(&model, &c, &target, &params);
    let opts = SolveOptions {
        objective_tolerance: 1e-12,
        ..SolveOptions::new(c)
    };
    let r = solve_lookat_ik(&model, &target, &params, &opts).unwrap();
    assert!(
        r.objective_value < 1e-9,
        "start {start}, solved {} after {} iterations",
        r.objective_value,
        r.iterations
    );
}

#[test]
fn unreachable_target_reports_non_convergence() {
    let model = default_model();
    let c = model.home_config();
    let mut target = DualArmTarget::from_pose(&forward_kinematics(&model, &c));
    target.manipulation_position.x += 1000.0;
    let r = solve_dual_arm_ik(&model, &target, &SolveOptions::new(c)).unwrap();
    assert!(!r.converged);
    assert!(r.objective_value.is_finite());
    model.check_values(r.config.values()).unwrap();
}

#[test]
fn solver_is_deterministic_monotone_and_feasible() {
    let model = default_model();
    let params = LookAtParams::default();
    let mut rng = rng(32);
    for _ in 0..10 {
        let seed = random_config(&model, &mut rng);
        let fk = forward_kinematics(&model, &random_config(&model, &mut rng));
        let opts = SolveOptions {
            max_iterations: 40,
            ..SolveOptions::new(seed.clone())
        };

        let target = DualArmTarget::from_pose(&fk);
        let a = solve_dual_arm_ik(&model, &target, &opts).unwrap();
        assert_eq!(a, solve_dual_arm_ik(&model, &target, &opts).unwrap());
        assert!(a.objective_value <= dual_arm_objective(&model, &seed, &target));
        assert_eq!(a.objective_value, dual_arm_objective(&model, &a.config, &target));
        model.check_values(a.config.values()).unwrap();

        let target = LookAtTarget::from_pose(&fk);
        let b = solve_lookat_ik(&model, &target, &params, &opts).unwrap();
        assert_eq!(b, solve_lookat_ik(&model, &target, &params, &opts).unwrap());
        assert!(b.objective_value <= lookat_objective(&model, &seed, &target, &params));
        model.check_values(b.config.values()).unwrap();
    }
}

#[test]
fn solver_options_are_validated() {
    let model = default_model();
    let target = DualArmTarget::from_pose(&forward_kinematics(&model, &model.home_config()));
    let mut opts = SolveOptions::for_model(&model);
    opts.max_iterations = 0;
    assert!(solve_dual_arm_ik(&model, &target, &opts).is_err());
    assert!(LookAtParams::new(0.0, Vector3::zeros()).is_err());
    assert!(LookAtParams::new(f64::NAN, Vector3::zeros()).is_err());
}

#[test]
fn constant_target_trajectory_is_a_fixed_point() {
    let model = default_model();
    let mut rng = rng(33);
    let home = model.home_config();
    let target = DualArmTarget::from_pose(&forward_kinematics(&model, &perturbed(&model, &home, 0.1, &mut rng)));
    let targets = vec![IkTarget::DualArm(target); 5];
    let results = solve_trajectory(&model, &targets, &LookAtParams::default(), &SolveOptions::new(home)).unwrap();
    assert_eq!(results.len(), 5);
    for r in &results[1..] {
        assert_eq!(r.config, results[0].config);
    }
    assert!(solve_trajectory(&model, &[], &LookAtParams::default(), &SolveOptions::for_model(&model)).is_err());
}

#[test]
fn smooth_trajectory_is_tracked() {
    let model = default_model();
    let home = model.home_config();
    let configs: Vec<lookat::JointConfig> = (0..20)
        .map(|n| {
            let t = n as f64 / 20.0;
            let raw: Vec<f64> = home
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| v + 0.2 * (2.0 * std::f64::consts::PI * t + i as f64).sin())
                .collect();
            model.clamp_to_limits(&raw).unwrap()
        })
        .collect();
    let targets: Vec<IkTarget> = configs
        .iter()
        .map(|c| IkTarget::DualArm(DualArmTarget::from_pose(&forward_kinematics(&model, c))))
        .collect();
    let opts = SolveOptions::new(configs[0].clone());
    let results = solve_trajectory(&model, &targets, &LookAtParams::default(), &opts).unwrap();
    assert_eq!(results.len(), targets.len());
    let worst = results.iter().map(|r| r.objective_value).fold(0.0, f64::max);
    assert!(worst < 1e-6, "worst frame objective {worst}");
}

#[test]
fn batch_solves_match_in_both_modes() {
    let model = default_model();
    let home = model.home_config();
    let mut rng = rng(34);
    let problems: Vec<(IkTarget, lookat::JointConfig)> = (0..6)
        .map(|_| {
            let c = perturbed(&model, &home, 0.2, &mut rng);
            let target = IkTarget::DualArm(DualArmTarget::from_pose(&forward_kinematics(&model, &c)));
            (target, perturbed(&model, &c, 0.05, &mut rng))
        })
        .collect();
    let opts = SolveOptions::for_model(&model);
    let params = LookAtParams::default();
    let seq = solve_batch(&model, &problems, &params, &opts, Execution::Sequential);
    let par = solve_batch(&model, &problems, &params, &opts, Execution::Parallel);
    assert_eq!(seq, par);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_stays_on_segment(v in vec3(), u in vec3()) {
        prop_assume!(u.norm() > 1e-3);
        let p = clamped_projection(&v, &u).unwrap();
        let t = p.dot(&u) / u.norm_squared();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&t));
        prop_assert!((p - u * t).norm() < 1e-12);
    }

    #[test]
    fn orientation_loss_matches_brute_force_and_is_translation_invariant(
        p_t in vec3(), p_v in vec3(), dir in vec3(), shift in vec3(),
    ) {
        prop_assume!(dir.norm() > 1e-2);
        let p_f = p_v + dir;
        let loss = viewpoint_orientation_loss(&p_t, &p_v, &p_f).unwrap();
        let brute = brute_segment_distance(&p_t, &p_v, &p_f);
        prop_assert!(loss >= 0.0);
        prop_assert!((loss.sqrt() - brute).abs() < 1e-7);
        let moved = viewpoint_orientation_loss(&(p_t + shift), &(p_v + shift), &(p_f + shift)).unwrap();
        prop_assert!((moved - loss).abs() < 1e-10);
    }

    #[test]
    fn single_arm_objective_is_nonnegative(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let pose = lookat::Pose { position: Vector3::zeros(), orientation: random_quat(&mut rng) };
        let q = random_quat(&mut rng);
        let v = single_arm_objective(&pose, &Vector3::new(0.1, 0.0, 0.0), &q);
        prop_assert!(v >= 0.01 - 1e-15);
        prop_assert!(single_arm_objective(&pose, &pose.position, &pose.orientation) < 1e-24);
    }
}
