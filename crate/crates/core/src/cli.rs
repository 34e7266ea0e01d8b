//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 solver
//! non-convergence above the allowed fraction of frames. Output files are
//! written atomically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use crate::freq::{dataset_heatmap, hfc_energy_ratio};
use crate::ik::{self, IkTarget, LookAtParams, SolveOptions, DEFAULT_DELTA};
use crate::io::{self, format_f64};
use crate::kinematics::{forward_kinematics, Pose};
use crate::par::Execution;
use crate::policy::{run_denoising, AffinePredictor, DenoiseParams, NoisePredictor, ZeroPredictor};
use crate::robot_model::{load_robot_model, RobotModel, DEFAULT_MODEL_DOCUMENT};
use crate::state_spaces::{self, decode_target, DecodedTarget, SpaceId, SpaceVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

/// Result of running one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    /// Lines for standard output.
    pub stdout: String,
    /// Human-readable lines for standard error.
    pub diagnostics: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl CommandOutcome {
    fn ok(stdout: String) -> Self {
        Self {
            exit_code: EXIT_OK,
            stdout,
            diagnostics: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_INVALID,
            stdout: String::new(),
            diagnostics: vec![message.into()],
            artifacts: Vec::new(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "lookat", version, about = "Dual-arm look-at kinematics toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a model document and report its structure.
    ValidateModel(ModelArg),
    /// Forward kinematics of both end-effectors.
    Fk {
        #[command(flatten)]
        model: ModelArg,
        /// Comma-separated joint values in model order.
        #[arg(long, allow_hyphen_values = true)]
        config: String,
    },
    /// Solve IK for one space vector.
    Ik {
        #[command(flatten)]
        model: ModelArg,
        /// Space of the target vector.
        #[arg(long)]
        space: String,
        /// Comma-separated target vector.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Re-express a trajectory document in another space.
    Retarget {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        to: String,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Largest tolerated fraction of non-converged frames.
        #[arg(long, default_value_t = 0.05)]
        fail_threshold: f64,
        /// Keep per-frame canonical quaternion signs instead of aligning them.
        #[arg(long)]
        raw_quaternions: bool,
    },
    /// Frequency heatmap over trajectory documents, grouped by space.
    AnalyzeFreq {
        #[arg(required = true)]
        trajectories: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        cutoff: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the denoising recurrence with a fixture noise predictor.
    DenoiseDemo {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PredictorKind::Zero)]
        predictor: PredictorKind,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        scale: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
    },
}

#[derive(Args, Debug)]
pub struct ModelArg {
    /// Model document; the bundled 17-DOF model when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Comma-separated visual target offset in meters.
    #[arg(long, default_value = "0,0,0.15", allow_hyphen_values = true)]
    pub target_offset: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Comma-separated seed configuration; the model's home when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub seed_config: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictorKind {
    Zero,
    Affine,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli.command),
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandOutcome::ok(text),
                _ => CommandOutcome::invalid(text.trim_end()),
            }
        }
    }
}

pub fn run(command: Command) -> CommandOutcome {
    let result = match command {
        Command::ValidateModel(m) => cmd_validate_model(m.model.as_deref()),
        Command::Fk { model, config } => cmd_fk(model.model.as_deref(), &config),
        Command::Ik {
            model,
            space,
            target,
            solver,
        } => cmd_ik(model.model.as_deref(), &space, &target, &solver),
        Command::Retarget {
            model,
            input,
            to,
            output,
            solver,
            fail_threshold,
            raw_quaternions,
        } => cmd_retarget(
            model.model.as_deref(),
            &input,
            &to,
            &output,
            &solver,
            fail_threshold,
            !raw_quaternions,
        ),
        Command::AnalyzeFreq {
            trajectories,
            cutoff,
            out,
        } => cmd_analyze_freq(&trajectories, cutoff, &out),
        Command::DenoiseDemo {
            dim,
            steps,
            alpha,
            gamma,
            sigma,
            seed,
            predictor,
            scale,
            offset,
        } => {
            let params = DenoiseParams {
                alpha,
                gamma,
                sigma,
                steps,
                rng_seed: seed,
            };
            cmd_denoise_demo(dim, &params, predictor, scale, offset)
        }
    };
    result.unwrap_or_else(CommandOutcome::invalid)
}

fn load_model(path: Option<&Path>) -> Result<RobotModel, String> {
    let text = match path {
        Some(p) => io::read_text(p).map_err(|e| e.to_string())?,
        None => DEFAULT_MODEL_DOCUMENT.to_owned(),
    };
    load_robot_model(&text).map_err(|e| e.to_string())
}

fn parse_list(what: &str, text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("{what}: `{}` is not a number", s.trim()))
        })
        .collect()
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(format_f64).collect::<Vec<_>>().join(" ")
}

fn describe_chain(model: &RobotModel, chain: &[usize], frame: &str) -> String {
    let mut names: Vec<&str> = chain.iter().map(|&i| model.joints()[i].name.as_str()).collect();
    names.push(frame);
    format!("{} ({} joints)", names.join(" -> "), chain.len())
}

pub fn cmd_validate_model(model_path: Option<&Path>) -> Result<CommandOutcome, String> {
    let model = load_model(model_path)?;
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", model.name());
    let _ = writeln!(out, "dof: {}", model.dof());
    let _ = writeln!(
        out,
        "manipulation chain: {}",
        describe_chain(&model, model.manipulation_chain(), "manipulation_ee")
    );
    let _ = writeln!(
        out,
        "viewpoint chain: {}",
        describe_chain(&model, model.viewpoint_chain(), "viewpoint_ee")
    );
    let gripper = model
        .gripper_joint()
        .map_or("none", |g| model.joints()[g].name.as_str());
    let _ = writeln!(out, "gripper: {gripper}");
    Ok(CommandOutcome::ok(out))
}

fn pose_line(label: &str, pose: &Pose) -> String {
    format!(
        "{label} position {} orientation {}\n",
        join(pose.position.iter().copied()),
        join(pose.orientation.to_array())
    )
}

/// The two pose lines printed by `fk`.
pub fn format_fk(model: &RobotModel, values: &[f64]) -> Result<String, String> {
    let config = model.config(values.to_vec()).map_err(|e| e.to_string())?;
    let fk = forward_kinematics(model, &config);
    Ok(pose_line("manipulation_ee", &fk.manipulation) + &pose_line("viewpoint_ee", &fk.viewpoint))
}

pub fn cmd_fk(model_path: Option<&Path>, config: &str) -> Result<CommandOutcome, String> {
    let model = load_model(model_path)?;
    let values = parse_list("config", config)?;
    Ok(CommandOutcome::ok(format_fk(&model, &values)?))
}

fn solver_setup(model: &RobotModel, args: &SolverArgs) -> Result<(LookAtParams, SolveOptions), String> {
    let offset = parse_list("target-offset", &args.target_offset)?;
    if offset.len() != 3 {
        return Err(format!("target-offset: expected 3 values, got {}", offset.len()));
    }
    let params =
        LookAtParams::new(args.delta, Vector3::new(offset[0], offset[1], offset[2])).map_err(|e| e.to_string())?;
    let seed = match &args.seed_config {
        Some(text) => model
            .config(parse_list("seed-config", text)?)
            .map_err(|e| format!("seed-config: {e}"))?,
        None => model.home_config(),
    };
    let options = SolveOptions {
        objective_tolerance: args.tolerance,
        max_iterations: args.max_iters,
        ..SolveOptions::new(seed)
    };
    options.validate().map_err(|e| e.to_string())?;
    Ok((params, options))
}

fn parse_space(text: &str) -> Result<SpaceId, String> {
    text.parse().map_err(|e: state_spaces::SpaceError| e.to_string())
}

pub fn cmd_ik(
    model_path: Option<&Path>,
    space: &str,
    target: &str,
    solver: &SolverArgs,
) -> Result<CommandOutcome, String> {
    let model = load_model(model_path)?;
    let space = parse_space(space)?;
    let (params, mut options) = solver_setup(&model, solver)?;
    let vector = SpaceVector::new(space, parse_list("target", target)?).map_err(|e| e.to_string())?;
    let decoded = decode_target(&vector).map_err(|e| e.to_string())?;
    let target = match decoded.target {
        DecodedTarget::Config(values) => {
            let config = model.clamp_to_limits(&values).map_err(|e| e.to_string())?;
            return Ok(CommandOutcome::ok(format!("config {}\n", join(config.into_values()))));
        }
        DecodedTarget::DualArm(t) => IkTarget::DualArm(t),
        DecodedTarget::LookAt(t) => IkTarget::LookAt(t),
    };
    if let Some(g) = model.gripper_joint() {
        let mut seed = options.seed_config.values().to_vec();
        seed[g] = decoded.gripper;
        options.seed_config = model.clamp_to_limits(&seed).map_err(|e| e.to_string())?;
    }
    let result = ik::solve(&model, &target, &params, &options).map_err(|e| e.to_string())?;
    let mut out = String::new();
    let _ = writeln!(out, "config {}", join(result.config.values().iter().copied()));
    let _ = writeln!(out, "objective {}", format_f64(result.objective_value));
    let _ = writeln!(out, "iterations {}", result.iterations);
    let _ = writeln!(out, "converged {}", result.converged);
    let mut outcome = CommandOutcome::ok(out);
    if !result.converged {
        outcome.exit_code = EXIT_NOT_CONVERGED;
        outcome
            .diagnostics
            .push(format!("solver did not converge: {:?}", result.termination));
    }
    Ok(outcome)
}

/// Sidecar path for the retarget diagnostics: `<output>.diag.csv`.
pub fn diagnostics_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".diag.csv");
    PathBuf::from(name)
}

pub fn cmd_retarget(
    model_path: Option<&Path>,
    input: &Path,
    to: &str,
    output: &Path,
    solver: &SolverArgs,
    fail_threshold: f64,
    quaternion_continuity: bool,
) -> Result<CommandOutcome, String> {
    let model = load_model(model_path)?;
    let to = parse_space(to)?;
    let (params, options) = solver_setup(&model, solver)?;
    if !(0.0..=1.0).contains(&fail_threshold) {
        return Err(format!("fail-threshold must lie in [0, 1], got {fail_threshold}"));
    }
    let traj = io::read_trajectory(input).map_err(|e| e.to_string())?;
    let (out_traj, diagnostics) =
        state_spaces::retarget_trajectory_with(&model, &traj, to, &params, &options, quaternion_continuity)
            .map_err(|e| e.to_string())?;

    let rendered = io::render_trajectory(&out_traj).map_err(|e| e.to_string())?;
    let sidecar = diagnostics_path(output);
    io::write_atomic(&sidecar, &io::render_diagnostics_csv(&diagnostics)).map_err(|e| e.to_string())?;
    io::write_atomic(output, &rendered).map_err(|e| e.to_string())?;

    let failed = diagnostics.iter().filter(|r| !r.converged).count();
    let mut stdout = String::new();
    let _ = writeln!(
        stdout,
        "retargeted {} frames {} -> {} ({} not converged)",
        out_traj.len(),
        traj.space(),
        to,
        failed
    );
    let mut outcome = CommandOutcome::ok(stdout);
    outcome.artifacts = vec![output.to_path_buf(), sidecar];
    if !diagnostics.is_empty() && failed as f64 / diagnostics.len() as f64 > fail_threshold {
        outcome.exit_code = EXIT_NOT_CONVERGED;
        outcome.diagnostics.push(format!(
            "{failed} of {} frames did not converge (threshold {fail_threshold})",
            diagnostics.len()
        ));
    }
    Ok(outcome)
}

pub fn cmd_analyze_freq(paths: &[PathBuf], cutoff: f64, out: &Path) -> Result<CommandOutcome, String> {
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(format!("cutoff must lie in (0, 1), got {cutoff}"));
    }
    let mut datasets: BTreeMap<SpaceId, Vec<_>> = BTreeMap::new();
    for path in paths {
        let traj = io::read_trajectory(path).map_err(|e| e.to_string())?;
        datasets.entry(traj.space()).or_default().push(traj);
    }
    let heatmap = dataset_heatmap(&datasets, Execution::Parallel).map_err(|e| e.to_string())?;
    io::write_atomic(out, &io::render_heatmap_csv(&heatmap)).map_err(|e| e.to_string())?;
    let mut stdout = String::new();
    for row in &heatmap.rows {
        let _ = writeln!(
            stdout,
            "{} hfc_ratio {}",
            row.space,
            format_f64(hfc_energy_ratio(row, cutoff))
        );
    }
    let mut outcome = CommandOutcome::ok(stdout);
    outcome.artifacts.push(out.to_path_buf());
    Ok(outcome)
}

pub fn cmd_denoise_demo(
    dim: usize,
    params: &DenoiseParams,
    predictor: PredictorKind,
    scale: f64,
    offset: f64,
) -> Result<CommandOutcome, String> {
    let predictor: Box<dyn NoisePredictor> = match predictor {
        PredictorKind::Zero => Box::new(ZeroPredictor),
        PredictorKind::Affine => Box::new(AffinePredictor { scale, offset }),
    };
    let sample = run_denoising(&[], predictor.as_ref(), params, dim).map_err(|e| e.to_string())?;
    Ok(CommandOutcome::ok(format!("action {}\n", join(sample.values))))
}
