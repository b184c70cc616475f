use nalgebra::Vector3;

use crate::body_model::BodyModel;
use crate::controller::{min_jerk_state, time_grid, JointTrajectory, ParamLayout, DEFAULT_STEP};
use crate::cost::{
    calibrate_lambda0, com_integral, power_integral, CostReport, CostSpec, Strategy,
};
use crate::dynamics::DynamicsOutput;
use crate::kinematics::forward_kinematics;
use crate::optimizer::{optimize, OptResult, Termination};
use crate::problem::ReachProblem;
use crate::Result;

use super::config::{LambdaSetting, ResolvedScenario, ScenarioConfig};

/// End-effector path of the minimum-jerk reference on the standard grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MinJerkPath {
    pub times: Vec<f64>,
    pub position: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    pub acceleration: Vec<Vector3<f64>>,
}

pub fn min_jerk_reference(
    x0: Vector3<f64>,
    xf: Vector3<f64>,
    duration: f64,
    step: f64,
) -> Result<MinJerkPath> {
    let times = time_grid(duration, step)?;
    let mut path = MinJerkPath {
        position: Vec::with_capacity(times.len()),
        velocity: Vec::with_capacity(times.len()),
        acceleration: Vec::with_capacity(times.len()),
        times: Vec::new(),
    };
    for &t in &times {
        let (x, v, a) = min_jerk_state(x0, xf, duration, t)?;
        path.position.push(x);
        path.velocity.push(v);
        path.acceleration.push(a);
    }
    path.times = times;
    Ok(path)
}

/// Outcome of the minimum-error primary run used to set the weights.
#[derive(Clone, Debug)]
pub struct Calibration {
    pub primary: OptResult,
    /// Controller parameters of the primary optimum.
    pub params: Vec<f64>,
    pub final_error: f64,
    /// Power integral of the primary movement with R applied.
    pub power_integral: f64,
    /// COM integral of the primary movement with R applied, m^2 s.
    pub com_integral: f64,
    /// `None` when the integral vanished (e.g. a target needing no motion).
    pub lambda0_power: Option<f64>,
    pub lambda0_com: Option<f64>,
}

/// Scalars reported per run.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    /// m.
    pub final_error: f64,
    /// J^2.
    pub total_power_squared: f64,
    /// m^2.
    pub final_com_squared: f64,
    /// J.
    pub total_energy: f64,
    /// Final minus initial COM (anteroposterior, mediolateral, vertical), mm.
    pub com_displacement_mm: [f64; 3],
    /// Euclidean norm of the `p6` coefficients, deg s^-6.
    pub p6_norm: f64,
    pub converged: bool,
}

impl Summary {
    pub fn of(
        dynamics: &DynamicsOutput,
        report: &CostReport,
        layout: &ParamLayout,
        params: &[f64],
        opt: &OptResult,
    ) -> Self {
        let d = dynamics.com_displacement();
        let last = d[d.len() - 1] * 1e3;
        let p6_norm = (0..layout.active().len())
            .map(|k| params[ParamLayout::p6_index(k)].powi(2))
            .sum::<f64>()
            .sqrt();
        Summary {
            final_error: report.error_norm(),
            total_power_squared: dynamics.total_power_squared,
            final_com_squared: dynamics.final_com_squared,
            total_energy: dynamics.total_energy(),
            com_displacement_mm: [last.x, last.y, last.z],
            p6_norm,
            converged: matches!(
                opt.termination,
                Termination::CostTol | Termination::ErrorTol
            ),
        }
    }
}

/// Everything one scenario produces.
#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub name: String,
    pub strategy: Strategy,
    pub model: BodyModel,
    pub layout: ParamLayout,
    pub target: Vector3<f64>,
    pub trunk_flexion: Option<f64>,
    pub t_f: f64,
    pub lambda0_power: f64,
    pub lambda0_com: f64,
    pub calibration: Option<Calibration>,
    /// Search record; its parameters are search variables (see [`ReachProblem::to_params`]).
    pub optimization: OptResult,
    /// Controller parameters `[theta_f, p6]` per active DoF, clamped.
    pub params: Vec<f64>,
    pub trajectory: JointTrajectory,
    pub dynamics: DynamicsOutput,
    pub report: CostReport,
    pub min_jerk: MinJerkPath,
    pub summary: Summary,
    pub notes: Vec<String>,
}

fn problem(
    sc: &ResolvedScenario,
    strategy: Strategy,
    lambda_power: f64,
    lambda_com: f64,
) -> Result<ReachProblem> {
    let mut spec =
        CostSpec::new(strategy, sc.target, sc.t_f).with_lambdas(lambda_power, lambda_com);
    spec.power_weights = sc.power_weights.clone();
    spec.com_weights = sc.com_weights;
    spec.tolerance_error = sc.optimizer.error_tolerance;
    ReachProblem::new(sc.model.clone(), sc.layout.clone(), spec)?
        .with_penalty_weight(sc.penalty_weight)
}

fn search(prob: &ReachProblem, sc: &ResolvedScenario) -> Result<OptResult> {
    let u0 = prob.to_search(&prob.initial_params());
    optimize(prob, &u0, &sc.optimizer)
}

/// Runs the minimum-error primary simulation and inverts its integrals.
pub fn calibrate(sc: &ResolvedScenario) -> Result<Calibration> {
    let prob = problem(sc, Strategy::MinError, 0.0, 0.0)?;
    let primary = search(&prob, sc)?;
    let ev = prob.evaluate(&primary.params)?;
    let power = power_integral(&ev.dynamics, &sc.power_weights)?;
    let com = com_integral(&ev.dynamics, sc.com_weights);
    Ok(Calibration {
        final_error: ev.report.error_norm(),
        params: ev.params,
        primary,
        power_integral: power,
        com_integral: com,
        lambda0_power: calibrate_lambda0(power).ok(),
        lambda0_com: calibrate_lambda0(com).ok(),
    })
}

fn needs_calibration(sc: &ResolvedScenario) -> bool {
    (sc.strategy.uses_power() && sc.lambda0.power == LambdaSetting::Auto)
        || (sc.strategy.uses_com() && sc.lambda0.com == LambdaSetting::Auto)
}

/// Runs a resolved scenario, reusing `calibration` when given.
pub fn run_resolved(
    sc: &ResolvedScenario,
    calibration: Option<&Calibration>,
) -> Result<SimulationResult> {
    let mut notes = Vec::new();
    let owned;
    let calibration = match calibration {
        Some(c) => Some(c),
        None if needs_calibration(sc) => {
            owned = calibrate(sc)?;
            Some(&owned)
        }
        None => None,
    };
    let mut pick =
        |setting: LambdaSetting, used: bool, auto: Option<Option<f64>>, what: &str| match setting {
            LambdaSetting::Value(v) => v,
            LambdaSetting::Auto if !used => 0.0,
            LambdaSetting::Auto => match auto.flatten() {
                Some(v) => v,
                None => {
                    notes.push(format!(
                        "{what} integral of the primary run vanished; lambda0 set to 0"
                    ));
                    0.0
                }
            },
        };
    let lambda_power = pick(
        sc.lambda0.power,
        sc.strategy.uses_power(),
        calibration.map(|c| c.lambda0_power),
        "power",
    );
    let lambda_com = pick(
        sc.lambda0.com,
        sc.strategy.uses_com(),
        calibration.map(|c| c.lambda0_com),
        "COM",
    );

    let prob = problem(sc, sc.strategy, lambda_power, lambda_com)?;
    let optimization = match calibration {
        // the primary run already is the minimum-error optimum
        Some(c) if sc.strategy == Strategy::MinError => c.primary.clone(),
        _ => search(&prob, sc)?,
    };
    if !matches!(
        optimization.termination,
        Termination::CostTol | Termination::ErrorTol
    ) {
        notes.push(format!(
            "search stopped by {} with final error {:.3e} m",
            optimization.termination,
            optimization.error_norm.unwrap_or(f64::NAN)
        ));
    }
    let ev = prob.evaluate(&optimization.params)?;
    let start = forward_kinematics(&sc.model, sc.model.neutral_posture())?.end_effector;
    let min_jerk = min_jerk_reference(start, sc.target, sc.t_f, DEFAULT_STEP)?;
    let summary = Summary::of(
        &ev.dynamics,
        &ev.report,
        &sc.layout,
        &ev.params,
        &optimization,
    );
    Ok(SimulationResult {
        name: sc.name.clone(),
        strategy: sc.strategy,
        model: sc.model.clone(),
        layout: sc.layout.clone(),
        target: sc.target,
        trunk_flexion: sc.trunk_flexion,
        t_f: sc.t_f,
        lambda0_power: prob.spec().effective_lambda_power(),
        lambda0_com: prob.spec().effective_lambda_com(),
        calibration: calibration.cloned(),
        optimization,
        params: ev.params,
        trajectory: ev.trajectory,
        dynamics: ev.dynamics,
        report: ev.report,
        min_jerk,
        summary,
        notes,
    })
}

/// Builds the model, places the target, calibrates when asked to, and
/// optimizes. Writing files is left to [`super::emit_outputs`].
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimulationResult> {
    run_resolved(&config.resolve()?, None)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| {
                    crate::Error::Config(format!("cannot start {n} worker threads: {e}"))
                })?;
            Ok(pool.install(f))
        }
    }
}
