use std::path::{Path, PathBuf};

use crate::body_model::BodyModel;
use crate::controller::{JointTrajectory, ParamLayout};
use crate::dynamics::DynamicsOutput;
use crate::kinematics::forward_kinematics;
use crate::{Error, Result};

use super::mocap::IngestedMotion;
use super::run::SimulationResult;

/// Files whose bytes depend only on the scenario.
pub const DETERMINISTIC_FILES: [&str; 7] = [
    "timeseries.csv",
    "summary.csv",
    "optimizer_log.csv",
    "min_jerk.csv",
    "params.csv",
    "final_pose.csv",
    "segments.csv",
];

/// Wall-clock measurements; the only file that differs between runs.
pub const TIMING_FILE: &str = "timing.csv";

/// Nine significant digits in scientific notation; negative zero prints as zero.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0.00000000e0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}").to_lowercase();
    }
    format!("{v:.8e}")
}

/// Row-oriented CSV file builder.
pub(crate) struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub(crate) fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(header.iter().map(AsRef::as_ref))
            .expect("in-memory write");
        Table { writer }
    }

    pub(crate) fn row<S: AsRef<str>>(&mut self, fields: impl IntoIterator<Item = S>) {
        let fields: Vec<S> = fields.into_iter().collect();
        self.writer
            .write_record(fields.iter().map(AsRef::as_ref))
            .expect("in-memory write");
    }

    pub(crate) fn write(self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        let bytes = self.writer.into_inner().expect("in-memory flush");
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn nums(values: impl IntoIterator<Item = f64>) -> impl Iterator<Item = String> {
    values.into_iter().map(fmt_num)
}

fn key_values(rows: &[(&str, String)]) -> Table {
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in rows {
        t.row([k.to_string(), v.clone()]);
    }
    t
}

/// Writes `timeseries.csv`: `t`, `theta.<dof>` (deg), `tau.<dof>` (N m),
/// `power.<dof>` (W), `total_abs_power` (W), `ee_x..ee_z`, `com_x..com_z` (m).
pub fn write_timeseries(
    model: &BodyModel,
    trajectory: &JointTrajectory,
    dy: &DynamicsOutput,
    dir: &Path,
) -> Result<PathBuf> {
    let names = model.dof_names();
    let mut header = vec!["t".to_string()];
    for prefix in ["theta", "tau", "power"] {
        header.extend(names.iter().map(|n| format!("{prefix}.{n}")));
    }
    header.extend(
        [
            "total_abs_power",
            "ee_x",
            "ee_y",
            "ee_z",
            "com_x",
            "com_y",
            "com_z",
        ]
        .map(String::from),
    );
    let mut ts = Table::new(&header);
    for k in 0..dy.len() {
        let mut row = vec![dy.times[k]];
        row.extend(&trajectory.theta[k]);
        row.extend(&dy.torques[k]);
        row.extend(&dy.power[k]);
        row.push(dy.total_abs_power[k]);
        row.extend(dy.end_effector[k].iter());
        row.extend(dy.com[k].iter());
        ts.row(nums(row));
    }
    ts.write(dir, "timeseries.csv")
}

/// Writes an ingested recording: `timeseries.csv` plus `summary.csv` with
/// its total energy and final COM displacement.
pub fn emit_ingested(
    motion: &IngestedMotion,
    model: &BodyModel,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let dy = &motion.dynamics;
    let d = dy.com_displacement()[dy.len() - 1] * 1e3;
    let mut rows = vec![
        ("samples", dy.len().to_string()),
        ("sample_rate_hz", fmt_num(motion.series.sample_rate())),
        ("total_power_squared_J2", fmt_num(dy.total_power_squared)),
        ("final_com_squared_m2", fmt_num(dy.final_com_squared)),
        ("total_energy_J", fmt_num(dy.total_energy())),
        ("com_displacement_ap_mm", fmt_num(d.x)),
        ("com_displacement_ml_mm", fmt_num(d.y)),
        ("com_displacement_vertical_mm", fmt_num(d.z)),
        ("warnings", motion.warnings.join("; ")),
    ];
    rows.extend(
        motion
            .series
            .metadata
            .iter()
            .map(|(k, v)| ("meta", format!("{k}: {v}"))),
    );
    Ok(vec![
        write_timeseries(model, &motion.trajectory, dy, dir)?,
        key_values(&rows).write(dir, "summary.csv")?,
    ])
}

/// Writes every output file of one scenario into `dir` and returns their paths.
///
/// * `timeseries.csv` - see [`write_timeseries`]
/// * `summary.csv` - `key,value` scalars
/// * `optimizer_log.csv` - one row per accepted iterate
/// * `min_jerk.csv` - reference end-effector path, velocity and acceleration
/// * `params.csv` - optimized final angle and `p6` per active DoF
/// * `final_pose.csv` - final angle of every DoF
/// * `segments.csv` - proximal and distal endpoints of every segment per sample
/// * `timing.csv` - wall-clock seconds
pub fn emit_outputs(result: &SimulationResult, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let model = &result.model;
    let names = model.dof_names();
    let mut written = Vec::new();

    written.push(write_timeseries(
        model,
        &result.trajectory,
        &result.dynamics,
        dir,
    )?);

    let s = &result.summary;
    let opt = &result.optimization;
    let cal = result.calibration.as_ref();
    let opt_num = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let summary = key_values(&[
        ("scenario", result.name.clone()),
        ("strategy", result.strategy.to_string()),
        ("trunk_flexion_deg", opt_num(result.trunk_flexion)),
        ("target_x_m", fmt_num(result.target.x)),
        ("target_y_m", fmt_num(result.target.y)),
        ("target_z_m", fmt_num(result.target.z)),
        ("duration_s", fmt_num(result.t_f)),
        ("active_dofs", result.layout.active().len().to_string()),
        ("lambda0_power", fmt_num(result.lambda0_power)),
        ("lambda0_com", fmt_num(result.lambda0_com)),
        (
            "primary_power_integral",
            opt_num(cal.map(|c| c.power_integral)),
        ),
        ("primary_com_integral", opt_num(cal.map(|c| c.com_integral))),
        ("primary_final_error_m", opt_num(cal.map(|c| c.final_error))),
        ("final_error_m", fmt_num(s.final_error)),
        ("total_power_squared_J2", fmt_num(s.total_power_squared)),
        ("final_com_squared_m2", fmt_num(s.final_com_squared)),
        ("total_energy_J", fmt_num(s.total_energy)),
        ("com_displacement_ap_mm", fmt_num(s.com_displacement_mm[0])),
        ("com_displacement_ml_mm", fmt_num(s.com_displacement_mm[1])),
        (
            "com_displacement_vertical_mm",
            fmt_num(s.com_displacement_mm[2]),
        ),
        ("phys_power", fmt_num(result.report.phys_power)),
        ("phys_com", fmt_num(result.report.phys_com)),
        ("limit_penalty", fmt_num(result.report.penalty)),
        ("composite_cost", fmt_num(result.report.composite)),
        ("p6_norm", fmt_num(s.p6_norm)),
        ("iterations", opt.iterations.to_string()),
        ("evaluations", opt.evaluations.to_string()),
        ("termination", opt.termination.to_string()),
        ("converged", s.converged.to_string()),
        ("notes", result.notes.join("; ")),
    ]);
    written.push(summary.write(dir, "summary.csv")?);

    let mut log = Table::new(&[
        "iteration",
        "cost",
        "error_norm_m",
        "step_norm",
        "sigma",
        "alpha",
    ]);
    for h in &opt.history {
        log.row([
            h.iteration.to_string(),
            fmt_num(h.cost),
            opt_num(h.error_norm),
            fmt_num(h.step_norm),
            fmt_num(h.sigma),
            fmt_num(h.alpha),
        ]);
    }
    written.push(log.write(dir, "optimizer_log.csv")?);

    let mj = &result.min_jerk;
    let mut t = Table::new(&["t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"]);
    for k in 0..mj.times.len() {
        let mut row = vec![mj.times[k]];
        row.extend(mj.position[k].iter());
        row.extend(mj.velocity[k].iter());
        row.extend(mj.acceleration[k].iter());
        t.row(nums(row));
    }
    written.push(t.write(dir, "min_jerk.csv")?);

    let mut t = Table::new(&["dof", "theta_f_deg", "p6_deg_per_s6"]);
    for (k, &dof) in result.layout.active().iter().enumerate() {
        t.row([
            names[dof].clone(),
            fmt_num(result.params[ParamLayout::theta_f_index(k)]),
            fmt_num(result.params[ParamLayout::p6_index(k)]),
        ]);
    }
    written.push(t.write(dir, "params.csv")?);

    let last = result
        .trajectory
        .theta
        .last()
        .expect("non-empty trajectory");
    let mut t = Table::new(&["dof", "theta_deg"]);
    for (n, v) in names.iter().zip(last) {
        t.row([n.clone(), fmt_num(*v)]);
    }
    written.push(t.write(dir, "final_pose.csv")?);

    let mut t = Table::new(&["t", "segment", "px", "py", "pz", "dx", "dy", "dz"]);
    for (k, q) in result.trajectory.theta.iter().enumerate() {
        let poses = forward_kinematics(model, q)?;
        for (i, seg) in model.segments().iter().enumerate() {
            let p = poses.origins[i];
            let d = poses.distal_point(model, i);
            let mut row = vec![fmt_num(result.trajectory.times[k]), seg.name.clone()];
            row.extend(nums(p.iter().chain(d.iter()).copied()));
            t.row(row);
        }
    }
    written.push(t.write(dir, "segments.csv")?);

    let mut t = Table::new(&["phase", "wall_time_s"]);
    if let Some(c) = cal {
        t.row(["primary".to_string(), format!("{:.6}", c.primary.wall_time)]);
    }
    t.row(["search".to_string(), format!("{:.6}", opt.wall_time)]);
    written.push(t.write(dir, TIMING_FILE)?);
    Ok(written)
}
