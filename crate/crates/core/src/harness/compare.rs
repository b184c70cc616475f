use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cost::Strategy;
use crate::Result;

use super::config::{LambdaSetting, ScenarioConfig, TargetConfig};
use super::output::{emit_outputs, ensure_dir, fmt_num, Table};
use super::run::{calibrate, run_resolved, Calibration, SimulationResult};
use super::target::target_label;

/// One strategy on one target.
#[derive(Debug)]
pub struct CompareCell {
    pub target: String,
    pub trunk_flexion: f64,
    pub strategy: Strategy,
    /// The run, or why it failed.
    pub outcome: std::result::Result<SimulationResult, String>,
}

/// Calibration shared by every strategy of one target.
#[derive(Debug)]
pub struct TargetCalibration {
    pub target: String,
    pub outcome: Option<std::result::Result<Calibration, String>>,
}

#[derive(Debug)]
pub struct CompareReport {
    pub targets: Vec<String>,
    pub strategies: Vec<Strategy>,
    pub calibrations: Vec<TargetCalibration>,
    /// Target-major order.
    pub cells: Vec<CompareCell>,
}

impl CompareReport {
    pub fn cell(&self, target: &str, strategy: Strategy) -> Option<&CompareCell> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.strategy == strategy)
    }

    /// Successful result of a cell.
    pub fn result(&self, target: &str, strategy: Strategy) -> Option<&SimulationResult> {
        self.cell(target, strategy)
            .and_then(|c| c.outcome.as_ref().ok())
    }
}

fn label(flexion: f64) -> String {
    target_label(flexion)
        .map(str::to_string)
        .unwrap_or_else(|| format!("flex{flexion}"))
}

/// Runs every strategy on every trunk-flexion target of `base`. Each target
/// gets one minimum-error primary run whose integrals set any `auto` weight,
/// and that run doubles as the minimum-error cell.
pub fn compare_strategies(
    base: &ScenarioConfig,
    strategies: &[Strategy],
    trunk_flexions: &[f64],
) -> Result<CompareReport> {
    // resolve everything up front so configuration errors are fatal
    let mut resolved = Vec::new();
    for &f in trunk_flexions {
        let mut row = Vec::new();
        for &s in strategies {
            let mut cfg = base.clone();
            cfg.strategy = s;
            cfg.name = Some(format!("{}-{}", label(f), s));
            cfg.target = TargetConfig {
                trunk_flexion: Some(f),
                position: None,
            };
            row.push(cfg.resolve()?);
        }
        resolved.push(row);
    }
    let wants_auto = strategies.iter().any(|s| {
        (s.uses_power() && base.lambda0.power == LambdaSetting::Auto)
            || (s.uses_com() && base.lambda0.com == LambdaSetting::Auto)
            || *s == Strategy::MinError
    });

    let per_target: Vec<(TargetCalibration, Vec<CompareCell>)> = resolved
        .par_iter()
        .zip(trunk_flexions)
        .map(|(row, &f)| {
            let calibration = wants_auto.then(|| calibrate(&row[0]).map_err(|e| e.to_string()));
            let cells = row
                .par_iter()
                .map(|sc| {
                    let outcome = match &calibration {
                        Some(Err(e)) => Err(format!("calibration failed: {e}")),
                        Some(Ok(c)) => run_resolved(sc, Some(c)).map_err(|e| e.to_string()),
                        None => run_resolved(sc, None).map_err(|e| e.to_string()),
                    };
                    CompareCell {
                        target: label(f),
                        trunk_flexion: f,
                        strategy: sc.strategy,
                        outcome,
                    }
                })
                .collect();
            (
                TargetCalibration {
                    target: label(f),
                    outcome: calibration,
                },
                cells,
            )
        })
        .collect();

    let mut report = CompareReport {
        targets: trunk_flexions.iter().map(|&f| label(f)).collect(),
        strategies: strategies.to_vec(),
        calibrations: Vec::new(),
        cells: Vec::new(),
    };
    for (cal, cells) in per_target {
        report.calibrations.push(cal);
        report.cells.extend(cells);
    }
    Ok(report)
}

/// Writes the comparison tables and, with `per_cell`, every cell's full
/// output under `<target>/<strategy>/`.
///
/// * `costs.csv` - total power squared (J^2) and final COM squared (m^2)
/// * `com_displacement.csv` - final COM displacement components, mm
/// * `energy.csv` - total energy, J
/// * `calibration.csv` - primary-run integrals and weights per target
/// * `cpu_time.csv` - wall-clock seconds (not reproducible)
pub fn write_compare(
    report: &CompareReport,
    dir: impl AsRef<Path>,
    per_cell: bool,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let mut costs = Table::new(&[
        "target",
        "strategy",
        "status",
        "total_power_squared_J2",
        "final_com_squared_m2",
        "final_error_m",
        "p6_norm",
        "iterations",
        "termination",
    ]);
    let mut com = Table::new(&["target", "strategy", "ap_mm", "ml_mm", "vertical_mm"]);
    let mut energy = Table::new(&["target", "strategy", "total_energy_J"]);
    let mut cpu = Table::new(&["target", "strategy", "wall_time_s"]);
    let mut written = Vec::new();
    for cell in &report.cells {
        let (t, s) = (cell.target.clone(), cell.strategy.to_string());
        match &cell.outcome {
            Ok(r) => {
                let m = &r.summary;
                let status = if m.converged {
                    "converged"
                } else {
                    "not-converged"
                };
                costs.row([
                    t.clone(),
                    s.clone(),
                    status.to_string(),
                    fmt_num(m.total_power_squared),
                    fmt_num(m.final_com_squared),
                    fmt_num(m.final_error),
                    fmt_num(m.p6_norm),
                    r.optimization.iterations.to_string(),
                    r.optimization.termination.to_string(),
                ]);
                com.row(
                    [t.clone(), s.clone()]
                        .into_iter()
                        .chain(m.com_displacement_mm.map(fmt_num)),
                );
                energy.row([t.clone(), s.clone(), fmt_num(m.total_energy)]);
                cpu.row([
                    t.clone(),
                    s.clone(),
                    format!("{:.6}", r.optimization.wall_time),
                ]);
                if per_cell {
                    written.extend(emit_outputs(r, dir.join(&t).join(&s))?);
                }
            }
            Err(e) => {
                costs.row(
                    [t.clone(), s.clone(), format!("failed: {e}")]
                        .into_iter()
                        .chain(std::iter::repeat_n(String::new(), 6)),
                );
                com.row([
                    t.clone(),
                    s.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                energy.row([t.clone(), s.clone(), String::new()]);
                cpu.row([t, s, String::new()]);
            }
        }
    }
    let mut cal = Table::new(&[
        "target",
        "status",
        "power_integral",
        "com_integral",
        "lambda0_power",
        "lambda0_com",
        "final_error_m",
    ]);
    for c in &report.calibrations {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        match &c.outcome {
            None => cal.row(
                [c.target.clone(), "not-needed".into()]
                    .into_iter()
                    .chain(std::iter::repeat_n(String::new(), 5)),
            ),
            Some(Err(e)) => cal.row(
                [c.target.clone(), format!("failed: {e}")]
                    .into_iter()
                    .chain(std::iter::repeat_n(String::new(), 5)),
            ),
            Some(Ok(k)) => cal.row([
                c.target.clone(),
                "ok".into(),
                fmt_num(k.power_integral),
                fmt_num(k.com_integral),
                opt(k.lambda0_power),
                opt(k.lambda0_com),
                fmt_num(k.final_error),
            ]),
        }
    }
    written.push(costs.write(dir, "costs.csv")?);
    written.push(com.write(dir, "com_displacement.csv")?);
    written.push(energy.write(dir, "energy.csv")?);
    written.push(cal.write(dir, "calibration.csv")?);
    written.push(cpu.write(dir, "cpu_time.csv")?);
    Ok(written)
}
