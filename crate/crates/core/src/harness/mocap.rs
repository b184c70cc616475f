use std::path::Path;

use crate::body_model::BodyModel;
use crate::controller::JointTrajectory;
use crate::dynamics::{evaluate_movement, DynamicsOutput};
use crate::{Error, Result};

use super::output::fmt_num;
use super::savgol::{savgol_filter, DEFAULT_ORDER, DEFAULT_WINDOW};

/// Nominal capture rate, Hz.
pub const MOCAP_RATE: f64 = 120.0;

/// Angles beyond a joint range by more than this (deg) draw a warning.
pub const LIMIT_WARNING_MARGIN: f64 = 30.0;

/// Relative tolerance on the spacing of time stamps.
const UNIFORM_TOLERANCE: f64 = 1e-6;

/// Recorded joint angles.
///
/// Text form: `#`-prefixed `key: value` metadata lines, a header
/// `t,<joint.plane>...`, then one row per sample with time in s and angles
/// in deg. DoF not listed stay at the model's neutral angle.
#[derive(Clone, Debug, PartialEq)]
pub struct MocapSeries {
    pub times: Vec<f64>,
    pub dofs: Vec<String>,
    /// `angles[k][c]` for sample `k` and column `c`, deg.
    pub angles: Vec<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

fn parse_err(origin: &str, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

impl MocapSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean sample rate, Hz.
    pub fn sample_rate(&self) -> f64 {
        (self.len() - 1) as f64 / (self.times[self.len() - 1] - self.times[0])
    }

    /// One column, deg.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.angles.iter().map(|row| row[c]).collect()
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let metadata = text
            .lines()
            .filter_map(|l| l.trim_start().strip_prefix('#'))
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = match records.next() {
            None => return Err(parse_err(origin, None, "no header row")),
            Some(r) => r.map_err(|e| {
                parse_err(
                    origin,
                    e.position().map(|p| p.line() as usize),
                    e.to_string(),
                )
            })?,
        };
        let header_line = header.position().map(|p| p.line() as usize);
        if header.get(0) != Some("t") {
            return Err(parse_err(origin, header_line, "first column must be `t`"));
        }
        let dofs: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        if dofs.is_empty() {
            return Err(parse_err(origin, header_line, "no angle columns"));
        }
        for (i, d) in dofs.iter().enumerate() {
            if dofs[..i].contains(d) {
                return Err(parse_err(
                    origin,
                    header_line,
                    format!("duplicate column `{d}`"),
                ));
            }
        }
        let mut times = Vec::new();
        let mut angles = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| {
                parse_err(
                    origin,
                    e.position().map(|p| p.line() as usize),
                    e.to_string(),
                )
            })?;
            let line = rec.position().map(|p| p.line() as usize);
            let values = rec
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(f))
                .collect::<std::result::Result<Vec<f64>, &str>>()
                .map_err(|f| parse_err(origin, line, format!("`{f}` is not a finite number")))?;
            if let Some(&prev) = times.last() {
                if values[0] <= prev {
                    return Err(parse_err(
                        origin,
                        line,
                        format!("time {} does not increase", values[0]),
                    ));
                }
            }
            times.push(values[0]);
            angles.push(values[1..].to_vec());
        }
        if times.is_empty() {
            return Err(parse_err(origin, None, "no samples"));
        }
        let series = MocapSeries {
            times,
            dofs,
            angles,
            metadata,
        };
        series.check_uniform()?;
        Ok(series)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    fn check_uniform(&self) -> Result<()> {
        if self.len() < 2 {
            return Ok(());
        }
        let dt = (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64;
        for (k, w) in self.times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > UNIFORM_TOLERANCE * dt.max(1.0) {
                return Err(Error::Validation(format!(
                    "non-uniform sampling between samples {k} and {} ({} s vs mean {dt} s)",
                    k + 1,
                    w[1] - w[0]
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("t").chain(self.dofs.iter().map(String::as_str)))
            .expect("in-memory write");
        for (t, row) in self.times.iter().zip(&self.angles) {
            w.write_record(std::iter::once(fmt_num(*t)).chain(row.iter().map(|v| fmt_num(*v))))
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Recorded motion pushed through smoothing, differentiation and inverse dynamics.
#[derive(Clone, Debug)]
pub struct IngestedMotion {
    pub series: MocapSeries,
    /// Smoothed angles with their derivatives, all model DoF.
    pub trajectory: JointTrajectory,
    pub dynamics: DynamicsOutput,
    /// Magnitude sanity warnings (likely convention mismatches).
    pub warnings: Vec<String>,
}

/// Central differences inside, one-sided at the ends.
pub fn differentiate(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

/// Smooths each recorded DoF with the 61-point 4th-order filter,
/// differentiates twice and runs inverse dynamics.
pub fn ingest_series(series: MocapSeries, model: &BodyModel) -> Result<IngestedMotion> {
    let n = series.len();
    if series
        .angles
        .iter()
        .any(|row| row.len() != series.dofs.len())
    {
        return Err(Error::Contract("mocap rows and columns disagree".into()));
    }
    series.check_uniform()?;
    let columns = series
        .dofs
        .iter()
        .map(|d| {
            model
                .find_dof(d)
                .ok_or_else(|| Error::Config(format!("mocap column `{d}` is not a model DoF")))
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut warnings = Vec::new();
    let dofs = model.dof_count();
    let neutral = model.neutral_posture();
    let mut theta = vec![neutral.to_vec(); n];
    let mut theta_dot = vec![vec![0.0; dofs]; n];
    let mut theta_ddot = vec![vec![0.0; dofs]; n];
    for (c, &dof) in columns.iter().enumerate() {
        let raw = series.column(c);
        let spec = model.dof(dof);
        let worst = raw
            .iter()
            .map(|&a| (a - spec.upper).max(spec.lower - a))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > LIMIT_WARNING_MARGIN {
            warnings.push(format!(
                "{} leaves [{}, {}] by up to {:.1} deg; check the angle convention",
                series.dofs[c], spec.lower, spec.upper, worst
            ));
        }
        let smooth = savgol_filter(&raw, DEFAULT_WINDOW, DEFAULT_ORDER)?;
        let vel = differentiate(&series.times, &smooth);
        let acc = differentiate(&series.times, &vel);
        for k in 0..n {
            theta[k][dof] = smooth[k];
            theta_dot[k][dof] = vel[k];
            theta_ddot[k][dof] = acc[k];
        }
    }
    let trajectory = JointTrajectory::new(series.times.clone(), theta, theta_dot, theta_ddot)?;
    let dynamics = evaluate_movement(model, &trajectory)?;
    Ok(IngestedMotion {
        series,
        trajectory,
        dynamics,
        warnings,
    })
}

/// Loads and ingests a recording.
pub fn ingest_mocap(path: impl AsRef<Path>, model: &BodyModel) -> Result<IngestedMotion> {
    ingest_series(MocapSeries::load(path)?, model)
}
