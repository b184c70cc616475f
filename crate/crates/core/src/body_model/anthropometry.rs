//! Segment parameters from stature and body mass.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{BodyModel, DofSpec, JointSpec, Plane, Segment, GROUND};
use crate::{Error, Result};

const DEFAULT_TABLE_TOML: &str = include_str!("../../data/anthropometrics.toml");
const DEFAULT_JOINT_TABLE_TOML: &str = include_str!("../../data/joint_table.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn unit(self) -> Vector3<f64> {
        match self {
            Direction::Up => Vector3::z(),
            Direction::Down => -Vector3::z(),
        }
    }
}

/// Regression ratios and tree placement of one segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRatios {
    pub name: String,
    /// Joint that attaches this segment to `parent`.
    pub joint: String,
    pub parent: String,
    pub direction: Direction,
    /// Lateral (+y) offset of the attachment, fraction of stature.
    #[serde(default)]
    pub lateral: f64,
    #[serde(default)]
    pub reversed: bool,
    pub mass_fraction: f64,
    pub length_fraction: f64,
    pub com_fraction: f64,
    /// Sagittal, transverse, longitudinal radii of gyration over length.
    pub gyration: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnthropometricTable {
    pub end_effector: String,
    #[serde(rename = "segment")]
    pub segments: Vec<SegmentRatios>,
}

impl AnthropometricTable {
    /// The shipped table.
    pub fn standard() -> Self {
        Self::from_toml_str(DEFAULT_TABLE_TOML).expect("shipped anthropometric table parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("anthropometric table: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v.is_finite() && v > 0.0 && v <= 1.0;
        let mut mass_sum = 0.0;
        for s in &self.segments {
            let bad = |field: &str, v: f64| {
                Err(Error::Config(format!(
                    "anthropometric entry `{}`: {field} = {v} outside (0, 1]",
                    s.name
                )))
            };
            if !in_unit(s.mass_fraction) {
                return bad("mass_fraction", s.mass_fraction);
            }
            if !in_unit(s.length_fraction) {
                return bad("length_fraction", s.length_fraction);
            }
            if !in_unit(s.com_fraction) {
                return bad("com_fraction", s.com_fraction);
            }
            for g in s.gyration {
                if !in_unit(g) {
                    return bad("gyration", g);
                }
            }
            if !s.lateral.is_finite() || s.lateral.abs() > 1.0 {
                return Err(Error::Config(format!(
                    "anthropometric entry `{}`: lateral = {} outside [-1, 1]",
                    s.name, s.lateral
                )));
            }
            mass_sum += s.mass_fraction;
        }
        if mass_sum > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "anthropometric mass fractions sum to {mass_sum} > 1"
            )));
        }
        Ok(())
    }
}

/// Limits and viscoelastic coefficients for one plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneEntry {
    pub upper: f64,
    pub lower: f64,
    #[serde(default)]
    pub stiffness: f64,
    #[serde(default)]
    pub damping: f64,
}

impl From<PlaneEntry> for DofSpec {
    fn from(e: PlaneEntry) -> Self {
        DofSpec::new(e.lower, e.upper).with_viscoelastic(e.stiffness, e.damping)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTableEntry {
    pub name: String,
    pub flexion: PlaneEntry,
    pub rotation: PlaneEntry,
    pub abduction: PlaneEntry,
}

impl JointTableEntry {
    pub fn dofs(&self) -> [DofSpec; 3] {
        let mut out = [DofSpec::new(0.0, 0.0); 3];
        out[Plane::Flexion.index()] = self.flexion.into();
        out[Plane::Rotation.index()] = self.rotation.into();
        out[Plane::Abduction.index()] = self.abduction.into();
        out
    }
}

/// Joint range of motion and passive coefficients, keyed by joint name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointTable {
    #[serde(rename = "joint")]
    pub joints: Vec<JointTableEntry>,
}

impl JointTable {
    /// The shipped range-of-motion and viscoelasticity table.
    pub fn standard() -> Self {
        Self::from_toml_str(DEFAULT_JOINT_TABLE_TOML).expect("shipped joint table parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("joint table: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn get(&self, name: &str) -> Option<&JointTableEntry> {
        self.joints.iter().find(|j| j.name == name)
    }
}

/// Scales the table to a subject using the shipped joint table.
pub fn build_from_anthropometrics(
    height: f64,
    mass: f64,
    table: &AnthropometricTable,
) -> Result<BodyModel> {
    build_with_joint_table(height, mass, table, &JointTable::standard())
}

/// Scales `table` to a subject of stature `height` (m) and mass `mass` (kg).
///
/// Segment mass = fraction x mass, length = fraction x height, inertia from
/// the radii of gyration with principal axes along the segment frame. The
/// neutral posture is all-zero (upright, arms at the sides).
pub fn build_with_joint_table(
    height: f64,
    mass: f64,
    table: &AnthropometricTable,
    joint_table: &JointTable,
) -> Result<BodyModel> {
    if !(height.is_finite() && height > 0.0) {
        return Err(Error::Contract(format!(
            "height must be positive, got {height}"
        )));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Contract(format!(
            "mass must be positive, got {mass}"
        )));
    }
    table.validate()?;

    let mut segments = Vec::with_capacity(table.segments.len());
    let mut joints = Vec::with_capacity(table.segments.len());
    for r in &table.segments {
        let m = r.mass_fraction * mass;
        let len = r.length_fraction * height;
        let axis = r.direction.unit();
        let [sag, trans, long] = r.gyration.map(|g| m * (g * len).powi(2));
        segments.push(Segment {
            name: r.name.clone(),
            mass: m,
            length: len,
            axis,
            com_offset: axis * (r.com_fraction * len),
            inertia: Matrix3::from_diagonal(&Vector3::new(trans, sag, long)),
        });
    }
    for r in &table.segments {
        let entry = joint_table.get(&r.joint).ok_or_else(|| {
            Error::Config(format!(
                "anthropometric entry `{}`: joint `{}` missing from the joint table",
                r.name, r.joint
            ))
        })?;
        let origin = if r.parent == GROUND {
            Vector3::zeros()
        } else {
            let parent = segments
                .iter()
                .find(|s| s.name == r.parent)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "anthropometric entry `{}`: unknown parent `{}`",
                        r.name, r.parent
                    ))
                })?;
            parent.distal_point() + Vector3::y() * (r.lateral * height)
        };
        joints.push(JointSpec {
            name: r.joint.clone(),
            parent: r.parent.clone(),
            child: r.name.clone(),
            origin,
            reversed: r.reversed,
            dofs: entry.dofs(),
        });
    }
    let neutral = vec![0.0; 3 * joints.len()];
    BodyModel::new(segments, joints, table.end_effector.clone(), neutral)
}

/// Doubles thigh and shank mass and inertia so a single leg stands in for
/// two. Not idempotent: applying it twice quadruples.
pub fn double_leg_masses(model: &BodyModel) -> Result<BodyModel> {
    let mut out = model.clone();
    for name in ["thigh", "shank"] {
        let i = out.segment_index(name).ok_or_else(|| {
            Error::Config(format!(
                "cannot double leg masses: segment `{name}` missing"
            ))
        })?;
        let seg = &mut out.segments_mut()[i];
        seg.mass *= 2.0;
        seg.inertia *= 2.0;
    }
    Ok(out)
}
