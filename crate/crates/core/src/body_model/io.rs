//! TOML model files.
//!
//! ```toml
//! end_effector = "r_hand"
//! gravity = 9.81
//!
//! [[segment]]
//! name = "shank"
//! mass = 5.94            # kg
//! length = 0.4216        # m
//! axis = [0.0, 0.0, 1.0]
//! com_offset = [0.0, 0.0, 0.2336]
//! inertia = [[0.0435, 0.0, 0.0], [0.0, 0.0435, 0.0], [0.0, 0.0, 0.0071]]
//!
//! [[joint]]
//! name = "ankle"
//! parent = "ground"
//! child = "shank"
//! origin = [0.0, 0.0, 0.0]
//! reversed = true
//! flexion = { upper = 54.3, lower = -12.2, stiffness = 0.1667, damping = 0.0, neutral = 0.0 }
//! rotation = { ... }
//! abduction = { ... }
//! ```
//!
//! Angles in degrees, stiffness N m/deg, damping N m s/deg.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{BodyModel, DofSpec, JointSpec, Plane, Segment, STANDARD_GRAVITY};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    end_effector: String,
    #[serde(default = "default_gravity")]
    gravity: f64,
    #[serde(rename = "segment")]
    segments: Vec<SegmentRecord>,
    #[serde(rename = "joint")]
    joints: Vec<JointRecord>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentRecord {
    name: String,
    mass: f64,
    length: f64,
    axis: [f64; 3],
    com_offset: [f64; 3],
    /// Row-major.
    inertia: [[f64; 3]; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointRecord {
    name: String,
    parent: String,
    child: String,
    origin: [f64; 3],
    #[serde(default)]
    reversed: bool,
    flexion: DofRecord,
    rotation: DofRecord,
    abduction: DofRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DofRecord {
    upper: f64,
    lower: f64,
    #[serde(default)]
    stiffness: f64,
    #[serde(default)]
    damping: f64,
    #[serde(default)]
    neutral: f64,
}

impl From<&Segment> for SegmentRecord {
    fn from(s: &Segment) -> Self {
        let i = &s.inertia;
        SegmentRecord {
            name: s.name.clone(),
            mass: s.mass,
            length: s.length,
            axis: s.axis.into(),
            com_offset: s.com_offset.into(),
            inertia: [
                [i[(0, 0)], i[(0, 1)], i[(0, 2)]],
                [i[(1, 0)], i[(1, 1)], i[(1, 2)]],
                [i[(2, 0)], i[(2, 1)], i[(2, 2)]],
            ],
        }
    }
}

impl From<SegmentRecord> for Segment {
    fn from(r: SegmentRecord) -> Self {
        let [a, b, c] = r.inertia;
        Segment {
            name: r.name,
            mass: r.mass,
            length: r.length,
            axis: Vector3::from(r.axis),
            com_offset: Vector3::from(r.com_offset),
            inertia: Matrix3::new(a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]),
        }
    }
}

fn dof_record(d: &DofSpec, neutral: f64) -> DofRecord {
    DofRecord {
        upper: d.upper,
        lower: d.lower,
        stiffness: d.stiffness,
        damping: d.damping,
        neutral,
    }
}

pub fn model_to_toml_string(model: &BodyModel) -> String {
    let neutral = model.neutral_posture();
    let file = ModelFile {
        end_effector: model.end_effector_name().to_string(),
        gravity: model.gravity(),
        segments: model.segments().iter().map(SegmentRecord::from).collect(),
        joints: model
            .joints()
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let rec = |p: Plane| dof_record(spec.dof(p), neutral[3 * j + p.index()]);
                JointRecord {
                    name: spec.name.clone(),
                    parent: spec.parent.clone(),
                    child: spec.child.clone(),
                    origin: spec.origin.into(),
                    reversed: spec.reversed,
                    flexion: rec(Plane::Flexion),
                    rotation: rec(Plane::Rotation),
                    abduction: rec(Plane::Abduction),
                }
            })
            .collect(),
    };
    toml::to_string(&file).expect("model serializes")
}

/// Parses model text; `origin` names the source in diagnostics.
pub fn model_from_toml_str(text: &str, origin: &str) -> Result<BodyModel> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.span().map(|s| 1 + text[..s.start].matches('\n').count()),
        message: e.message().to_string(),
    })?;
    let mut neutral = Vec::with_capacity(3 * file.joints.len());
    let joints = file
        .joints
        .into_iter()
        .map(|r| {
            let mut dofs = [DofSpec::new(0.0, 0.0); 3];
            for (plane, d) in [
                (Plane::Flexion, &r.flexion),
                (Plane::Rotation, &r.rotation),
                (Plane::Abduction, &r.abduction),
            ] {
                dofs[plane.index()] =
                    DofSpec::new(d.lower, d.upper).with_viscoelastic(d.stiffness, d.damping);
            }
            neutral.extend([r.flexion.neutral, r.rotation.neutral, r.abduction.neutral]);
            JointSpec {
                name: r.name,
                parent: r.parent,
                child: r.child,
                origin: Vector3::from(r.origin),
                reversed: r.reversed,
                dofs,
            }
        })
        .collect();
    let segments = file.segments.into_iter().map(Segment::from).collect();
    Ok(BodyModel::new(segments, joints, file.end_effector, neutral)?.with_gravity(file.gravity))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BodyModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_toml_str(&text, &path.display().to_string())
}

pub fn save_model(model: &BodyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_toml_string(model)).map_err(|e| Error::io(path, e))
}
