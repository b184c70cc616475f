//! The articulated body: segments connected by three-DoF rotational joints
//! in a tree rooted at a fixed ground attachment (the ankle).
//!
//! Degrees of freedom are indexed joint-major, plane-minor: DoF `3 * j + k`
//! is plane `k` ([`Plane::ALL`] order) of joint `j` in [`BodyModel::joints`]
//! order. All angles are in degrees.

mod anthropometry;
pub mod fixtures;
mod io;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::{Error, Result};

pub use anthropometry::{
    build_from_anthropometrics, build_with_joint_table, double_leg_masses, AnthropometricTable,
    Direction, JointTable, JointTableEntry, PlaneEntry, SegmentRatios,
};
pub use io::{load_model, model_from_toml_str, model_to_toml_string, save_model};

/// Name used as the parent of the base joint.
pub const GROUND: &str = "ground";

/// Standard gravitational acceleration, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.81;

/// A DoF whose range is no wider than this (deg) is treated as locked.
pub const LOCK_BAND: f64 = 0.02;

/// Stature (m) and body mass (kg) of the reference subject.
pub const REFERENCE_HEIGHT: f64 = 1.6912;
pub const REFERENCE_MASS: f64 = 68.59;

const DEFAULT_MODEL_TOML: &str = include_str!("../../data/default_model.toml");

/// A rigid body segment. The proximal joint sits at the frame origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub name: String,
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// Unit vector from the proximal joint toward the distal end, segment frame.
    pub axis: Vector3<f64>,
    /// COM position from the proximal joint, segment frame, m.
    pub com_offset: Vector3<f64>,
    /// Inertia about the COM, segment frame, kg m^2.
    pub inertia: Matrix3<f64>,
}

impl Segment {
    /// Distal endpoint in the segment frame.
    pub fn distal_point(&self) -> Vector3<f64> {
        self.axis * self.length
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::Validation(format!(
                "segment `{}`: {what}",
                self.name
            )))
        };
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("length must be positive");
        }
        if (self.axis.norm() - 1.0).abs() > 1e-9 {
            return bad("axis must be a unit vector");
        }
        if self.com_offset.norm() > self.length * (1.0 + 1e-12) {
            return bad("COM offset exceeds segment length");
        }
        if self.inertia.iter().any(|v| !v.is_finite()) {
            return bad("inertia has non-finite entries");
        }
        if (self.inertia - self.inertia.transpose()).amax() > 1e-9 * self.inertia.amax().max(1.0) {
            return bad("inertia is not symmetric");
        }
        let eig = SymmetricEigen::new(self.inertia);
        if eig.eigenvalues.min() < -1e-12 * self.inertia.amax().max(1.0) {
            return bad("inertia is not positive semi-definite");
        }
        Ok(())
    }
}

/// Anatomical plane of a rotational DoF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Plane {
    /// Flexion/extension, about the y (medio-lateral) axis.
    Flexion,
    /// Internal/external rotation, about the z (long) axis.
    Rotation,
    /// Abduction/adduction, about the x (antero-posterior) axis.
    Abduction,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Flexion, Plane::Rotation, Plane::Abduction];

    pub fn index(self) -> usize {
        match self {
            Plane::Flexion => 0,
            Plane::Rotation => 1,
            Plane::Abduction => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Plane::Flexion => "flexion",
            Plane::Rotation => "rotation",
            Plane::Abduction => "abduction",
        }
    }

    pub fn parse(s: &str) -> Option<Plane> {
        Plane::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Limits and passive viscoelastic coefficients of one DoF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DofSpec {
    /// deg
    pub lower: f64,
    /// deg
    pub upper: f64,
    /// N m / deg
    pub stiffness: f64,
    /// N m s / deg
    pub damping: f64,
}

impl DofSpec {
    pub fn new(lower: f64, upper: f64) -> Self {
        DofSpec {
            lower,
            upper,
            stiffness: 0.0,
            damping: 0.0,
        }
    }

    pub fn with_viscoelastic(mut self, stiffness: f64, damping: f64) -> Self {
        self.stiffness = stiffness;
        self.damping = damping;
        self
    }

    /// Range no wider than [`LOCK_BAND`].
    pub fn is_locked(&self) -> bool {
        self.upper - self.lower <= LOCK_BAND + 1e-12
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.lower && angle <= self.upper
    }
}

/// A three-DoF rotational joint between two segments.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpec {
    pub name: String,
    /// Parent segment name, or [`GROUND`].
    pub parent: String,
    pub child: String,
    /// Joint centre in the parent frame (world frame for the base joint), m.
    pub origin: Vector3<f64>,
    /// The tree child is the anatomically proximal segment, so the anatomical
    /// rotation is applied inverted.
    pub reversed: bool,
    /// Indexed by [`Plane::index`].
    pub dofs: [DofSpec; 3],
}

impl JointSpec {
    pub fn dof(&self, plane: Plane) -> &DofSpec {
        &self.dofs[plane.index()]
    }

    fn validate(&self) -> Result<()> {
        for plane in Plane::ALL {
            let d = self.dof(plane);
            let bad = |what: &str| {
                Err(Error::Validation(format!(
                    "joint `{}` {plane}: {what}",
                    self.name
                )))
            };
            if ![d.lower, d.upper, d.stiffness, d.damping]
                .iter()
                .all(|v| v.is_finite())
            {
                return bad("non-finite value");
            }
            if d.lower >= d.upper {
                return bad(&format!(
                    "lower limit {} is not below upper limit {}",
                    d.lower, d.upper
                ));
            }
            if d.stiffness < 0.0 {
                return bad("negative stiffness");
            }
            if d.damping < 0.0 {
                return bad("negative damping");
            }
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "joint `{}`: non-finite origin",
                self.name
            )));
        }
        Ok(())
    }
}

/// Cached index structure of a validated tree.
#[derive(Clone, Debug, PartialEq)]
struct Topology {
    /// Per joint: parent segment index (None for ground).
    parent_segment: Vec<Option<usize>>,
    /// Per joint: child segment index.
    child_segment: Vec<usize>,
    /// Per segment: the joint that carries it.
    joint_of_segment: Vec<usize>,
    /// Per segment: joints hanging off it.
    child_joints: Vec<Vec<usize>>,
    /// Joint indices in breadth-first order from the base.
    order: Vec<usize>,
    end_effector: usize,
}

/// Articulated body tree. Immutable once built; construct through
/// [`BodyModel::new`], which validates every invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyModel {
    segments: Vec<Segment>,
    joints: Vec<JointSpec>,
    end_effector: String,
    neutral: Vec<f64>,
    gravity: f64,
    topo: Topology,
}

impl BodyModel {
    /// Builds and validates a model. `neutral` holds one angle per DoF (deg).
    pub fn new(
        segments: Vec<Segment>,
        joints: Vec<JointSpec>,
        end_effector: impl Into<String>,
        neutral: Vec<f64>,
    ) -> Result<Self> {
        let end_effector = end_effector.into();
        for s in &segments {
            s.validate()?;
        }
        for j in &joints {
            j.validate()?;
        }
        let topo = build_topology(&segments, &joints, &end_effector)?;
        if neutral.len() != 3 * joints.len() {
            return Err(Error::Validation(format!(
                "neutral posture has {} angles, expected {}",
                neutral.len(),
                3 * joints.len()
            )));
        }
        for (j, joint) in joints.iter().enumerate() {
            for plane in Plane::ALL {
                let a = neutral[3 * j + plane.index()];
                if !a.is_finite() || !joint.dof(plane).contains(a) {
                    return Err(Error::Validation(format!(
                        "joint `{}` {plane}: neutral angle {a} outside limits",
                        joint.name
                    )));
                }
            }
        }
        Ok(BodyModel {
            segments,
            joints,
            end_effector,
            neutral,
            gravity: STANDARD_GRAVITY,
            topo,
        })
    }

    /// The shipped default model: reference subject, doubled leg masses.
    pub fn default_model() -> Self {
        model_from_toml_str(DEFAULT_MODEL_TOML, "data/default_model.toml")
            .expect("shipped default model is valid")
    }

    /// Same model with a different gravitational acceleration (m/s^2).
    pub fn with_gravity(mut self, gravity: f64) -> Self {
        self.gravity = gravity;
        self
    }

    /// Same model with all stiffness and damping set to zero.
    pub fn without_viscoelasticity(mut self) -> Self {
        for j in &mut self.joints {
            for d in &mut j.dofs {
                d.stiffness = 0.0;
                d.damping = 0.0;
            }
        }
        self
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn neutral_posture(&self) -> &[f64] {
        &self.neutral
    }

    pub fn dof_count(&self) -> usize {
        3 * self.joints.len()
    }

    pub fn end_effector_name(&self) -> &str {
        &self.end_effector
    }

    /// Segment index whose distal point is the end-effector.
    pub fn end_effector_segment(&self) -> usize {
        self.topo.end_effector
    }

    /// Index of the joint attached to ground.
    pub fn base_joint(&self) -> usize {
        self.topo.order[0]
    }

    /// Joint indices, parents before children.
    pub fn joint_order(&self) -> &[usize] {
        &self.topo.order
    }

    /// Parent segment index of a joint, `None` for the base.
    pub fn parent_segment(&self, joint: usize) -> Option<usize> {
        self.topo.parent_segment[joint]
    }

    pub fn child_segment(&self, joint: usize) -> usize {
        self.topo.child_segment[joint]
    }

    pub fn joint_of_segment(&self, segment: usize) -> usize {
        self.topo.joint_of_segment[segment]
    }

    /// Segment indices in breadth-first order from the base.
    pub fn bfs_segments(&self) -> Vec<usize> {
        self.topo
            .order
            .iter()
            .map(|&j| self.topo.child_segment[j])
            .collect()
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    /// Limits and coefficients of DoF `i`.
    pub fn dof(&self, i: usize) -> &DofSpec {
        &self.joints[i / 3].dofs[i % 3]
    }

    /// `joint.plane`, e.g. `r_elbow.flexion`.
    pub fn dof_name(&self, i: usize) -> String {
        format!("{}.{}", self.joints[i / 3].name, Plane::ALL[i % 3])
    }

    pub fn dof_names(&self) -> Vec<String> {
        (0..self.dof_count()).map(|i| self.dof_name(i)).collect()
    }

    pub fn dof_index(&self, joint: &str, plane: Plane) -> Option<usize> {
        self.joint_index(joint).map(|j| 3 * j + plane.index())
    }

    /// Looks up a `joint.plane` name.
    pub fn find_dof(&self, name: &str) -> Option<usize> {
        let (joint, plane) = name.split_once('.')?;
        self.dof_index(joint, Plane::parse(plane)?)
    }

    pub fn is_locked(&self, i: usize) -> bool {
        self.dof(i).is_locked()
    }

    /// Upper bound on the distance from the base joint to the distal end of
    /// `segment`: summed joint offsets along the path plus the segment length.
    pub fn reach_length(&self, segment: usize) -> f64 {
        let mut total = self.segments[segment].length;
        let mut seg = Some(segment);
        while let Some(s) = seg {
            let joint = self.topo.joint_of_segment[s];
            if self.topo.parent_segment[joint].is_some() {
                total += self.joints[joint].origin.norm();
            }
            seg = self.topo.parent_segment[joint];
        }
        total
    }

    pub(crate) fn segments_mut(&mut self) -> &mut [Segment] {
        &mut self.segments
    }
}

fn build_topology(
    segments: &[Segment],
    joints: &[JointSpec],
    end_effector: &str,
) -> Result<Topology> {
    let mut seg_index = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        if s.name == GROUND {
            return Err(Error::Validation(format!(
                "segment name `{GROUND}` is reserved"
            )));
        }
        if seg_index.insert(s.name.as_str(), i).is_some() {
            return Err(Error::Validation(format!("duplicate segment `{}`", s.name)));
        }
    }
    let mut joint_names = HashMap::new();
    for j in joints {
        if joint_names.insert(j.name.as_str(), ()).is_some() {
            return Err(Error::Validation(format!("duplicate joint `{}`", j.name)));
        }
    }

    let mut parent_segment = Vec::with_capacity(joints.len());
    let mut child_segment = Vec::with_capacity(joints.len());
    let mut joint_of_segment = vec![usize::MAX; segments.len()];
    let mut child_joints = vec![Vec::new(); segments.len()];
    let mut roots = Vec::new();

    for (ji, j) in joints.iter().enumerate() {
        let child = *seg_index.get(j.child.as_str()).ok_or_else(|| {
            Error::Validation(format!(
                "joint `{}` references unknown child segment `{}`",
                j.name, j.child
            ))
        })?;
        if joint_of_segment[child] != usize::MAX {
            return Err(Error::Validation(format!(
                "segment `{}` is the child of more than one joint",
                j.child
            )));
        }
        joint_of_segment[child] = ji;
        child_segment.push(child);
        if j.parent == GROUND {
            parent_segment.push(None);
            roots.push(ji);
        } else {
            let parent = *seg_index.get(j.parent.as_str()).ok_or_else(|| {
                Error::Validation(format!(
                    "joint `{}` references unknown parent segment `{}`",
                    j.name, j.parent
                ))
            })?;
            parent_segment.push(Some(parent));
            child_joints[parent].push(ji);
        }
    }
    if let Some(s) = joint_of_segment.iter().position(|&j| j == usize::MAX) {
        return Err(Error::Validation(format!(
            "segment `{}` is not attached by any joint",
            segments[s].name
        )));
    }
    if roots.len() != 1 {
        return Err(Error::Validation(format!(
            "expected exactly one joint attached to ground, found {}",
            roots.len()
        )));
    }

    let mut order = Vec::with_capacity(joints.len());
    let mut queue = VecDeque::from([roots[0]]);
    let mut seen = vec![false; joints.len()];
    while let Some(j) = queue.pop_front() {
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::Validation("joint graph contains a cycle".into()));
        }
        order.push(j);
        queue.extend(child_joints[child_segment[j]].iter().copied());
    }
    if order.len() != joints.len() {
        return Err(Error::Validation(
            "joint graph is not a tree rooted at ground (cycle or detached branch)".into(),
        ));
    }

    let end_effector = *seg_index.get(end_effector).ok_or_else(|| {
        Error::Validation(format!(
            "end-effector segment `{end_effector}` does not exist"
        ))
    })?;

    Ok(Topology {
        parent_segment,
        child_segment,
        joint_of_segment,
        child_joints,
        order,
        end_effector,
    })
}
