//! Forward kinematics of the segment tree.
//!
//! Frames are right-handed with x anterior, y left and z up at the neutral
//! posture. The world origin is the base (ankle) joint. Each joint rotates
//! its anatomically distal segment by the intrinsic sequence flexion (about
//! y), then abduction (about the new x), then axial rotation (about the
//! newest z). Reversed joints, where the tree runs from the anatomically
//! distal segment to the proximal one, apply the inverse rotation.

use nalgebra::{Rotation3, Unit, Vector3};

use crate::body_model::{BodyModel, JointSpec, Plane};
use crate::{rad, Error, Result};

/// One factor of a joint's rotation: angle `sign * q[slot]` about `axis`,
/// expressed in the frame left by the previous factors.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisStep {
    pub axis: Unit<Vector3<f64>>,
    pub slot: usize,
    pub sign: f64,
}

pub(crate) fn axis_sequence(reversed: bool) -> [AxisStep; 3] {
    let flex = (Vector3::y_axis(), Plane::Flexion.index());
    let abd = (Vector3::x_axis(), Plane::Abduction.index());
    let rot = (Vector3::z_axis(), Plane::Rotation.index());
    let (seq, sign) = if reversed {
        ([rot, abd, flex], -1.0)
    } else {
        ([flex, abd, rot], 1.0)
    };
    seq.map(|(axis, slot)| AxisStep { axis, slot, sign })
}

fn compose(steps: &[AxisStep; 3], angles_deg: [f64; 3]) -> Rotation3<f64> {
    steps.iter().fold(Rotation3::identity(), |r, s| {
        r * Rotation3::from_axis_angle(&s.axis, s.sign * rad(angles_deg[s.slot]))
    })
}

/// Anatomical joint rotation for `[flexion, rotation, abduction]` in degrees:
/// `Ry(flexion) * Rx(abduction) * Rz(rotation)`.
pub fn joint_rotation(angles_deg: [f64; 3]) -> Rotation3<f64> {
    compose(&axis_sequence(false), angles_deg)
}

/// Child-in-parent rotation of `joint`, honouring [`JointSpec::reversed`].
pub fn local_rotation(joint: &JointSpec, angles_deg: [f64; 3]) -> Rotation3<f64> {
    compose(&axis_sequence(joint.reversed), angles_deg)
}

/// World-frame placement of every segment for one posture.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPoses {
    /// Segment orientation, indexed like [`BodyModel::segments`].
    pub rotations: Vec<Rotation3<f64>>,
    /// Proximal joint position of each segment, m.
    pub origins: Vec<Vector3<f64>>,
    /// Segment COM positions, m.
    pub coms: Vec<Vector3<f64>>,
    pub end_effector: Vector3<f64>,
    /// Whole-body COM, m.
    pub com: Vector3<f64>,
}

impl SegmentPoses {
    pub fn distal_point(&self, model: &BodyModel, segment: usize) -> Vector3<f64> {
        self.origins[segment] + self.rotations[segment] * model.segments()[segment].distal_point()
    }
}

pub(crate) fn check_posture(model: &BodyModel, posture: &[f64], what: &str) -> Result<()> {
    if posture.len() != model.dof_count() {
        return Err(Error::Contract(format!(
            "{what} has {} entries, model has {} DoF",
            posture.len(),
            model.dof_count()
        )));
    }
    if let Some(i) = posture.iter().position(|v| !v.is_finite()) {
        return Err(Error::Contract(format!(
            "{what}: non-finite value at DoF {}",
            model.dof_name(i)
        )));
    }
    Ok(())
}

/// Root-to-leaf pose propagation. `posture` holds one angle per DoF (deg).
pub fn forward_kinematics(model: &BodyModel, posture: &[f64]) -> Result<SegmentPoses> {
    check_posture(model, posture, "posture")?;
    let n = model.segments().len();
    let mut rotations = vec![Rotation3::identity(); n];
    let mut origins = vec![Vector3::zeros(); n];
    for &j in model.joint_order() {
        let joint = &model.joints()[j];
        let (r_parent, o_parent) = match model.parent_segment(j) {
            Some(p) => (rotations[p], origins[p]),
            None => (Rotation3::identity(), Vector3::zeros()),
        };
        let c = model.child_segment(j);
        let q = [posture[3 * j], posture[3 * j + 1], posture[3 * j + 2]];
        origins[c] = o_parent + r_parent * joint.origin;
        rotations[c] = r_parent * local_rotation(joint, q);
    }
    let coms: Vec<_> = model
        .segments()
        .iter()
        .enumerate()
        .map(|(i, s)| origins[i] + rotations[i] * s.com_offset)
        .collect();
    let mut poses = SegmentPoses {
        rotations,
        origins,
        coms,
        end_effector: Vector3::zeros(),
        com: Vector3::zeros(),
    };
    poses.end_effector = poses.distal_point(model, model.end_effector_segment());
    poses.com = whole_body_com(model, &poses);
    Ok(poses)
}

/// Mass-weighted mean of the segment COMs.
pub fn whole_body_com(model: &BodyModel, poses: &SegmentPoses) -> Vector3<f64> {
    let mut acc = Vector3::zeros();
    let mut mass = 0.0;
    for (s, c) in model.segments().iter().zip(&poses.coms) {
        acc += s.mass * c;
        mass += s.mass;
    }
    acc / mass
}
