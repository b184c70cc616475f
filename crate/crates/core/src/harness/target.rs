use nalgebra::Vector3;

use crate::body_model::{BodyModel, Plane};
use crate::kinematics::forward_kinematics;
use crate::{Error, Result};

/// Shoulder flexion of the virtual posture (arm forward, horizontal), deg.
pub const VIRTUAL_SHOULDER_FLEXION: f64 = -90.0;

/// Named target heights and their default movement durations (s).
pub const STANDARD_TARGETS: [(&str, f64, f64); 3] = [
    ("high", 15.0, 0.56),
    ("middle", 30.0, 0.575),
    ("low", 60.0, 0.68),
];

/// Default duration for one of the standard trunk-flexion targets.
pub fn default_duration(trunk_flexion: f64) -> Option<f64> {
    STANDARD_TARGETS
        .iter()
        .find(|t| t.1 == trunk_flexion)
        .map(|t| t.2)
}

/// Label ("high", "middle", "low") of a standard trunk flexion.
pub fn target_label(trunk_flexion: f64) -> Option<&'static str> {
    STANDARD_TARGETS
        .iter()
        .find(|t| t.1 == trunk_flexion)
        .map(|t| t.0)
}

fn dof(model: &BodyModel, joint: &str, plane: Plane) -> Result<usize> {
    model
        .dof_index(joint, plane)
        .ok_or_else(|| Error::Config(format!("model has no `{joint}` joint for target placement")))
}

/// Posture with the trunk flexed by `trunk_flexion` deg (shared between the
/// lumbar and thoracic joints in proportion to their flexion ranges), the
/// right shoulder flexed to horizontal and the elbow extended. Every other
/// DoF sits at neutral.
pub fn virtual_posture(model: &BodyModel, trunk_flexion: f64) -> Result<Vec<f64>> {
    if !trunk_flexion.is_finite() {
        return Err(Error::Config(format!(
            "trunk flexion must be finite, got {trunk_flexion}"
        )));
    }
    let lumbar = dof(model, "lumbar", Plane::Flexion)?;
    let thoracic = dof(model, "thoracic", Plane::Flexion)?;
    let shoulder = dof(model, "r_shoulder", Plane::Flexion)?;
    let elbow = dof(model, "r_elbow", Plane::Flexion)?;
    let (lu, th) = (model.dof(lumbar).upper, model.dof(thoracic).upper);
    let mut q = model.neutral_posture().to_vec();
    let share = if lu + th > 0.0 { lu / (lu + th) } else { 0.5 };
    q[lumbar] += trunk_flexion * share;
    q[thoracic] += trunk_flexion * (1.0 - share);
    q[shoulder] = VIRTUAL_SHOULDER_FLEXION;
    q[elbow] = 0.0;
    for i in [lumbar, thoracic, shoulder, elbow] {
        if !model.dof(i).contains(q[i]) {
            return Err(Error::Config(format!(
                "virtual posture for {trunk_flexion} deg trunk flexion puts {} at {:.3} deg, outside [{}, {}]",
                model.dof_name(i),
                q[i],
                model.dof(i).lower,
                model.dof(i).upper
            )));
        }
    }
    Ok(q)
}

/// End-effector position in the virtual posture.
pub fn place_target(model: &BodyModel, trunk_flexion: f64) -> Result<Vector3<f64>> {
    let q = virtual_posture(model, trunk_flexion)?;
    Ok(forward_kinematics(model, &q)?.end_effector)
}
