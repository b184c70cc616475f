//! Small reference models for checks against closed-form answers.

use nalgebra::{Matrix3, Vector3};

use super::{BodyModel, DofSpec, JointSpec, Segment, GROUND};

/// Uniform slender rod hanging along -z (or +z when `up`), COM at mid-length.
pub fn rod(name: &str, mass: f64, length: f64, up: bool) -> Segment {
    let axis = if up { Vector3::z() } else { -Vector3::z() };
    let transverse = mass * length * length / 12.0;
    Segment {
        name: name.into(),
        mass,
        length,
        axis,
        com_offset: axis * (length / 2.0),
        inertia: Matrix3::from_diagonal(&Vector3::new(transverse, transverse, 1e-4 * transverse)),
    }
}

fn joint(
    name: &str,
    parent: &str,
    child: &str,
    origin: Vector3<f64>,
    dofs: [DofSpec; 3],
) -> JointSpec {
    JointSpec {
        name: name.into(),
        parent: parent.into(),
        child: child.into(),
        origin,
        reversed: false,
        dofs,
    }
}

/// Serial chain of rods from a ground pivot at the origin, joints `j0..jn`
/// with +/-180 deg limits and no viscoelasticity. End-effector is the tip.
pub fn chain(links: &[(f64, f64)], up: bool) -> BodyModel {
    let mut segments = Vec::new();
    let mut joints = Vec::new();
    for (i, &(mass, length)) in links.iter().enumerate() {
        let name = format!("link{i}");
        let (parent, origin) = if i == 0 {
            (GROUND.to_string(), Vector3::zeros())
        } else {
            let prev: &Segment = &segments[i - 1];
            (prev.name.clone(), prev.distal_point())
        };
        segments.push(rod(&name, mass, length, up));
        joints.push(joint(
            &format!("j{i}"),
            &parent,
            &name,
            origin,
            [DofSpec::new(-180.0, 180.0); 3],
        ));
    }
    let tip = segments.last().expect("at least one link").name.clone();
    let n = joints.len();
    BodyModel::new(segments, joints, tip, vec![0.0; 3 * n]).expect("valid chain")
}

/// Point mass `mass` at distance `com` on a massless-inertia link of length
/// `length`, pivoting at the ground origin and hanging along -z.
pub fn pendulum(mass: f64, com: f64, length: f64) -> BodyModel {
    let seg = Segment {
        name: "bob".into(),
        mass,
        length,
        axis: -Vector3::z(),
        com_offset: -Vector3::z() * com,
        inertia: Matrix3::zeros(),
    };
    let j = joint(
        "pivot",
        GROUND,
        "bob",
        Vector3::zeros(),
        [DofSpec::new(-180.0, 180.0); 3],
    );
    BodyModel::new(vec![seg], vec![j], "bob", vec![0.0; 3]).expect("valid pendulum")
}

/// Two-link arm (upper arm, forearm; 1 kg each) hanging from a shoulder at the
/// origin. Flexion limits follow the right arm; other planes are free.
pub fn planar_arm(upper: f64, fore: f64) -> BodyModel {
    let segments = vec![
        rod("upper_arm", 1.0, upper, false),
        rod("forearm", 1.0, fore, false),
    ];
    let wide = DofSpec::new(-180.0, 180.0);
    let joints = vec![
        joint(
            "shoulder",
            GROUND,
            "upper_arm",
            Vector3::zeros(),
            [DofSpec::new(-167.0, 62.0), wide, wide],
        ),
        joint(
            "elbow",
            "upper_arm",
            "forearm",
            segments[0].distal_point(),
            [DofSpec::new(-140.5, 0.3), wide, wide],
        ),
    ];
    BodyModel::new(segments, joints, "forearm", vec![0.0; 6]).expect("valid arm")
}
