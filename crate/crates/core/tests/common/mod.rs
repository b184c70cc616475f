//! Oracles shared by the integration tests.

#![allow(dead_code)]

use fullreach::body_model::{fixtures, BodyModel};
use fullreach::controller::{closure_coefficients, eval_trajectory, PolynomialCoefficients};
use fullreach::dynamics::evaluate_movement;
use fullreach::kinematics::forward_kinematics;
use nalgebra::{Matrix3, Vector3};

pub fn posture_at(coeffs: &[PolynomialCoefficients], t: f64) -> Vec<f64> {
    coeffs.iter().map(|c| c.position(t)).collect()
}

/// Kinetic plus potential energy from forward kinematics alone; velocities
/// come from a tight central difference of the pose in time.
pub fn mechanical_energy(model: &BodyModel, coeffs: &[PolynomialCoefficients], t: f64) -> f64 {
    let h = 1e-6;
    let now = forward_kinematics(model, &posture_at(coeffs, t)).unwrap();
    let ahead = forward_kinematics(model, &posture_at(coeffs, t + h)).unwrap();
    let behind = forward_kinematics(model, &posture_at(coeffs, t - h)).unwrap();
    let mut energy = 0.0;
    for (s, seg) in model.segments().iter().enumerate() {
        let v = (ahead.coms[s] - behind.coms[s]) / (2.0 * h);
        let r = now.rotations[s].matrix();
        let rdot: Matrix3<f64> =
            (ahead.rotations[s].matrix() - behind.rotations[s].matrix()) / (2.0 * h);
        let w_hat = rdot * r.transpose();
        let w = Vector3::new(w_hat[(2, 1)], w_hat[(0, 2)], w_hat[(1, 0)]);
        let inertia = r * seg.inertia * r.transpose();
        energy += 0.5 * seg.mass * v.norm_squared() + 0.5 * w.dot(&(inertia * w));
        energy += seg.mass * model.gravity() * now.coms[s].z;
    }
    energy
}

/// Largest mismatch between the signed joint power and the rate of change
/// of mechanical energy on a conservative three-link chain, relative to the
/// peak power.
pub fn three_link_energy_rate_mismatch() -> f64 {
    let model = fixtures::chain(&[(2.0, 0.5), (1.5, 0.4), (1.0, 0.3)], false);
    let t_f = 0.6;
    let targets = [
        (-40.0, 3.0),
        (10.0, -2.0),
        (15.0, 0.0),
        (60.0, -4.0),
        (-20.0, 1.0),
        (5.0, 0.0),
        (-50.0, 2.0),
        (30.0, 0.0),
        (-10.0, 5.0),
    ];
    let coeffs: Vec<_> = targets
        .iter()
        .map(|&(f, p6)| closure_coefficients(0.0, f, p6, t_f).unwrap())
        .collect();
    let traj = eval_trajectory(&coeffs, t_f, 0.001).unwrap();
    let out = evaluate_movement(&model, &traj).unwrap();
    let signed: Vec<f64> = out.power.iter().map(|p| p.iter().sum()).collect();
    let peak = signed.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    assert!(peak > 1.0);
    let mut worst = 0.0f64;
    for k in 1..traj.len() - 1 {
        let dt = traj.times[k + 1] - traj.times[k - 1];
        let rate = (mechanical_energy(&model, &coeffs, traj.times[k + 1])
            - mechanical_energy(&model, &coeffs, traj.times[k - 1]))
            / dt;
        worst = worst.max((rate - signed[k]).abs() / peak);
    }
    worst
}

/// Closed-form torques of a two-link pendulum swinging in the sagittal plane.
pub struct TwoLink {
    pub l1: f64,
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub g: f64,
}

impl TwoLink {
    pub fn torques(&self, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> [f64; 2] {
        let c2 = q[1].cos();
        let m11 = self.i1
            + self.m1 * self.c1.powi(2)
            + self.i2
            + self.m2 * (self.l1.powi(2) + self.c2.powi(2) + 2.0 * self.l1 * self.c2 * c2);
        let m12 = self.i2 + self.m2 * (self.c2.powi(2) + self.l1 * self.c2 * c2);
        let m22 = self.i2 + self.m2 * self.c2.powi(2);
        let h = self.m2 * self.l1 * self.c2 * q[1].sin();
        let g1 = self.g
            * ((self.m1 * self.c1 + self.m2 * self.l1) * q[0].sin()
                + self.m2 * self.c2 * (q[0] + q[1]).sin());
        let g2 = self.g * self.m2 * self.c2 * (q[0] + q[1]).sin();
        [
            m11 * qdd[0] + m12 * qdd[1] - h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]) + g1,
            m12 * qdd[0] + m22 * qdd[1] + h * qd[0] * qd[0] + g2,
        ]
    }
}

/// Savitzky-Golay weights from the normal equations `(A^T A) z = e_0`,
/// `w = A z`, solved in exact rational arithmetic on integer abscissae.
pub fn sg_weights_exact(left: usize, right: usize, order: usize) -> Vec<f64> {
    use num::{BigInt, BigRational, ToPrimitive, Zero};
    let xs: Vec<BigRational> = (0..=left + right)
        .map(|j| BigRational::from_integer(BigInt::from(j as i64 - left as i64)))
        .collect();
    let pow = |x: &BigRational, k: usize| -> BigRational {
        (0..k).fold(BigRational::from_integer(BigInt::from(1)), |acc, _| acc * x)
    };
    let n = order + 1;
    // augmented [A^T A | e0]
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|c| xs.iter().map(|x| pow(x, r + c)).sum())
                .collect();
            row.push(if r == 0 {
                BigRational::from_integer(BigInt::from(1))
            } else {
                BigRational::zero()
            });
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .expect("non-singular");
        m.swap(col, piv);
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for c in col..=n {
                    let v = &f * &m[col][c];
                    m[r][c] -= v;
                }
            }
        }
    }
    let z: Vec<BigRational> = (0..n).map(|r| &m[r][n] / &m[r][r]).collect();
    xs.iter()
        .map(|x| {
            let w: BigRational = (0..n).map(|k| &z[k] * pow(x, k)).sum();
            w.to_f64().expect("finite")
        })
        .collect()
}

/// Fourth-order central difference of `f` along coordinate `i`.
pub fn five_point(f: &dyn Fn(&[f64]) -> f64, p: &[f64], i: usize, h: f64) -> f64 {
    let at = |d: f64| {
        let mut q = p.to_vec();
        q[i] += d;
        f(&q)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

/// The right arm of a model reduced to shoulder and elbow flexion in the
/// sagittal plane, everything else at neutral.
pub struct ArmReduction {
    pub shoulder: Vector3<f64>,
    pub upper: Vector3<f64>,
    pub fore: Vector3<f64>,
    pub shoulder_range: (f64, f64),
    pub elbow_range: (f64, f64),
}

fn sagittal(v: Vector3<f64>, deg: f64) -> Vector3<f64> {
    // negative flexion swings a hanging segment forward (+x)
    let (s, c) = (-deg).to_radians().sin_cos();
    Vector3::new(v.x * c - v.z * s, v.y, v.x * s + v.z * c)
}

impl ArmReduction {
    pub fn of(model: &BodyModel) -> Self {
        let q = model.neutral_posture();
        let poses = forward_kinematics(model, q).unwrap();
        let js = model.joint_index("r_shoulder").unwrap();
        let je = model.joint_index("r_elbow").unwrap();
        let shoulder = poses.origins[model.child_segment(js)];
        let elbow = poses.origins[model.child_segment(je)];
        let range = |j: usize| {
            let d = &model.joints()[j].dofs[0];
            (d.lower, d.upper)
        };
        ArmReduction {
            shoulder,
            upper: elbow - shoulder,
            fore: poses.end_effector - elbow,
            shoulder_range: range(js),
            elbow_range: range(je),
        }
    }

    pub fn hand(&self, shoulder: f64, elbow: f64) -> Vector3<f64> {
        self.shoulder + sagittal(self.upper + sagittal(self.fore, elbow), shoulder)
    }

    /// Exhaustive search on a `step`-degree grid over both flexion ranges;
    /// returns (shoulder, elbow, distance to `target`).
    pub fn grid_search(&self, target: &Vector3<f64>, step: f64) -> (f64, f64, f64) {
        let count = |(lo, hi): (f64, f64)| ((hi - lo) / step).floor() as usize + 1;
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..count(self.shoulder_range) {
            let a = self.shoulder_range.0 + i as f64 * step;
            for j in 0..count(self.elbow_range) {
                let b = self.elbow_range.0 + j as f64 * step;
                let d = (self.hand(a, b) - target).norm();
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        best
    }
}
