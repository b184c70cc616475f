//! A known movement, sampled like a motion-capture recording, comes back
//! through smoothing and differentiation with nearly the same torques.

use fullreach::body_model::BodyModel;
use fullreach::controller::{closure_coefficients, JointTrajectory};
use fullreach::dynamics::evaluate_movement;
use fullreach::harness::{ingest_series, MocapSeries, MOCAP_RATE, PLANAR_6DOF};

/// Rest, a polynomial reach, rest again; angles in deg.
fn recording(model: &BodyModel) -> (MocapSeries, JointTrajectory) {
    let (rest, t_f) = (1.0, 1.2);
    let finals = [
        (8.0, 0.0),
        (-15.0, 2.0),
        (25.0, -3.0),
        (20.0, 1.0),
        (-70.0, 4.0),
        (-35.0, -2.0),
    ];
    let dofs: Vec<usize> = PLANAR_6DOF
        .iter()
        .map(|n| model.find_dof(n).unwrap())
        .collect();
    let neutral = model.neutral_posture();
    let coeffs: Vec<_> = dofs
        .iter()
        .zip(finals)
        .map(|(&d, (delta, p6))| {
            closure_coefficients(neutral[d], neutral[d] + delta, p6, t_f).unwrap()
        })
        .collect();
    let n = ((2.0 * rest + t_f) * MOCAP_RATE).round() as usize + 1;
    let times: Vec<f64> = (0..n).map(|k| k as f64 / MOCAP_RATE).collect();
    let (mut theta, mut vel, mut acc) = (Vec::new(), Vec::new(), Vec::new());
    for &t in &times {
        let s = (t - rest).clamp(0.0, t_f);
        let moving = t > rest && t < rest + t_f;
        let (mut q, mut qd, mut qdd) = (
            neutral.to_vec(),
            vec![0.0; neutral.len()],
            vec![0.0; neutral.len()],
        );
        for (c, &d) in coeffs.iter().zip(&dofs) {
            q[d] = c.position(s);
            if moving {
                qd[d] = c.velocity(s);
                qdd[d] = c.acceleration(s);
            }
        }
        theta.push(q);
        vel.push(qd);
        acc.push(qdd);
    }
    let series = MocapSeries {
        times: times.clone(),
        dofs: PLANAR_6DOF.iter().map(|s| s.to_string()).collect(),
        angles: theta
            .iter()
            .map(|q| dofs.iter().map(|&d| q[d]).collect())
            .collect(),
        metadata: vec![("subject".into(), "synthetic".into())],
    };
    (
        series,
        JointTrajectory::new(times, theta, vel, acc).unwrap(),
    )
}

#[test]
fn ingested_torques_match_the_analytic_movement() {
    let model = BodyModel::default_model();
    let (series, truth) = recording(&model);
    let text = series.to_csv_string();
    let parsed = MocapSeries::from_csv_str(&text, "synthetic.csv").unwrap();
    let ingested = ingest_series(parsed, &model).unwrap();
    assert!(ingested.warnings.is_empty(), "{:?}", ingested.warnings);
    let reference = evaluate_movement(&model, &truth).unwrap();

    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in ingested.dynamics.torques.iter().zip(&reference.torques) {
        for (x, y) in a.iter().zip(b) {
            diff += (x - y).powi(2);
            norm += y * y;
        }
    }
    let rel = (diff / norm).sqrt();
    assert!(rel < 0.02, "relative RMS torque error {rel:.4}");

    let com_gap = (ingested.dynamics.com.last().unwrap() - reference.com.last().unwrap()).norm();
    assert!(com_gap < 1e-3, "final COM differs by {com_gap} m");
}

#[test]
fn csv_round_trip_preserves_samples() {
    let model = BodyModel::default_model();
    let (series, _) = recording(&model);
    let back = MocapSeries::from_csv_str(&series.to_csv_string(), "synthetic.csv").unwrap();
    assert_eq!(back.dofs, series.dofs);
    assert_eq!(back.metadata, series.metadata);
    for (a, b) in back
        .angles
        .iter()
        .flatten()
        .zip(series.angles.iter().flatten())
    {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
    }
}
