//! Full-body reaching movement synthesis.
//!
//! Joint trajectories come from 6th-order polynomial controllers whose free
//! parameters (final angle and 6th coefficient per degree of freedom) are
//! tuned by a Levenberg-Marquardt search. Each candidate is scored with
//! forward kinematics and recursive Newton-Euler inverse dynamics on a
//! 12-segment, 36-DoF articulated body; no equations of motion are
//! integrated.
//!
//! Module map:
//!
//! * [`body_model`] - segments, joints, anthropometric scaling, model files
//! * [`kinematics`] - Euler joint rotations, forward kinematics, whole-body COM
//! * [`controller`] - polynomial closure, trajectory sampling, minimum jerk
//! * [`dynamics`] - inverse dynamics, joint power, movement evaluation
//! * [`cost`] - task error, composite criteria, weight calibration
//! * [`optimizer`] - finite-difference Jacobians, damped steps, line search
//! * [`problem`] - the reaching objective that ties the pieces together
//! * [`harness`] - scenarios, reports, output files, motion-capture ingestion

pub mod body_model;
pub mod controller;
pub mod cost;
pub mod dynamics;
mod error;
pub mod harness;
pub mod kinematics;
pub mod optimizer;
pub mod problem;

pub use error::{Error, Result};

/// Degrees to radians.
#[inline]
pub(crate) fn rad(deg: f64) -> f64 {
    deg.to_radians()
}
