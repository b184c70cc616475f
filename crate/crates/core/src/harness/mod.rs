//! Scenarios, reports and data exchange.
//!
//! A scenario names a model, a target and a strategy. [`run_scenario`]
//! places the target, calibrates `auto` weights from a minimum-error primary
//! run, optimizes and evaluates the movement; [`emit_outputs`] writes the
//! CSV files. [`compare_strategies`] runs the strategy by target grid.

mod compare;
mod config;
mod mocap;
mod output;
mod run;
mod savgol;
mod target;

pub use compare::{
    compare_strategies, write_compare, CompareCell, CompareReport, TargetCalibration,
};
pub use config::{
    LambdaConfig, LambdaSetting, ModelConfig, Preset, ResolvedScenario, ScenarioConfig,
    TargetConfig, PLANAR_6DOF,
};
pub use mocap::{
    differentiate, ingest_mocap, ingest_series, IngestedMotion, MocapSeries, LIMIT_WARNING_MARGIN,
    MOCAP_RATE,
};
pub use output::{
    emit_ingested, emit_outputs, fmt_num, write_timeseries, DETERMINISTIC_FILES, TIMING_FILE,
};
pub use run::{
    calibrate, min_jerk_reference, run_resolved, run_scenario, with_threads, Calibration,
    MinJerkPath, SimulationResult, Summary,
};
pub use savgol::{
    savgol_coefficients, savgol_default, savgol_filter, DEFAULT_ORDER, DEFAULT_WINDOW,
};
pub use target::{
    default_duration, place_target, target_label, virtual_posture, STANDARD_TARGETS,
    VIRTUAL_SHOULDER_FLEXION,
};
