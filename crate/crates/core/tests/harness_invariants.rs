//! Properties of optimized movements on the planar preset.

use std::path::Path;
use std::sync::OnceLock;

use fullreach::cost::Strategy;
use fullreach::dynamics::trapezoid;
use fullreach::harness::{
    compare_strategies, emit_outputs, write_compare, CompareReport, Preset, ScenarioConfig,
    DETERMINISTIC_FILES, TIMING_FILE,
};

const FLEXIONS: [f64; 3] = [15.0, 30.0, 60.0];

fn grid() -> &'static CompareReport {
    static GRID: OnceLock<CompareReport> = OnceLock::new();
    GRID.get_or_init(|| {
        let base = ScenarioConfig {
            preset: Preset::Planar6Dof,
            ..Default::default()
        };
        compare_strategies(&base, &Strategy::ALL, &FLEXIONS).unwrap()
    })
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn every_cell_reaches_the_target() {
    let g = grid();
    assert_eq!(g.cells.len(), 12);
    for c in &g.cells {
        let r = c.outcome.as_ref().unwrap();
        assert!(
            r.summary.final_error <= 2e-3,
            "{} {}: {} m",
            c.target,
            c.strategy,
            r.summary.final_error
        );
    }
}

#[test]
fn min_error_hand_speed_is_bell_shaped() {
    for t in &grid().targets {
        let r = grid().result(t, Strategy::MinError).unwrap();
        let ee = &r.dynamics.end_effector;
        let times = &r.dynamics.times;
        let speed: Vec<f64> = (1..ee.len())
            .map(|k| (ee[k] - ee[k - 1]).norm() / (times[k] - times[k - 1]))
            .collect();
        let (peak_at, peak) =
            speed
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
        let frac = peak_at as f64 / speed.len() as f64;
        assert!(
            (0.25..=0.75).contains(&frac),
            "{t}: peak at {frac:.2} of the movement"
        );
        assert!(speed[0] < 0.02 * peak && speed[speed.len() - 1] < 0.02 * peak);
        // one rise and one fall, allowing for sampling jitter
        let rises_after_peak = speed[peak_at..]
            .windows(2)
            .filter(|w| w[1] > w[0] + 1e-3 * peak)
            .count();
        let falls_before_peak = speed[..=peak_at]
            .windows(2)
            .filter(|w| w[1] < w[0] - 1e-3 * peak)
            .count();
        assert_eq!((rises_after_peak, falls_before_peak), (0, 0), "{t}");
    }
}

#[test]
fn min_error_leaves_p6_nearly_untouched() {
    for t in &grid().targets {
        let base = grid()
            .result(t, Strategy::MinError)
            .unwrap()
            .summary
            .p6_norm;
        for s in [Strategy::MinPower, Strategy::MinCom, Strategy::MinPowerCom] {
            let other = grid().result(t, s).unwrap().summary.p6_norm;
            assert!(base < other, "{t}: minError {base:.3e} vs {s} {other:.3e}");
        }
    }
}

#[test]
fn physiological_terms_lower_their_own_measure() {
    for t in &grid().targets {
        let me = &grid().result(t, Strategy::MinError).unwrap().summary;
        let com = &grid().result(t, Strategy::MinCom).unwrap().summary;
        let pow = &grid().result(t, Strategy::MinPower).unwrap().summary;
        assert!(com.final_com_squared <= me.final_com_squared, "{t}");
        assert!(pow.total_power_squared < me.total_power_squared, "{t}");
    }
}

#[test]
fn lower_targets_cost_more_to_reach_without_a_criterion() {
    let s: Vec<_> = grid()
        .targets
        .iter()
        .map(|t| &grid().result(t, Strategy::MinError).unwrap().summary)
        .collect();
    let disp = |x: &&fullreach::harness::Summary| {
        x.com_displacement_mm
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    };
    assert!(disp(&s[0]) < disp(&s[1]) && disp(&s[1]) < disp(&s[2]));
    assert!(s[0].total_energy < s[1].total_energy && s[1].total_energy < s[2].total_energy);
}

#[test]
fn calibration_is_shared_by_the_target_row() {
    for (cal, t) in grid().calibrations.iter().zip(&grid().targets) {
        let c = cal.outcome.as_ref().unwrap().as_ref().unwrap();
        let lp = c.lambda0_power.unwrap();
        assert!((lp * c.power_integral - 1.0).abs() < 1e-12);
        for s in [Strategy::MinPower, Strategy::MinPowerCom] {
            assert_eq!(grid().result(t, s).unwrap().lambda0_power, lp);
        }
        let me = grid().result(t, Strategy::MinError).unwrap();
        assert_eq!(me.summary.final_error, c.final_error);
    }
}

#[test]
fn output_files_are_consistent() {
    let r = grid().result("middle", Strategy::MinPowerCom).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_outputs(r, dir.path()).unwrap();
    for f in DETERMINISTIC_FILES.iter().chain([&TIMING_FILE]) {
        assert!(written.contains(&dir.path().join(f)), "{f} missing");
    }

    let (header, rows) = read_csv(&dir.path().join("timeseries.csv"));
    assert_eq!(rows.len(), r.trajectory.len());
    assert_eq!(header.len(), 1 + 3 * r.model.dof_count() + 7);
    let col = |name: &str| -> Vec<f64> {
        let i = header.iter().position(|h| h == name).unwrap();
        rows.iter().map(|row| row[i].parse().unwrap()).collect()
    };
    let energy = trapezoid(&col("t"), &col("total_abs_power"));

    let (_, summary) = read_csv(&dir.path().join("summary.csv"));
    let value = |key: &str| -> f64 {
        summary.iter().find(|row| row[0] == key).unwrap()[1]
            .parse()
            .unwrap()
    };
    assert!((energy - value("total_energy_J")).abs() < 1e-6 * energy);
    assert!(
        (value("total_power_squared_J2") - r.summary.total_power_squared).abs()
            < 1e-7 * r.summary.total_power_squared
    );

    let (_, params) = read_csv(&dir.path().join("params.csv"));
    assert_eq!(params.len(), 6);
    let (_, segments) = read_csv(&dir.path().join("segments.csv"));
    assert_eq!(segments.len(), 12 * r.trajectory.len());
    let (_, pose) = read_csv(&dir.path().join("final_pose.csv"));
    assert_eq!(pose.len(), 36);
}

#[test]
fn comparison_tables_have_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_compare(grid(), dir.path(), false).unwrap();
    for (file, rows) in [
        ("costs.csv", 12),
        ("energy.csv", 12),
        ("com_displacement.csv", 12),
        ("calibration.csv", 3),
        ("cpu_time.csv", 12),
    ] {
        assert_eq!(read_csv(&dir.path().join(file)).1.len(), rows, "{file}");
    }
    assert!(!dir.path().join("high").exists());
}

#[test]
fn single_strategy_comparison() {
    let base = ScenarioConfig {
        preset: Preset::Planar6Dof,
        ..Default::default()
    };
    let report = compare_strategies(&base, &[Strategy::MinError], &[30.0]).unwrap();
    assert_eq!(report.cells.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    write_compare(&report, dir.path(), true).unwrap();
    let (_, costs) = read_csv(&dir.path().join("costs.csv"));
    assert_eq!(costs.len(), 1);
    assert_eq!(
        costs[0][..2],
        ["middle".to_string(), "minError".to_string()]
    );
    assert!(dir.path().join("middle/minError/summary.csv").exists());
}

#[test]
fn shipped_scenarios_resolve_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ScenarioConfig::load(&path).unwrap();
        cfg.resolve().unwrap();
        let mut back = ScenarioConfig::from_toml_str(&cfg.to_toml_string(), "round-trip").unwrap();
        back.base_dir = cfg.base_dir.clone();
        assert_eq!(back, cfg, "{}", path.display());
        n += 1;
    }
    assert!(n >= 3);
}
