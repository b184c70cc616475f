use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fullreach::body_model::{
    build_with_joint_table, double_leg_masses, model_to_toml_string, AnthropometricTable,
    BodyModel, JointTable, REFERENCE_HEIGHT, REFERENCE_MASS,
};
use fullreach::cost::Strategy;
use fullreach::harness::{
    calibrate, compare_strategies, emit_ingested, emit_outputs, ingest_mocap, run_resolved,
    with_threads, write_compare, Preset, ScenarioConfig, STANDARD_TARGETS,
};

#[derive(Parser)]
#[command(
    name = "fullreach",
    version,
    about = "Full-body reaching movement synthesis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and write its output files.
    Run {
        #[command(flatten)]
        common: Common,
        /// Override the scenario's strategy.
        #[arg(long)]
        strategy: Option<Strategy>,
    },
    /// Run a strategy by target grid and write the comparison tables.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Strategies to compare (default: all four).
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<Strategy>,
        /// Trunk flexions (deg) that place the targets (default: 15,30,60).
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
        /// Only write the tables, not each cell's files.
        #[arg(long)]
        tables_only: bool,
    },
    /// Smooth a motion-capture recording and compute its inverse dynamics.
    Ingest {
        /// Recording: `t,<joint.plane>...` CSV with `#` metadata lines.
        input: PathBuf,
        /// Scenario whose model to use (default: the shipped model).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Run the minimum-error primary simulation and print the weights.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
    /// Write a body model file.
    Model {
        /// Stature, m.
        #[arg(long)]
        height: Option<f64>,
        /// Body mass, kg.
        #[arg(long)]
        mass: Option<f64>,
        /// Keep single-leg thigh and shank masses.
        #[arg(long)]
        single_leg: bool,
        /// Destination (default: stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (overrides the scenario's).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// DoF preset: full, planar-6dof or all.
    #[arg(long)]
    preset: Option<Preset>,
    /// Iteration cap for every search.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg.preset = p;
            cfg.active_dofs = None;
        }
        if let Some(n) = self.max_iter {
            cfg.optimizer.max_iterations = n;
        }
        Ok(cfg)
    }

    fn output_dir(&self, cfg: &ScenarioConfig, fallback: &str) -> PathBuf {
        self.output
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(|d| cfg.base_dir.join(d)))
            .unwrap_or_else(|| PathBuf::from(fallback))
    }
}

fn require_target(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.target.trunk_flexion.is_none() && cfg.target.position.is_none() {
        bail!("the scenario needs a [target] with trunk_flexion or position");
    }
    Ok(())
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(common: &Common, strategy: Option<Strategy>) -> Result<()> {
    let mut cfg = common.scenario()?;
    if let Some(s) = strategy {
        cfg.strategy = s;
    }
    require_target(&cfg)?;
    let sc = cfg.resolve()?;
    let out = common.output_dir(&cfg, &format!("out/{}", sc.name));
    let result = with_threads(common.threads, || run_resolved(&sc, None))??;
    let s = &result.summary;
    println!(
        "scenario {} ({}, {} parameters)",
        result.name,
        result.strategy,
        result.layout.len()
    );
    println!(
        "  termination        {} after {} iterations",
        result.optimization.termination, result.optimization.iterations
    );
    println!("  final error        {:.4} mm", s.final_error * 1e3);
    println!("  power squared      {:.6e} J^2", s.total_power_squared);
    println!("  final COM squared  {:.6e} m^2", s.final_com_squared);
    println!("  total energy       {:.4} J", s.total_energy);
    for n in &result.notes {
        println!("  note: {n}");
    }
    print_written(&emit_outputs(&result, &out)?);
    Ok(())
}

fn compare(
    common: &Common,
    strategies: &[Strategy],
    targets: &[f64],
    tables_only: bool,
) -> Result<()> {
    let cfg = common.scenario()?;
    let strategies = if strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        strategies.to_vec()
    };
    let targets = if targets.is_empty() {
        STANDARD_TARGETS.iter().map(|t| t.1).collect()
    } else {
        targets.to_vec()
    };
    let out = common.output_dir(&cfg, "out/compare");
    let report = with_threads(common.threads, || {
        compare_strategies(&cfg, &strategies, &targets)
    })??;
    println!(
        "{:<8} {:<12} {:>14} {:>14} {:>10} {:>10}",
        "target", "strategy", "power^2 J^2", "COM^2 m^2", "energy J", "error mm"
    );
    for c in &report.cells {
        match &c.outcome {
            Ok(r) => {
                let s = &r.summary;
                println!(
                    "{:<8} {:<12} {:>14.6e} {:>14.6e} {:>10.3} {:>10.3}{}",
                    c.target,
                    c.strategy.to_string(),
                    s.total_power_squared,
                    s.final_com_squared,
                    s.total_energy,
                    s.final_error * 1e3,
                    if s.converged { "" } else { "  (not converged)" }
                );
            }
            Err(e) => println!("{:<8} {:<12} failed: {e}", c.target, c.strategy.to_string()),
        }
    }
    print_written(&write_compare(&report, &out, !tables_only)?);
    Ok(())
}

fn ingest(input: &Path, config: Option<&Path>, output: &Path) -> Result<()> {
    let model = match config {
        Some(p) => {
            let cfg = ScenarioConfig::load(p)?;
            cfg.model.build(&cfg.base_dir)?
        }
        None => BodyModel::default_model(),
    };
    let motion = ingest_mocap(input, &model)?;
    println!(
        "{} samples at {:.3} Hz",
        motion.series.len(),
        motion.series.sample_rate()
    );
    for w in &motion.warnings {
        eprintln!("warning: {w}");
    }
    print_written(&emit_ingested(&motion, &model, output)?);
    Ok(())
}

fn calibrate_cmd(common: &Common) -> Result<()> {
    let cfg = common.scenario()?;
    require_target(&cfg)?;
    let sc = cfg.resolve()?;
    let c = with_threads(common.threads, || calibrate(&sc))??;
    println!(
        "primary run: {} after {} iterations, final error {:.4} mm",
        c.primary.termination,
        c.primary.iterations,
        c.final_error * 1e3
    );
    println!(
        "power integral {:.6e}  lambda0_power {}",
        c.power_integral,
        c.lambda0_power
            .map_or("undefined".into(), |v| format!("{v:.6e}"))
    );
    println!(
        "COM integral   {:.6e}  lambda0_com   {}",
        c.com_integral,
        c.lambda0_com
            .map_or("undefined".into(), |v| format!("{v:.6e}"))
    );
    Ok(())
}

fn model_cmd(
    height: Option<f64>,
    mass: Option<f64>,
    single_leg: bool,
    output: Option<&Path>,
) -> Result<()> {
    let model = if height.is_none() && mass.is_none() && !single_leg {
        BodyModel::default_model()
    } else {
        let m = build_with_joint_table(
            height.unwrap_or(REFERENCE_HEIGHT),
            mass.unwrap_or(REFERENCE_MASS),
            &AnthropometricTable::standard(),
            &JointTable::standard(),
        )?;
        if single_leg {
            m
        } else {
            double_leg_masses(&m)?
        }
    };
    let text = model_to_toml_string(&model);
    match output {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { common, strategy } => run(&common, strategy),
        Command::Compare {
            common,
            strategies,
            targets,
            tables_only,
        } => compare(&common, &strategies, &targets, tables_only),
        Command::Ingest {
            input,
            config,
            output,
        } => ingest(&input, config.as_deref(), &output),
        Command::Calibrate { common } => calibrate_cmd(&common),
        Command::Model {
            height,
            mass,
            single_leg,
            output,
        } => model_cmd(height, mass, single_leg, output.as_deref()),
    }
}
