use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sca_core::scenario::{
    delta_report, emit_outputs, emit_sweep_outputs, run_sweep, PpcPathMode, Scenario, ScenarioConfig,
    DEFAULT_GRID_POINTS,
};

#[derive(Debug, Parser)]
#[command(name = "sca", version, about = "Supervised obstacle-avoidance simulations")]
struct Cli {
    /// Seed for grid subsampling; overrides the scenario file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write steps.csv, metrics.csv and trajectory.svg.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the 64-scenario sweep and write per-scenario metrics and histograms.
    Sweep {
        #[arg(long)]
        out: PathBuf,
        /// Fixed margin (m) instead of the per-speed estimate.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Estimate the margin from the model mismatch grid and write the report.
    EstimateDelta {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid_points: usize,
        /// Longitudinal speed (m/s) the predictor is linearized at.
        #[arg(long, default_value_t = 10.0)]
        speed: f64,
    },
    /// Run the unsupervised tracker with an unmargined shadow check.
    Counterfactual {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Box<dyn Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut config = ScenarioConfig::from_toml(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn execute(cli: Cli) -> Result<(), Box<dyn Error>> {
    match cli.command {
        Command::Run { config, out } => {
            let config = load_config(&config, cli.seed)?;
            let scenario = Scenario::from_config(&config)?;
            let log = scenario.run();
            let cf = scenario.counterfactual();
            let metrics = scenario.metrics(&log, &cf);
            emit_outputs(&scenario, &log, &metrics, &out)?;
            println!(
                "delta={:.6} detection_step={} lead_samples={} min_clearance={:.3} collision={} error={}",
                metrics.delta,
                fmt_opt(metrics.detection_step),
                fmt_opt(metrics.lead_samples),
                metrics.min_clearance,
                metrics.collision,
                metrics.detection_error.as_str()
            );
            if let Some(reason) = &log.aborted {
                println!("aborted: {reason}");
            }
        }
        Command::Sweep { out, delta } => {
            let base = ScenarioConfig::new(0.01, 10.0, PpcPathMode::Blind);
            let rows = run_sweep(&base, delta, cli.seed.unwrap_or(base.seed))?;
            emit_sweep_outputs(&rows, &out)?;
            let ok: Vec<_> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let collisions = ok.iter().filter(|m| m.collision).count();
            let type2 = ok.iter().filter(|m| m.detection_error.as_str() == "type2").count();
            println!(
                "scenarios={} failed={} collisions={collisions} type2={type2}",
                rows.len(),
                rows.len() - ok.len()
            );
        }
        Command::EstimateDelta { out, grid_points, speed } => {
            let report = delta_report(speed, cli.seed.unwrap_or(0), grid_points)?;
            fs::write(&out, report.to_toml()?).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("delta={:.6} samples={} skipped={}", report.delta, report.samples, report.skipped);
        }
        Command::Counterfactual { config } => {
            let config = load_config(&config, cli.seed)?;
            let scenario = Scenario::from_config(&config)?;
            let cf = scenario.counterfactual();
            let d_opt = cf.station.map(|s| format!("{:.3}", config.obstacle_start - s));
            println!(
                "infeasibility_step={} d_opt={} min_clearance={:.3}",
                fmt_opt(cf.infeasibility_step()),
                fmt_opt(d_opt),
                cf.min_clearance
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
