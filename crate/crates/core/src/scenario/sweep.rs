use rayon::prelude::*;

use super::{estimated_delta, Metrics, Scenario, ScenarioConfig, ScenarioError, DEFAULT_GRID_POINTS};

pub const SWEEP_OMEGAS: [f64; 8] = [0.008, 0.009, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06];
pub const SWEEP_SPEEDS: [f64; 8] = [5.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub omega: f64,
    pub speed: f64,
    /// Failure message when the scenario could not be built.
    pub outcome: Result<Metrics, String>,
}

/// The 64 sweep configurations ordered by `(omega, speed)`.
pub fn sweep_configs(base: &ScenarioConfig) -> Vec<ScenarioConfig> {
    SWEEP_OMEGAS
        .iter()
        .flat_map(|&omega| SWEEP_SPEEDS.iter().map(move |&speed| ScenarioConfig { omega, speed, ..base.clone() }))
        .collect()
}

/// Runs every sweep scenario with its counterfactual. Without `delta`, the
/// margin is estimated once per speed, since the predictor depends on it.
pub fn run_sweep(base: &ScenarioConfig, delta: Option<f64>, seed: u64) -> Result<Vec<SweepRow>, ScenarioError> {
    let margins: Vec<f64> = match delta.or(base.delta) {
        Some(d) => vec![d; SWEEP_SPEEDS.len()],
        None => SWEEP_SPEEDS
            .iter()
            .map(|&v| estimated_delta(v, seed, DEFAULT_GRID_POINTS))
            .collect::<Result<_, _>>()?,
    };
    let configs = sweep_configs(&ScenarioConfig { seed, ..base.clone() });
    Ok(configs
        .par_iter()
        .map(|cfg| {
            let idx = SWEEP_SPEEDS.iter().position(|&v| v == cfg.speed).unwrap_or(0);
            let outcome = Scenario::with_delta(cfg, margins[idx])
                .map(|scenario| {
                    let log = scenario.run();
                    let cf = scenario.counterfactual();
                    scenario.metrics(&log, &cf)
                })
                .map_err(|e| e.to_string());
            SweepRow { omega: cfg.omega, speed: cfg.speed, outcome }
        })
        .collect())
}
