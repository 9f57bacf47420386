//! Closed-loop scenarios: the operating controller under supervision, the
//! unsupervised counterfactual, metrics, sweeps and file outputs.

mod config;
mod geometry;
mod output;
mod sweep;

pub use config::{PpcPathMode, ScenarioConfig, Side};
pub use geometry::{separation, OrientedRect};
pub use output::{emit_outputs, emit_sweep_outputs, lead_histogram, distance_histogram, step_csv, Histogram, STEP_COLUMNS};
pub use sweep::{run_sweep, sweep_configs, SweepRow, SWEEP_OMEGAS, SWEEP_SPEEDS};

use std::path::PathBuf;

use thiserror::Error;

use crate::disturbance::{estimate_delta_for, DeltaReport, DisturbanceError, GridSpec};
use crate::path::{PathError, ReferencePath};
use crate::pursuit::{pursuit_control, PursuitConfig};
use crate::qp::QpStatus;
use crate::supervisor::{MpcConfig, ObstacleSpec, PassingSide, SafetyVerdict, Supervisor, SupervisorError, SupervisorState};
use crate::vehicle::{to_error_state, ActuatorLimits, ErrorState, ModelError, Plant, PlantState, RateInput, VehicleParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Supervisor(#[from] SupervisorError),
    #[error(transparent)]
    Disturbance(#[from] DisturbanceError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

/// Grid resolution used when a scenario does not override the margin.
pub const DEFAULT_GRID_POINTS: usize = 5;
const PATH_SPACING: f64 = 0.25;
const TRANSITION_LENGTH: f64 = 12.0;
const EARLY_LEAD: f64 = 50.0;
const EARLY_TRANSITION: f64 = 35.0;

/// Mismatch estimate at `speed` on the default grid with `grid_points`
/// values per active axis.
pub fn delta_report(speed: f64, seed: u64, grid_points: usize) -> Result<DeltaReport, ScenarioError> {
    let params = VehicleParams::passenger_car().with_speed(speed);
    let limits = ActuatorLimits::passenger_car();
    let ts = MpcConfig::<f64>::default().ts;
    let mut grid = GridSpec::for_vehicle(&params, &limits, grid_points);
    grid.seed = seed;
    let estimate = estimate_delta_for(&params, &limits, ts, &grid)?;
    Ok(DeltaReport::new(&estimate, &grid, speed, ts))
}

/// Margin from the mismatch grid at the scenario's speed.
pub fn estimated_delta(speed: f64, seed: u64, grid_points: usize) -> Result<f64, ScenarioError> {
    Ok(delta_report(speed, seed, grid_points)?.delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Certified,
    Detection,
    Backup,
    /// Backup problem infeasible; braking applied.
    BackupFailed,
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Certified => "certified",
            VerdictKind::Detection => "detection",
            VerdictKind::Backup => "backup",
            VerdictKind::BackupFailed => "backup_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub state: PlantState<f64>,
    pub error: ErrorState<f64>,
    pub station: f64,
    pub u_op: RateInput<f64>,
    pub applied: RateInput<f64>,
    pub verdict: VerdictKind,
    pub qp_status: QpStatus,
    pub qp_iters: usize,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    pub records: Vec<StepRecord>,
    /// Set when the run stopped early (plant validity or path range).
    pub aborted: Option<String>,
    pub detection_step: Option<usize>,
    pub min_clearance: f64,
    pub collision: bool,
    pub safety_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterfactualResult {
    /// First sample whose unmargined check was not feasible.
    pub check_step: Option<usize>,
    /// Station at that sample.
    pub station: Option<f64>,
    pub min_clearance: f64,
}

impl CounterfactualResult {
    /// Sample index of the first state the unmargined check rejects.
    pub fn infeasibility_step(&self) -> Option<usize> {
        self.check_step.map(|k| k + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionError {
    None,
    Type1,
    Type2,
}

impl DetectionError {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionError::None => "none",
            DetectionError::Type1 => "type1",
            DetectionError::Type2 => "type2",
        }
    }
}

/// Distances are measured to the obstacle's leading edge, so a positive
/// `d_mpc − d_opt` means the takeover happened before the last moment the
/// unmargined supervisor could still have acted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub delta: f64,
    pub detection_step: Option<usize>,
    pub infeasibility_step: Option<usize>,
    pub lead_samples: Option<i64>,
    pub d_mpc: Option<f64>,
    pub d_opt: Option<f64>,
    pub detection_error: DetectionError,
    pub min_clearance: f64,
    pub collision: bool,
    pub interventions: usize,
    pub safety_events: usize,
    pub aborted: bool,
}

impl Metrics {
    pub fn distance_gap(&self) -> Option<f64> {
        Some(self.d_mpc? - self.d_opt?)
    }
}

/// A configured scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub delta: f64,
    pub road: ReferencePath<f64>,
    pub ppc_path: ReferencePath<f64>,
    pub supervisor: Supervisor<f64>,
    pub pursuit: PursuitConfig<f64>,
    pub initial: PlantState<f64>,
    pub steps: usize,
}

fn smooth_step(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    0.5 * (1.0 - (std::f64::consts::PI * u).cos())
}

impl Scenario {
    /// Builds the scenario, estimating the margin when the config has none.
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        let delta = match config.delta {
            Some(d) => d,
            None => estimated_delta(config.speed, config.seed, DEFAULT_GRID_POINTS)?,
        };
        Self::with_delta(config, delta)
    }

    pub fn with_delta(config: &ScenarioConfig, delta: f64) -> Result<Self, ScenarioError> {
        config.validate()?;
        let mpc = MpcConfig::<f64>::default();
        let ts = mpc.ts;
        let duration = config.duration();
        let steps = (duration / ts).round() as usize;
        let reach = config.start_station + config.speed * duration + 80.0;
        let road = ReferencePath::sinusoid(
            config.amplitude,
            config.omega,
            config.offset,
            config.start_station - 30.0,
            reach.max(config.obstacle_end + 80.0),
            PATH_SPACING,
            config.speed,
        )?
        .with_reference_origin(config.start_station);

        let sign = match config.obstacle_side {
            Side::Right => -1.0,
            Side::Left => 1.0,
        };
        let shift = sign * config.avoid_offset;
        let (s0, s1) = (config.obstacle_start, config.obstacle_end);
        let ppc_path = match config.ppc_path {
            PpcPathMode::Blind => road.clone(),
            PpcPathMode::Late => {
                let start = config.late_start();
                road.with_lateral_offset(
                    |s| {
                        shift * (smooth_step((s - start) / TRANSITION_LENGTH)
                            - smooth_step((s - s1 - 5.0) / TRANSITION_LENGTH))
                    },
                    PATH_SPACING,
                )?
            }
            PpcPathMode::Early => {
                let start = s0 - EARLY_LEAD;
                road.with_lateral_offset(
                    |s| {
                        shift * (smooth_step((s - start) / EARLY_TRANSITION)
                            - smooth_step((s - s1 - 5.0) / EARLY_TRANSITION))
                    },
                    PATH_SPACING,
                )?
            }
        };

        let params = VehicleParams::passenger_car().with_speed(config.speed);
        let limits = ActuatorLimits::passenger_car();
        let plant = Plant::new(params, limits);
        let obstacle = config
            .obstacle_enabled
            .then(|| {
                let side = match config.obstacle_side {
                    Side::Right => PassingSide::Right,
                    Side::Left => PassingSide::Left,
                };
                ObstacleSpec::new(s0, s1, config.obstacle_width, side)
            })
            .transpose()?;
        let supervisor = Supervisor::new(plant, mpc, road.clone(), obstacle)?;
        let pursuit = PursuitConfig::new(params.wheelbase(), ts, limits);

        let p = road.sample(config.start_station)?;
        let initial = PlantState {
            x: p.x,
            y: p.y,
            yaw: p.heading,
            vx: config.speed,
            vy: 0.0,
            yaw_rate: config.speed * p.curvature,
            delta: (params.wheelbase() * p.curvature).atan(),
            accel: 0.0,
        };
        Ok(Self { config: config.clone(), delta, road, ppc_path, supervisor, pursuit, initial, steps })
    }

    pub fn ts(&self) -> f64 {
        self.supervisor.config.ts
    }

    fn obstacle_rect(&self) -> Option<OrientedRect> {
        let o = self.supervisor.obstacle.as_ref()?;
        let mid = self.road.sample(0.5 * (o.s_start + o.s_end)).ok()?;
        Some(OrientedRect {
            cx: mid.x,
            cy: mid.y,
            heading: mid.heading,
            half_length: 0.5 * (o.s_end - o.s_start),
            half_width: 0.5 * o.width,
        })
    }

    /// Signed separation between the vehicle body and the obstacle.
    pub fn clearance(&self, state: &PlantState<f64>) -> f64 {
        let Some(obstacle) = self.obstacle_rect() else { return f64::INFINITY };
        let p = &self.supervisor.plant.params;
        let body = OrientedRect::from_reference(state.x, state.y, state.yaw, p.l_f, p.l_r, p.veh_width);
        separation(&body, &obstacle)
    }

    fn operating_input(&self, state: &PlantState<f64>) -> RateInput<f64> {
        pursuit_control(state, &self.ppc_path, &self.pursuit).input
    }

    /// Closed loop under supervision: certify the tracker's input until the
    /// first detection event, then hand control to the backup MPC for good.
    pub fn run(&self) -> SimulationLog {
        let ts = self.ts();
        let mut sup_state = SupervisorState::new(self.delta);
        let mut state = self.initial;
        let mut log = SimulationLog {
            records: Vec::with_capacity(self.steps),
            aborted: None,
            detection_step: None,
            min_clearance: self.clearance(&state),
            collision: false,
            safety_events: 0,
        };
        for k in 0..self.steps {
            let t = k as f64 * ts;
            let (error, station) = match to_error_state(&state, &self.road, t) {
                Ok(e) => (e, self.road.reference_station(t) + e.e_x),
                Err(e) => {
                    log.aborted = Some(e.to_string());
                    break;
                }
            };
            let u_op = self.operating_input(&state);
            let step = if sup_state.event_detected {
                self.supervisor.backup_control(&state, t).map(|d| {
                    if d.safety_event {
                        log.safety_events += 1;
                    }
                    let verdict = if d.safety_event { VerdictKind::BackupFailed } else { VerdictKind::Backup };
                    (d.input, verdict, d.summary)
                })
            } else {
                self.supervisor.certify(&mut sup_state, &state, &u_op, t).map(|c| {
                    let verdict = match c.verdict {
                        SafetyVerdict::Certified { .. } => VerdictKind::Certified,
                        SafetyVerdict::DetectionEvent { .. } => VerdictKind::Detection,
                    };
                    (c.applied, verdict, c.summary)
                })
            };
            let (applied, verdict, summary) = match step {
                Ok(s) => s,
                Err(e) => {
                    log.aborted = Some(e.to_string());
                    break;
                }
            };
            if verdict == VerdictKind::Detection {
                log.detection_step = Some(k);
            }
            log.records.push(StepRecord {
                k,
                t,
                state,
                error,
                station,
                u_op,
                applied,
                verdict,
                qp_status: summary.status,
                qp_iters: summary.iterations,
                objective: summary.objective,
            });
            state = match self.supervisor.plant.step(&state, &applied, ts) {
                Ok(s) => s,
                Err(e) => {
                    log.aborted = Some(e.to_string());
                    break;
                }
            };
            log.min_clearance = log.min_clearance.min(self.clearance(&state));
        }
        log.collision = log.min_clearance < 0.0;
        log
    }

    /// The tracker alone, with an unmargined shadow check of its input at
    /// every sample; stops at the first check that is not feasible.
    pub fn counterfactual(&self) -> CounterfactualResult {
        let ts = self.ts();
        let mut state = self.initial;
        let mut min_clearance = self.clearance(&state);
        for k in 0..self.steps {
            let t = k as f64 * ts;
            let u_op = self.operating_input(&state);
            let feasible = self
                .supervisor
                .check(&state, &u_op, t, 0.0)
                .map(|c| c.first_input.is_some())
                .unwrap_or(false);
            if !feasible {
                let station = self.road.project(state.x, state.y).ok().map(|p| p.station);
                return CounterfactualResult { check_step: Some(k), station, min_clearance };
            }
            state = match self.supervisor.plant.step(&state, &u_op, ts) {
                Ok(s) => s,
                Err(_) => break,
            };
            min_clearance = min_clearance.min(self.clearance(&state));
        }
        CounterfactualResult { check_step: None, station: None, min_clearance }
    }

    pub fn metrics(&self, log: &SimulationLog, cf: &CounterfactualResult) -> Metrics {
        let edge = self.config.obstacle_start;
        let takeover = log.detection_step.and_then(|k| log.records.get(k)).map(|r| r.station);
        let infeasibility_step = cf.infeasibility_step();
        let lead_samples = match (log.detection_step, infeasibility_step) {
            (Some(k_det), Some(k_inf)) => Some(k_inf as i64 - k_det as i64),
            _ => None,
        };
        let detection_error = if log.collision || lead_samples.is_some_and(|l| l <= 0) {
            DetectionError::Type2
        } else {
            match (log.detection_step.is_some(), infeasibility_step.is_some()) {
                (false, true) => DetectionError::Type2,
                (true, false) => DetectionError::Type1,
                _ => DetectionError::None,
            }
        };
        let interventions = log.records.iter().filter(|r| r.verdict != VerdictKind::Certified).count();
        Metrics {
            delta: self.delta,
            detection_step: log.detection_step,
            infeasibility_step,
            lead_samples,
            d_mpc: takeover.map(|s| edge - s),
            d_opt: cf.station.map(|s| edge - s),
            detection_error,
            min_clearance: log.min_clearance,
            collision: log.collision,
            interventions,
            safety_events: log.safety_events,
            aborted: log.aborted.is_some(),
        }
    }
}
