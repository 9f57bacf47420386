//! Supervisory MPC: horizon constraints, condensing to a QP, certification
//! of the operating controller's input and the backup MPC.

mod condense;
mod constraints;

pub use condense::{condense, condense_horizon, CondensedProblem, LinearHorizon};
pub use constraints::{build_horizon_constraints, ObstacleSpec, PassingSide, PolytopeSpec, VehicleFootprint};

use nalgebra::{Matrix2, SMatrix};
use thiserror::Error;

use crate::path::{PathError, ReferencePath};
use crate::qp::{solve, QpError, QpOutcome, QpSettings, QpStatus};
use crate::vehicle::{
    build_continuous_model, discretize_exact, to_error_state, ActuatorLimits, DiscreteLti, ErrorState, ModelError,
    Plant, PlantState, RateInput, ReferenceInput,
};
use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SupervisorError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("certify called after a detection event")]
    AlreadyDetected,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Qp(#[from] QpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig<T: Real> {
    pub q_weight: SMatrix<T, 8, 8>,
    pub r_weight: Matrix2<T>,
    pub horizon: usize,
    pub ts: T,
    pub limits: ActuatorLimits<T>,
}

impl<T: Real> Default for MpcConfig<T> {
    /// `Q = diag(1, 1, 200, 1, 1, 1, 1, 1)`, `R = I`, `N = 10`, `ts = 0.1 s`.
    fn default() -> Self {
        let mut q_weight = SMatrix::<T, 8, 8>::identity();
        q_weight[(2, 2)] = T::lit(200.0);
        Self {
            q_weight,
            r_weight: Matrix2::identity(),
            horizon: 10,
            ts: T::lit(0.1),
            limits: ActuatorLimits::passenger_car(),
        }
    }
}

impl<T: Real> MpcConfig<T> {
    pub fn validate(&self) -> Result<(), SupervisorError> {
        if self.horizon == 0 {
            return Err(SupervisorError::InvalidConfig("horizon must be at least one step"));
        }
        if !(self.ts.is_finite() && self.ts > T::zero()) {
            return Err(SupervisorError::InvalidConfig("sample time must be positive"));
        }
        let q_sym = (self.q_weight - self.q_weight.transpose()).amax() <= T::lit(1e-12);
        let q_psd = q_sym && self.q_weight.symmetric_eigenvalues().iter().all(|l| *l >= -T::lit(1e-12));
        if !q_psd {
            return Err(SupervisorError::InvalidConfig("state weight must be symmetric positive semidefinite"));
        }
        let r_sym = (self.r_weight - self.r_weight.transpose()).amax() <= T::lit(1e-12);
        if !(r_sym && self.r_weight.symmetric_eigenvalues().iter().all(|l| *l > T::zero())) {
            return Err(SupervisorError::InvalidConfig("input weight must be symmetric positive definite"));
        }
        let l = &self.limits;
        if !(l.delta_min < l.delta_max && l.accel_min < l.accel_max && l.delta_rate_min < l.delta_rate_max && l.accel_rate_min < l.accel_rate_max) {
            return Err(SupervisorError::InvalidConfig("actuator bounds must be ordered"));
        }
        Ok(())
    }
}

/// Supervisor memory carried between samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorState<T> {
    pub event_detected: bool,
    pub backup_input: Option<RateInput<T>>,
    pub margin: T,
}

impl<T: Real> SupervisorState<T> {
    pub fn new(margin: T) -> Self {
        Self { event_detected: false, backup_input: None, margin }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SafetyVerdict<T> {
    Certified { backup: RateInput<T> },
    DetectionEvent { fallback: RateInput<T> },
}

impl<T> SafetyVerdict<T> {
    pub fn is_certified(&self) -> bool {
        matches!(self, SafetyVerdict::Certified { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSummary<T> {
    pub status: QpStatus,
    pub iterations: usize,
    /// Horizon cost at the optimum, when feasible.
    pub objective: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification<T> {
    pub verdict: SafetyVerdict<T>,
    /// Input to apply at this sample.
    pub applied: RateInput<T>,
    pub summary: SolveSummary<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackupDecision<T> {
    pub input: RateInput<T>,
    pub summary: SolveSummary<T>,
    /// The unmargined problem had no feasible plan; braking was applied.
    pub safety_event: bool,
}

/// Safety check of one candidate input: the horizon problem from the
/// predicted next state and, when feasible, its first optimal input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowCheck<T> {
    pub summary: SolveSummary<T>,
    pub first_input: Option<RateInput<T>>,
}

/// Everything the supervisor needs to pose horizon problems for one
/// scenario. The path is the road centerline, independent of whatever path
/// the operating controller follows.
#[derive(Debug, Clone)]
pub struct Supervisor<T: Real> {
    pub plant: Plant<T>,
    pub model: DiscreteLti<T>,
    pub config: MpcConfig<T>,
    pub path: ReferencePath<T>,
    pub obstacle: Option<ObstacleSpec<T>>,
    pub footprint: VehicleFootprint<T>,
    pub settings: QpSettings<T>,
}

impl<T: Real> Supervisor<T> {
    pub fn new(
        plant: Plant<T>,
        config: MpcConfig<T>,
        path: ReferencePath<T>,
        obstacle: Option<ObstacleSpec<T>>,
    ) -> Result<Self, SupervisorError> {
        config.validate()?;
        if let Some(o) = &obstacle {
            o.validate()?;
        }
        let model = discretize_exact(&build_continuous_model(&plant.params)?, config.ts)?;
        let footprint = VehicleFootprint { front: plant.params.l_f, rear: plant.params.l_r, width: plant.params.veh_width };
        Ok(Self { plant, model, config, path, obstacle, footprint, settings: QpSettings::default() })
    }

    pub fn references(&self, anchor_station: T) -> Vec<ReferenceInput<T>> {
        let v = self.plant.params.v_x;
        (0..self.config.horizon)
            .map(|j| {
                let station = anchor_station + v * self.config.ts * T::lit(j as f64);
                ReferenceInput { psi_dot_des: self.path.curvature_at(station) * v, a_ref: T::zero() }
            })
            .collect()
    }

    /// Condensed horizon problem from error state `x0` observed at time `t0`.
    /// With `constrain_initial` false the rows on `x_{0|k}` are left out.
    pub fn horizon_problem(
        &self,
        x0: &ErrorState<T>,
        t0: T,
        margin: T,
        constrain_initial: bool,
    ) -> Result<CondensedProblem<T>, SupervisorError> {
        let anchor = self.path.reference_station(t0) + x0.e_x;
        let constraints = build_horizon_constraints(
            self.obstacle.as_ref(),
            anchor,
            self.plant.params.v_x,
            &self.footprint,
            margin,
            &self.config,
        )?;
        let mut constraints = constraints;
        if !constrain_initial {
            constraints.h_state[0] = nalgebra::SVector::repeat(T::lit(f64::INFINITY));
        }
        condense(&self.model, &self.config, x0, &self.references(anchor), &constraints)
    }

    fn solve_from(&self, x0: &ErrorState<T>, t0: T, margin: T, constrain_initial: bool) -> Result<ShadowCheck<T>, SupervisorError> {
        let problem = self.horizon_problem(x0, t0, margin, constrain_initial)?;
        let outcome = solve(&problem.qp, &self.settings);
        let (objective, first_input) = match &outcome {
            QpOutcome::Feasible(sol) => (
                Some(sol.objective + problem.objective_offset),
                Some(RateInput { delta_dot: sol.z_star[0], accel_dot: sol.z_star[1] }),
            ),
            _ => (None, None),
        };
        Ok(ShadowCheck {
            summary: SolveSummary { status: outcome.status(), iterations: outcome.iterations(), objective },
            first_input,
        })
    }

    /// Propagates `plant_state` under `u_op` for one sample with the
    /// nonlinear plant and solves the horizon problem from the result with
    /// the given margin. Pure; used for certification and shadow checks.
    pub fn check(&self, plant_state: &PlantState<T>, u_op: &RateInput<T>, t: T, margin: T) -> Result<ShadowCheck<T>, SupervisorError> {
        let predicted = self.plant.step(plant_state, u_op, self.config.ts)?;
        let t_next = t + self.config.ts;
        let x0 = to_error_state(&predicted, &self.path, t_next)?;
        self.solve_from(&x0, t_next, margin, true)
    }

    fn braking(&self, plant_state: &PlantState<T>) -> RateInput<T> {
        self.config.limits.braking(plant_state.accel, self.config.ts)
    }

    /// Certifies `u_op` at sample time `t`. A certified input is applied
    /// unchanged and the optimal first input is stored as the backup; any
    /// other solver outcome is a detection event, answered with the backup
    /// stored at the previous sample.
    pub fn certify(
        &self,
        state: &mut SupervisorState<T>,
        plant_state: &PlantState<T>,
        u_op: &RateInput<T>,
        t: T,
    ) -> Result<Certification<T>, SupervisorError> {
        if state.event_detected {
            return Err(SupervisorError::AlreadyDetected);
        }
        let check = self.check(plant_state, u_op, t, state.margin)?;
        match check.first_input {
            Some(backup) => {
                state.backup_input = Some(backup);
                Ok(Certification { verdict: SafetyVerdict::Certified { backup }, applied: *u_op, summary: check.summary })
            }
            None => {
                let fallback = state.backup_input.unwrap_or_else(|| self.braking(plant_state));
                state.event_detected = true;
                Ok(Certification { verdict: SafetyVerdict::DetectionEvent { fallback }, applied: fallback, summary: check.summary })
            }
        }
    }

    /// Backup MPC: unmargined horizon problem from the measured state. The
    /// measured state is not constrained since no input can change it.
    pub fn backup_control(&self, plant_state: &PlantState<T>, t: T) -> Result<BackupDecision<T>, SupervisorError> {
        let x0 = to_error_state(plant_state, &self.path, t)?;
        let check = self.solve_from(&x0, t, T::zero(), false)?;
        Ok(match check.first_input {
            Some(input) => BackupDecision { input, summary: check.summary, safety_event: false },
            None => BackupDecision { input: self.braking(plant_state), summary: check.summary, safety_event: true },
        })
    }
}
