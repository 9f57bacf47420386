//! Offline estimate of the one-step mismatch between the linear predictor
//! and the nonlinear plant, and of the lateral margin derived from it.
//!
//! The mismatch set is sampled on a grid over the error states and rate
//! inputs. Only its projection on `e_y` is needed, and the projection of a
//! convex hull on a coordinate axis is the interval spanned by the points,
//! so no hull is built.

use nalgebra::SVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path::{PathError, ReferencePath};
use crate::vehicle::{
    build_continuous_model, discretize_exact, pose_from_error_state, to_error_state, ActuatorLimits, DiscreteLti,
    ErrorState, ModelError, Plant, RateInput, ReferenceInput, VehicleParams,
};
use crate::Real;

pub const AXIS_NAMES: [&str; 10] =
    ["e_y", "e_y_dot", "e_psi", "e_psi_dot", "e_x", "e_x_dot", "delta", "accel", "delta_dot", "accel_dot"];

/// Largest heading error (rad) covered by the default grid.
pub const HEADING_ERROR_BOUND: f64 = 0.35;

pub const STATE_NAMES: [&str; 8] = ["e_y", "e_y_dot", "e_psi", "e_psi_dot", "e_x", "e_x_dot", "delta", "accel"];

#[derive(Debug, Error)]
pub enum DisturbanceError {
    #[error("grid axis `{0}` has zero points or an empty range")]
    InvalidAxis(&'static str),
    #[error("every grid sample was skipped")]
    AllSkipped,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("malformed report: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    /// Held at zero: the dynamics do not depend on this coordinate.
    pub inert: bool,
}

impl GridAxis {
    fn active(lower: f64, upper: f64, points: usize) -> Self {
        Self { lower, upper, points, inert: false }
    }

    fn inert() -> Self {
        Self { lower: 0.0, upper: 0.0, points: 1, inert: true }
    }

    pub fn count(&self) -> usize {
        if self.inert { 1 } else { self.points }
    }

    /// Grid value `i` of `count()`; a single point sits at the midpoint.
    pub fn value(&self, i: usize) -> f64 {
        if self.inert {
            0.0
        } else if self.points == 1 {
            0.5 * (self.lower + self.upper)
        } else {
            self.lower + (self.upper - self.lower) * i as f64 / (self.points - 1) as f64
        }
    }
}

/// Grid over `[e_y, ė_y, e_ψ, ė_ψ, e_x, ė_x, δ, a, δ̇, ȧ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: [GridAxis; 10],
    /// Larger grids are subsampled uniformly without replacement.
    pub max_samples: usize,
    pub seed: u64,
}

impl GridSpec {
    /// Ranges cover the actuator boxes and the errors an evasive plan can
    /// reach at `params.v_x`: heading error up to `HEADING_ERROR_BOUND`, the
    /// lateral rate that heading produces, and the kinematic yaw rate at full
    /// lock. `e_y` and `e_x` are inert.
    pub fn for_vehicle(params: &VehicleParams<f64>, limits: &ActuatorLimits<f64>, points: usize) -> Self {
        let v = params.v_x;
        let psi = HEADING_ERROR_BOUND;
        let lateral_rate = v * psi.sin();
        let steer = limits.delta_max.abs().max(limits.delta_min.abs());
        let yaw_rate = v * steer.tan() / params.wheelbase();
        let axes = [
            GridAxis::inert(),
            GridAxis::active(-lateral_rate, lateral_rate, points),
            GridAxis::active(-psi, psi, points),
            GridAxis::active(-yaw_rate, yaw_rate, points),
            GridAxis::inert(),
            GridAxis::active(-1.0, 1.0, points),
            GridAxis::active(limits.delta_min, limits.delta_max, points),
            GridAxis::active(limits.accel_min, limits.accel_max, points),
            GridAxis::active(limits.delta_rate_min, limits.delta_rate_max, points),
            GridAxis::active(limits.accel_rate_min, limits.accel_rate_max, points),
        ];
        Self { axes, max_samples: 100_000, seed: 0 }
    }

    /// Inserts a midpoint between neighbouring values on every active axis
    /// (`p → 2p − 1`), so the current grid is a subset of the result.
    pub fn refined(&self) -> Self {
        let mut next = self.clone();
        for axis in next.axes.iter_mut().filter(|a| !a.inert && a.points > 1) {
            axis.points = 2 * axis.points - 1;
        }
        next
    }

    pub fn full_size(&self) -> usize {
        self.axes.iter().map(GridAxis::count).product()
    }

    fn validate(&self) -> Result<(), DisturbanceError> {
        for (axis, name) in self.axes.iter().zip(AXIS_NAMES) {
            let bad_range = !(axis.lower.is_finite() && axis.upper.is_finite() && axis.lower <= axis.upper);
            if axis.points == 0 || bad_range {
                return Err(DisturbanceError::InvalidAxis(name));
            }
        }
        Ok(())
    }

    /// Point `index` of the full grid in mixed-radix order (last axis fastest).
    pub fn point(&self, mut index: usize) -> [f64; 10] {
        let mut out = [0.0; 10];
        for d in (0..10).rev() {
            let c = self.axes[d].count();
            out[d] = self.axes[d].value(index % c);
            index /= c;
        }
        out
    }

    /// Indices of the evaluated grid points, ascending.
    pub fn sample_indices(&self) -> Vec<usize> {
        let total = self.full_size();
        if total <= self.max_samples {
            return (0..total).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut picked = rand::seq::index::sample(&mut rng, total, self.max_samples).into_vec();
        picked.sort_unstable();
        picked
    }
}

/// Advances an error state by one sample under constant rate input.
pub trait OneStepPlant<T: Real>: Sync {
    /// `None` when the state cannot be realized or integrated.
    fn advance(&self, x0: &ErrorState<T>, u: &RateInput<T>, refs: &ReferenceInput<T>) -> Option<ErrorState<T>>;
}

/// The nonlinear plant on a straight reference path.
#[derive(Debug, Clone)]
pub struct NonlinearStepper<T: Real> {
    pub plant: Plant<T>,
    pub ts: T,
    path: ReferencePath<T>,
}

impl<T: Real> NonlinearStepper<T> {
    pub fn new(plant: Plant<T>, ts: T) -> Result<Self, DisturbanceError> {
        let v = plant.params.v_x;
        let path = ReferencePath::straight(
            T::lit(-40.0),
            T::zero(),
            T::zero(),
            T::lit(-40.0),
            T::lit(100.0),
            T::lit(0.5),
            v,
        )?
        .with_reference_origin(T::zero());
        Ok(Self { plant, ts, path })
    }
}

impl<T: Real> OneStepPlant<T> for NonlinearStepper<T> {
    fn advance(&self, x0: &ErrorState<T>, u: &RateInput<T>, _refs: &ReferenceInput<T>) -> Option<ErrorState<T>> {
        if x0.e_psi.abs() > T::frac_pi_2() {
            return None;
        }
        let pose = pose_from_error_state(x0, &self.path, T::zero()).ok()?;
        let next = self.plant.step(&pose, u, self.ts).ok()?;
        to_error_state(&next, &self.path, self.ts).ok()
    }
}

/// The linear predictor itself; its mismatch is identically zero.
#[derive(Debug, Clone)]
pub struct LinearSurrogate<T: Real> {
    pub model: DiscreteLti<T>,
}

impl<T: Real> OneStepPlant<T> for LinearSurrogate<T> {
    fn advance(&self, x0: &ErrorState<T>, u: &RateInput<T>, refs: &ReferenceInput<T>) -> Option<ErrorState<T>> {
        Some(self.model.step(x0, u, refs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSample<T: Real> {
    /// Linear prediction minus plant outcome, in error coordinates.
    pub w: SVector<T, 8>,
}

/// Linear one-step prediction minus `plant`'s outcome from the same state.
pub fn one_step_mismatch<T: Real>(
    plant: &impl OneStepPlant<T>,
    model: &DiscreteLti<T>,
    x0: &ErrorState<T>,
    u: &RateInput<T>,
    refs: &ReferenceInput<T>,
) -> Option<MismatchSample<T>> {
    let actual = plant.advance(x0, u, refs)?;
    let w = model.step(x0, u, refs).to_vector() - actual.to_vector();
    w.iter().all(|v| v.is_finite()).then_some(MismatchSample { w })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSet<T: Real> {
    pub samples: Vec<MismatchSample<T>>,
    /// `[min, max]` of each component over the samples.
    pub intervals: [(T, T); 8],
    pub skipped: usize,
}

impl<T: Real> DisturbanceSet<T> {
    /// `samples` must be non-empty.
    pub fn from_samples(samples: Vec<MismatchSample<T>>, skipped: usize) -> Self {
        let mut intervals = [(T::zero(), T::zero()); 8];
        for (i, interval) in intervals.iter_mut().enumerate() {
            let first = samples[0].w[i];
            *interval = samples.iter().fold((first, first), |(lo, hi), s| (lo.min(s.w[i]), hi.max(s.w[i])));
        }
        Self { samples, intervals, skipped }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEstimate<T: Real> {
    /// Largest `|e_y|` endpoint of the projected interval.
    pub delta: T,
    pub set: DisturbanceSet<T>,
}

pub fn estimate_delta<T: Real>(
    grid: &GridSpec,
    plant: &impl OneStepPlant<T>,
    model: &DiscreteLti<T>,
) -> Result<DeltaEstimate<T>, DisturbanceError> {
    grid.validate()?;
    let refs = ReferenceInput::zero();
    let results: Vec<Option<MismatchSample<T>>> = grid
        .sample_indices()
        .into_par_iter()
        .map(|index| {
            let p = grid.point(index).map(T::lit);
            let x0 = ErrorState::from_vector(&SVector::<T, 8>::from_column_slice(&p[..8]));
            let u = RateInput { delta_dot: p[8], accel_dot: p[9] };
            one_step_mismatch(plant, model, &x0, &u, &refs)
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let samples: Vec<MismatchSample<T>> = results.into_iter().flatten().collect();
    if samples.is_empty() {
        return Err(DisturbanceError::AllSkipped);
    }
    let set = DisturbanceSet::from_samples(samples, skipped);
    let (lo, hi) = set.intervals[ErrorState::<T>::E_Y];
    Ok(DeltaEstimate { delta: lo.abs().max(hi.abs()), set })
}

/// Mismatch of the nonlinear plant against the exact discretization of the
/// error model linearized at `params.v_x`.
pub fn estimate_delta_for(
    params: &VehicleParams<f64>,
    limits: &ActuatorLimits<f64>,
    ts: f64,
    grid: &GridSpec,
) -> Result<DeltaEstimate<f64>, DisturbanceError> {
    let model = discretize_exact(&build_continuous_model(params)?, ts)?;
    let stepper = NonlinearStepper::new(Plant::new(*params, *limits), ts)?;
    estimate_delta(grid, &stepper, &model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisInterval {
    pub component: String,
    pub lower: f64,
    pub upper: f64,
}

/// File form of an estimate: margin, per-component intervals and the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaReport {
    pub delta: f64,
    pub v_x: f64,
    pub ts: f64,
    pub samples: usize,
    pub skipped: usize,
    pub intervals: Vec<AxisInterval>,
    pub grid: GridSpec,
}

impl DeltaReport {
    pub fn new(estimate: &DeltaEstimate<f64>, grid: &GridSpec, v_x: f64, ts: f64) -> Self {
        let intervals = estimate
            .set
            .intervals
            .iter()
            .zip(STATE_NAMES)
            .map(|(&(lower, upper), name)| AxisInterval { component: name.to_string(), lower, upper })
            .collect();
        Self {
            delta: estimate.delta,
            v_x,
            ts,
            samples: estimate.set.samples.len(),
            skipped: estimate.set.skipped,
            intervals,
            grid: grid.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String, DisturbanceError> {
        toml::to_string(self).map_err(|e| DisturbanceError::Report(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, DisturbanceError> {
        toml::from_str(text).map_err(|e| DisturbanceError::Report(e.to_string()))
    }
}
