//! Vehicle models: the linear error-dynamics predictor, its exact
//! discretization, the nonlinear dual-track plant used as ground truth, and
//! the conversion between global poses and path-relative error coordinates.

mod frenet;
mod model;
mod plant;

pub use frenet::{pose_from_error_state, to_error_state};
pub use model::{build_continuous_model, discretize_exact, zoh_blocks, ContinuousLti, DiscreteLti};
pub use plant::{Plant, PlantState};

use nalgebra::{SVector, Vector2};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("vehicle parameter `{0}` must be finite and strictly positive")]
    InvalidParameter(&'static str),
    #[error("sample time must be finite and positive")]
    InvalidSampleTime,
    #[error("longitudinal speed {vx:.3} m/s is outside the model's validity range")]
    ValidityBreach { vx: f64 },
    #[error("state became non-finite during integration")]
    NonFinite,
}

/// Physical vehicle parameters. `v_x` is the nominal speed at which the
/// error dynamics are linearized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    /// Cornering stiffness of one front tire (N/rad).
    pub c_alpha_f: T,
    /// Cornering stiffness of one rear tire (N/rad).
    pub c_alpha_r: T,
    pub l_f: T,
    pub l_r: T,
    pub i_z: T,
    pub mass: T,
    pub v_x: T,
    pub track_width: T,
    pub veh_width: T,
}

impl<T: Real> VehicleParams<T> {
    /// Mid-size passenger car at 10 m/s.
    pub fn passenger_car() -> Self {
        Self {
            c_alpha_f: T::lit(153_000.0),
            c_alpha_r: T::lit(191_000.0),
            l_f: T::lit(1.3),
            l_r: T::lit(1.7),
            i_z: T::lit(5250.0),
            mass: T::lit(2500.0),
            v_x: T::lit(10.0),
            track_width: T::lit(1.6),
            veh_width: T::lit(2.0),
        }
    }

    pub fn with_speed(mut self, v_x: T) -> Self {
        self.v_x = v_x;
        self
    }

    pub fn wheelbase(&self) -> T {
        self.l_f + self.l_r
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("c_alpha_f", self.c_alpha_f),
            ("c_alpha_r", self.c_alpha_r),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("i_z", self.i_z),
            ("mass", self.mass),
            ("v_x", self.v_x),
            ("track_width", self.track_width),
            ("veh_width", self.veh_width),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > T::zero()) {
                return Err(ModelError::InvalidParameter(name));
            }
        }
        Ok(())
    }
}

/// Box bounds on steering angle and acceleration and on their rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorLimits<T> {
    pub delta_min: T,
    pub delta_max: T,
    pub accel_min: T,
    pub accel_max: T,
    pub delta_rate_min: T,
    pub delta_rate_max: T,
    pub accel_rate_min: T,
    pub accel_rate_max: T,
}

impl<T: Real> ActuatorLimits<T> {
    /// ±34° steering, [-6, 2] m/s², ±30°/s steering rate, ±30 m/s³ jerk.
    pub fn passenger_car() -> Self {
        let deg = T::pi() / T::lit(180.0);
        Self {
            delta_min: -T::lit(34.0) * deg,
            delta_max: T::lit(34.0) * deg,
            accel_min: T::lit(-6.0),
            accel_max: T::lit(2.0),
            delta_rate_min: -T::lit(30.0) * deg,
            delta_rate_max: T::lit(30.0) * deg,
            accel_rate_min: T::lit(-30.0),
            accel_rate_max: T::lit(30.0),
        }
    }

    pub fn clamp_rates(&self, input: RateInput<T>) -> RateInput<T> {
        RateInput {
            delta_dot: input.delta_dot.clamp(self.delta_rate_min, self.delta_rate_max),
            accel_dot: input.accel_dot.clamp(self.accel_rate_min, self.accel_rate_max),
        }
    }

    /// Rate input that drives the acceleration to `accel_min` as fast as the
    /// jerk bound allows while holding the steering angle.
    pub fn braking(&self, current_accel: T, ts: T) -> RateInput<T> {
        self.clamp_rates(RateInput {
            delta_dot: T::zero(),
            accel_dot: (self.accel_min - current_accel) / ts,
        })
    }
}

/// Augmented error state `[e_y, ė_y, e_ψ, ė_ψ, e_x, ė_x, δ, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState<T> {
    pub e_y: T,
    pub e_y_dot: T,
    pub e_psi: T,
    pub e_psi_dot: T,
    pub e_x: T,
    pub e_x_dot: T,
    pub delta: T,
    pub accel: T,
}

impl<T: Real> ErrorState<T> {
    pub const DIM: usize = 8;
    pub const E_Y: usize = 0;
    pub const DELTA: usize = 6;
    pub const ACCEL: usize = 7;

    pub fn zero() -> Self {
        Self::from_vector(&SVector::zeros())
    }

    pub fn to_vector(&self) -> SVector<T, 8> {
        SVector::from([
            self.e_y,
            self.e_y_dot,
            self.e_psi,
            self.e_psi_dot,
            self.e_x,
            self.e_x_dot,
            self.delta,
            self.accel,
        ])
    }

    pub fn from_vector(v: &SVector<T, 8>) -> Self {
        Self {
            e_y: v[0],
            e_y_dot: v[1],
            e_psi: v[2],
            e_psi_dot: v[3],
            e_x: v[4],
            e_x_dot: v[5],
            delta: v[6],
            accel: v[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Control input of the augmented model: steering rate and jerk.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateInput<T> {
    pub delta_dot: T,
    pub accel_dot: T,
}

impl<T: Real> RateInput<T> {
    pub fn zero() -> Self {
        Self { delta_dot: T::zero(), accel_dot: T::zero() }
    }

    pub fn to_vector(&self) -> Vector2<T> {
        Vector2::new(self.delta_dot, self.accel_dot)
    }

    pub fn from_vector(v: &Vector2<T>) -> Self {
        Self { delta_dot: v[0], accel_dot: v[1] }
    }
}

/// Feed-forward signals of the error dynamics: desired yaw rate of the road
/// and reference acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceInput<T> {
    pub psi_dot_des: T,
    pub a_ref: T,
}

impl<T: Real> ReferenceInput<T> {
    pub fn zero() -> Self {
        Self { psi_dot_des: T::zero(), a_ref: T::zero() }
    }

    pub fn to_vector(&self) -> Vector2<T> {
        Vector2::new(self.psi_dot_des, self.a_ref)
    }
}
