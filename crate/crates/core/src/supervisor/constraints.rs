use nalgebra::{SMatrix, SVector, Vector4};

use super::{MpcConfig, SupervisorError};
use crate::vehicle::ErrorState;
use crate::Real;

/// Side on which the vehicle passes the obstacle. `Right` keeps
/// `e_y ≤ h̄ < 0`, `Left` keeps `e_y ≥ -h̄ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PassingSide {
    Right,
    Left,
}

impl PassingSide {
    /// Row sign `l₁` of the obstacle half-plane.
    pub fn sign<T: Real>(self) -> T {
        match self {
            PassingSide::Right => T::one(),
            PassingSide::Left => -T::one(),
        }
    }
}

/// Obstacle centered on the reference path between two stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSpec<T> {
    pub s_start: T,
    pub s_end: T,
    pub width: T,
    pub side: PassingSide,
}

impl<T: Real> ObstacleSpec<T> {
    pub fn new(s_start: T, s_end: T, width: T, side: PassingSide) -> Result<Self, SupervisorError> {
        let spec = Self { s_start, s_end, width, side };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SupervisorError> {
        if !(self.s_start.is_finite() && self.s_end.is_finite() && self.s_start < self.s_end) {
            return Err(SupervisorError::InvalidConfig("obstacle needs s_start < s_end"));
        }
        if !(self.width.is_finite() && self.width > T::zero()) {
            return Err(SupervisorError::InvalidConfig("obstacle width must be positive"));
        }
        Ok(())
    }
}

/// Longitudinal extent of the vehicle around its CoG and its width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleFootprint<T> {
    pub front: T,
    pub rear: T,
    pub width: T,
}

/// Per-step polytopes `Gˣ x_i ≤ hˣ_i` (i = 0..=N) and `Gᵘ u_j ≤ hᵘ`.
///
/// Row 0 of the state block is the obstacle half-plane on `e_y`; a step
/// where the obstacle is not present carries `+∞` there, and the row is
/// dropped during condensing. Rows 1–4 bound δ and a.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeSpec<T: Real> {
    pub g_state: SMatrix<T, 5, 8>,
    pub h_state: Vec<SVector<T, 5>>,
    pub g_input: SMatrix<T, 4, 2>,
    pub h_input: Vector4<T>,
}

impl<T: Real> PolytopeSpec<T> {
    /// Obstacle bound `h̄` on row 0 at step `i`, `None` when inactive.
    pub fn obstacle_bound(&self, i: usize) -> Option<T> {
        let h = self.h_state[i][0];
        h.is_finite().then_some(h)
    }
}

/// Builds the horizon constraints for a prediction whose initial state sits
/// at `anchor_station`; step `i` is predicted at `anchor_station + v_x·ts·i`.
///
/// The obstacle row is active at step `i` when the footprint interval
/// `[s_i - rear, s_i + front]` overlaps the obstacle interval padded by half
/// a sample of travel on both ends, so that no sample can jump over it.
pub fn build_horizon_constraints<T: Real>(
    obstacle: Option<&ObstacleSpec<T>>,
    anchor_station: T,
    v_x: T,
    footprint: &VehicleFootprint<T>,
    margin: T,
    config: &MpcConfig<T>,
) -> Result<PolytopeSpec<T>, SupervisorError> {
    if !(margin.is_finite() && margin >= T::zero()) {
        return Err(SupervisorError::InvalidConfig("margin must be finite and nonnegative"));
    }
    let limits = &config.limits;
    let sign = obstacle.map_or(T::one(), |o| o.side.sign());

    let mut g_state = SMatrix::<T, 5, 8>::zeros();
    g_state[(0, ErrorState::<T>::E_Y)] = sign;
    g_state[(1, ErrorState::<T>::DELTA)] = T::one();
    g_state[(2, ErrorState::<T>::DELTA)] = -T::one();
    g_state[(3, ErrorState::<T>::ACCEL)] = T::one();
    g_state[(4, ErrorState::<T>::ACCEL)] = -T::one();

    let advance = v_x * config.ts;
    let pad = T::lit(0.5) * advance;
    let inactive = T::lit(f64::INFINITY);
    let h_state = (0..=config.horizon)
        .map(|i| {
            let s_i = anchor_station + advance * T::lit(i as f64);
            let bound = match obstacle {
                Some(o) if s_i + footprint.front >= o.s_start - pad && s_i - footprint.rear <= o.s_end + pad => {
                    -o.width * T::lit(0.5) - footprint.width * T::lit(0.5) - margin
                }
                _ => inactive,
            };
            SVector::<T, 5>::new(bound, limits.delta_max, -limits.delta_min, limits.accel_max, -limits.accel_min)
        })
        .collect();

    let mut g_input = SMatrix::<T, 4, 2>::zeros();
    g_input[(0, 0)] = T::one();
    g_input[(1, 0)] = -T::one();
    g_input[(2, 1)] = T::one();
    g_input[(3, 1)] = -T::one();
    let h_input = Vector4::new(limits.delta_rate_max, -limits.delta_rate_min, limits.accel_rate_max, -limits.accel_rate_min);

    Ok(PolytopeSpec { g_state, h_state, g_input, h_input })
}
