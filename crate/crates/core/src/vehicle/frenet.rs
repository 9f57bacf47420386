use super::{ErrorState, PlantState};
use crate::path::{PathError, ReferencePath};
use crate::scalar::wrap_angle;
use crate::Real;

/// Expresses a plant state in error coordinates relative to `path` at time `t`.
///
/// `e_y` is the signed lateral offset of the CoG (left positive), `e_ψ` the
/// heading error, `e_x` the station error against the path's longitudinal
/// reference. Derivatives are the exact time derivatives of those quantities.
pub fn to_error_state<T: Real>(
    state: &PlantState<T>,
    path: &ReferencePath<T>,
    t: T,
) -> Result<ErrorState<T>, PathError> {
    let proj = path.project(state.x, state.y)?;
    let e_psi = wrap_angle(state.yaw - proj.heading);
    let (s, c) = e_psi.sin_cos();
    let along = state.vx * c - state.vy * s;
    let across = state.vx * s + state.vy * c;
    let station_rate = along / (T::one() - proj.curvature * proj.lateral);
    Ok(ErrorState {
        e_y: proj.lateral,
        e_y_dot: across,
        e_psi,
        e_psi_dot: state.yaw_rate - proj.curvature * station_rate,
        e_x: proj.station - path.reference_station(t),
        e_x_dot: station_rate - path.speed(),
        delta: state.delta,
        accel: state.accel,
    })
}

/// Inverse of [`to_error_state`]: the plant state whose error coordinates
/// relative to `path` at time `t` are `err`.
pub fn pose_from_error_state<T: Real>(
    err: &ErrorState<T>,
    path: &ReferencePath<T>,
    t: T,
) -> Result<PlantState<T>, PathError> {
    let station = path.reference_station(t) + err.e_x;
    let p = path.sample(station)?;
    let (sh, ch) = p.heading.sin_cos();
    let station_rate = path.speed() + err.e_x_dot;
    let along = station_rate * (T::one() - p.curvature * err.e_y);
    let (s, c) = err.e_psi.sin_cos();
    Ok(PlantState {
        x: p.x - sh * err.e_y,
        y: p.y + ch * err.e_y,
        yaw: p.heading + err.e_psi,
        vx: along * c + err.e_y_dot * s,
        vy: -along * s + err.e_y_dot * c,
        yaw_rate: err.e_psi_dot + p.curvature * station_rate,
        delta: err.delta,
        accel: err.accel,
    })
}
