//! Pure-pursuit path tracker used as the supervised operating controller.
//! It only ever sees the plant state and its own reference path.

use crate::path::ReferencePath;
use crate::scalar::wrap_angle;
use crate::vehicle::{ActuatorLimits, PlantState, RateInput};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitConfig<T> {
    /// Goal distance is `v_x · lookahead_time` along the path.
    pub lookahead_time: T,
    pub wheelbase: T,
    /// Proportional gain on the speed error (1/s).
    pub speed_gain: T,
    pub ts: T,
    pub limits: ActuatorLimits<T>,
}

impl<T: Real> PursuitConfig<T> {
    pub fn new(wheelbase: T, ts: T, limits: ActuatorLimits<T>) -> Self {
        Self { lookahead_time: T::lit(0.5), wheelbase, speed_gain: T::one(), ts, limits }
    }
}

/// Why the tracker fell back to braking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PursuitFault {
    OffPath,
    PathExhausted,
    GoalBehind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PursuitOutput<T> {
    pub input: RateInput<T>,
    pub fault: Option<PursuitFault>,
}

/// Rate command steering toward the goal point `v_x·lookahead_time` ahead
/// of the closest path point, with curvature `2·sin α / chord`.
pub fn pursuit_control<T: Real>(state: &PlantState<T>, path: &ReferencePath<T>, cfg: &PursuitConfig<T>) -> PursuitOutput<T> {
    let brake = |fault| PursuitOutput { input: cfg.limits.braking(state.accel, cfg.ts), fault: Some(fault) };
    let Ok(closest) = path.project(state.x, state.y) else { return brake(PursuitFault::OffPath) };
    let goal_station = closest.station + state.vx.max(T::zero()) * cfg.lookahead_time;
    if goal_station > path.last_station() {
        return brake(PursuitFault::PathExhausted);
    }
    let Ok(goal) = path.sample(goal_station) else { return brake(PursuitFault::PathExhausted) };
    let (dx, dy) = (goal.x - state.x, goal.y - state.y);
    let chord = dx.hypot(dy);
    let alpha = wrap_angle(dy.atan2(dx) - state.yaw);
    if chord <= T::lit(1e-6) || alpha.abs() > T::frac_pi_2() {
        return brake(PursuitFault::GoalBehind);
    }
    let curvature = T::lit(2.0) * alpha.sin() / chord;
    let limits = &cfg.limits;
    let delta_des = (cfg.wheelbase * curvature).atan().clamp(limits.delta_min, limits.delta_max);
    let accel_des = (cfg.speed_gain * (path.speed() - state.vx)).clamp(limits.accel_min, limits.accel_max);
    let input = limits.clamp_rates(RateInput {
        delta_dot: (delta_des - state.delta) / cfg.ts,
        accel_dot: (accel_des - state.accel) / cfg.ts,
    });
    PursuitOutput { input, fault: None }
}
