use nalgebra::SVector;

use super::{ActuatorLimits, ModelError, RateInput, VehicleParams};
use crate::Real;

/// Global pose and body-frame velocities of the simulated vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    pub x: T,
    pub y: T,
    pub yaw: T,
    /// Body-frame longitudinal velocity.
    pub vx: T,
    /// Body-frame lateral velocity (positive to the left).
    pub vy: T,
    pub yaw_rate: T,
    pub delta: T,
    pub accel: T,
}

impl<T: Real> PlantState<T> {
    fn to_vector(self) -> SVector<T, 8> {
        SVector::from([self.x, self.y, self.yaw, self.vx, self.vy, self.yaw_rate, self.delta, self.accel])
    }

    fn from_vector(v: &SVector<T, 8>) -> Self {
        Self { x: v[0], y: v[1], yaw: v[2], vx: v[3], vy: v[4], yaw_rate: v[5], delta: v[6], accel: v[7] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Three-degree-of-freedom dual-track vehicle with linear tires.
///
/// Each wheel produces a lateral force `C_α·α` from its own slip angle; the
/// drive/brake force `m·a` is split over the two rear wheels. Steering angle
/// and acceleration are integrated from the rate inputs and clamped to the
/// actuator bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant<T> {
    pub params: VehicleParams<T>,
    pub limits: ActuatorLimits<T>,
}

impl<T: Real> Plant<T> {
    /// RK4 sub-steps per call to [`Plant::step`].
    pub const SUBSTEPS: usize = 20;

    /// Longitudinal speed below which the tire model is not trusted.
    pub fn min_speed() -> T {
        T::lit(0.1)
    }

    pub fn new(params: VehicleParams<T>, limits: ActuatorLimits<T>) -> Self {
        Self { params, limits }
    }

    /// Advances the plant by `ts` holding `input` constant.
    pub fn step(
        &self,
        state: &PlantState<T>,
        input: &RateInput<T>,
        ts: T,
    ) -> Result<PlantState<T>, ModelError> {
        if !(ts.is_finite() && ts > T::zero()) {
            return Err(ModelError::InvalidSampleTime);
        }
        self.check_speed(state.vx)?;
        let h = ts / T::lit(Self::SUBSTEPS as f64);
        let half = T::lit(0.5);
        let sixth = T::lit(1.0 / 6.0);
        let two = T::lit(2.0);
        let mut x = state.to_vector();
        for _ in 0..Self::SUBSTEPS {
            let k1 = self.derivative(&x, input);
            let k2 = self.derivative(&(x + k1 * (h * half)), input);
            let k3 = self.derivative(&(x + k2 * (h * half)), input);
            let k4 = self.derivative(&(x + k3 * h), input);
            x += (k1 + k2 * two + k3 * two + k4) * (h * sixth);
            x[6] = x[6].clamp(self.limits.delta_min, self.limits.delta_max);
            x[7] = x[7].clamp(self.limits.accel_min, self.limits.accel_max);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite);
            }
            self.check_speed(x[3])?;
        }
        Ok(PlantState::from_vector(&x))
    }

    fn check_speed(&self, vx: T) -> Result<(), ModelError> {
        if vx <= Self::min_speed() {
            Err(ModelError::ValidityBreach { vx: vx.as_f64() })
        } else {
            Ok(())
        }
    }

    fn derivative(&self, s: &SVector<T, 8>, input: &RateInput<T>) -> SVector<T, 8> {
        let p = &self.params;
        let (yaw, vx, vy, r, delta, accel) = (s[2], s[3], s[4], s[5], s[6], s[7]);
        let half_track = p.track_width * T::lit(0.5);
        let rear_drive = p.mass * accel * T::lit(0.5);

        // (x offset, y offset, steer angle, cornering stiffness, wheel-frame drive force)
        let wheels = [
            (p.l_f, half_track, delta, p.c_alpha_f, T::zero()),
            (p.l_f, -half_track, delta, p.c_alpha_f, T::zero()),
            (-p.l_r, half_track, T::zero(), p.c_alpha_r, rear_drive),
            (-p.l_r, -half_track, T::zero(), p.c_alpha_r, rear_drive),
        ];
        let (mut fx, mut fy, mut mz) = (T::zero(), T::zero(), T::zero());
        for (xw, yw, steer, stiffness, drive) in wheels {
            let vwx = vx - r * yw;
            let vwy = vy + r * xw;
            let (sin_s, cos_s) = steer.sin_cos();
            let lon = cos_s * vwx + sin_s * vwy;
            let lat = -sin_s * vwx + cos_s * vwy;
            let slip = -lat.atan2(lon);
            let lateral = stiffness * slip;
            let fxb = cos_s * drive - sin_s * lateral;
            let fyb = sin_s * drive + cos_s * lateral;
            fx += fxb;
            fy += fyb;
            mz += xw * fyb - yw * fxb;
        }

        let (sin_yaw, cos_yaw) = yaw.sin_cos();
        let limits = &self.limits;
        let mut delta_rate = input.delta_dot;
        if (delta >= limits.delta_max && delta_rate > T::zero())
            || (delta <= limits.delta_min && delta_rate < T::zero())
        {
            delta_rate = T::zero();
        }
        let mut accel_rate = input.accel_dot;
        if (accel >= limits.accel_max && accel_rate > T::zero())
            || (accel <= limits.accel_min && accel_rate < T::zero())
        {
            accel_rate = T::zero();
        }

        SVector::from([
            vx * cos_yaw - vy * sin_yaw,
            vx * sin_yaw + vy * cos_yaw,
            r,
            fx / p.mass + vy * r,
            fy / p.mass - vx * r,
            mz / p.i_z,
            delta_rate,
            accel_rate,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> Plant<f64> {
        Plant::new(VehicleParams::passenger_car(), ActuatorLimits::passenger_car())
    }

    fn straight(vx: f64) -> PlantState<f64> {
        PlantState { x: 0.0, y: 0.0, yaw: 0.0, vx, vy: 0.0, yaw_rate: 0.0, delta: 0.0, accel: 0.0 }
    }

    #[test]
    fn straight_line_motion() {
        let next = plant().step(&straight(10.0), &RateInput::zero(), 0.1).unwrap();
        assert_eq!(next.y, 0.0);
        assert_eq!(next.yaw, 0.0);
        assert!((next.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kinematic_limit_yaw_rate() {
        let stiff = 1.0e6;
        let mut p = plant();
        p.params.c_alpha_f = stiff;
        p.params.c_alpha_r = stiff;
        let delta = 0.02;
        let mut s = PlantState { delta, ..straight(10.0) };
        for _ in 0..100 {
            s = p.step(&s, &RateInput::zero(), 0.05).unwrap();
        }
        let kinematic = 10.0 * delta / p.params.wheelbase();
        // Understeer gradient shrinks as 1/C_α; residual is ~0.6% here.
        assert!(((s.yaw_rate - kinematic) / kinematic).abs() < 0.01, "{}", s.yaw_rate);

        let mut soft = p;
        soft.params.c_alpha_f = 1.0e5;
        soft.params.c_alpha_r = 1.0e5;
        let mut s_soft = PlantState { delta, ..straight(10.0) };
        for _ in 0..100 {
            s_soft = soft.step(&s_soft, &RateInput::zero(), 0.05).unwrap();
        }
        assert!((s_soft.yaw_rate - kinematic).abs() > (s.yaw_rate - kinematic).abs());
    }

    #[test]
    fn refined_step_agreement() {
        let p = plant();
        let input = RateInput { delta_dot: 0.2, accel_dot: 1.0 };
        let mut coarse = straight(10.0);
        let mut fine = coarse;
        for _ in 0..10 {
            coarse = p.step(&coarse, &input, 0.1).unwrap();
            for _ in 0..10 {
                fine = p.step(&fine, &input, 0.01).unwrap();
            }
        }
        let c = coarse.to_vector();
        let f = fine.to_vector();
        for i in 0..8 {
            assert!((c[i] - f[i]).abs() <= 1e-4 * f[i].abs().max(1.0), "component {i}: {} vs {}", c[i], f[i]);
        }
    }

    #[test]
    fn actuator_clamping() {
        let p = plant();
        let s = PlantState { delta: p.limits.delta_max - 0.01, accel: 1.9, ..straight(10.0) };
        let next = p.step(&s, &RateInput { delta_dot: 1.0, accel_dot: 30.0 }, 0.1).unwrap();
        assert_eq!(next.delta, p.limits.delta_max);
        assert_eq!(next.accel, p.limits.accel_max);
    }

    #[test]
    fn validity_breach_at_low_speed() {
        assert!(matches!(
            plant().step(&straight(0.05), &RateInput::zero(), 0.1),
            Err(ModelError::ValidityBreach { .. })
        ));
        let braking = PlantState { accel: -6.0, ..straight(0.3) };
        assert!(matches!(
            plant().step(&braking, &RateInput::zero(), 0.1),
            Err(ModelError::ValidityBreach { .. })
        ));
    }
}
