use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Default distance between the late lane change and the obstacle (m).
const LATE_LEAD: f64 = 6.0;

/// Which path the pure-pursuit tracker is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PpcPathMode {
    /// The road centerline; the tracker drives into the obstacle.
    Blind,
    /// A lane change beginning at `late_start`, too close to the obstacle.
    Late,
    /// A smooth lane change finished well before the obstacle.
    Early,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// Scenario file contents. Road centerline is
/// `y = amplitude·sin(omega·x) + offset`, with station 0 at `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default = "defaults::offset")]
    pub offset: f64,
    pub speed: f64,
    #[serde(default = "defaults::obstacle_start")]
    pub obstacle_start: f64,
    #[serde(default = "defaults::obstacle_end")]
    pub obstacle_end: f64,
    #[serde(default = "defaults::obstacle_width")]
    pub obstacle_width: f64,
    #[serde(default = "defaults::side")]
    pub obstacle_side: Side,
    #[serde(default = "defaults::enabled")]
    pub obstacle_enabled: bool,
    #[serde(default = "defaults::mode")]
    pub ppc_path: PpcPathMode,
    /// Station where the late lane change begins; defaults to 6 m before
    /// the obstacle.
    #[serde(default)]
    pub late_start: Option<f64>,
    /// Lateral displacement of the avoidance paths (m, positive magnitude).
    #[serde(default = "defaults::avoid_offset")]
    pub avoid_offset: f64,
    #[serde(default = "defaults::start_station")]
    pub start_station: f64,
    /// Simulated time; defaults to reaching 40 m past the obstacle.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Margin override; estimated from the mismatch grid when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    use super::{PpcPathMode, Side};

    pub fn amplitude() -> f64 {
        5.0
    }
    pub fn offset() -> f64 {
        3.0
    }
    pub fn obstacle_start() -> f64 {
        120.0
    }
    pub fn obstacle_end() -> f64 {
        124.0
    }
    pub fn obstacle_width() -> f64 {
        2.0
    }
    pub fn side() -> Side {
        Side::Right
    }
    pub fn enabled() -> bool {
        true
    }
    pub fn mode() -> PpcPathMode {
        PpcPathMode::Blind
    }
    pub fn avoid_offset() -> f64 {
        3.5
    }
    pub fn start_station() -> f64 {
        0.0
    }
}

impl ScenarioConfig {
    /// Road, speed and obstacle defaults with the given mode.
    pub fn new(omega: f64, speed: f64, ppc_path: PpcPathMode) -> Self {
        Self {
            amplitude: defaults::amplitude(),
            omega,
            offset: defaults::offset(),
            speed,
            obstacle_start: defaults::obstacle_start(),
            obstacle_end: defaults::obstacle_end(),
            obstacle_width: defaults::obstacle_width(),
            obstacle_side: defaults::side(),
            obstacle_enabled: true,
            ppc_path,
            late_start: None,
            avoid_offset: defaults::avoid_offset(),
            start_station: defaults::start_station(),
            duration: None,
            delta: None,
            seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn late_start(&self) -> f64 {
        self.late_start.unwrap_or(self.obstacle_start - LATE_LEAD)
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or((self.obstacle_end + 40.0 - self.start_station) / self.speed)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [
            self.amplitude,
            self.omega,
            self.offset,
            self.speed,
            self.obstacle_start,
            self.obstacle_end,
            self.obstacle_width,
            self.avoid_offset,
            self.start_station,
        ]
        .iter()
        .all(|v| v.is_finite());
        let fail = |msg: &str| Err(ScenarioError::Config(msg.to_string()));
        if !finite {
            return fail("all numeric fields must be finite");
        }
        if self.omega <= 0.0 {
            return fail("omega must be positive");
        }
        if self.speed <= 0.5 {
            return fail("speed must exceed 0.5 m/s");
        }
        if self.obstacle_start >= self.obstacle_end || self.obstacle_width <= 0.0 {
            return fail("obstacle needs obstacle_start < obstacle_end and positive width");
        }
        if self.start_station >= self.obstacle_start {
            return fail("start_station must lie before the obstacle");
        }
        if let Some(d) = self.duration {
            if !(d.is_finite() && d > 0.0) {
                return fail("duration must be positive");
            }
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d >= 0.0) {
                return fail("delta must be nonnegative");
            }
        }
        if self.avoid_offset <= 0.0 {
            return fail("avoid_offset must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = ScenarioConfig::from_toml("omega = 0.01\nspeed = 10.0\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::new(0.01, 10.0, PpcPathMode::Blind));
        assert!((cfg.duration() - 16.4).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(ScenarioConfig::from_toml("omega = 0.01\nspeed = 10.0\nfoo = 1\n").is_err());
        assert!(ScenarioConfig::from_toml("omega = -0.01\nspeed = 10.0\n").is_err());
        assert!(ScenarioConfig::from_toml("omega = 0.01\nspeed = 10.0\nppc_path = \"sideways\"\n").is_err());
        assert!(ScenarioConfig::from_toml("omega = 0.01\nspeed = 10.0\nduration = 0.0\n").is_err());
    }

    #[test]
    fn round_trip() {
        let mut cfg = ScenarioConfig::new(0.02, 12.0, PpcPathMode::Late);
        cfg.delta = Some(0.25);
        cfg.late_start = Some(110.0);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
