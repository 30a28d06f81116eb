//! Analytic heatmap predictors, so the rasterize -> predict -> sample ->
//! evaluate pipeline runs end to end without a trained model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridgeom::{GridSpec, Vec2};
use crate::heatmap::Heatmap;
use crate::metrics::Horizon;
use crate::raster::render_target_heatmap;
use crate::scenario::AgentTrack;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Extrapolate the t0 velocity vector.
    ConstantVelocity,
    /// Propagate along a circular arc using the yaw rate estimated from the
    /// last two valid history frames.
    ConstantHeadingRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// Position-uncertainty growth per second of horizon, meters.
    pub sigma_growth: f64,
    /// Uncertainty floor, meters.
    pub base_sigma: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            kind: BaselineKind::ConstantVelocity,
            sigma_growth: 0.5,
            base_sigma: 1.0,
        }
    }
}

impl BaselineConfig {
    pub fn sigma_at(&self, horizon: Horizon) -> f64 {
        self.base_sigma + self.sigma_growth * horizon.seconds()
    }

    fn validate(&self) -> Result<()> {
        if !self.base_sigma.is_finite()
            || self.base_sigma <= 0.0
            || !self.sigma_growth.is_finite()
            || self.sigma_growth < 0.0
        {
            return Err(Error::InvalidArgument(format!(
                "base_sigma {} must be positive and sigma_growth {} non-negative",
                self.base_sigma, self.sigma_growth
            )));
        }
        Ok(())
    }
}

/// Analytic position of the track's agent `t_seconds` past t0 under the given
/// motion model.
pub fn extrapolate(
    track: &AgentTrack,
    timestep_s: f64,
    t_seconds: f64,
    kind: BaselineKind,
) -> Result<Vec2> {
    let current = track.current();
    if !current.valid {
        return Err(Error::InvalidArgument(format!(
            "track {} has no valid state at t0",
            track.id
        )));
    }
    match kind {
        BaselineKind::ConstantVelocity => Ok(current.position() + current.velocity() * t_seconds),
        BaselineKind::ConstantHeadingRate => {
            let yaw_rate = estimate_yaw_rate(track, timestep_s);
            let speed = current.speed;
            let heading = current.yaw;
            if yaw_rate.abs() < 1e-6 {
                return Ok(current.position()
                    + Vec2::new(heading.cos(), heading.sin()) * (speed * t_seconds));
            }
            // Circular arc of radius speed / yaw_rate.
            let radius = speed / yaw_rate;
            let end = heading + yaw_rate * t_seconds;
            let delta = Vec2::new(
                radius * (end.sin() - heading.sin()),
                radius * (heading.cos() - end.cos()),
            );
            Ok(current.position() + delta)
        }
    }
}

fn estimate_yaw_rate(track: &AgentTrack, timestep_s: f64) -> f64 {
    let mut valid = track
        .states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.valid)
        .map(|(i, s)| (i, s.yaw));
    let mut prev = match valid.next() {
        Some(v) => v,
        None => return 0.0,
    };
    let mut last_pair = None;
    for cur in valid {
        last_pair = Some((prev, cur));
        prev = cur;
    }
    match last_pair {
        Some(((i0, yaw0), (i1, yaw1))) => {
            let dt = (i1 - i0) as f64 * timestep_s;
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut dyaw = (yaw1 - yaw0).rem_euclid(two_pi);
            if dyaw > std::f64::consts::PI {
                dyaw -= two_pi;
            }
            dyaw / dt
        }
        None => 0.0,
    }
}

/// Gaussian heatmap centered on the extrapolated position, with uncertainty
/// growing linearly in the horizon.
pub fn predict_heatmap(
    track: &AgentTrack,
    timestep_s: f64,
    horizon: Horizon,
    spec: &GridSpec,
    cfg: &BaselineConfig,
) -> Result<Heatmap> {
    cfg.validate()?;
    let center = extrapolate(track, timestep_s, horizon.seconds(), cfg.kind)?;
    render_target_heatmap(center, spec, cfg.sigma_at(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{box_sum, greedy_sample, kernel_size};
    use crate::scenario::{AgentState, AgentType, HISTORY_LEN};
    use approx::assert_relative_eq;

    fn state(x: f64, y: f64, v: f64, yaw: f64) -> AgentState {
        AgentState {
            x,
            y,
            valid: true,
            vx: v * yaw.cos(),
            vy: v * yaw.sin(),
            speed: v,
            width: 2.0,
            length: 4.5,
            yaw,
            velocity_yaw: yaw,
            agent_type: AgentType::Vehicle,
        }
    }

    fn straight_track(v: f64) -> AgentTrack {
        AgentTrack {
            id: 0,
            states: (0..HISTORY_LEN)
                .map(|i| state(v * 0.1 * i as f64, 0.0, v, 0.0))
                .collect(),
            future: vec![],
        }
    }

    fn turning_track(v: f64, yaw_rate: f64) -> AgentTrack {
        // Exact arc through history so the two-frame estimate recovers the rate.
        let radius = v / yaw_rate;
        AgentTrack {
            id: 0,
            states: (0..HISTORY_LEN)
                .map(|i| {
                    let t = 0.1 * i as f64;
                    let yaw = yaw_rate * t;
                    state(radius * yaw.sin(), radius * (1.0 - yaw.cos()), v, yaw)
                })
                .collect(),
            future: vec![],
        }
    }

    #[test]
    fn stationary_peak_stays_at_start() {
        let track = straight_track(0.0);
        let p = extrapolate(&track, 0.1, 8.0, BaselineKind::ConstantVelocity).unwrap();
        assert_relative_eq!(p.x, 0.0);
        assert_relative_eq!(p.y, 0.0);
    }

    #[test]
    fn constant_velocity_extrapolates_linearly() {
        let track = straight_track(10.0);
        let p0 = track.current().position();
        let p = extrapolate(&track, 0.1, 3.0, BaselineKind::ConstantVelocity).unwrap();
        assert_relative_eq!(p.x, p0.x + 30.0, epsilon = 1e-9);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn heading_rate_model_follows_arc() {
        let yaw_rate = 0.1;
        let v = 8.0;
        let track = turning_track(v, yaw_rate);
        let p = extrapolate(&track, 0.1, 3.0, BaselineKind::ConstantHeadingRate).unwrap();
        // Closed-form arc from t0 after 3 s.
        let radius = v / yaw_rate;
        let yaw0 = track.current().yaw;
        let yaw1 = yaw0 + yaw_rate * 3.0;
        let expected = track.current().position()
            + Vec2::new(
                radius * (yaw1.sin() - yaw0.sin()),
                radius * (yaw0.cos() - yaw1.cos()),
            );
        assert_relative_eq!(p.x, expected.x, epsilon = 1e-6);
        assert_relative_eq!(p.y, expected.y, epsilon = 1e-6);
    }

    #[test]
    fn invalid_t0_state_rejected() {
        let mut track = straight_track(5.0);
        track.states.last_mut().unwrap().valid = false;
        assert!(extrapolate(&track, 0.1, 3.0, BaselineKind::ConstantVelocity).is_err());
        let spec = GridSpec::agent_centered(64, 64, 1.0, Vec2::ZERO, 0.0).unwrap();
        assert!(
            predict_heatmap(&track, 0.1, Horizon::T3s, &spec, &BaselineConfig::default()).is_err()
        );
    }

    #[test]
    fn heatmap_peak_contains_analytic_center() {
        let track = straight_track(10.0);
        let t0 = track.current();
        let spec = GridSpec::agent_centered(256, 256, 1.0, t0.position(), t0.yaw).unwrap();
        let cfg = BaselineConfig::default();
        let h = predict_heatmap(&track, 0.1, Horizon::T3s, &spec, &cfg).unwrap();
        let center = extrapolate(&track, 0.1, 3.0, BaselineKind::ConstantVelocity).unwrap();
        let (peak, value) = h.argmax().unwrap();
        assert_eq!(Some(peak), spec.world_to_pixel(center));
        assert_relative_eq!(value, 1.0, epsilon = 1e-6);
        assert!(h.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn single_sample_lands_within_kernel_of_center() {
        let track = straight_track(12.0);
        let t0 = track.current();
        let spec = GridSpec::agent_centered(256, 256, 1.0, t0.position(), t0.yaw).unwrap();
        let h =
            predict_heatmap(&track, 0.1, Horizon::T5s, &spec, &BaselineConfig::default()).unwrap();
        let kernel = kernel_size(12.0, Horizon::T5s, 1.0).unwrap();
        let convolved = box_sum(&h, kernel).unwrap();
        let samples = greedy_sample(&convolved, 1, kernel).unwrap();
        let center = extrapolate(&track, 0.1, 5.0, BaselineKind::ConstantVelocity).unwrap();
        let center_px = spec.world_to_pixel(center).unwrap();
        let sample_px = spec.world_to_pixel(samples.coordinates[0]).unwrap();
        let dr = (center_px.row as i64 - sample_px.row as i64).abs();
        let dc = (center_px.col as i64 - sample_px.col as i64).abs();
        assert!(dr <= kernel.rows() as i64 && dc <= kernel.cols() as i64);
    }
}
