//! Scenario data model: agent tracks with per-timestep kinematic states plus
//! map polylines, together with the invariants the JSON loader enforces.
//!
//! Timeline convention: every track carries exactly [`HISTORY_LEN`] history
//! states sampled at `timestep_s` (the last one is the current frame t0) and
//! up to `future_len` ground-truth future states. Timestamps are implicit from
//! indices.

use serde::{Deserialize, Serialize};

use crate::error::{ValidationError, ValidationErrorKind};
use crate::gridgeom::Vec2;

/// History frames per track, covering 1.1 s at 0.1 s including t0.
pub const HISTORY_LEN: usize = 11;

/// Maximum number of tracks per scenario.
pub const MAX_TRACKS: usize = 128;

/// Tolerance for the `speed == |(vx, vy)|` consistency check.
pub const SPEED_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum AgentType {
    Pedestrian,
    Vehicle,
    Cyclist,
}

impl From<AgentType> for u8 {
    fn from(t: AgentType) -> u8 {
        match t {
            AgentType::Pedestrian => 0,
            AgentType::Vehicle => 1,
            AgentType::Cyclist => 2,
        }
    }
}

impl TryFrom<u8> for AgentType {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, String> {
        match code {
            0 => Ok(AgentType::Pedestrian),
            1 => Ok(AgentType::Vehicle),
            2 => Ok(AgentType::Cyclist),
            other => Err(format!("unknown agent type code {other}")),
        }
    }
}

/// Kinematic state of one agent at one timestep.
///
/// When `valid` is false the remaining fields are ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub valid: bool,
    pub vx: f64,
    pub vy: f64,
    /// Velocity magnitude, redundant with `(vx, vy)` but carried separately.
    pub speed: f64,
    pub width: f64,
    pub length: f64,
    pub yaw: f64,
    pub velocity_yaw: f64,
    pub agent_type: AgentType,
}

impl AgentState {
    /// An invalid placeholder state.
    pub fn invalid() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            valid: false,
            vx: 0.0,
            vy: 0.0,
            speed: 0.0,
            width: 0.0,
            length: 0.0,
            yaw: 0.0,
            velocity_yaw: 0.0,
            agent_type: AgentType::Vehicle,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

/// One agent: id, history states (fixed length, t0 last) and optional
/// ground-truth future states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentTrack {
    pub id: i64,
    pub states: Vec<AgentState>,
    #[serde(default)]
    pub future: Vec<AgentState>,
}

impl AgentTrack {
    /// State at the current frame t0 (last history frame).
    pub fn current(&self) -> &AgentState {
        self.states.last().expect("history is never empty")
    }

    /// Ground-truth state at `t_seconds` into the future, if stored and valid.
    pub fn future_at(&self, t_seconds: f64, timestep_s: f64) -> Option<&AgentState> {
        let steps = (t_seconds / timestep_s).round() as usize;
        if steps == 0 {
            return None;
        }
        self.future.get(steps - 1).filter(|s| s.valid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolylineCategory {
    LaneCenter,
    WhiteLine,
    YellowLine,
    RoadEdge,
    Crosswalk,
}

impl PolylineCategory {
    pub const ALL: [PolylineCategory; 5] = [
        PolylineCategory::LaneCenter,
        PolylineCategory::WhiteLine,
        PolylineCategory::YellowLine,
        PolylineCategory::RoadEdge,
        PolylineCategory::Crosswalk,
    ];

    /// Channel index in map rasters.
    pub fn channel(self) -> usize {
        match self {
            PolylineCategory::LaneCenter => 0,
            PolylineCategory::WhiteLine => 1,
            PolylineCategory::YellowLine => 2,
            PolylineCategory::RoadEdge => 3,
            PolylineCategory::Crosswalk => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapPolyline {
    pub category: PolylineCategory,
    pub points: Vec<Vec2>,
}

/// A full scene: tracks, map, and the track ids to predict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub timestep_s: f64,
    pub history_len: u32,
    pub future_len: u32,
    pub tracks: Vec<AgentTrack>,
    #[serde(default)]
    pub map: Vec<MapPolyline>,
    pub targets: Vec<i64>,
}

impl Scenario {
    pub fn track(&self, id: i64) -> Option<&AgentTrack> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Check every invariant; the first violation is reported with the JSON
    /// pointer of the offending element.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if !self.timestep_s.is_finite() || self.timestep_s <= 0.0 {
            return Err(ValidationError::new(
                "/timestep_s",
                ValidationErrorKind::BadTimestep {
                    value: self.timestep_s,
                },
            ));
        }
        if self.history_len as usize != HISTORY_LEN {
            return Err(ValidationError::new(
                "/history_len",
                ValidationErrorKind::WrongHistoryLen {
                    expected: HISTORY_LEN as u32,
                    actual: self.history_len,
                },
            ));
        }
        if self.tracks.len() > MAX_TRACKS {
            return Err(ValidationError::new(
                "/tracks",
                ValidationErrorKind::TooManyTracks {
                    limit: MAX_TRACKS,
                    actual: self.tracks.len(),
                },
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, track) in self.tracks.iter().enumerate() {
            if !seen.insert(track.id) {
                return Err(ValidationError::new(
                    format!("/tracks/{i}/id"),
                    ValidationErrorKind::DuplicateTrackId { track_id: track.id },
                ));
            }
            if track.states.len() != HISTORY_LEN {
                return Err(ValidationError::new(
                    format!("/tracks/{i}/states"),
                    ValidationErrorKind::StateCountMismatch {
                        expected: HISTORY_LEN,
                        actual: track.states.len(),
                    },
                ));
            }
            if track.future.len() > self.future_len as usize {
                return Err(ValidationError::new(
                    format!("/tracks/{i}/future"),
                    ValidationErrorKind::FutureTooLong {
                        limit: self.future_len as usize,
                        actual: track.future.len(),
                    },
                ));
            }
            for (j, state) in track.states.iter().chain(track.future.iter()).enumerate() {
                let section = if j < track.states.len() {
                    format!("/tracks/{i}/states/{j}")
                } else {
                    format!("/tracks/{i}/future/{}", j - track.states.len())
                };
                validate_state(state, &section)?;
            }
        }
        for &target in &self.targets {
            if self.track(target).is_none() {
                return Err(ValidationError::new(
                    "/targets",
                    ValidationErrorKind::MissingTarget { target_id: target },
                ));
            }
        }
        for (i, polyline) in self.map.iter().enumerate() {
            if polyline.points.len() < 2 {
                return Err(ValidationError::new(
                    format!("/map/{i}/points"),
                    ValidationErrorKind::DegeneratePolyline {
                        points: polyline.points.len(),
                    },
                ));
            }
        }
        Ok(())
    }
}

fn validate_state(state: &AgentState, pointer: &str) -> Result<(), ValidationError> {
    if !state.valid {
        return Ok(());
    }
    let fields = [
        state.x,
        state.y,
        state.vx,
        state.vy,
        state.speed,
        state.width,
        state.length,
        state.yaw,
        state.velocity_yaw,
    ];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(ValidationError::new(
            pointer,
            ValidationErrorKind::NonFiniteValue,
        ));
    }
    let magnitude = state.velocity().norm();
    if (state.speed - magnitude).abs() > SPEED_TOLERANCE {
        return Err(ValidationError::new(
            pointer,
            ValidationErrorKind::SpeedMismatch {
                speed: state.speed,
                magnitude,
            },
        ));
    }
    for extent in [state.width, state.length] {
        if extent < 0.0 {
            return Err(ValidationError::new(
                pointer,
                ValidationErrorKind::NegativeExtent { value: extent },
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn straight_state(x: f64, y: f64, v: f64, yaw: f64) -> AgentState {
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

    fn minimal_scenario() -> Scenario {
        let states = (0..HISTORY_LEN)
            .map(|i| straight_state(i as f64 * 0.5, 0.0, 5.0, 0.0))
            .collect();
        Scenario {
            timestep_s: 0.1,
            history_len: HISTORY_LEN as u32,
            future_len: 80,
            tracks: vec![AgentTrack {
                id: 7,
                states,
                future: vec![],
            }],
            map: vec![],
            targets: vec![7],
        }
    }

    #[test]
    fn minimal_scenario_validates() {
        assert!(minimal_scenario().validate().is_ok());
    }

    #[test]
    fn wrong_history_len_flagged() {
        let mut s = minimal_scenario();
        s.history_len = 10;
        let err = s.validate().unwrap_err();
        assert_eq!(err.pointer, "/history_len");
        assert!(matches!(
            err.kind,
            ValidationErrorKind::WrongHistoryLen { actual: 10, .. }
        ));
    }

    #[test]
    fn missing_target_flagged() {
        let mut s = minimal_scenario();
        s.targets = vec![99];
        let err = s.validate().unwrap_err();
        assert!(matches!(
            err.kind,
            ValidationErrorKind::MissingTarget { target_id: 99 }
        ));
    }

    #[test]
    fn speed_mismatch_flagged_with_pointer() {
        let mut s = minimal_scenario();
        s.tracks[0].states[3].speed = 99.0;
        let err = s.validate().unwrap_err();
        assert_eq!(err.pointer, "/tracks/0/states/3");
        assert!(matches!(
            err.kind,
            ValidationErrorKind::SpeedMismatch { .. }
        ));
    }

    #[test]
    fn invalid_states_are_not_checked() {
        let mut s = minimal_scenario();
        s.tracks[0].states[0] = AgentState {
            speed: 1234.0,
            width: -5.0,
            ..AgentState::invalid()
        };
        assert!(s.validate().is_ok());
    }

    #[test]
    fn future_at_indexes_from_t0() {
        let mut s = minimal_scenario();
        s.tracks[0].future = (0..80)
            .map(|i| straight_state(5.5 + (i + 1) as f64 * 0.5, 0.0, 5.0, 0.0))
            .collect();
        let track = &s.tracks[0];
        // 3 s at 0.1 s steps is future frame 29.
        let gt = track.future_at(3.0, 0.1).unwrap();
        assert!((gt.x - (5.5 + 30.0 * 0.5)).abs() < 1e-12);
        assert!(track.future_at(8.0, 0.1).is_some());
        assert!(track.future_at(8.1, 0.1).is_none());
    }

    #[test]
    fn agent_type_codes_roundtrip() {
        for (t, code) in [
            (AgentType::Pedestrian, 0u8),
            (AgentType::Vehicle, 1),
            (AgentType::Cyclist, 2),
        ] {
            assert_eq!(u8::from(t), code);
            assert_eq!(AgentType::try_from(code).unwrap(), t);
        }
        assert!(AgentType::try_from(3).is_err());
    }
}
