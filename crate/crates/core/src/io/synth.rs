//! Deterministic synthetic scenario generation.
//!
//! Each scenario holds one target vehicle whose future follows an exact
//! kinematic profile chosen from the intent-bucket classes (constant velocity,
//! constant yaw-rate turns and u-turns, s-shaped lane drifts, or standing
//! still), plus background traffic (a crossing agent, a decelerating agent,
//! and a pedestrian) and one polyline per road category.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridgeom::Vec2;
use crate::metrics::Bucket;
use crate::scenario::{
    AgentState, AgentTrack, MapPolyline, PolylineCategory, Scenario, HISTORY_LEN,
};

/// Future frames generated per track (8 s at 0.1 s).
pub const FUTURE_LEN: usize = 80;

/// Generation timestep, seconds.
pub const TIMESTEP_S: f64 = 0.1;

/// Relative frequency of each intent class among generated targets.
///
/// Weights need not sum to one; they are normalized. Every class with a
/// strictly positive weight is emitted at least once when `n_scenarios` is at
/// least the number of positive classes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionMix {
    pub stationary: f64,
    pub straight: f64,
    pub straight_left: f64,
    pub straight_right: f64,
    pub left: f64,
    pub right: f64,
    pub left_u_turn: f64,
    pub right_u_turn: f64,
}

impl Default for MotionMix {
    fn default() -> Self {
        Self {
            stationary: 0.10,
            straight: 0.40,
            straight_left: 0.05,
            straight_right: 0.05,
            left: 0.15,
            right: 0.15,
            left_u_turn: 0.05,
            right_u_turn: 0.05,
        }
    }
}

impl MotionMix {
    /// A single-class mix.
    pub fn only(bucket: Bucket) -> Self {
        let mut mix = Self {
            stationary: 0.0,
            straight: 0.0,
            straight_left: 0.0,
            straight_right: 0.0,
            left: 0.0,
            right: 0.0,
            left_u_turn: 0.0,
            right_u_turn: 0.0,
        };
        *mix.weight_mut(bucket) = 1.0;
        mix
    }

    pub fn weight(&self, bucket: Bucket) -> f64 {
        match bucket {
            Bucket::Stationary => self.stationary,
            Bucket::Straight => self.straight,
            Bucket::StraightLeft => self.straight_left,
            Bucket::StraightRight => self.straight_right,
            Bucket::Left => self.left,
            Bucket::Right => self.right,
            Bucket::LeftUTurn => self.left_u_turn,
            Bucket::RightUTurn => self.right_u_turn,
        }
    }

    fn weight_mut(&mut self, bucket: Bucket) -> &mut f64 {
        match bucket {
            Bucket::Stationary => &mut self.stationary,
            Bucket::Straight => &mut self.straight,
            Bucket::StraightLeft => &mut self.straight_left,
            Bucket::StraightRight => &mut self.straight_right,
            Bucket::Left => &mut self.left,
            Bucket::Right => &mut self.right,
            Bucket::LeftUTurn => &mut self.left_u_turn,
            Bucket::RightUTurn => &mut self.right_u_turn,
        }
    }

    /// Parse `class=weight` pairs, e.g. `straight=0.5,left=0.25,right=0.25`.
    /// Unlisted classes get weight zero.
    pub fn parse(s: &str) -> Result<Self> {
        let mut mix = Self::only(Bucket::Straight);
        mix.straight = 0.0;
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("mix entry '{part}' is not class=weight"))
            })?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad mix weight in '{part}'")))?;
            let bucket = Bucket::ALL
                .into_iter()
                .find(|b| b.label() == name.trim())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown motion class '{}'", name.trim()))
                })?;
            *mix.weight_mut(bucket) = value;
        }
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        let weights: Vec<f64> = Bucket::ALL.iter().map(|&b| self.weight(b)).collect();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "mix weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(
                "mix weights must not all be zero".into(),
            ));
        }
        Ok(())
    }

    /// Integer class counts summing to `n`: largest-remainder rounding, with
    /// every positive-weight class guaranteed at least one slot when room
    /// allows.
    fn allocate(&self, n: usize) -> Vec<(Bucket, usize)> {
        let total: f64 = Bucket::ALL.iter().map(|&b| self.weight(b)).sum();
        let ideals: Vec<(Bucket, f64)> = Bucket::ALL
            .iter()
            .map(|&b| (b, self.weight(b) / total * n as f64))
            .collect();
        let mut counts: Vec<(Bucket, usize)> = ideals
            .iter()
            .map(|&(b, ideal)| (b, ideal.floor() as usize))
            .collect();
        let assigned: usize = counts.iter().map(|(_, c)| c).sum();
        let mut order: Vec<usize> = (0..ideals.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = ideals[a].1.fract();
            let fb = ideals[b].1.fract();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &i in order.iter().take(n - assigned) {
            counts[i].1 += 1;
        }
        let positive: Vec<usize> = (0..counts.len())
            .filter(|&i| self.weight(counts[i].0) > 0.0)
            .collect();
        if n >= positive.len() {
            for &i in &positive {
                while counts[i].1 == 0 {
                    let donor = (0..counts.len())
                        .filter(|&j| counts[j].1 > 1)
                        .max_by_key(|&j| counts[j].1)
                        .expect("n >= positive classes leaves a donor");
                    counts[donor].1 -= 1;
                    counts[i].1 += 1;
                }
            }
        }
        counts
    }
}

/// Generate `n_scenarios` deterministic scenarios. The same seed always
/// produces the same scenarios.
pub fn generate_synthetic(seed: u64, n_scenarios: usize, mix: &MotionMix) -> Result<Vec<Scenario>> {
    mix.validate()?;
    if n_scenarios == 0 {
        return Err(Error::InvalidArgument("n_scenarios must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = mix.allocate(n_scenarios);

    // Interleave classes round-robin so every prefix of the set is mixed.
    let mut classes = Vec::with_capacity(n_scenarios);
    while classes.len() < n_scenarios {
        for entry in remaining.iter_mut() {
            if entry.1 > 0 {
                entry.1 -= 1;
                classes.push(entry.0);
            }
        }
    }

    classes
        .into_iter()
        .enumerate()
        .map(|(index, class)| build_scenario(&mut rng, index, class))
        .collect()
}

/// The exact motion profile of one target.
#[derive(Clone, Copy, Debug)]
enum Profile {
    /// Constant velocity `v` along the initial heading.
    Straight { v: f64 },
    /// Constant yaw rate `omega` at speed `v`.
    Arc { v: f64, omega: f64 },
    /// Yaw rate `+omega` for the first half of the future, `-omega` after.
    SCurve { v: f64, omega: f64 },
}

impl Profile {
    /// Position and heading `t` seconds after t0 (negative t reaches into the
    /// straight-line history).
    fn pose(&self, start: Vec2, heading: f64, t: f64) -> (Vec2, f64, f64) {
        match *self {
            Profile::Straight { v } => (
                start + Vec2::new(heading.cos(), heading.sin()) * (v * t),
                heading,
                v,
            ),
            Profile::Arc { v, omega } => {
                if t <= 0.0 {
                    return Profile::Straight { v }.pose(start, heading, t);
                }
                (
                    arc_position(start, heading, v, omega, t),
                    heading + omega * t,
                    v,
                )
            }
            Profile::SCurve { v, omega } => {
                if t <= 0.0 {
                    return Profile::Straight { v }.pose(start, heading, t);
                }
                let half = FUTURE_LEN as f64 * TIMESTEP_S / 2.0;
                if t <= half {
                    (
                        arc_position(start, heading, v, omega, t),
                        heading + omega * t,
                        v,
                    )
                } else {
                    let mid = arc_position(start, heading, v, omega, half);
                    let mid_heading = heading + omega * half;
                    (
                        arc_position(mid, mid_heading, v, -omega, t - half),
                        mid_heading - omega * (t - half),
                        v,
                    )
                }
            }
        }
    }
}

fn arc_position(start: Vec2, heading: f64, v: f64, omega: f64, t: f64) -> Vec2 {
    if omega.abs() < 1e-12 {
        return start + Vec2::new(heading.cos(), heading.sin()) * (v * t);
    }
    let radius = v / omega;
    let end = heading + omega * t;
    start
        + Vec2::new(
            radius * (end.sin() - heading.sin()),
            radius * (heading.cos() - end.cos()),
        )
}

fn profile_for(rng: &mut ChaCha8Rng, class: Bucket) -> Profile {
    let deg = std::f64::consts::PI / 180.0;
    let future_s = FUTURE_LEN as f64 * TIMESTEP_S;
    match class {
        Bucket::Stationary => Profile::Straight {
            v: rng.gen_range(0.0..0.15),
        },
        Bucket::Straight => Profile::Straight {
            v: rng.gen_range(1.0..30.0),
        },
        Bucket::Left | Bucket::Right => {
            let turn = rng.gen_range(40.0..120.0) * deg;
            let sign = if class == Bucket::Left { 1.0 } else { -1.0 };
            Profile::Arc {
                v: rng.gen_range(3.0..15.0),
                omega: sign * turn / future_s,
            }
        }
        Bucket::LeftUTurn | Bucket::RightUTurn => {
            let turn = rng.gen_range(150.0..180.0) * deg;
            let sign = if class == Bucket::LeftUTurn {
                1.0
            } else {
                -1.0
            };
            Profile::Arc {
                v: rng.gen_range(3.0..12.0),
                omega: sign * turn / future_s,
            }
        }
        Bucket::StraightLeft | Bucket::StraightRight => {
            let half_turn = rng.gen_range(18.0..25.0) * deg;
            let sign = if class == Bucket::StraightLeft {
                1.0
            } else {
                -1.0
            };
            Profile::SCurve {
                v: rng.gen_range(6.0..15.0),
                omega: sign * half_turn / (future_s / 2.0),
            }
        }
    }
}

fn vehicle_state(pos: Vec2, heading: f64, v: f64) -> AgentState {
    AgentState {
        x: pos.x,
        y: pos.y,
        valid: true,
        vx: v * heading.cos(),
        vy: v * heading.sin(),
        speed: v,
        width: 2.0,
        length: 4.5,
        yaw: heading,
        velocity_yaw: heading,
        agent_type: crate::scenario::AgentType::Vehicle,
    }
}

fn track_from_profile(id: i64, start: Vec2, heading: f64, profile: Profile) -> AgentTrack {
    let states = (0..HISTORY_LEN)
        .map(|i| {
            let t = (i as f64 - (HISTORY_LEN - 1) as f64) * TIMESTEP_S;
            let (pos, yaw, v) = profile.pose(start, heading, t);
            vehicle_state(pos, yaw, v)
        })
        .collect();
    let future = (1..=FUTURE_LEN)
        .map(|k| {
            let (pos, yaw, v) = profile.pose(start, heading, k as f64 * TIMESTEP_S);
            vehicle_state(pos, yaw, v)
        })
        .collect();
    AgentTrack { id, states, future }
}

fn crossing_track(rng: &mut ChaCha8Rng, index: usize, start: Vec2, heading: f64) -> AgentTrack {
    let lat = Vec2::new(-heading.sin(), heading.cos());
    let ahead = Vec2::new(heading.cos(), heading.sin());
    let cross_start = start + ahead * 25.0 + lat * -15.0;
    let cross_heading = heading + std::f64::consts::FRAC_PI_2;
    let v = rng.gen_range(2.0..12.0);
    let mut track = track_from_profile(1, cross_start, cross_heading, Profile::Straight { v });
    if index.is_multiple_of(3) {
        for state in track.states.iter_mut().take(3) {
            *state = AgentState::invalid();
        }
    }
    if index % 3 == 1 {
        for state in track.states.iter_mut().chain(track.future.iter_mut()) {
            state.agent_type = crate::scenario::AgentType::Cyclist;
            state.width = 0.6;
            state.length = 1.8;
        }
    }
    track
}

fn stopping_track(rng: &mut ChaCha8Rng, start: Vec2, heading: f64) -> AgentTrack {
    // Decelerates to a stop four seconds after the timeline start.
    let v0 = rng.gen_range(3.0..10.0);
    let stop_time = 4.0;
    let decel = v0 / stop_time;
    let dir = Vec2::new(heading.cos(), heading.sin());
    let behind = start - dir * 15.0;
    let pose = |frame: usize| {
        let tau = frame as f64 * TIMESTEP_S;
        let (dist, v) = if tau < stop_time {
            (v0 * tau - 0.5 * decel * tau * tau, v0 - decel * tau)
        } else {
            (0.5 * v0 * stop_time, 0.0)
        };
        vehicle_state(behind + dir * dist, heading, v)
    };
    AgentTrack {
        id: 2,
        states: (0..HISTORY_LEN).map(&pose).collect(),
        future: (HISTORY_LEN..HISTORY_LEN + FUTURE_LEN).map(&pose).collect(),
    }
}

fn pedestrian_track(start: Vec2, heading: f64) -> AgentTrack {
    let lat = Vec2::new(-heading.sin(), heading.cos());
    let ahead = Vec2::new(heading.cos(), heading.sin());
    let pos = start + ahead * 30.0 + lat * 6.0;
    let state = AgentState {
        x: pos.x,
        y: pos.y,
        valid: true,
        vx: 0.0,
        vy: 0.0,
        speed: 0.0,
        width: 0.8,
        length: 0.8,
        yaw: heading,
        velocity_yaw: heading,
        agent_type: crate::scenario::AgentType::Pedestrian,
    };
    AgentTrack {
        id: 3,
        states: vec![state; HISTORY_LEN],
        future: vec![state; FUTURE_LEN],
    }
}

fn scene_map(start: Vec2, heading: f64) -> Vec<MapPolyline> {
    let dir = Vec2::new(heading.cos(), heading.sin());
    let lat = Vec2::new(-heading.sin(), heading.cos());
    let line = |offset: f64, category: PolylineCategory| MapPolyline {
        category,
        points: (-3..=15)
            .map(|i| start + dir * (i as f64 * 10.0) + lat * offset)
            .collect(),
    };
    let crosswalk_center = start + dir * 30.0;
    vec![
        line(0.0, PolylineCategory::LaneCenter),
        line(1.75, PolylineCategory::WhiteLine),
        line(-1.75, PolylineCategory::YellowLine),
        line(3.5, PolylineCategory::RoadEdge),
        MapPolyline {
            category: PolylineCategory::Crosswalk,
            points: (-2..=2)
                .map(|i| crosswalk_center + lat * (i as f64 * 3.0))
                .collect(),
        },
    ]
}

fn build_scenario(rng: &mut ChaCha8Rng, index: usize, class: Bucket) -> Result<Scenario> {
    let start = Vec2::new(rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0));
    let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let profile = profile_for(rng, class);
    let target = track_from_profile(0, start, heading, profile);
    let tracks = vec![
        target,
        crossing_track(rng, index, start, heading),
        stopping_track(rng, start, heading),
        pedestrian_track(start, heading),
    ];
    let scenario = Scenario {
        timestep_s: TIMESTEP_S,
        history_len: HISTORY_LEN as u32,
        future_len: FUTURE_LEN as u32,
        tracks,
        map: scene_map(start, heading),
        targets: vec![0],
    };
    scenario.validate().map_err(Error::Validation)?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{bucket, BucketConfig, GroundTruth};

    #[test]
    fn same_seed_is_deterministic() {
        let a = generate_synthetic(7, 20, &MotionMix::default()).unwrap();
        let b = generate_synthetic(7, 20, &MotionMix::default()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(8, 20, &MotionMix::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pure_stationary_mix_buckets_stationary() {
        let scenarios = generate_synthetic(3, 10, &MotionMix::only(Bucket::Stationary)).unwrap();
        let cfg = BucketConfig::default();
        for s in &scenarios {
            let gt = GroundTruth::from_track(s.track(0).unwrap(), s.timestep_s).unwrap();
            assert_eq!(bucket(&gt.trajectory, &cfg), Bucket::Stationary);
        }
    }

    #[test]
    fn mixed_set_emits_every_requested_bucket() {
        let scenarios = generate_synthetic(11, 50, &MotionMix::default()).unwrap();
        let cfg = BucketConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for s in &scenarios {
            let gt = GroundTruth::from_track(s.track(0).unwrap(), s.timestep_s).unwrap();
            seen.insert(bucket(&gt.trajectory, &cfg));
        }
        for b in Bucket::ALL {
            assert!(seen.contains(&b), "bucket {b} missing from generated set");
        }
    }

    #[test]
    fn generated_scenarios_validate() {
        for s in generate_synthetic(5, 16, &MotionMix::default()).unwrap() {
            assert!(s.validate().is_ok());
            assert_eq!(s.tracks.len(), 4);
            assert_eq!(s.map.len(), 5);
        }
    }

    #[test]
    fn invalid_mixes_rejected() {
        let mix = MotionMix {
            straight: -1.0,
            ..MotionMix::default()
        };
        assert!(generate_synthetic(1, 5, &mix).is_err());
        let zero = MotionMix {
            stationary: 0.0,
            straight: 0.0,
            straight_left: 0.0,
            straight_right: 0.0,
            left: 0.0,
            right: 0.0,
            left_u_turn: 0.0,
            right_u_turn: 0.0,
        };
        assert!(generate_synthetic(1, 5, &zero).is_err());
    }

    #[test]
    fn mix_parser_roundtrip() {
        let mix = MotionMix::parse("straight=0.5,left=0.25,right=0.25").unwrap();
        assert_eq!(mix.straight, 0.5);
        assert_eq!(mix.left, 0.25);
        assert_eq!(mix.stationary, 0.0);
        assert!(MotionMix::parse("bogus=1").is_err());
        assert!(MotionMix::parse("straight").is_err());
        assert!(MotionMix::parse("straight=-2").is_err());
    }

    #[test]
    fn straight_targets_follow_constant_velocity_exactly() {
        let scenarios = generate_synthetic(13, 5, &MotionMix::only(Bucket::Straight)).unwrap();
        for s in &scenarios {
            let track = s.track(0).unwrap();
            let t0 = track.current();
            for (k, state) in track.future.iter().enumerate() {
                let t = (k + 1) as f64 * TIMESTEP_S;
                let expected = t0.position() + t0.velocity() * t;
                assert!((state.x - expected.x).abs() < 1e-9);
                assert!((state.y - expected.y).abs() < 1e-9);
            }
        }
    }
}
