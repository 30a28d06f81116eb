//! Waymo-style forecasting metrics: velocity-scaled rectangular miss
//! thresholds, miss rate, minimum displacement errors, intent bucketing, and
//! soft mean average precision.
//!
//! The miss threshold is a rectangle around the ground truth, twice as long in
//! the longitudinal direction as in the lateral one, rotated to the heading of
//! the target at the future timestep and shrunk by `gamma(v)` for slow agents:
//!
//! ```text
//! gamma(v) = f(v)/2 + 0.5
//! f(v)     = clamp(h(v), 0, 1)
//! h(v)     = (v - 1.4) / (11 - 1.4)          [v in m/s at t0]
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gridgeom::Vec2;
use crate::scenario::AgentTrack;

/// The three evaluation horizons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Horizon {
    T3s,
    T5s,
    T8s,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::T3s, Horizon::T5s, Horizon::T8s];

    pub fn seconds(self) -> f64 {
        match self {
            Horizon::T3s => 3.0,
            Horizon::T5s => 5.0,
            Horizon::T8s => 8.0,
        }
    }

    pub fn from_seconds(t: f64) -> Result<Self> {
        for h in Self::ALL {
            if (t - h.seconds()).abs() < 1e-9 {
                return Ok(h);
            }
        }
        Err(Error::UnsupportedHorizon(t))
    }

    /// Short label used as JSON/CSV key: `"3"`, `"5"`, `"8"`.
    pub fn label(self) -> &'static str {
        match self {
            Horizon::T3s => "3",
            Horizon::T5s => "5",
            Horizon::T8s => "8",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.label())
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.trim_end_matches('s') {
            "3" => Ok(Horizon::T3s),
            "5" => Ok(Horizon::T5s),
            "8" => Ok(Horizon::T8s),
            other => Err(D::Error::custom(format!("unknown horizon '{other}'"))),
        }
    }
}

/// Velocity-dependent threshold shrink factor in `[0.5, 1]`.
pub fn gamma(speed: f64) -> Result<f64> {
    if speed.is_nan() || speed < 0.0 {
        return Err(Error::NegativeSpeed(speed));
    }
    let h = (speed - 1.4) / (11.0 - 1.4);
    Ok(h.clamp(0.0, 1.0) / 2.0 + 0.5)
}

/// Horizon-dependent rectangular threshold `(lateral, longitudinal)`, meters.
pub fn lambda(horizon: Horizon) -> (f64, f64) {
    match horizon {
        Horizon::T3s => (1.0, 2.0),
        Horizon::T5s => (1.8, 3.6),
        Horizon::T8s => (3.0, 6.0),
    }
}

/// The fully resolved miss threshold for one target and horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MissThreshold {
    /// Lateral half-extent before scaling, meters.
    pub lat: f64,
    /// Longitudinal half-extent before scaling, meters.
    pub lon: f64,
    /// `gamma(v)` of the target's speed at t0.
    pub scale: f64,
}

impl MissThreshold {
    pub fn new(speed_t0: f64, horizon: Horizon) -> Result<Self> {
        let (lat, lon) = lambda(horizon);
        Ok(Self {
            lat,
            lon,
            scale: gamma(speed_t0)?,
        })
    }

    pub fn effective_lat(&self) -> f64 {
        self.scale * self.lat
    }

    pub fn effective_lon(&self) -> f64 {
        self.scale * self.lon
    }

    /// Containment test for a displacement already expressed in the agent
    /// frame at the future timestep (x longitudinal, y lateral).
    pub fn contains(&self, displacement: Vec2) -> bool {
        displacement.x.abs() <= self.effective_lon() && displacement.y.abs() <= self.effective_lat()
    }
}

/// Whether a predicted coordinate falls inside the threshold rectangle around
/// the ground truth, rotated to the ground-truth heading at the horizon.
pub fn is_hit(
    pred: Vec2,
    gt_pos: Vec2,
    gt_yaw: f64,
    speed_t0: f64,
    horizon: Horizon,
) -> Result<bool> {
    let threshold = MissThreshold::new(speed_t0, horizon)?;
    Ok(threshold.contains((pred - gt_pos).rotate(-gt_yaw)))
}

/// One predicted coordinate with its confidence (possibly normalized) and the
/// raw sampled confidence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pos: Vec2,
    pub confidence: f64,
    pub confidence_raw: f64,
}

/// Per-target predictions, at most `max_per_horizon` coordinates per horizon.
///
/// The default cap of [`PredictionSet::COMPETITION_LIMIT`] matches the
/// six-prediction competition rule; sweeps over larger sample budgets can
/// relax it with [`PredictionSet::with_limit`].
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub target_id: i64,
    max_per_horizon: usize,
    horizons: BTreeMap<Horizon, Vec<Prediction>>,
}

impl PredictionSet {
    pub const COMPETITION_LIMIT: usize = 6;

    pub fn new(target_id: i64) -> Self {
        Self::with_limit(target_id, Self::COMPETITION_LIMIT)
    }

    pub fn with_limit(target_id: i64, max_per_horizon: usize) -> Self {
        Self {
            target_id,
            max_per_horizon,
            horizons: BTreeMap::new(),
        }
    }

    pub fn max_per_horizon(&self) -> usize {
        self.max_per_horizon
    }

    pub fn push(&mut self, horizon: Horizon, prediction: Prediction) -> Result<()> {
        if prediction.confidence.is_nan()
            || prediction.confidence < 0.0
            || prediction.confidence_raw.is_nan()
            || prediction.confidence_raw < 0.0
        {
            return Err(Error::InvalidArgument(format!(
                "prediction confidence must be non-negative, got {} (raw {})",
                prediction.confidence, prediction.confidence_raw
            )));
        }
        let slot = self.horizons.entry(horizon).or_default();
        if slot.len() >= self.max_per_horizon {
            return Err(Error::InvalidArgument(format!(
                "at most {} predictions per horizon (target {})",
                self.max_per_horizon, self.target_id
            )));
        }
        slot.push(prediction);
        Ok(())
    }

    pub fn predictions(&self, horizon: Horizon) -> &[Prediction] {
        self.horizons.get(&horizon).map_or(&[], Vec::as_slice)
    }

    /// A copy truncated to the first `n` predictions per horizon (greedy
    /// sampling order makes this the top-confidence prefix).
    pub fn truncated(&self, n: usize) -> PredictionSet {
        let mut out = PredictionSet::with_limit(self.target_id, self.max_per_horizon.min(n.max(1)));
        for (&h, preds) in &self.horizons {
            for p in preds.iter().take(n) {
                out.push(h, *p).expect("truncation respects the cap");
            }
        }
        out
    }
}

/// Ground-truth future for one target.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub target_id: i64,
    /// Speed at the current frame t0, m/s; scales the miss threshold.
    pub speed_t0: f64,
    /// Position and heading per horizon; absent horizons are invalid and are
    /// excluded from every aggregate.
    pub horizons: BTreeMap<Horizon, HorizonTruth>,
    /// Valid future positions starting at t0, for intent bucketing.
    pub trajectory: Vec<Vec2>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HorizonTruth {
    pub pos: Vec2,
    pub yaw: f64,
}

impl GroundTruth {
    /// Extract the evaluation view of a track: speed at t0, the valid horizon
    /// states, and the bucketing trajectory (t0 plus all valid futures).
    pub fn from_track(track: &AgentTrack, timestep_s: f64) -> Result<Self> {
        let current = track.current();
        if !current.valid {
            return Err(Error::InvalidArgument(format!(
                "track {} has no valid state at t0",
                track.id
            )));
        }
        let mut horizons = BTreeMap::new();
        for h in Horizon::ALL {
            if let Some(state) = track.future_at(h.seconds(), timestep_s) {
                horizons.insert(
                    h,
                    HorizonTruth {
                        pos: state.position(),
                        yaw: state.yaw,
                    },
                );
            }
        }
        let mut trajectory = vec![current.position()];
        trajectory.extend(
            track
                .future
                .iter()
                .filter(|s| s.valid)
                .map(|s| s.position()),
        );
        Ok(Self {
            target_id: track.id,
            speed_t0: current.speed,
            horizons,
            trajectory,
        })
    }

    pub fn at(&self, horizon: Horizon) -> Option<&HorizonTruth> {
        self.horizons.get(&horizon)
    }
}

fn check_aligned(preds: &[PredictionSet], gts: &[GroundTruth]) -> Result<()> {
    if preds.len() != gts.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} prediction sets vs {} ground truths",
            preds.len(),
            gts.len()
        )));
    }
    Ok(())
}

fn target_has_hit(pred: &PredictionSet, gt: &GroundTruth, horizon: Horizon) -> Result<bool> {
    let Some(truth) = gt.at(horizon) else {
        return Ok(false);
    };
    for p in pred.predictions(horizon) {
        if is_hit(p.pos, truth.pos, truth.yaw, gt.speed_t0, horizon)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Fraction of valid targets for which none of the predicted coordinates at
/// `horizon` falls inside the threshold rectangle.
pub fn miss_rate(preds: &[PredictionSet], gts: &[GroundTruth], horizon: Horizon) -> Result<f64> {
    check_aligned(preds, gts)?;
    let mut valid = 0usize;
    let mut misses = 0usize;
    for (pred, gt) in preds.iter().zip(gts) {
        if gt.at(horizon).is_none() {
            continue;
        }
        valid += 1;
        if !target_has_hit(pred, gt, horizon)? {
            misses += 1;
        }
    }
    if valid == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(misses as f64 / valid as f64)
}

/// Displacement errors of one target at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetDisplacement {
    /// Distance of the closest prediction at the horizon, meters.
    pub min_fde: f64,
    /// Minimum over prediction slots of the slot's average displacement
    /// across the valid horizons up to and including this one, meters.
    pub min_ade: f64,
}

/// Per-target minFDE/minADE at `horizon`; `None` for targets whose ground
/// truth is invalid there or that have no predictions.
pub fn min_displacement(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    horizon: Horizon,
) -> Result<Vec<Option<TargetDisplacement>>> {
    check_aligned(preds, gts)?;
    let mut out = Vec::with_capacity(preds.len());
    for (pred, gt) in preds.iter().zip(gts) {
        let Some(truth) = gt.at(horizon) else {
            out.push(None);
            continue;
        };
        let final_distances: Vec<f64> = pred
            .predictions(horizon)
            .iter()
            .map(|p| (p.pos - truth.pos).norm())
            .collect();
        let Some(min_fde) = final_distances.iter().copied().reduce(f64::min) else {
            out.push(None);
            continue;
        };

        // Slot-coherent average: slot s pairs its prediction at each evaluated
        // horizon; the minimum of the slot averages is the minADE.
        let evaluated: Vec<Horizon> = Horizon::ALL
            .into_iter()
            .filter(|h| h.seconds() <= horizon.seconds() && gt.at(*h).is_some())
            .collect();
        let max_slots = evaluated
            .iter()
            .map(|h| pred.predictions(*h).len())
            .max()
            .unwrap_or(0);
        let mut min_ade = f64::INFINITY;
        for slot in 0..max_slots {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &h in &evaluated {
                if let Some(p) = pred.predictions(h).get(slot) {
                    sum += (p.pos - gt.at(h).expect("filtered valid").pos).norm();
                    count += 1;
                }
            }
            if count > 0 {
                min_ade = min_ade.min(sum / count as f64);
            }
        }
        out.push(Some(TargetDisplacement { min_fde, min_ade }));
    }
    Ok(out)
}

/// Coarse trajectory intent classes used to stratify soft mAP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Stationary,
    Straight,
    StraightLeft,
    StraightRight,
    Left,
    Right,
    LeftUTurn,
    RightUTurn,
}

impl Bucket {
    pub const ALL: [Bucket; 8] = [
        Bucket::Stationary,
        Bucket::Straight,
        Bucket::StraightLeft,
        Bucket::StraightRight,
        Bucket::Left,
        Bucket::Right,
        Bucket::LeftUTurn,
        Bucket::RightUTurn,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Bucket::Stationary => "stationary",
            Bucket::Straight => "straight",
            Bucket::StraightLeft => "straight_left",
            Bucket::StraightRight => "straight_right",
            Bucket::Left => "left",
            Bucket::Right => "right",
            Bucket::LeftUTurn => "left_u_turn",
            Bucket::RightUTurn => "right_u_turn",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Thresholds for [`bucket`]; the defaults classify by net displacement,
/// final-heading change, and lateral offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketConfig {
    /// Below this net displacement the trajectory is stationary, meters.
    pub stationary_displacement_m: f64,
    /// Above this absolute heading change the trajectory is a u-turn, degrees.
    pub uturn_heading_deg: f64,
    /// Above this absolute heading change the trajectory is a turn, degrees.
    pub turn_heading_deg: f64,
    /// Straight trajectories with more lateral offset than this are
    /// straight-left / straight-right, meters.
    pub lateral_offset_m: f64,
}

impl Default for BucketConfig {
    fn default() -> Self {
        Self {
            stationary_displacement_m: 2.0,
            uturn_heading_deg: 135.0,
            turn_heading_deg: 30.0,
            lateral_offset_m: 5.0,
        }
    }
}

fn wrap_to_pi(angle: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = angle.rem_euclid(two_pi);
    if wrapped > std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Classify a trajectory (a sequence of positions starting at t0) into an
/// intent bucket. Degenerate trajectories classify as stationary.
pub fn bucket(trajectory: &[Vec2], cfg: &BucketConfig) -> Bucket {
    const SEGMENT_EPS: f64 = 0.05;
    if trajectory.len() < 2 {
        return Bucket::Stationary;
    }
    let first = trajectory[0];
    let last = *trajectory.last().expect("len >= 2");
    let net = last - first;
    if net.norm() < cfg.stationary_displacement_m {
        return Bucket::Stationary;
    }
    let initial = trajectory
        .windows(2)
        .map(|w| w[1] - w[0])
        .find(|d| d.norm() > SEGMENT_EPS);
    let final_seg = trajectory
        .windows(2)
        .rev()
        .map(|w| w[1] - w[0])
        .find(|d| d.norm() > SEGMENT_EPS);
    let (Some(initial), Some(final_seg)) = (initial, final_seg) else {
        return Bucket::Stationary;
    };
    let initial_heading = initial.y.atan2(initial.x);
    let final_heading = final_seg.y.atan2(final_seg.x);
    let heading_change = wrap_to_pi(final_heading - initial_heading).to_degrees();

    if heading_change.abs() > cfg.uturn_heading_deg {
        return if heading_change > 0.0 {
            Bucket::LeftUTurn
        } else {
            Bucket::RightUTurn
        };
    }
    if heading_change.abs() > cfg.turn_heading_deg {
        return if heading_change > 0.0 {
            Bucket::Left
        } else {
            Bucket::Right
        };
    }
    // Net displacement in the initial-heading frame; +y is to the left.
    let lateral = net.rotate(-initial_heading).y;
    if lateral > cfg.lateral_offset_m {
        Bucket::StraightLeft
    } else if lateral < -cfg.lateral_offset_m {
        Bucket::StraightRight
    } else {
        Bucket::Straight
    }
}

/// Average precision per nonempty intent bucket at `horizon`.
///
/// Per target, only the highest-confidence hit counts as a true positive;
/// additional hits are dropped (neither rewarded nor penalized) and every
/// non-hit prediction is a false positive. Predictions are ranked globally by
/// confidence (ties broken by target order, then slot order) and the AP is the
/// area under the interpolated precision-recall curve.
pub fn soft_map_per_bucket(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    horizon: Horizon,
    cfg: &BucketConfig,
) -> Result<BTreeMap<Bucket, f64>> {
    check_aligned(preds, gts)?;
    let mut grouped: BTreeMap<Bucket, Vec<usize>> = BTreeMap::new();
    for (i, gt) in gts.iter().enumerate() {
        if gt.at(horizon).is_some() {
            grouped
                .entry(bucket(&gt.trajectory, cfg))
                .or_default()
                .push(i);
        }
    }
    let mut out = BTreeMap::new();
    for (bucket_kind, members) in grouped {
        out.insert(
            bucket_kind,
            bucket_average_precision(preds, gts, horizon, &members)?,
        );
    }
    Ok(out)
}

fn bucket_average_precision(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    horizon: Horizon,
    members: &[usize],
) -> Result<f64> {
    // (confidence, target order, slot, is_tp)
    let mut samples: Vec<(f64, usize, usize, bool)> = Vec::new();
    for (order, &i) in members.iter().enumerate() {
        let gt = &gts[i];
        let truth = gt.at(horizon).expect("members have valid horizons");
        let predictions = preds[i].predictions(horizon);
        let mut hits: Vec<usize> = Vec::new();
        for (slot, p) in predictions.iter().enumerate() {
            if is_hit(p.pos, truth.pos, truth.yaw, gt.speed_t0, horizon)? {
                hits.push(slot);
            }
        }
        let tp_slot = hits.iter().copied().max_by(|&a, &b| {
            predictions[a]
                .confidence
                .partial_cmp(&predictions[b].confidence)
                .expect("confidences are finite")
                // On ties prefer the lower slot.
                .then(b.cmp(&a))
        });
        for (slot, p) in predictions.iter().enumerate() {
            if Some(slot) == tp_slot {
                samples.push((p.confidence, order, slot, true));
            } else if !hits.contains(&slot) {
                samples.push((p.confidence, order, slot, false));
            }
            // Duplicate hits are dropped entirely.
        }
    }
    samples.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("confidences are finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let num_targets = members.len();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::new(); // (recall, precision) at each TP
    for &(_, _, _, is_tp) in &samples {
        if is_tp {
            tp += 1;
            curve.push((tp as f64 / num_targets as f64, tp as f64 / (tp + fp) as f64));
        } else {
            fp += 1;
        }
    }
    // Monotonize precision from the right, then integrate over recall.
    let mut best = 0.0f64;
    for point in curve.iter_mut().rev() {
        best = best.max(point.1);
        point.1 = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in curve {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Mean of the per-bucket average precisions over nonempty buckets.
pub fn soft_map(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    horizon: Horizon,
    cfg: &BucketConfig,
) -> Result<f64> {
    let per_bucket = soft_map_per_bucket(preds, gts, horizon, cfg)?;
    if per_bucket.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(per_bucket.values().sum::<f64>() / per_bucket.len() as f64)
}

/// Aggregate metrics for one horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    pub miss_rate: f64,
    pub min_ade: f64,
    pub min_fde: f64,
    pub soft_map: f64,
    pub num_targets: usize,
}

/// Per-bucket breakdown for one horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketHorizonMetrics {
    pub miss_rate: f64,
    pub average_precision: f64,
    pub num_targets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub count: usize,
    pub horizons: BTreeMap<Horizon, BucketHorizonMetrics>,
}

/// The full evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub num_targets: usize,
    pub horizons: BTreeMap<Horizon, HorizonMetrics>,
    pub averages: AverageMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buckets: Option<BTreeMap<Bucket, BucketReport>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub miss_rate: f64,
    pub min_ade: f64,
    pub min_fde: f64,
    pub soft_map: f64,
}

#[derive(Clone, Debug)]
pub struct EvaluateOptions {
    pub horizons: Vec<Horizon>,
    pub per_bucket: bool,
    pub bucket_config: BucketConfig,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            horizons: Horizon::ALL.to_vec(),
            per_bucket: false,
            bucket_config: BucketConfig::default(),
        }
    }
}

/// Run every metric over aligned predictions and ground truths.
pub fn evaluate(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    opts: &EvaluateOptions,
) -> Result<MetricReport> {
    check_aligned(preds, gts)?;
    if opts.horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons requested".into()));
    }
    let mut horizons = BTreeMap::new();
    for &h in &opts.horizons {
        let mr = miss_rate(preds, gts, h)?;
        let displacements = min_displacement(preds, gts, h)?;
        let present: Vec<TargetDisplacement> = displacements.into_iter().flatten().collect();
        let num_targets = gts.iter().filter(|gt| gt.at(h).is_some()).count();
        let mean = |f: fn(&TargetDisplacement) -> f64| {
            if present.is_empty() {
                f64::NAN
            } else {
                present.iter().map(f).sum::<f64>() / present.len() as f64
            }
        };
        horizons.insert(
            h,
            HorizonMetrics {
                miss_rate: mr,
                min_ade: mean(|d| d.min_ade),
                min_fde: mean(|d| d.min_fde),
                soft_map: soft_map(preds, gts, h, &opts.bucket_config)?,
                num_targets,
            },
        );
    }
    let n = horizons.len() as f64;
    let averages = AverageMetrics {
        miss_rate: horizons.values().map(|m| m.miss_rate).sum::<f64>() / n,
        min_ade: horizons.values().map(|m| m.min_ade).sum::<f64>() / n,
        min_fde: horizons.values().map(|m| m.min_fde).sum::<f64>() / n,
        soft_map: horizons.values().map(|m| m.soft_map).sum::<f64>() / n,
    };
    let buckets = if opts.per_bucket {
        Some(bucket_breakdown(preds, gts, opts)?)
    } else {
        None
    };
    Ok(MetricReport {
        num_targets: gts.len(),
        horizons,
        averages,
        buckets,
    })
}

fn bucket_breakdown(
    preds: &[PredictionSet],
    gts: &[GroundTruth],
    opts: &EvaluateOptions,
) -> Result<BTreeMap<Bucket, BucketReport>> {
    let mut reports: BTreeMap<Bucket, BucketReport> = BTreeMap::new();
    let assignments: Vec<Bucket> = gts
        .iter()
        .map(|gt| bucket(&gt.trajectory, &opts.bucket_config))
        .collect();
    for (&bucket_kind, _) in assignments.iter().zip(gts) {
        reports
            .entry(bucket_kind)
            .or_insert_with(|| BucketReport {
                count: 0,
                horizons: BTreeMap::new(),
            })
            .count += 1;
    }
    for &h in &opts.horizons {
        let per_bucket_ap = soft_map_per_bucket(preds, gts, h, &opts.bucket_config)?;
        for (bucket_kind, report) in reports.iter_mut() {
            let members: Vec<usize> = assignments
                .iter()
                .enumerate()
                .filter(|(i, b)| **b == *bucket_kind && gts[*i].at(h).is_some())
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut misses = 0usize;
            for &i in &members {
                if !target_has_hit(&preds[i], &gts[i], h)? {
                    misses += 1;
                }
            }
            report.horizons.insert(
                h,
                BucketHorizonMetrics {
                    miss_rate: misses as f64 / members.len() as f64,
                    average_precision: per_bucket_ap.get(bucket_kind).copied().unwrap_or(0.0),
                    num_targets: members.len(),
                },
            );
        }
    }
    Ok(reports)
}
