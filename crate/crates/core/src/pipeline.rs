//! End-to-end orchestration: per target and horizon, build the scaled grid,
//! run the baseline predictor, and sample coordinates, producing aligned
//! prediction sets and ground truths ready for evaluation.

use std::collections::BTreeMap;

use crate::baseline::{predict_heatmap, BaselineConfig};
use crate::error::{Error, Result};
use crate::gridgeom::{GridSpec, ScalingPolicy, DEFAULT_RESOLUTION};
use crate::heatmap::Heatmap;
use crate::metrics::{GroundTruth, Horizon, Prediction, PredictionSet};
use crate::sampler::{sample_pipeline, SampleSet};
use crate::scenario::{AgentTrack, Scenario};

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub policy: ScalingPolicy,
    pub baseline: BaselineConfig,
    pub num_samples: usize,
    pub normalize_confidences: bool,
    pub resolution: u32,
    pub horizons: Vec<Horizon>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            policy: ScalingPolicy::VelocityBased,
            baseline: BaselineConfig::default(),
            num_samples: 6,
            normalize_confidences: true,
            resolution: DEFAULT_RESOLUTION,
            horizons: Horizon::ALL.to_vec(),
        }
    }
}

/// The agent-centered grid a target gets under a scaling policy.
pub fn grid_for_target(
    track: &AgentTrack,
    horizon: Horizon,
    policy: &ScalingPolicy,
    resolution: u32,
) -> Result<GridSpec> {
    let current = track.current();
    if !current.valid {
        return Err(Error::InvalidArgument(format!(
            "track {} has no valid state at t0",
            track.id
        )));
    }
    let ppm = policy.pixels_per_meter(current.speed, horizon.seconds())?;
    GridSpec::agent_centered(resolution, resolution, ppm, current.position(), current.yaw)
}

/// Baseline heatmap for one target and horizon.
pub fn predict_target_heatmap(
    scenario: &Scenario,
    target_id: i64,
    horizon: Horizon,
    cfg: &PipelineConfig,
) -> Result<Heatmap> {
    let track = scenario
        .track(target_id)
        .ok_or(Error::TargetNotFound(target_id))?;
    let spec = grid_for_target(track, horizon, &cfg.policy, cfg.resolution)?;
    predict_heatmap(track, scenario.timestep_s, horizon, &spec, &cfg.baseline)
}

/// Predict and sample one target across the configured horizons.
pub fn sample_target(
    scenario: &Scenario,
    target_id: i64,
    cfg: &PipelineConfig,
) -> Result<BTreeMap<Horizon, SampleSet>> {
    let track = scenario
        .track(target_id)
        .ok_or(Error::TargetNotFound(target_id))?;
    let mut out = BTreeMap::new();
    for &horizon in &cfg.horizons {
        let heatmap = predict_target_heatmap(scenario, target_id, horizon, cfg)?;
        let samples = sample_pipeline(
            &heatmap,
            track.current().speed,
            horizon,
            cfg.num_samples,
            cfg.normalize_confidences,
        )?;
        out.insert(horizon, samples);
    }
    Ok(out)
}

/// Run the baseline over every target of every scenario, returning aligned
/// prediction sets and ground truths. Targets without a valid t0 state are
/// skipped.
pub fn run_baseline(
    scenarios: &[Scenario],
    cfg: &PipelineConfig,
) -> Result<(Vec<PredictionSet>, Vec<GroundTruth>)> {
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for scenario in scenarios {
        for &target_id in &scenario.targets {
            let track = scenario
                .track(target_id)
                .ok_or(Error::TargetNotFound(target_id))?;
            if !track.current().valid {
                continue;
            }
            let samples = sample_target(scenario, target_id, cfg)?;
            let mut set = PredictionSet::with_limit(target_id, cfg.num_samples.max(1));
            for (&horizon, sample_set) in &samples {
                for ((&pos, &confidence), &confidence_raw) in sample_set
                    .coordinates
                    .iter()
                    .zip(&sample_set.confidences)
                    .zip(&sample_set.confidences_raw)
                {
                    set.push(
                        horizon,
                        Prediction {
                            pos,
                            confidence,
                            confidence_raw,
                        },
                    )?;
                }
            }
            preds.push(set);
            gts.push(GroundTruth::from_track(track, scenario.timestep_s)?);
        }
    }
    Ok((preds, gts))
}

/// Miss rate per sample budget. The heatmap is predicted and convolved once
/// per target and horizon; the greedy sampler then runs separately for every
/// requested `n` (no prefix-truncation shortcut).
pub fn miss_rate_vs_samples(
    scenarios: &[Scenario],
    cfg: &PipelineConfig,
    sample_counts: &[usize],
) -> Result<Vec<(usize, Horizon, f64)>> {
    use crate::metrics::miss_rate;
    use crate::sampler::{box_sum, greedy_sample, kernel_size};

    let mut gts: Vec<GroundTruth> = Vec::new();
    let mut per_n_preds: Vec<Vec<PredictionSet>> = vec![Vec::new(); sample_counts.len()];
    for scenario in scenarios {
        for &target_id in &scenario.targets {
            let track = scenario
                .track(target_id)
                .ok_or(Error::TargetNotFound(target_id))?;
            if !track.current().valid {
                continue;
            }
            let speed = track.current().speed;
            let mut sets: Vec<PredictionSet> = sample_counts
                .iter()
                .map(|&n| PredictionSet::with_limit(target_id, n.max(1)))
                .collect();
            for &horizon in &cfg.horizons {
                let heatmap = predict_target_heatmap(scenario, target_id, horizon, cfg)?;
                let kernel = kernel_size(speed, horizon, heatmap.spec().pixels_per_meter)?;
                let convolved = box_sum(&heatmap, kernel)?;
                for (slot, &n) in sample_counts.iter().enumerate() {
                    let mut samples = greedy_sample(&convolved, n, kernel)?;
                    if cfg.normalize_confidences {
                        samples.normalize();
                    }
                    for ((&pos, &confidence), &confidence_raw) in samples
                        .coordinates
                        .iter()
                        .zip(&samples.confidences)
                        .zip(&samples.confidences_raw)
                    {
                        sets[slot].push(
                            horizon,
                            Prediction {
                                pos,
                                confidence,
                                confidence_raw,
                            },
                        )?;
                    }
                }
            }
            for (slot, set) in sets.into_iter().enumerate() {
                per_n_preds[slot].push(set);
            }
            gts.push(GroundTruth::from_track(track, scenario.timestep_s)?);
        }
    }
    if gts.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut rows = Vec::new();
    for (slot, &n) in sample_counts.iter().enumerate() {
        for &horizon in &cfg.horizons {
            rows.push((n, horizon, miss_rate(&per_n_preds[slot], &gts, horizon)?));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::synth::{generate_synthetic, MotionMix};
    use crate::metrics::{miss_rate, Bucket};

    #[test]
    fn constant_velocity_targets_are_never_missed() {
        let scenarios = generate_synthetic(21, 10, &MotionMix::only(Bucket::Straight)).unwrap();
        let cfg = PipelineConfig::default();
        let (preds, gts) = run_baseline(&scenarios, &cfg).unwrap();
        assert_eq!(preds.len(), 10);
        for h in Horizon::ALL {
            // Keep only targets whose ground truth stayed inside the grid.
            let mut in_preds = Vec::new();
            let mut in_gts = Vec::new();
            for (i, scenario) in scenarios.iter().enumerate() {
                let track = scenario.track(0).unwrap();
                let spec = grid_for_target(track, h, &cfg.policy, cfg.resolution).unwrap();
                let Some(truth) = gts[i].at(h) else { continue };
                if spec.world_to_pixel(truth.pos).is_some() {
                    in_preds.push(preds[i].clone());
                    in_gts.push(gts[i].clone());
                }
            }
            if !in_gts.is_empty() {
                assert_eq!(
                    miss_rate(&in_preds, &in_gts, h).unwrap(),
                    0.0,
                    "horizon {h}"
                );
            }
        }
    }

    #[test]
    fn sample_counts_match_budget() {
        let scenarios = generate_synthetic(5, 3, &MotionMix::default()).unwrap();
        let cfg = PipelineConfig {
            num_samples: 4,
            ..PipelineConfig::default()
        };
        let samples = sample_target(&scenarios[0], 0, &cfg).unwrap();
        for set in samples.values() {
            assert_eq!(set.len(), 4);
        }
    }

    #[test]
    fn time_policy_changes_grid_scale_per_horizon() {
        let scenarios = generate_synthetic(9, 1, &MotionMix::only(Bucket::Straight)).unwrap();
        let track = scenarios[0].track(0).unwrap();
        let policy = ScalingPolicy::TimeBased { interpolate: false };
        let s3 = grid_for_target(track, Horizon::T3s, &policy, 256).unwrap();
        let s8 = grid_for_target(track, Horizon::T8s, &policy, 256).unwrap();
        assert_eq!(s3.pixels_per_meter, 3.0);
        assert_eq!(s8.pixels_per_meter, 1.0);
    }
}
