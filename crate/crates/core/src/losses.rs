//! Per-cell grid losses for comparing predicted and target heatmaps.
//!
//! Both losses average over all cells so the value is independent of the grid
//! resolution. The focal variant is the penalty-reduced pixel-wise form used
//! with Gaussian-softened targets: cells at the peak (`y >= 1 - 1e-6`) are
//! positives, everything else is weighted down by `(1 - y)^beta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatmap::Heatmap;

/// Cells with target values at or above this are treated as positives by the
/// focal loss.
pub const POSITIVE_THRESHOLD: f64 = 1.0 - 1e-6;

/// Default clamp applied to log arguments.
pub const DEFAULT_EPSILON: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Focal,
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Exponent on the modulating factor, applied to both branches.
    pub focal_alpha: f64,
    /// Exponent on the Gaussian negative weighting `(1 - y)^beta`.
    pub focal_beta: f64,
    /// Clamp for log arguments, in `(0, 0.5)`.
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::Focal,
            focal_alpha: 2.0,
            focal_beta: 4.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "epsilon {} must be in (0, 0.5)",
                self.epsilon
            )));
        }
        if self.focal_alpha < 0.0 || self.focal_beta < 0.0 {
            return Err(Error::InvalidArgument(
                "focal exponents must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn check_pair(pred: &Heatmap, target: &Heatmap) -> Result<()> {
    if pred.spec().height_px != target.spec().height_px
        || pred.spec().width_px != target.spec().width_px
    {
        return Err(Error::DimensionMismatch(format!(
            "pred {}x{} vs target {}x{}",
            pred.spec().height_px,
            pred.spec().width_px,
            target.spec().height_px,
            target.spec().width_px
        )));
    }
    for (name, map) in [("pred", pred), ("target", target)] {
        if map.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "{name} heatmap has values outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Mean binary cross entropy per cell, with probabilities clamped to
/// `[epsilon, 1 - epsilon]` before the logs.
pub fn cross_entropy(pred: &Heatmap, target: &Heatmap) -> Result<f64> {
    cross_entropy_with(pred, target, DEFAULT_EPSILON)
}

pub fn cross_entropy_with(pred: &Heatmap, target: &Heatmap, epsilon: f64) -> Result<f64> {
    check_pair(pred, target)?;
    let mut total = 0.0;
    for (&p, &y) in pred.values().iter().zip(target.values()) {
        let p = p.clamp(epsilon, 1.0 - epsilon);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / pred.values().len() as f64)
}

/// Mean penalty-reduced focal loss per cell:
///
/// ```text
/// y >= 1 - 1e-6:  -(1 - p)^alpha * ln(p)
/// otherwise:      -(1 - y)^beta * p^alpha * ln(1 - p)
/// ```
pub fn focal_loss(pred: &Heatmap, target: &Heatmap, cfg: &LossConfig) -> Result<f64> {
    check_pair(pred, target)?;
    cfg.validate()?;
    let mut total = 0.0;
    for (&p, &y) in pred.values().iter().zip(target.values()) {
        let p = p.clamp(cfg.epsilon, 1.0 - cfg.epsilon);
        if y >= POSITIVE_THRESHOLD {
            total -= (1.0 - p).powf(cfg.focal_alpha) * p.ln();
        } else {
            total -= (1.0 - y).powf(cfg.focal_beta) * p.powf(cfg.focal_alpha) * (1.0 - p).ln();
        }
    }
    Ok(total / pred.values().len() as f64)
}

/// Dispatch on the configured loss kind.
pub fn grid_loss(pred: &Heatmap, target: &Heatmap, cfg: &LossConfig) -> Result<f64> {
    match cfg.kind {
        LossKind::Focal => focal_loss(pred, target, cfg),
        LossKind::CrossEntropy => cross_entropy_with(pred, target, cfg.epsilon),
    }
}
