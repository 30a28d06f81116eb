//! Greedy coverage-optimal coordinate sampling from probability heatmaps.
//!
//! Each sampled coordinate claims a rectangular area sized like the miss-rate
//! threshold; choosing non-overlapping areas covers the most space with a
//! fixed prediction budget. The kernel extent per axis is
//!
//! ```text
//! size_kernel = floor(4 * gamma(v) * lambda_t * ppm)
//! ```
//!
//! per axis (four threshold half-extents, so two abutting windows put their
//! centers two full thresholds apart), adjusted down to the nearest odd value
//! so the window has a center pixel. A stride-1 box-sum convolution
//! aggregates the probability mass each candidate area would capture, then
//! coordinates are drawn greedily: take the global argmax, record its value as
//! the confidence, convert the pixel to world coordinates, and suppress the
//! kernel-sized window around it with `-inf` before the next round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridgeom::{PixelIndex, Vec2};
use crate::heatmap::Heatmap;
use crate::metrics::{gamma, lambda, Horizon};

/// Pixel extent of the summation/exclusion window per threshold axis.
///
/// Grid rows run along the longitudinal axis and columns along the lateral
/// axis, so a window spans `lon_px` rows by `lat_px` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSize {
    pub lat_px: usize,
    pub lon_px: usize,
}

impl KernelSize {
    pub fn new(lat_px: usize, lon_px: usize) -> Result<Self> {
        if lat_px == 0 || lon_px == 0 || lat_px.is_multiple_of(2) || lon_px.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "kernel ({lat_px}, {lon_px}) must be odd and positive"
            )));
        }
        Ok(Self { lat_px, lon_px })
    }

    /// Window extent along grid rows.
    pub fn rows(&self) -> usize {
        self.lon_px
    }

    /// Window extent along grid columns.
    pub fn cols(&self) -> usize {
        self.lat_px
    }
}

fn odd_adjust(raw: i64) -> usize {
    if raw < 1 {
        1
    } else if raw % 2 == 0 {
        (raw - 1) as usize
    } else {
        raw as usize
    }
}

/// Floor with a few-ulp guard: products that are integral in real arithmetic
/// (e.g. `4 * gamma * lambda / gamma`) must not round down through the noise
/// of the preceding multiplications.
fn guarded_floor(x: f64) -> i64 {
    (x + x.abs() * 8.0 * f64::EPSILON).floor() as i64
}

/// Pre-adjustment window extents `(lat, lon)` in pixels:
/// `floor(4 * gamma(v) * lambda_t * ppm)` per axis.
pub fn raw_kernel_extents(
    speed: f64,
    horizon: Horizon,
    pixels_per_meter: f64,
) -> Result<(i64, i64)> {
    if !pixels_per_meter.is_finite() || pixels_per_meter <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "pixels_per_meter {pixels_per_meter} must be positive"
        )));
    }
    let g = gamma(speed)?;
    let (lat, lon) = lambda(horizon);
    Ok((
        guarded_floor(4.0 * g * lat * pixels_per_meter),
        guarded_floor(4.0 * g * lon * pixels_per_meter),
    ))
}

/// Kernel extent for a target speed, horizon, and grid scale: the raw floored
/// extents, each reduced by one if even and floored at one.
pub fn kernel_size(speed: f64, horizon: Horizon, pixels_per_meter: f64) -> Result<KernelSize> {
    let (raw_lat, raw_lon) = raw_kernel_extents(speed, horizon, pixels_per_meter)?;
    Ok(KernelSize {
        lat_px: odd_adjust(raw_lat),
        lon_px: odd_adjust(raw_lon),
    })
}

/// Stride-1 box-sum convolution: every output pixel holds the sum of the
/// input over the kernel-sized window centered on it, zero-padded at borders.
pub fn box_sum(heatmap: &Heatmap, kernel: KernelSize) -> Result<Heatmap> {
    let spec = *heatmap.spec();
    let height = spec.height_px as usize;
    let width = spec.width_px as usize;
    if kernel.rows() > 2 * height || kernel.cols() > 2 * width {
        return Err(Error::KernelTooLarge {
            rows: kernel.rows(),
            cols: kernel.cols(),
            height,
            width,
        });
    }
    if heatmap.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "box_sum input must be finite".into(),
        ));
    }

    // Summed-area table with a zero top row / left column; padded borders fall
    // out of clamping the window to the valid region.
    let mut integral = vec![0.0f64; (height + 1) * (width + 1)];
    let stride = width + 1;
    for r in 0..height {
        let mut row_sum = 0.0;
        for c in 0..width {
            row_sum += heatmap.values()[r * width + c];
            integral[(r + 1) * stride + (c + 1)] = integral[r * stride + (c + 1)] + row_sum;
        }
    }

    let half_rows = (kernel.rows() - 1) / 2;
    let half_cols = (kernel.cols() - 1) / 2;
    let mut out = Heatmap::zeros(spec);
    for r in 0..height {
        let r0 = r.saturating_sub(half_rows);
        let r1 = (r + half_rows).min(height - 1);
        for c in 0..width {
            let c0 = c.saturating_sub(half_cols);
            let c1 = (c + half_cols).min(width - 1);
            let sum = integral[(r1 + 1) * stride + (c1 + 1)]
                - integral[r0 * stride + (c1 + 1)]
                - integral[(r1 + 1) * stride + c0]
                + integral[r0 * stride + c0];
            out.set(r as u32, c as u32, sum);
        }
    }
    Ok(out)
}

/// Up to `num_samples` coordinates with confidences, in greedy order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub coordinates: Vec<Vec2>,
    /// Confidences as reported (equal to `confidences_raw` unless normalized).
    pub confidences: Vec<f64>,
    /// Convolved heatmap values at the sampled pixels.
    pub confidences_raw: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    /// Divide confidences by their sum (raw values retained). Leaves an
    /// all-zero set untouched.
    pub fn normalize(&mut self) {
        let total: f64 = self.confidences_raw.iter().sum();
        if total > 0.0 {
            self.confidences = self.confidences_raw.iter().map(|c| c / total).collect();
        }
    }
}

/// Greedy argmax extraction with window exclusion.
///
/// Each round takes the global maximum of the working copy (ties broken by
/// lowest row-major index), records its value as the confidence, converts the
/// pixel center to world coordinates, and sets the kernel-sized window around
/// it to `-inf`. Stops early only when every remaining pixel is suppressed;
/// zero-valued pixels are valid maxima. The input heatmap is never mutated.
pub fn greedy_sample(
    convolved: &Heatmap,
    num_samples: usize,
    kernel: KernelSize,
) -> Result<SampleSet> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("num_samples must be >= 1".into()));
    }
    let spec = *convolved.spec();
    let height = spec.height_px as usize;
    let width = spec.width_px as usize;
    let mut working = convolved.values().to_vec();
    let half_rows = (kernel.rows() - 1) / 2;
    let half_cols = (kernel.cols() - 1) / 2;

    let mut coordinates = Vec::with_capacity(num_samples);
    let mut confidences = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let mut best_idx = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (i, &v) in working.iter().enumerate() {
            if v > best_val {
                best_val = v;
                best_idx = i;
            }
        }
        if best_val == f64::NEG_INFINITY {
            break;
        }
        let row = best_idx / width;
        let col = best_idx % width;
        coordinates.push(spec.pixel_to_world(PixelIndex::new(row as u32, col as u32))?);
        confidences.push(best_val);

        let r0 = row.saturating_sub(half_rows);
        let r1 = (row + half_rows).min(height - 1);
        let c0 = col.saturating_sub(half_cols);
        let c1 = (col + half_cols).min(width - 1);
        for r in r0..=r1 {
            for value in &mut working[r * width + c0..=r * width + c1] {
                *value = f64::NEG_INFINITY;
            }
        }
    }
    Ok(SampleSet {
        coordinates,
        confidences: confidences.clone(),
        confidences_raw: confidences,
    })
}

/// Kernel sizing, box-sum convolution, and greedy extraction in one call.
///
/// With `normalize` set, confidences are rescaled to sum to one; the raw
/// convolved values are preserved alongside either way.
pub fn sample_pipeline(
    heatmap: &Heatmap,
    speed: f64,
    horizon: Horizon,
    num_samples: usize,
    normalize: bool,
) -> Result<SampleSet> {
    let kernel = kernel_size(speed, horizon, heatmap.spec().pixels_per_meter)?;
    let convolved = box_sum(heatmap, kernel)?;
    let mut samples = greedy_sample(&convolved, num_samples, kernel)?;
    if normalize {
        samples.normalize();
    }
    Ok(samples)
}
