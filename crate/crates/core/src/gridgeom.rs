//! World <-> pixel geometry for agent-centric top-view grids.
//!
//! A [`GridSpec`] binds an `H x W` raster to world space: the world point
//! `origin_world` sits at the center of the `anchor` pixel, the grid frame is
//! rotated by `yaw` relative to the world frame, and one pixel spans
//! `1 / pixels_per_meter` meters.
//!
//! Axis convention (fixed here, used everywhere in the crate):
//!
//! * grid rows run along the *negative* longitudinal axis — the agent the grid
//!   is centered on looks toward row 0, so most of the raster lies ahead of it;
//! * grid columns run along the lateral axis; a point to the agent's left
//!   (positive lateral offset) maps to a higher column index.
//!
//! The mapping from the grid frame `(longitudinal, lateral)` to image axes
//! `(col, row)` has determinant +1, so rasters drawn in different frames stay
//! congruent under rotation.
//!
//! A world point belongs to pixel `(r, c)` iff its continuous grid coordinates
//! fall inside the half-open square `[r, r+1) x [c, c+1)`; membership is
//! floor-based and deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;

/// A 2-vector in world coordinates, meters. Serializes as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Counterclockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (sin, cos) = angle.sin_cos();
        Vec2::new(cos * self.x - sin * self.y, sin * self.x + cos * self.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;

    fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;

    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Integer pixel index, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelIndex {
    pub row: u32,
    pub col: u32,
}

impl PixelIndex {
    pub fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }
}

/// Geometry binding pixel space to world space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub height_px: u32,
    pub width_px: u32,
    /// Grid scale; one pixel spans `1 / pixels_per_meter` meters.
    pub pixels_per_meter: f64,
    /// World position mapped to the center of the anchor pixel.
    pub origin_world: Vec2,
    /// Rotation of the grid frame relative to the world frame, radians.
    pub yaw: f64,
    pub anchor_row: u32,
    pub anchor_col: u32,
}

/// Default raster resolution for agent-centered grids.
pub const DEFAULT_RESOLUTION: u32 = 256;

impl GridSpec {
    pub fn new(
        height_px: u32,
        width_px: u32,
        pixels_per_meter: f64,
        origin_world: Vec2,
        yaw: f64,
        anchor_row: u32,
        anchor_col: u32,
    ) -> Result<Self> {
        if height_px == 0 || width_px == 0 {
            return Err(Error::InvalidGridSpec(format!(
                "resolution {height_px}x{width_px} must be positive"
            )));
        }
        if !pixels_per_meter.is_finite() || pixels_per_meter <= 0.0 {
            return Err(Error::InvalidGridSpec(format!(
                "pixels_per_meter {pixels_per_meter} must be positive and finite"
            )));
        }
        if !origin_world.is_finite() || !yaw.is_finite() {
            return Err(Error::InvalidGridSpec(
                "origin and yaw must be finite".into(),
            ));
        }
        if anchor_row >= height_px || anchor_col >= width_px {
            return Err(Error::InvalidGridSpec(format!(
                "anchor ({anchor_row}, {anchor_col}) outside {height_px}x{width_px} raster"
            )));
        }
        Ok(Self {
            height_px,
            width_px,
            pixels_per_meter,
            origin_world,
            yaw,
            anchor_row,
            anchor_col,
        })
    }

    /// Grid centered on an agent: origin at the agent position, grid yaw equal
    /// to the agent yaw, and the anchor at `(3/4 * height, 1/2 * width)` so
    /// three quarters of the rows lie ahead of the agent.
    pub fn agent_centered(
        height_px: u32,
        width_px: u32,
        pixels_per_meter: f64,
        agent_pos: Vec2,
        agent_yaw: f64,
    ) -> Result<Self> {
        Self::new(
            height_px,
            width_px,
            pixels_per_meter,
            agent_pos,
            agent_yaw,
            height_px / 4 * 3,
            width_px / 2,
        )
    }

    pub fn contains(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as u32) < self.height_px && (col as u32) < self.width_px
    }

    /// Continuous grid coordinates `(row, col)` of a world point. The integer
    /// part is the pixel index; values may fall outside the raster.
    pub fn world_to_continuous(&self, p: Vec2) -> (f64, f64) {
        let d = (p - self.origin_world).rotate(-self.yaw);
        let row = (self.anchor_row as f64 + 0.5) - d.x * self.pixels_per_meter;
        let col = (self.anchor_col as f64 + 0.5) + d.y * self.pixels_per_meter;
        (row, col)
    }

    /// Pixel containing a world point, or `None` when outside the raster.
    pub fn world_to_pixel(&self, p: Vec2) -> Option<PixelIndex> {
        let (row, col) = self.world_to_continuous(p);
        let (row, col) = (row.floor(), col.floor());
        if row >= 0.0 && col >= 0.0 && row < self.height_px as f64 && col < self.width_px as f64 {
            Some(PixelIndex::new(row as u32, col as u32))
        } else {
            None
        }
    }

    /// World coordinate of the pixel center. Rejects out-of-range indices.
    pub fn pixel_to_world(&self, idx: PixelIndex) -> Result<Vec2> {
        if idx.row >= self.height_px || idx.col >= self.width_px {
            return Err(Error::PixelOutOfRange {
                row: idx.row,
                col: idx.col,
                height: self.height_px,
                width: self.width_px,
            });
        }
        let lon = (self.anchor_row as f64 - idx.row as f64) / self.pixels_per_meter;
        let lat = (idx.col as f64 - self.anchor_col as f64) / self.pixels_per_meter;
        Ok(self.origin_world + Vec2::new(lon, lat).rotate(self.yaw))
    }

    /// Physical side length of one pixel, meters.
    pub fn meters_per_pixel(&self) -> f64 {
        1.0 / self.pixels_per_meter
    }

    pub fn num_pixels(&self) -> usize {
        self.height_px as usize * self.width_px as usize
    }
}

/// Grid scale selection per sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalingPolicy {
    /// Fixed pixels-per-meter regardless of agent or horizon.
    Static(f64),
    /// Scale by prediction horizon: 3 s -> 3 px/m, 5 s -> 2 px/m, 8 s -> 1 px/m.
    TimeBased {
        /// Piecewise-linear interpolation in meters-per-pixel over t in [3, 8] s
        /// for horizons between the three defined ones.
        interpolate: bool,
    },
    /// Scale as `1 / gamma(v)`, which keeps the sampling kernel and the miss
    /// threshold congruent in pixel space.
    VelocityBased,
}

impl ScalingPolicy {
    /// Resolve the pixels-per-meter for a target moving at `speed` (m/s at t0)
    /// and a prediction horizon of `t_seconds`.
    pub fn pixels_per_meter(&self, speed: f64, t_seconds: f64) -> Result<f64> {
        match *self {
            ScalingPolicy::Static(ppm) => {
                if ppm.is_finite() && ppm > 0.0 {
                    Ok(ppm)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "static pixels_per_meter {ppm} must be positive"
                    )))
                }
            }
            ScalingPolicy::TimeBased { interpolate } => time_based_scale(t_seconds, interpolate),
            ScalingPolicy::VelocityBased => velocity_based_scale(speed),
        }
    }
}

const HORIZON_EPS: f64 = 1e-9;

/// Pixels-per-meter for a prediction horizon: 3 s -> 3, 5 s -> 2, 8 s -> 1.
///
/// With `interpolate` set, horizons between 3 s and 8 s are served by linear
/// interpolation in meters-per-pixel between the three defined values; without
/// it, any other horizon is an error.
pub fn time_based_scale(t_seconds: f64, interpolate: bool) -> Result<f64> {
    const TABLE: [(f64, f64); 3] = [(3.0, 3.0), (5.0, 2.0), (8.0, 1.0)];
    for (t, ppm) in TABLE {
        if (t_seconds - t).abs() < HORIZON_EPS {
            return Ok(ppm);
        }
    }
    if !interpolate {
        return Err(Error::UnsupportedHorizon(t_seconds));
    }
    if !(TABLE[0].0..=TABLE[2].0).contains(&t_seconds) {
        return Err(Error::UnsupportedHorizon(t_seconds));
    }
    for pair in TABLE.windows(2) {
        let ((t0, x0), (t1, x1)) = (pair[0], pair[1]);
        if t_seconds >= t0 && t_seconds <= t1 {
            let frac = (t_seconds - t0) / (t1 - t0);
            let mpp = (1.0 - frac) / x0 + frac / x1;
            return Ok(1.0 / mpp);
        }
    }
    unreachable!("horizon {t_seconds} inside [3, 8] matches a table segment");
}

/// Pixels-per-meter from the velocity-dependent threshold shrink factor:
/// `1 / gamma(v)`, in `[1, 2]`.
pub fn velocity_based_scale(speed: f64) -> Result<f64> {
    Ok(1.0 / metrics::gamma(speed)?)
}

/// Fraction of ground-truth positions that land inside their grid's raster.
pub fn coverage_fraction(dataset: &[(Vec2, GridSpec)]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inside = dataset
        .iter()
        .filter(|(p, spec)| spec.world_to_pixel(*p).is_some())
        .count();
    Ok(inside as f64 / dataset.len() as f64)
}
