//! Scene rasterization: map polylines, agent occupancy frames, and
//! ground-truth Gaussian target heatmaps.
//!
//! The top-view input raster has `2 * 11 + 5 = 27` binary channels: one per
//! road category, one per history frame for the target agent, and one per
//! history frame for all other agents unioned together.

use crate::error::{Error, Result};
use crate::gridgeom::{GridSpec, Vec2};
use crate::heatmap::{ChannelRaster, Heatmap};
use crate::scenario::{
    AgentState, AgentTrack, MapPolyline, PolylineCategory, Scenario, HISTORY_LEN,
};

/// Road category channels in map rasters.
pub const MAP_CHANNELS: usize = 5;

/// History frames per agent block.
pub const AGENT_FRAMES: usize = HISTORY_LEN;

/// Total channels of a [`TopView`].
pub const TOPVIEW_CHANNELS: usize = MAP_CHANNELS + 2 * AGENT_FRAMES;

/// The full multi-channel scene input raster.
///
/// Channel layout: `[0..5)` map categories, `[5..16)` target-agent frames
/// oldest to t0, `[16..27)` other-agent frames oldest to t0.
#[derive(Clone, Debug, PartialEq)]
pub struct TopView {
    pub raster: ChannelRaster,
}

impl TopView {
    pub fn map_channel(&self, category: PolylineCategory) -> &[f64] {
        self.raster.channel(category.channel())
    }

    pub fn target_frame(&self, frame: usize) -> &[f64] {
        self.raster.channel(MAP_CHANNELS + frame)
    }

    pub fn others_frame(&self, frame: usize) -> &[f64] {
        self.raster.channel(MAP_CHANNELS + AGENT_FRAMES + frame)
    }
}

/// Draw each polyline as a 1-pixel-wide connected path into its category
/// channel. Out-of-bounds portions are clipped away.
pub fn rasterize_map(polylines: &[MapPolyline], spec: &GridSpec) -> ChannelRaster {
    let mut raster = ChannelRaster::zeros(*spec, MAP_CHANNELS);
    for polyline in polylines {
        let channel = polyline.category.channel();
        for segment in polyline.points.windows(2) {
            draw_segment(&mut raster, channel, spec, segment[0], segment[1]);
        }
    }
    raster
}

fn draw_segment(raster: &mut ChannelRaster, channel: usize, spec: &GridSpec, a: Vec2, b: Vec2) {
    let (ar, ac) = spec.world_to_continuous(a);
    let (br, bc) = spec.world_to_continuous(b);
    // Quick reject for segments whose bounding box misses the raster.
    if ar.min(br) >= spec.height_px as f64
        || ar.max(br) < 0.0
        || ac.min(bc) >= spec.width_px as f64
        || ac.max(bc) < 0.0
    {
        return;
    }
    let (mut r0, mut c0) = (ar.floor() as i64, ac.floor() as i64);
    let (r1, c1) = (br.floor() as i64, bc.floor() as i64);
    let dr = (r1 - r0).abs();
    let dc = (c1 - c0).abs();
    let step_r = if r0 < r1 { 1 } else { -1 };
    let step_c = if c0 < c1 { 1 } else { -1 };
    let mut err = dc - dr;
    loop {
        if spec.contains(r0, c0) {
            raster.set(channel, r0 as u32, c0 as u32, 1.0);
        }
        if r0 == r1 && c0 == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 > -dr {
            err -= dr;
            c0 += step_c;
        }
        if e2 < dc {
            err += dc;
            r0 += step_r;
        }
    }
}

/// Rasterize the oriented bounding boxes of every valid agent state per
/// history frame: the target agent into channels `[0..11)`, all other agents
/// unioned into channels `[11..22)`.
pub fn rasterize_agents(
    tracks: &[AgentTrack],
    target_id: i64,
    spec: &GridSpec,
) -> Result<ChannelRaster> {
    if !tracks.iter().any(|t| t.id == target_id) {
        return Err(Error::TargetNotFound(target_id));
    }
    let mut raster = ChannelRaster::zeros(*spec, 2 * AGENT_FRAMES);
    for track in tracks {
        let block = if track.id == target_id {
            0
        } else {
            AGENT_FRAMES
        };
        for (frame, state) in track.states.iter().enumerate().take(AGENT_FRAMES) {
            if state.valid {
                fill_oriented_box(&mut raster, block + frame, spec, state);
            }
        }
    }
    Ok(raster)
}

/// Set every pixel whose center lies inside the agent's oriented box. The box
/// interior is half-open in its local frame, so counts stay consistent under
/// translation.
fn fill_oriented_box(
    raster: &mut ChannelRaster,
    channel: usize,
    spec: &GridSpec,
    state: &AgentState,
) {
    let center = state.position();
    let half_len = state.length / 2.0;
    let half_wid = state.width / 2.0;
    if half_len <= 0.0 || half_wid <= 0.0 {
        return;
    }
    // Bounding range of the box corners in grid coordinates.
    let mut min_r = f64::INFINITY;
    let mut max_r = f64::NEG_INFINITY;
    let mut min_c = f64::INFINITY;
    let mut max_c = f64::NEG_INFINITY;
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let corner = center + Vec2::new(sx * half_len, sy * half_wid).rotate(state.yaw);
        let (r, c) = spec.world_to_continuous(corner);
        min_r = min_r.min(r);
        max_r = max_r.max(r);
        min_c = min_c.min(c);
        max_c = max_c.max(c);
    }
    let r_lo = (min_r.floor() as i64 - 1).max(0);
    let r_hi = (max_r.ceil() as i64 + 1).min(spec.height_px as i64 - 1);
    let c_lo = (min_c.floor() as i64 - 1).max(0);
    let c_hi = (max_c.ceil() as i64 + 1).min(spec.width_px as i64 - 1);
    for row in r_lo..=r_hi {
        for col in c_lo..=c_hi {
            let p = spec
                .pixel_to_world(crate::gridgeom::PixelIndex::new(row as u32, col as u32))
                .expect("range is clamped to the raster");
            let local = (p - center).rotate(-state.yaw);
            if (-half_len..half_len).contains(&local.x) && (-half_wid..half_wid).contains(&local.y)
            {
                raster.set(channel, row as u32, col as u32, 1.0);
            }
        }
    }
}

/// Compose the 27-channel scene input for one target agent.
pub fn build_top_view(scenario: &Scenario, target_id: i64, spec: &GridSpec) -> Result<TopView> {
    let map = rasterize_map(&scenario.map, spec);
    let agents = rasterize_agents(&scenario.tracks, target_id, spec)?;
    Ok(TopView {
        raster: map.stack(agents)?,
    })
}

/// Unnormalized Gaussian heatmap `exp(-d^2 / (2 sigma^2))` of pixel-center
/// distance to `gt_pos`, clamped to `[0, 1]`.
///
/// Distances are Euclidean in world space, so the evaluation is separable in
/// the grid frame.
pub fn render_target_heatmap(gt_pos: Vec2, spec: &GridSpec, sigma_m: f64) -> Result<Heatmap> {
    if !sigma_m.is_finite() || sigma_m <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma {sigma_m} must be positive"
        )));
    }
    let (gt_row, gt_col) = spec.world_to_continuous(gt_pos);
    let mpp = spec.meters_per_pixel();
    let inv_two_sigma_sq = 1.0 / (2.0 * sigma_m * sigma_m);
    let row_factors: Vec<f64> = (0..spec.height_px)
        .map(|r| {
            let d = (r as f64 + 0.5 - gt_row) * mpp;
            (-d * d * inv_two_sigma_sq).exp()
        })
        .collect();
    let col_factors: Vec<f64> = (0..spec.width_px)
        .map(|c| {
            let d = (c as f64 + 0.5 - gt_col) * mpp;
            (-d * d * inv_two_sigma_sq).exp()
        })
        .collect();
    let mut heatmap = Heatmap::zeros(*spec);
    for (r, &rf) in row_factors.iter().enumerate() {
        for (c, &cf) in col_factors.iter().enumerate() {
            heatmap.set(r as u32, c as u32, (rf * cf).clamp(0.0, 1.0));
        }
    }
    Ok(heatmap)
}
