//! Dense raster containers tagged with their grid geometry.

use crate::error::{Error, Result};
use crate::gridgeom::{GridSpec, PixelIndex};

/// A single-channel probability raster over a [`GridSpec`].
///
/// Model and baseline outputs keep values in `[0, 1]`; convolved working
/// copies produced during sampling may exceed 1 and may hold `-inf` sentinels.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Heatmap {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.num_pixels()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.num_pixels() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {}x{} raster",
                values.len(),
                spec.height_px,
                spec.width_px
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn index(&self, row: u32, col: u32) -> usize {
        row as usize * self.spec.width_px as usize + col as usize
    }

    #[inline]
    pub fn at(&self, row: u32, col: u32) -> f64 {
        self.values[self.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: f64) {
        let i = self.index(row, col);
        self.values[i] = value;
    }

    /// Value at the pixel containing a world point, if in bounds.
    pub fn sample_world(&self, p: crate::gridgeom::Vec2) -> Option<f64> {
        self.spec.world_to_pixel(p).map(|i| self.at(i.row, i.col))
    }

    /// Location and value of the maximum, ties broken by lowest row-major
    /// index. `None` for empty rasters.
    pub fn argmax(&self) -> Option<(PixelIndex, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, v)| {
            let w = self.spec.width_px as usize;
            (PixelIndex::new((i / w) as u32, (i % w) as u32), v)
        })
    }

    /// Clamp every value into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.values {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// A multi-channel raster sharing one [`GridSpec`], channel-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRaster {
    spec: GridSpec,
    channels: usize,
    data: Vec<f64>,
}

impl ChannelRaster {
    pub fn zeros(spec: GridSpec, channels: usize) -> Self {
        Self {
            data: vec![0.0; channels * spec.num_pixels()],
            spec,
            channels,
        }
    }

    pub fn from_data(spec: GridSpec, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * spec.num_pixels() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} channels of a {}x{} raster",
                data.len(),
                channels,
                spec.height_px,
                spec.width_px
            )));
        }
        Ok(Self {
            spec,
            channels,
            data,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.spec.num_pixels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.spec.num_pixels();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, c: usize, row: u32, col: u32) -> f64 {
        self.channel(c)[row as usize * self.spec.width_px as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, c: usize, row: u32, col: u32, value: f64) {
        let w = self.spec.width_px as usize;
        self.channel_mut(c)[row as usize * w + col as usize] = value;
    }

    /// Append all channels of `other` (same spec) after this raster's.
    pub fn stack(mut self, other: ChannelRaster) -> Result<ChannelRaster> {
        if other.spec != self.spec {
            return Err(Error::DimensionMismatch(
                "cannot stack rasters with different grid specs".into(),
            ));
        }
        self.channels += other.channels;
        self.data.extend(other.data);
        Ok(self)
    }

    /// View channel `c` as a standalone heatmap.
    pub fn channel_heatmap(&self, c: usize) -> Heatmap {
        Heatmap::from_values(self.spec, self.channel(c).to_vec())
            .expect("channel length matches spec")
    }
}

impl From<Heatmap> for ChannelRaster {
    fn from(h: Heatmap) -> Self {
        ChannelRaster {
            spec: *h.spec(),
            channels: 1,
            data: h.into_values(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridgeom::Vec2;

    fn spec() -> GridSpec {
        GridSpec::new(4, 5, 1.0, Vec2::ZERO, 0.0, 2, 2).unwrap()
    }

    #[test]
    fn argmax_prefers_lowest_row_major_index() {
        let mut h = Heatmap::zeros(spec());
        h.set(1, 3, 2.0);
        h.set(2, 0, 2.0);
        let (idx, v) = h.argmax().unwrap();
        assert_eq!(idx, PixelIndex::new(1, 3));
        assert_eq!(v, 2.0);
    }

    #[test]
    fn from_values_checks_length() {
        assert!(Heatmap::from_values(spec(), vec![0.0; 19]).is_err());
        assert!(Heatmap::from_values(spec(), vec![0.0; 20]).is_ok());
    }

    #[test]
    fn stacking_concatenates_channels() {
        let a = ChannelRaster::zeros(spec(), 2);
        let mut b = ChannelRaster::zeros(spec(), 3);
        b.set(1, 0, 0, 7.0);
        let stacked = a.stack(b).unwrap();
        assert_eq!(stacked.channels(), 5);
        assert_eq!(stacked.at(3, 0, 0), 7.0);
    }
}
