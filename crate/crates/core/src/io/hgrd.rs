//! HGRD: a little-endian binary container for grid rasters.
//!
//! Layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "HGRD"
//! 4       2     format version, u16 = 1
//! 6       2     flags, u16 = 0
//! 8       4     channels, u32
//! 12      4     height, u32
//! 16      4     width, u32
//! 20      4     pixels_per_meter, f32
//! 24      4     origin_x, f32
//! 28      4     origin_y, f32
//! 32      4     yaw, f32
//! 36      4     anchor_row, u32
//! 40      4     anchor_col, u32
//! 44      ...   channels * height * width f32 values,
//!               channel-major then row-major
//! ```
//!
//! The payload length must match the header exactly and NaN values are
//! forbidden in both directions.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gridgeom::{GridSpec, Vec2};
use crate::heatmap::{ChannelRaster, Heatmap};

pub const MAGIC: [u8; 4] = *b"HGRD";
pub const VERSION: u16 = 1;

pub fn write_hgrd(path: impl AsRef<Path>, raster: &ChannelRaster) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_hgrd_to(&mut writer, raster)?;
    writer.flush()?;
    Ok(())
}

pub fn write_hgrd_to(writer: &mut impl Write, raster: &ChannelRaster) -> Result<()> {
    let spec = raster.spec();
    writer.write_all(&MAGIC)?;
    writer.write_all(&VERSION.to_le_bytes())?;
    writer.write_all(&0u16.to_le_bytes())?;
    writer.write_all(&(raster.channels() as u32).to_le_bytes())?;
    writer.write_all(&spec.height_px.to_le_bytes())?;
    writer.write_all(&spec.width_px.to_le_bytes())?;
    writer.write_all(&(spec.pixels_per_meter as f32).to_le_bytes())?;
    writer.write_all(&(spec.origin_world.x as f32).to_le_bytes())?;
    writer.write_all(&(spec.origin_world.y as f32).to_le_bytes())?;
    writer.write_all(&(spec.yaw as f32).to_le_bytes())?;
    writer.write_all(&spec.anchor_row.to_le_bytes())?;
    writer.write_all(&spec.anchor_col.to_le_bytes())?;
    for &value in raster.data() {
        let v = value as f32;
        if v.is_nan() {
            return Err(Error::RasterFormat("NaN in raster payload".into()));
        }
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_hgrd(path: impl AsRef<Path>) -> Result<ChannelRaster> {
    read_hgrd_from(&mut BufReader::new(File::open(path)?))
}

pub fn read_hgrd_from(reader: &mut impl Read) -> Result<ChannelRaster> {
    let mut magic = [0u8; 4];
    read_exact(reader, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::RasterFormat(format!(
            "bad magic {:?}, expected {:?}",
            magic, MAGIC
        )));
    }
    let version = read_u16(reader)?;
    if version != VERSION {
        return Err(Error::RasterFormat(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let _flags = read_u16(reader)?;
    let channels = read_u32(reader)? as usize;
    let height = read_u32(reader)?;
    let width = read_u32(reader)?;
    let ppm = read_f32(reader)?;
    let origin_x = read_f32(reader)?;
    let origin_y = read_f32(reader)?;
    let yaw = read_f32(reader)?;
    let anchor_row = read_u32(reader)?;
    let anchor_col = read_u32(reader)?;

    let spec = GridSpec::new(
        height,
        width,
        ppm as f64,
        Vec2::new(origin_x as f64, origin_y as f64),
        yaw as f64,
        anchor_row,
        anchor_col,
    )?;
    let count = channels
        .checked_mul(spec.num_pixels())
        .ok_or_else(|| Error::RasterFormat("payload size overflows".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 4];
    for _ in 0..count {
        read_exact(reader, &mut buf)?;
        let v = f32::from_le_bytes(buf);
        if v.is_nan() {
            return Err(Error::RasterFormat("NaN in raster payload".into()));
        }
        data.push(v as f64);
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::RasterFormat(
            "trailing bytes after declared payload".into(),
        ));
    }
    ChannelRaster::from_data(spec, channels, data)
}

/// Read a single-channel HGRD file as a heatmap.
pub fn read_heatmap(path: impl AsRef<Path>) -> Result<Heatmap> {
    let raster = read_hgrd(path)?;
    if raster.channels() != 1 {
        return Err(Error::RasterFormat(format!(
            "expected a single-channel raster, got {} channels",
            raster.channels()
        )));
    }
    Ok(raster.channel_heatmap(0))
}

fn read_exact(reader: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::RasterFormat("truncated file".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u16(reader: &mut impl Read) -> Result<u16> {
    let mut buf = [0u8; 2];
    read_exact(reader, &mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32(reader: &mut impl Read) -> Result<f32> {
    let mut buf = [0u8; 4];
    read_exact(reader, &mut buf)?;
    Ok(f32::from_le_bytes(buf))
}
