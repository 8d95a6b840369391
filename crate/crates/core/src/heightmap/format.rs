//! `.hxm` binary height-field files.
//!
//! Layout (all numbers little-endian):
//!
//! ```text
//! "HXHM"                magic, 4 bytes
//! u32 version           = 1
//! u32 rows, u32 cols
//! f32 cell_size, f32 origin_x, f32 origin_y
//! f32 floor[rows*cols]  row-major
//! u8  has_ceiling
//! f32 ceiling[rows*cols] present only if has_ceiling == 1; NaN = nothing overhead
//! ```

use std::io::{Read, Write};

use super::LayeredHeightField;
use crate::{Error, Result};

pub const HXM_MAGIC: &[u8; 4] = b"HXHM";
pub const HXM_VERSION: u32 = 1;

pub fn write_hxm<W: Write>(field: &LayeredHeightField, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(29 + field.floor.len() * 8);
    buf.extend_from_slice(HXM_MAGIC);
    buf.extend_from_slice(&HXM_VERSION.to_le_bytes());
    buf.extend_from_slice(&(field.rows as u32).to_le_bytes());
    buf.extend_from_slice(&(field.cols as u32).to_le_bytes());
    buf.extend_from_slice(&(field.cell_size as f32).to_le_bytes());
    buf.extend_from_slice(&(field.origin[0] as f32).to_le_bytes());
    buf.extend_from_slice(&(field.origin[1] as f32).to_le_bytes());
    for &h in &field.floor {
        buf.extend_from_slice(&(h as f32).to_le_bytes());
    }
    match &field.ceiling {
        Some(ceil) => {
            buf.push(1);
            for &c in ceil {
                let v = if c.is_nan() { f32::NAN } else { c as f32 };
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        None => buf.push(0),
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_hxm<R: Read>(mut input: R) -> Result<LayeredHeightField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != HXM_MAGIC {
        return Err(Error::Format("not an .hxm file (bad magic)".into()));
    }
    let version = read_u32(&mut input)?;
    if version != HXM_VERSION {
        return Err(Error::Format(format!("unsupported .hxm version {version}")));
    }
    let rows = read_u32(&mut input)? as usize;
    let cols = read_u32(&mut input)? as usize;
    let n = rows
        .checked_mul(cols)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::Format(format!("implausible grid size {rows}x{cols}")))?;
    let cell_size = read_f32(&mut input)? as f64;
    let origin = [read_f32(&mut input)? as f64, read_f32(&mut input)? as f64];
    let floor = read_f32_vec(&mut input, n)?;
    let mut flag = [0u8; 1];
    input.read_exact(&mut flag)?;
    let ceiling = match flag[0] {
        0 => None,
        1 => Some(read_f32_vec(&mut input, n)?),
        other => return Err(Error::Format(format!("bad has_ceiling byte {other}"))),
    };
    LayeredHeightField::with_ceiling(rows, cols, cell_size, origin, floor, ceiling)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_f32_vec<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw)?;
    Ok(raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}
