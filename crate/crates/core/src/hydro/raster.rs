//! Max-depth raster output: ESRI ASCII and a compact binary grid.
//!
//! Binary layout, little-endian: magic `BGDR`, u32 version, u64 rows,
//! u64 cols, f64 origin x, f64 origin y, f64 cell size, then rows·cols f64
//! values row-major from the northern row.

use std::io::{self, Read, Write};

use super::MaxDepthRaster;
use crate::geodata::{write_esri_ascii, GridGeoref};

pub const BINARY_MAGIC: &[u8; 4] = b"BGDR";
pub const BINARY_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 * 3;

pub fn write_depth_ascii<W: Write>(out: W, raster: &MaxDepthRaster) -> io::Result<()> {
    write_esri_ascii(out, &raster.georef, &raster.depth, -9999.0)
}

pub fn encode_binary(georef: &GridGeoref, values: &[f64]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + values.len() * 8);
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    buf.extend_from_slice(&(georef.n_rows as u64).to_le_bytes());
    buf.extend_from_slice(&(georef.n_cols as u64).to_le_bytes());
    for v in [georef.origin_x, georef.origin_y, georef.cell_size] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn write_depth_binary<W: Write>(mut out: W, raster: &MaxDepthRaster) -> io::Result<()> {
    out.write_all(&encode_binary(&raster.georef, &raster.depth))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn decode_binary(bytes: &[u8]) -> io::Result<(GridGeoref, Vec<f64>)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != BINARY_MAGIC {
        return Err(invalid("not a BGDR raster"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != BINARY_VERSION {
        return Err(invalid("unsupported BGDR version"));
    }
    let georef = GridGeoref {
        n_rows: u64_at(8) as usize,
        n_cols: u64_at(16) as usize,
        origin_x: f64_at(24),
        origin_y: f64_at(32),
        cell_size: f64_at(40),
    };
    let n = georef
        .n_rows
        .checked_mul(georef.n_cols)
        .ok_or_else(|| invalid("raster dimensions overflow"))?;
    if bytes.len() != HEADER_LEN + n * 8 {
        return Err(invalid("BGDR body length does not match dimensions"));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((georef, values))
}

pub fn read_depth_binary<R: Read>(mut input: R) -> io::Result<(GridGeoref, Vec<f64>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_binary(&bytes)
}
