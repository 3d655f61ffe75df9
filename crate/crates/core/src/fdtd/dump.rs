//! Binary snapshot of a [`PhasorField`].
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                                   |
//! |-------:|-----:|-----------------------------------------|
//! | 0      | 8    | magic `b"LNSFIELD"`                      |
//! | 8      | 4    | format version (`u32`, currently 1)     |
//! | 12     | 4    | absorber thickness in cells (`u32`)     |
//! | 16     | 8    | `nx` (`u64`)                             |
//! | 24     | 8    | `ny` (`u64`)                             |
//! | 32     | 8    | grid spacing Δ in meters (`f64`)        |
//! | 40     | 8    | frequency f0 in hertz (`f64`)           |
//! | 48     | 8    | x of node (0, 0) relative to lens center (`f64`) |
//! | 56     | 8    | y of node (0, 0) relative to lens center (`f64`) |
//!
//! followed by `nx * ny` pairs of `f64` (real, imaginary), `j` fastest.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{GridBox, PhasorField};
use crate::error::{Error, Result};
use crate::scene::Point2;

pub const MAGIC: &[u8; 8] = b"LNSFIELD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

pub fn write_field<W: Write>(field: &PhasorField, mut w: W) -> Result<()> {
    let pml = field.interior.i0 as u32;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&pml.to_le_bytes());
    header.extend_from_slice(&(field.nx as u64).to_le_bytes());
    header.extend_from_slice(&(field.ny as u64).to_le_bytes());
    header.extend_from_slice(&field.dx.to_le_bytes());
    header.extend_from_slice(&field.f0.to_le_bytes());
    header.extend_from_slice(&(field.origin.x - field.center.x).to_le_bytes());
    header.extend_from_slice(&(field.origin.y - field.center.y).to_le_bytes());
    debug_assert_eq!(header.len(), HEADER_LEN);
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(field.values.len() * 16);
    for v in &field.values {
        body.extend_from_slice(&v.re.to_le_bytes());
        body.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

fn u32_at(b: &[u8], o: usize) -> u32 {
    u32::from_le_bytes(b[o..o + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], o: usize) -> u64 {
    u64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}

fn f64_at(b: &[u8], o: usize) -> f64 {
    f64::from_le_bytes(b[o..o + 8].try_into().unwrap())
}

/// Reads a snapshot. Only the grid is stored, so the enclosed radius is
/// supplied by the caller (geometry is not part of the format).
pub fn read_field<R: Read>(mut r: R, enclosed_radius: f64) -> Result<PhasorField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(Error::Input("not a field dump (bad magic)".into()));
    }
    let version = u32_at(&header, 8);
    if version != VERSION {
        return Err(Error::Input(format!("unsupported field dump version {version}")));
    }
    let pml = u32_at(&header, 12) as usize;
    let nx = u64_at(&header, 16) as usize;
    let ny = u64_at(&header, 24) as usize;
    let dx = f64_at(&header, 32);
    let f0 = f64_at(&header, 40);
    let origin = Point2::new(f64_at(&header, 48), f64_at(&header, 56));
    if nx <= 2 * pml || ny <= 2 * pml || !(dx > 0.0) || !(f0 > 0.0) {
        return Err(Error::Input("corrupt field dump header".into()));
    }
    let mut body = vec![0u8; nx * ny * 16];
    r.read_exact(&mut body)?;
    let values = body
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    Ok(PhasorField {
        values,
        nx,
        ny,
        dx,
        origin,
        center: Point2::ORIGIN,
        f0,
        background_eps: 1.0,
        interior: GridBox {
            i0: pml,
            i1: nx - pml,
            j0: pml,
            j1: ny - pml,
        },
        enclosed_radius,
        periods: 0,
        convergence: 0.0,
        converged: true,
    })
}
