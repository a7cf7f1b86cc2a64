//! Field serialization: a compact little-endian binary format for
//! checkpoints and exact round-trips, plus CSV export for plotting.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic  b"HLF1"
//! u8     dimension
//! u64    points per axis
//! f64    half_width
//! u8     precision: 0 = complex128 (2×f64), 1 = complex64 (2×f32)
//! data   node values, row-major, re then im
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{build_grid, WaveField};
use crate::C64;

const MAGIC: &[u8; 4] = b"HLF1";

/// Write a field in double precision (exact round-trip).
pub fn write_field(field: &WaveField, path: &Path) -> Result<()> {
    write_field_with(field, path, false)
}

/// Write a field; `single_precision` halves the file size at the cost of
/// f32 rounding.
pub fn write_field_with(field: &WaveField, path: &Path, single_precision: bool) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[field.grid.dimension as u8])?;
    w.write_all(&(field.grid.points as u64).to_le_bytes())?;
    w.write_all(&field.grid.half_width.to_le_bytes())?;
    w.write_all(&[single_precision as u8])?;
    if single_precision {
        for v in &field.values {
            w.write_all(&(v.re as f32).to_le_bytes())?;
            w.write_all(&(v.im as f32).to_le_bytes())?;
        }
    } else {
        for v in &field.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a field written by [`write_field`]; validates the header, the
/// payload length and finiteness of all entries.
pub fn read_field(path: &Path) -> Result<WaveField> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config(format!("{}: not a field file (bad magic)", path.display())));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let dimension = b1[0] as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let points = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let half_width = f64::from_le_bytes(b8);
    r.read_exact(&mut b1)?;
    let single = match b1[0] {
        0 => false,
        1 => true,
        p => {
            return Err(Error::config(format!("{}: unknown precision tag {p}", path.display())))
        }
    };
    let grid = build_grid(dimension, half_width, points)?;
    let n = grid.node_count();
    let mut values = Vec::with_capacity(n);
    if single {
        let mut buf = vec![0u8; n * 8];
        r.read_exact(&mut buf)?;
        for c in buf.chunks_exact(8) {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64;
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64;
            values.push(C64::new(re, im));
        }
    } else {
        let mut buf = vec![0u8; n * 16];
        r.read_exact(&mut buf)?;
        for c in buf.chunks_exact(16) {
            let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
            values.push(C64::new(re, im));
        }
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(Error::config(format!("{}: trailing bytes after payload", path.display())));
    }
    let field = WaveField { grid, values };
    field.check_finite()?;
    Ok(field)
}

/// Export a field as CSV with columns `x1,…,xd,re,im`, one node per row
/// in row-major order. Values are printed with shortest round-trip
/// formatting, so runs with identical inputs produce byte-identical
/// files.
pub fn write_field_csv(field: &WaveField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let d = field.grid.dimension;
    for a in 0..d {
        write!(w, "x{}{}", a + 1, if a + 1 < d { "," } else { "" })?;
    }
    writeln!(w, ",re,im")?;
    for (m, v) in field.values.iter().enumerate() {
        let x = field.grid.point(m);
        for xa in x.iter().take(d) {
            write!(w, "{xa},")?;
        }
        writeln!(w, "{},{}", v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}
