//! Binary field dump, all little-endian:
//!
//! ```text
//! magic      4 bytes  "PHMF"
//! version    u32      1
//! nx, ny     u32, u32
//! spacing    f64
//! origin     f64, f64
//! omega      f64
//! components u32      3
//! per component: name (4 ASCII bytes, space padded), cols u32, rows u32
//! per component, in the same order: cols * rows pairs of f64 (re, im),
//!            row-major with the second coordinate slow
//! ```
//! Components are `H   ` (`nx x ny`), `E1  ` (`nx x (ny + 1)`) and
//! `E2  ` (`(nx + 1) x ny`).
//!
//! An optional trailer may follow the data: `"TAG "`, a u32 byte count and
//! that many bytes of UTF-8 text. Readers that do not need it stop before it.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Grid, MacroField};
use crate::error::{Error, Result};
use crate::plot::{grid_heatmaps, Scale};
use crate::sparse::{SolveStats, SolverKind};

pub const FIELD_MAGIC: &[u8; 4] = b"PHMF";
pub const FIELD_VERSION: u32 = 1;

pub fn write_field<W: Write>(mut w: W, f: &MacroField) -> Result<()> {
    let g = f.grid;
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    w.write_all(&(g.nx as u32).to_le_bytes())?;
    w.write_all(&(g.ny as u32).to_le_bytes())?;
    for v in [g.spacing, g.origin[0], g.origin[1], f.omega] {
        w.write_all(&v.to_le_bytes())?;
    }
    let comps: [(&[u8; 4], usize, usize, &[Complex64]); 3] = [
        (b"H   ", g.nx, g.ny, &f.h),
        (b"E1  ", g.nx, g.ny + 1, &f.e1),
        (b"E2  ", g.nx + 1, g.ny, &f.e2),
    ];
    w.write_all(&3u32.to_le_bytes())?;
    for (name, cols, rows, _) in &comps {
        w.write_all(*name)?;
        w.write_all(&(*cols as u32).to_le_bytes())?;
        w.write_all(&(*rows as u32).to_le_bytes())?;
    }
    for (_, _, _, data) in &comps {
        for v in *data {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Writes the field followed by a text trailer.
pub fn write_field_tagged<W: Write>(mut w: W, f: &MacroField, tag: &str) -> Result<()> {
    write_field(&mut w, f)?;
    w.write_all(b"TAG ")?;
    w.write_all(&(tag.len() as u32).to_le_bytes())?;
    w.write_all(tag.as_bytes())?;
    Ok(())
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Parse {
        line: 0,
        reason: reason.into(),
    }
}

fn u32_le<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn f64_le<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a dump back. Solver statistics are not stored and come back as
/// zero.
pub fn read_field<R: Read>(r: R) -> Result<MacroField> {
    read_field_tagged(r).map(|(f, _)| f)
}

/// Field and trailer text, if any.
pub fn read_field_tagged<R: Read>(mut r: R) -> Result<(MacroField, Option<String>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(bad("not a field dump"));
    }
    let version = u32_le(&mut r)?;
    if version != FIELD_VERSION {
        return Err(bad(format!("unsupported field dump version {version}")));
    }
    let nx = u32_le(&mut r)? as usize;
    let ny = u32_le(&mut r)? as usize;
    let spacing = f64_le(&mut r)?;
    let origin = [f64_le(&mut r)?, f64_le(&mut r)?];
    let omega = f64_le(&mut r)?;
    let n = u32_le(&mut r)?;
    let expect: [(&[u8; 4], usize, usize); 3] = [(b"H   ", nx, ny), (b"E1  ", nx, ny + 1), (b"E2  ", nx + 1, ny)];
    if n != 3 {
        return Err(bad(format!("expected 3 components, found {n}")));
    }
    for (name, cols, rows) in expect {
        let mut got = [0u8; 4];
        r.read_exact(&mut got)?;
        let (c, rr) = (u32_le(&mut r)? as usize, u32_le(&mut r)? as usize);
        if &got != name || c != cols || rr != rows {
            return Err(bad(format!(
                "unexpected component header {:?} {c}x{rr}",
                String::from_utf8_lossy(&got)
            )));
        }
    }
    let mut read = |len: usize| -> Result<Vec<Complex64>> {
        (0..len)
            .map(|_| Ok(Complex64::new(f64_le(&mut r)?, f64_le(&mut r)?)))
            .collect()
    };
    let h = read(nx * ny)?;
    let e1 = read(nx * (ny + 1))?;
    let e2 = read((nx + 1) * ny)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    let tag = match rest.as_slice() {
        [] => None,
        [b'T', b'A', b'G', b' ', n0, n1, n2, n3, text @ ..] => {
            if text.len() != u32::from_le_bytes([*n0, *n1, *n2, *n3]) as usize {
                return Err(bad("trailer length does not match"));
            }
            Some(String::from_utf8(text.to_vec()).map_err(|_| bad("trailer is not UTF-8"))?)
        }
        _ => return Err(bad("unexpected bytes after the field data")),
    };
    let field = MacroField {
        grid: Grid {
            nx,
            ny,
            spacing,
            origin,
        },
        omega,
        h,
        e1,
        e2,
        stats: SolveStats {
            kind: SolverKind::DirectLu,
            iterations: 0,
            residual: 0.0,
        },
    };
    Ok((field, tag))
}

/// Magnitude and phase maps of `H` side by side.
pub fn field_svg(f: &MacroField) -> String {
    let g = f.grid;
    grid_heatmaps(
        g.nx,
        g.ny,
        &[
            (
                "|H|".to_string(),
                f.h.iter().map(|v| v.norm()).collect(),
                Scale::Magnitude,
            ),
            ("arg H".to_string(), f.h.iter().map(|v| v.arg()).collect(), Scale::Phase),
        ],
    )
}
