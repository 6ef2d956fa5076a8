//! Plain-text mesh exchange format.
//!
//! ```text
//! plasmahom-mesh 1
//! h <h>
//! vertices <n>
//! <x> <y>                      (n lines, vertex ids are line order)
//! triangles <m>
//! <a> <b> <c> <region>         (region: outer | inner)
//! interface_segments <k>
//! <start> <end> <curve>
//! edge_vertices <e>
//! <vertex>
//! periodic_pairs <p>
//! <axis> <low> <high>          (axis 0: y1 faces, 1: y2 faces)
//! end
//! ```
//! Lines starting with `#` are comments and may appear anywhere.
//! Floating-point values are written with 17 significant digits so a
//! written mesh reads back bit-identically.

use std::io::{BufRead, Write};

use super::mesh::{InterfaceSegment, Mesh, PeriodicPair};
use crate::error::{Error, Result};
use crate::materials::Region;

pub const MESH_FORMAT_HEADER: &str = "plasmahom-mesh 1";

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "{MESH_FORMAT_HEADER}")?;
    writeln!(out, "h {:.17e}", mesh.h)?;
    writeln!(out, "vertices {}", mesh.vertices.len())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
    }
    writeln!(out, "triangles {}", mesh.triangles.len())?;
    for (t, r) in mesh.triangles.iter().zip(&mesh.regions) {
        let region = match r {
            Region::Outer => "outer",
            Region::Inner => "inner",
        };
        writeln!(out, "{} {} {} {region}", t[0], t[1], t[2])?;
    }
    writeln!(out, "interface_segments {}", mesh.interface_segments.len())?;
    for s in &mesh.interface_segments {
        writeln!(out, "{} {} {}", s.start, s.end, s.curve)?;
    }
    writeln!(out, "edge_vertices {}", mesh.edge_vertices.len())?;
    for v in &mesh.edge_vertices {
        writeln!(out, "{v}")?;
    }
    writeln!(out, "periodic_pairs {}", mesh.periodic_pairs.len())?;
    for p in &mesh.periodic_pairs {
        writeln!(out, "{} {} {}", p.axis, p.low, p.high)?;
    }
    writeln!(out, "end")?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.starts_with('#') {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let l = self.next_line()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(self.err(format!("expected section `{name}`")));
        }
        it.next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.err(format!("missing count for `{name}`")))
    }

    fn fields<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>> {
        let l = self.next_line()?;
        let parsed: std::result::Result<Vec<T>, _> = l.split_whitespace().take(count).map(str::parse).collect();
        match parsed {
            Ok(v) if v.len() == count => Ok(v),
            _ => Err(self.err(format!("expected {count} fields"))),
        }
    }
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.next_line()?.trim() != MESH_FORMAT_HEADER {
        return Err(lines.err("not a plasmahom mesh (version 1)"));
    }
    let h_line = lines.next_line()?;
    let h = h_line
        .strip_prefix("h ")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| lines.err("expected `h <value>`"))?;

    let n = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(n);
    for _ in 0..n {
        let v: Vec<f64> = lines.fields(2)?;
        vertices.push([v[0], v[1]]);
    }
    let m = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(m);
    let mut regions = Vec::with_capacity(m);
    for _ in 0..m {
        let l = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(lines.err("expected `a b c region`"));
        }
        let idx: std::result::Result<Vec<usize>, _> = f[..3].iter().map(|s| s.parse()).collect();
        let idx = idx.map_err(|_| lines.err("bad vertex index"))?;
        triangles.push([idx[0], idx[1], idx[2]]);
        regions.push(match f[3] {
            "outer" => Region::Outer,
            "inner" => Region::Inner,
            other => return Err(lines.err(format!("unknown region `{other}`"))),
        });
    }
    let k = lines.section("interface_segments")?;
    let mut interface_segments = Vec::with_capacity(k);
    for _ in 0..k {
        let f: Vec<usize> = lines.fields(3)?;
        interface_segments.push(InterfaceSegment {
            start: f[0],
            end: f[1],
            curve: f[2],
        });
    }
    let e = lines.section("edge_vertices")?;
    let mut edge_vertices = Vec::with_capacity(e);
    for _ in 0..e {
        edge_vertices.push(lines.fields::<usize>(1)?[0]);
    }
    let p = lines.section("periodic_pairs")?;
    let mut periodic_pairs = Vec::with_capacity(p);
    for _ in 0..p {
        let f: Vec<usize> = lines.fields(3)?;
        if f[0] > 1 {
            return Err(lines.err("periodic axis must be 0 or 1"));
        }
        periodic_pairs.push(PeriodicPair {
            axis: f[0] as u8,
            low: f[1],
            high: f[2],
        });
    }
    if lines.next_line()?.trim() != "end" {
        return Err(lines.err("expected `end`"));
    }
    let mesh = Mesh {
        vertices,
        triangles,
        regions,
        interface_segments,
        edge_vertices,
        periodic_pairs,
        h,
    };
    mesh.check()?;
    Ok(mesh)
}
