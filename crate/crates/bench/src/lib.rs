//! Benchmark fixtures shared by the criterion targets.

use plasmahom::analysis::drude_sheets;
use plasmahom::geometry::{build_geometry, generate_mesh, GeometryKind, Mesh, UnitCellGeometry};
use plasmahom::materials::{BulkPermittivity, MaterialSpec};
use plasmahom::Complex64;

/// Ribbon width whose coarse-mesh resonance sits at the published value.
pub const RIBBON_WIDTH: f64 = 0.6938;

pub fn ribbon(h: f64) -> (UnitCellGeometry, Mesh) {
    let geom = build_geometry(GeometryKind::Ribbon { width: RIBBON_WIDTH }).expect("valid ribbon");
    let mesh = generate_mesh(&geom, h).expect("mesh");
    (geom, mesh)
}

pub fn drude() -> impl Fn(f64) -> plasmahom::Result<MaterialSpec> + Sync {
    drude_sheets(
        BulkPermittivity::uniform(Complex64::new(1.0, 0.0)),
        1.0,
        20.72,
        Complex64::new(0.0, 0.0),
    )
}
