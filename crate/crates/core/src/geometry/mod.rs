//! Unit-cell geometries of the prototypical sheet configurations and an
//! interface-conforming periodic triangulation of their cross-section.

mod io;
mod mesh;
mod shapes;

pub use io::{read_mesh, write_mesh, MESH_FORMAT_HEADER};
pub use mesh::{generate_mesh, InterfaceSegment, Mesh, PeriodicPair, PERIODIC_TOL};
pub use shapes::{
    build_geometry, surface_projection, CurveShape, EdgePoint, GeometryKind, InterfaceCurve, Point, UnitCellGeometry,
    ON_INTERFACE_TOL,
};
