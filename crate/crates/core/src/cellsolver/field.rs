use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assemble::{p1_gradients, triangle_points};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::plot;
use crate::quadrature;
use crate::sparse::SolveStats;

/// Nodal values of a corrector on the mesh it was solved on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorField {
    pub direction: usize,
    /// One value per mesh vertex; periodic partners share a value.
    pub values: Vec<Complex64>,
    pub mesh_fingerprint: u64,
    pub stats: SolveStats,
}

impl CorrectorField {
    fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.values.len() != mesh.vertices.len() || self.mesh_fingerprint != mesh.fingerprint() {
            return Err(Error::Contract("corrector field belongs to a different mesh".into()));
        }
        Ok(())
    }

    /// Piecewise-linear interpolant evaluated on triangle `t`.
    pub fn eval_on(&self, mesh: &Mesh, t: usize, bary: [f64; 3]) -> Complex64 {
        let tri = mesh.triangles[t];
        (0..3).map(|i| self.values[tri[i]] * bary[i]).sum()
    }

    /// `int_Y chi`.
    pub fn mean(&self, mesh: &Mesh) -> Complex64 {
        (0..mesh.triangles.len())
            .map(|t| {
                let tri = mesh.triangles[t];
                (self.values[tri[0]] + self.values[tri[1]] + self.values[tri[2]]) * (mesh.triangle_area(t) / 3.0)
            })
            .sum()
    }

    /// `|| chi - u ||_{L2(Y)}` against a reference function.
    pub fn l2_error<F: Fn(Point) -> Complex64>(&self, mesh: &Mesh, u: F) -> Result<f64> {
        self.check_mesh(mesh)?;
        let mut acc = 0.0;
        for t in 0..mesh.triangles.len() {
            let p = triangle_points(mesh, t);
            let area = mesh.triangle_area(t);
            for (w, bc) in quadrature::DEGREE5 {
                let d = self.eval_on(mesh, t, *bc) - u(quadrature::map(*bc, p));
                acc += w * area * d.norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    /// Tangential derivative of the trace on each interface segment.
    pub fn tangential_derivative(&self, mesh: &Mesh) -> Result<Vec<Complex64>> {
        self.check_mesh(mesh)?;
        Ok((0..mesh.interface_segments.len())
            .map(|s| {
                let seg = &mesh.interface_segments[s];
                (self.values[seg.end] - self.values[seg.start]) / mesh.segment_length(s)
            })
            .collect())
    }

    /// Heat map of the real and imaginary parts.
    pub fn to_svg(&self, mesh: &Mesh) -> Result<String> {
        self.check_mesh(mesh)?;
        let re: Vec<f64> = self.values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = self.values.iter().map(|v| v.im).collect();
        let title = format!("chi_{}", self.direction);
        Ok(plot::mesh_heatmaps(
            mesh,
            &[(format!("Re {title}"), re), (format!("Im {title}"), im)],
        ))
    }
}

/// Constant gradient of the corrector on every triangle.
pub fn corrector_gradient(field: &CorrectorField, mesh: &Mesh) -> Result<Vec<[Complex64; 2]>> {
    field.check_mesh(mesh)?;
    Ok((0..mesh.triangles.len())
        .map(|t| {
            let (g, _) = p1_gradients(triangle_points(mesh, t));
            let tri = mesh.triangles[t];
            let mut out = [Complex64::new(0.0, 0.0); 2];
            for i in 0..3 {
                out[0] += field.values[tri[i]] * g[i][0];
                out[1] += field.values[tri[i]] * g[i][1];
            }
            out
        })
        .collect())
}

/// `vertex,y1,y2,re_chi,im_chi` rows.
pub fn write_corrector_csv<W: Write>(mut w: W, field: &CorrectorField, mesh: &Mesh) -> Result<()> {
    field.check_mesh(mesh)?;
    writeln!(w, "vertex,y1,y2,re_chi,im_chi")?;
    for (i, (p, v)) in mesh.vertices.iter().zip(&field.values).enumerate() {
        writeln!(w, "{i},{:.12e},{:.12e},{:.12e},{:.12e}", p[0], p[1], v.re, v.im)?;
    }
    Ok(())
}
