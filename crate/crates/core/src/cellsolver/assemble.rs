use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::materials::MaterialSpec;
use crate::quadrature;
use crate::sparse::CsrMatrix;

/// Triangles per assembly task. Fixed so that the summation order, and
/// hence the result, does not depend on the thread count.
const CHUNK: usize = 2048;

type Triplet = (usize, usize, Complex64);

/// Periodic cell operator on vertex equivalence classes.
#[derive(Debug, Clone)]
pub struct CellOperator {
    /// `n_dof x n_dof`, complex symmetric.
    pub matrix: CsrMatrix,
    /// `int_Y phi_a` for each class; `None` leaves the operator singular.
    pub mean_constraint: Option<Vec<f64>>,
    pub n_dof: usize,
    pub dof_of_vertex: Vec<usize>,
    pub mesh_fingerprint: u64,
    pub eta: Complex64,
    pub omega_tilde: f64,
}

impl CellOperator {
    /// Operator bordered by the zero-mean row and column. The constraint is
    /// rescaled to unit total weight per degree of freedom so its entries
    /// are comparable to the stiffness entries.
    pub fn bordered_matrix(&self) -> CsrMatrix {
        let n = self.n_dof;
        let c = self
            .mean_constraint
            .as_ref()
            .expect("bordered matrix needs a constraint");
        let scale = n as f64;
        let mut trip: Vec<Triplet> = Vec::with_capacity(self.matrix.nnz() + 2 * n);
        for r in 0..n {
            for k in self.matrix.row_ptr[r]..self.matrix.row_ptr[r + 1] {
                trip.push((r, self.matrix.col_idx[k], self.matrix.values[k]));
            }
            trip.push((r, n, Complex64::new(c[r] * scale, 0.0)));
        }
        for (a, &w) in c.iter().enumerate() {
            trip.push((n, a, Complex64::new(w * scale, 0.0)));
        }
        CsrMatrix::from_triplets(n + 1, n + 1, &trip)
    }
}

/// Assembled cell system for one direction.
#[derive(Debug, Clone)]
pub struct CellSystem {
    pub operator: CellOperator,
    pub rhs: Vec<Complex64>,
    pub direction: usize,
}

/// Gradients of the three barycentric basis functions and the area.
pub(crate) fn p1_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let b = p[(i + 1) % 3];
        let c = p[(i + 2) % 3];
        g[i] = [(b[1] - c[1]) / area2, (c[0] - b[0]) / area2];
    }
    (g, 0.5 * area2)
}

pub(crate) fn triangle_points(mesh: &Mesh, t: usize) -> [Point; 3] {
    let [a, b, c] = mesh.triangles[t];
    [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]]
}

fn check_omega(omega_tilde: f64) -> Result<()> {
    if !(omega_tilde > 0.0 && omega_tilde.is_finite()) {
        return Err(Error::invalid(
            "omega_tilde",
            format!("must be positive, got {omega_tilde}"),
        ));
    }
    Ok(())
}

/// Assembles the operator shared by both in-plane directions.
pub fn assemble_operator(mesh: &Mesh, mat: &MaterialSpec, omega_tilde: f64) -> Result<CellOperator> {
    check_omega(omega_tilde)?;
    mat.validate()?;
    let eta = mat.eta(omega_tilde)?;
    let (class, n_dof) = mesh.periodic_classes();

    let ids: Vec<usize> = (0..mesh.triangles.len()).collect();
    let volume: Vec<Vec<Triplet>> = ids
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len() * 9);
            for &t in chunk {
                let (g, area) = p1_gradients(triangle_points(mesh, t));
                let eps = mat.eps_bulk.value(mesh.regions[t]);
                let tri = mesh.triangles[t];
                for i in 0..3 {
                    for k in 0..3 {
                        let v = eps * ((g[i][0] * g[k][0] + g[i][1] * g[k][1]) * area);
                        out.push((class[tri[i]], class[tri[k]], v));
                    }
                }
            }
            out
        })
        .collect();
    let mut trip: Vec<Triplet> = volume.into_iter().flatten().collect();
    if eta != Complex64::new(0.0, 0.0) {
        for s in 0..mesh.interface_segments.len() {
            let seg = &mesh.interface_segments[s];
            let len = mesh.segment_length(s);
            let (a, b) = (class[seg.start], class[seg.end]);
            let k = -eta / len;
            trip.push((a, a, k));
            trip.push((a, b, -k));
            trip.push((b, a, -k));
            trip.push((b, b, k));
        }
    }
    let matrix = CsrMatrix::from_triplets(n_dof, n_dof, &trip);

    let mut mean = vec![0.0; n_dof];
    for t in 0..mesh.triangles.len() {
        let third = mesh.triangle_area(t) / 3.0;
        for &v in &mesh.triangles[t] {
            mean[class[v]] += third;
        }
    }
    Ok(CellOperator {
        matrix,
        mean_constraint: Some(mean),
        n_dof,
        dof_of_vertex: class,
        mesh_fingerprint: mesh.fingerprint(),
        eta,
        omega_tilde,
    })
}

/// Right-hand side for direction `j` (1 or 2).
pub fn forcing(
    mesh: &Mesh,
    op: &CellOperator,
    mat: &MaterialSpec,
    omega_tilde: f64,
    direction: usize,
) -> Result<Vec<Complex64>> {
    if direction == 3 {
        return Err(Error::UnsupportedDirection(3));
    }
    if !(direction == 1 || direction == 2) {
        return Err(Error::invalid("direction", format!("must be 1 or 2, got {direction}")));
    }
    if op.mesh_fingerprint != mesh.fingerprint() {
        return Err(Error::Contract("operator was assembled on a different mesh".into()));
    }
    let j = direction - 1;
    let eta = mat.eta(omega_tilde)?;
    let class = &op.dof_of_vertex;
    let mut rhs = vec![Complex64::new(0.0, 0.0); op.n_dof];
    for t in 0..mesh.triangles.len() {
        let (g, area) = p1_gradients(triangle_points(mesh, t));
        let eps = mat.eps_bulk.value(mesh.regions[t]);
        for (i, &v) in mesh.triangles[t].iter().enumerate() {
            rhs[class[v]] -= eps * (g[i][j] * area);
        }
    }
    for s in 0..mesh.interface_segments.len() {
        let seg = &mesh.interface_segments[s];
        let tj = mesh.segment_tangent(s)[j];
        rhs[class[seg.start]] -= eta * tj;
        rhs[class[seg.end]] += eta * tj;
    }
    Ok(rhs)
}

/// Operator and forcing for one direction.
pub fn assemble(mesh: &Mesh, mat: &MaterialSpec, omega_tilde: f64, direction: usize) -> Result<CellSystem> {
    if direction == 3 {
        return Err(Error::UnsupportedDirection(3));
    }
    let operator = assemble_operator(mesh, mat, omega_tilde)?;
    let rhs = forcing(mesh, &operator, mat, omega_tilde, direction)?;
    Ok(CellSystem {
        operator,
        rhs,
        direction,
    })
}

/// Operator with a volume load `int_Y f psi` in place of the cell forcing.
/// The load is projected onto zero mean so the constrained problem is
/// consistent.
pub fn assemble_with_load<F>(mesh: &Mesh, mat: &MaterialSpec, omega_tilde: f64, f: F) -> Result<CellSystem>
where
    F: Fn(Point) -> Complex64,
{
    let operator = assemble_operator(mesh, mat, omega_tilde)?;
    let class = &operator.dof_of_vertex;
    let mut rhs = vec![Complex64::new(0.0, 0.0); operator.n_dof];
    for t in 0..mesh.triangles.len() {
        let p = triangle_points(mesh, t);
        let area = mesh.triangle_area(t);
        for (w, bc) in quadrature::DEGREE5 {
            let fx = f(quadrature::map(*bc, p)) * (w * area);
            for (i, &v) in mesh.triangles[t].iter().enumerate() {
                rhs[class[v]] += fx * bc[i];
            }
        }
    }
    Ok(CellSystem {
        operator,
        rhs,
        direction: 0,
    })
}
