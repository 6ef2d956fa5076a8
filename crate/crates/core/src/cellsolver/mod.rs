//! Finite element solution of the periodic cell problem.
//!
//! For a direction `j` the corrector `chi_j` is the zero-mean periodic
//! function with
//!
//! ```text
//! int_Y eps grad(chi) . grad(psi) - eta int_Sigma d_t(chi) d_t(psi)
//!     = -int_Y eps e_j . grad(psi) + eta int_Sigma (t . e_j) d_t(psi)
//! ```
//!
//! for all periodic `psi`, where `eta = sigma / (i omega)` and `d_t` is the
//! derivative along the interface. Continuous piecewise-linear elements are
//! used; the tangential derivatives come from the same basis restricted to
//! the interface segments. Only `j = 1, 2` are assembled: with nothing
//! varying along `y3` the third corrector vanishes identically.

mod assemble;
mod field;

pub use assemble::{assemble, assemble_operator, assemble_with_load, forcing, CellOperator, CellSystem};
pub use field::{corrector_gradient, write_corrector_csv, CorrectorField};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::materials::MaterialSpec;
use crate::sparse::{gmres, norm2, CsrMatrix, DirectSolver, LinearOperator, SolveStats};

/// Linear-algebra backend for cell solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Direct factorisation up to [`DIRECT_LIMIT`] unknowns, GMRES above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

pub const DIRECT_LIMIT: usize = 400_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub backend: Backend,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            backend: Backend::Auto,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::invalid("tol", format!("must lie in (0, 1e-6], got {tol}")));
    }
    Ok(())
}

/// Solves one assembled system.
pub fn solve(system: &CellSystem, tol: f64) -> Result<CorrectorField> {
    solve_with(
        system,
        SolveOptions {
            tol,
            backend: Backend::Auto,
        },
    )
}

pub fn solve_with(system: &CellSystem, opts: SolveOptions) -> Result<CorrectorField> {
    let solver = CellSolver::new(&system.operator, opts)?;
    solver.solve(&system.rhs, system.direction)
}

/// Factorised (or preconditioned) cell operator, reusable across right-hand
/// sides.
pub struct CellSolver<'a> {
    op: &'a CellOperator,
    opts: SolveOptions,
    direct: Option<DirectSolver>,
}

impl<'a> CellSolver<'a> {
    pub fn new(op: &'a CellOperator, opts: SolveOptions) -> Result<Self> {
        check_tol(opts.tol)?;
        if op.mean_constraint.is_none() {
            return Err(Error::AssemblyContract(
                "periodic cell operator is singular without the zero-mean constraint".into(),
            ));
        }
        let use_direct = match opts.backend {
            Backend::Direct => true,
            Backend::Iterative => false,
            Backend::Auto => op.n_dof <= DIRECT_LIMIT,
        };
        let direct = if use_direct {
            Some(DirectSolver::factor(&pinned(&op.matrix))?)
        } else {
            None
        };
        Ok(Self { op, opts, direct })
    }

    /// Solves for the class-level right-hand side `rhs` (length `n_dof`).
    pub fn solve(&self, rhs: &[Complex64], direction: usize) -> Result<CorrectorField> {
        let n = self.op.n_dof;
        if rhs.len() != n {
            return Err(Error::Contract(format!("rhs has length {}, expected {n}", rhs.len())));
        }
        let (dofs, stats) = match &self.direct {
            Some(lu) => self.solve_direct(lu, rhs)?,
            None => self.solve_iterative(rhs)?,
        };
        let values = self.op.dof_of_vertex.iter().map(|&d| dofs[d]).collect();
        Ok(CorrectorField {
            direction,
            values,
            mesh_fingerprint: self.op.mesh_fingerprint,
            stats,
        })
    }

    /// The constant vector spans the kernel of the periodic operator from
    /// both sides, so the multiplier of the bordered system is
    /// `sum(b) / sum(c)`. The remaining compatible singular system is solved
    /// with the last unknown pinned, then shifted to zero mean. This avoids
    /// factorising the dense border.
    fn solve_direct(&self, lu: &DirectSolver, rhs: &[Complex64]) -> Result<(Vec<Complex64>, SolveStats)> {
        let n = self.op.n_dof;
        let c = self.op.mean_constraint.as_ref().expect("checked in new");
        let total: f64 = c.iter().sum();
        let mu: Complex64 = rhs.iter().sum::<Complex64>() / total;
        let reduced: Vec<Complex64> = rhs.iter().zip(c).take(n - 1).map(|(b, w)| b - mu * w).collect();
        let (mut x, mut stats) = lu.solve(&reduced, self.opts.tol)?;
        x.push(Complex64::new(0.0, 0.0));
        let mean: Complex64 = x.iter().zip(c).map(|(v, w)| v * w).sum::<Complex64>() / total;
        for v in &mut x {
            *v -= mean;
        }
        let mut ax = self.op.matrix.matvec(&x);
        for (a, w) in ax.iter_mut().zip(c) {
            *a += mu * w;
        }
        let nb = norm2(rhs);
        let r: Vec<Complex64> = ax.iter().zip(rhs).map(|(a, b)| a - b).collect();
        stats.residual = if nb == 0.0 { 0.0 } else { norm2(&r) / nb };
        if !(stats.residual <= self.opts.tol) {
            return Err(Error::Solver {
                reason: "constrained direct solve did not reach the requested residual".into(),
                iterations: stats.iterations,
                residual: stats.residual,
            });
        }
        Ok((x, stats))
    }

    fn solve_iterative(&self, rhs: &[Complex64]) -> Result<(Vec<Complex64>, SolveStats)> {
        let c = self.op.mean_constraint.as_ref().expect("checked in new");
        // A + alpha c c^T has the same solution as the constrained system when
        // the rhs is compatible; alpha matches the operator's diagonal scale.
        let diag = self.op.matrix.diagonal();
        let scale = diag.iter().map(|d| d.norm()).sum::<f64>() / diag.len() as f64;
        let c2: f64 = c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64;
        let alpha = scale / c2.max(f64::MIN_POSITIVE) / c.len() as f64;
        let op = RankOneShifted {
            a: &self.op.matrix,
            c,
            alpha,
        };
        let precond: Vec<Complex64> = diag.iter().zip(c).map(|(d, ci)| d + alpha * ci * ci).collect();
        let (mut x, stats) = gmres(&op, rhs, &precond, self.opts.tol, 200, 20_000)?;
        // remove any drift along the kernel
        let total: f64 = c.iter().sum();
        let mean: Complex64 = x.iter().zip(c).map(|(v, w)| v * w).sum::<Complex64>() / total;
        for v in &mut x {
            *v -= mean;
        }
        Ok((x, stats))
    }
}

struct RankOneShifted<'a> {
    a: &'a CsrMatrix,
    c: &'a [f64],
    alpha: f64,
}

impl LinearOperator for RankOneShifted<'_> {
    fn dim(&self) -> usize {
        self.a.nrows
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.a.matvec(x);
        let ctx: Complex64 = self.c.iter().zip(x).map(|(c, v)| c * v).sum();
        for (yi, ci) in y.iter_mut().zip(self.c) {
            *yi += self.alpha * ci * ctx;
        }
        y
    }
}

/// `a` without its last row and column.
fn pinned(a: &CsrMatrix) -> CsrMatrix {
    let m = a.nrows - 1;
    let mut trip = Vec::with_capacity(a.nnz());
    for r in 0..m {
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            if a.col_idx[k] < m {
                trip.push((r, a.col_idx[k], a.values[k]));
            }
        }
    }
    CsrMatrix::from_triplets(m, m, &trip)
}

/// Correctors for `j = 1` and `j = 2` with one factorisation.
pub fn solve_correctors(
    mesh: &Mesh,
    mat: &MaterialSpec,
    omega_tilde: f64,
    opts: SolveOptions,
) -> Result<[CorrectorField; 2]> {
    let op = assemble_operator(mesh, mat, omega_tilde)?;
    let solver = CellSolver::new(&op, opts)?;
    let b1 = forcing(mesh, &op, mat, omega_tilde, 1)?;
    let b2 = forcing(mesh, &op, mat, omega_tilde, 2)?;
    Ok([solver.solve(&b1, 1)?, solver.solve(&b2, 2)?])
}

#[cfg(test)]
mod tests;
