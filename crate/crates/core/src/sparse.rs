//! Compressed sparse row storage for complex matrices and the linear solvers
//! used by the cell and macroscale problems.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparse complex matrix in CSR form. Rows are sorted by column and
/// duplicates were summed in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds the matrix from `(row, col, value)` triplets. Entries for the
    /// same position are summed in the order they appear.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![Complex64::new(0.0, 0.0); triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            order.clear();
            order.extend(lo..hi);
            // stable: equal columns keep insertion order
            order.sort_by_key(|&k| cols[k]);
            let mut last_col = usize::MAX;
            for &k in &order {
                if cols[k] == last_col {
                    *values.last_mut().unwrap() += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                    last_col = cols[k];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let (lo, hi) = (self.row_ptr[row], self.row_ptr[row + 1]);
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                self.values[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Entrywise (non-conjugate) symmetry, compared bit for bit.
    pub fn is_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if self.get(c, r) != self.values[k] {
                    return false;
                }
            }
        }
        true
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, Complex64>> {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                trip.push(Triplet::new(r, self.col_idx[k], self.values[k]));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::AssemblyContract(format!("sparse matrix creation failed: {e:?}")))
    }
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `||A x - b|| / ||b||` (absolute residual when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<Complex64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Which backend solved a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    DirectLu,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveStats {
    pub kind: SolverKind,
    pub iterations: usize,
    pub residual: f64,
}

/// Sparse LU factorisation with partial pivoting.
pub struct DirectSolver {
    matrix: CsrMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
}

impl DirectSolver {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        sequential_kernels();
        let a = matrix.to_faer()?;
        let lu = a.sp_lu().map_err(|e| Error::Solver {
            reason: format!("sparse LU failed: {e:?}"),
            iterations: 0,
            residual: f64::NAN,
        })?;
        Ok(Self {
            matrix: matrix.clone(),
            lu,
        })
    }

    fn apply(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let mut b = Mat::<Complex64>::zeros(n, 1);
        for (i, v) in rhs.iter().enumerate() {
            b[(i, 0)] = *v;
        }
        self.lu.solve_in_place(b.as_mut());
        (0..n).map(|i| b[(i, 0)]).collect()
    }

    /// Solves with up to three steps of iterative refinement until the
    /// relative residual drops below `tol`.
    pub fn solve(&self, rhs: &[Complex64], tol: f64) -> Result<(Vec<Complex64>, SolveStats)> {
        let nb = norm2(rhs);
        if nb == 0.0 {
            return Ok((
                vec![Complex64::new(0.0, 0.0); rhs.len()],
                SolveStats {
                    kind: SolverKind::DirectLu,
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        let mut x = self.apply(rhs);
        let mut residual = relative_residual(&self.matrix, &x, rhs);
        let mut steps = 0;
        while residual > tol && steps < 3 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.apply(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            residual = relative_residual(&self.matrix, &x, rhs);
            steps += 1;
        }
        if !residual.is_finite() || residual > tol {
            return Err(Error::Solver {
                reason: "direct solve did not reach the requested residual".into(),
                iterations: steps,
                residual,
            });
        }
        Ok((
            x,
            SolveStats {
                kind: SolverKind::DirectLu,
                iterations: steps,
                residual,
            },
        ))
    }
}

fn sequential_kernels() {
    // Parallelism lives one level up (independent solves); keep each
    // factorisation single-threaded so results do not depend on scheduling.
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Linear operator for the iterative solver.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matvec(x)
    }
}

/// Restarted GMRES with a diagonal (Jacobi) right preconditioner.
pub fn gmres<A: LinearOperator + ?Sized>(
    a: &A,
    rhs: &[Complex64],
    diag: &[Complex64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<Complex64>, SolveStats)> {
    let n = a.dim();
    let zero = Complex64::new(0.0, 0.0);
    let nb = norm2(rhs);
    if nb == 0.0 {
        return Ok((
            vec![zero; n],
            SolveStats {
                kind: SolverKind::Gmres,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<Complex64> = diag
        .iter()
        .map(|d| {
            if d.norm() > 0.0 {
                1.0 / d
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    let precond = |v: &[Complex64]| -> Vec<Complex64> { v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect() };
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };

    let mut x = vec![zero; n];
    let mut iterations = 0;
    let mut residual = 1.0;
    while iterations < max_iter {
        let ax = a.apply(&x);
        let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let beta = norm2(&r);
        residual = beta / nb;
        if residual <= tol {
            break;
        }
        let m = restart.min(max_iter - iterations).max(1);
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = a.apply(&precond(&basis[k]));
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(v, &w);
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * vj;
                }
            }
            let hnorm = norm2(&w);
            hess[k + 1][k] = Complex64::new(hnorm, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * hess[i][k] + sn[i].conj() * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a0, b0) = (hess[k][k], hess[k + 1][k]);
            let denom = (a0.norm_sqr() + b0.norm_sqr()).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a0 / denom;
            sn[k] = b0 / denom;
            hess[k][k] = Complex64::new(denom, 0.0);
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            iterations += 1;
            k_used = k + 1;
            if g[k + 1].norm() / nb <= tol || hnorm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnorm).collect());
        }
        // back substitution
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut z = vec![zero; n];
        for (j, yj) in y.iter().enumerate() {
            for (zi, vi) in z.iter_mut().zip(&basis[j]) {
                *zi += yj * vi;
            }
        }
        for (xi, zi) in x.iter_mut().zip(precond(&z)) {
            *xi += zi;
        }
        if k_used == 0 {
            break;
        }
    }
    let ax = a.apply(&x);
    let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let final_res = norm2(&r) / nb;
    if !(final_res <= tol) {
        return Err(Error::Solver {
            reason: "GMRES did not converge".into(),
            iterations,
            residual: final_res.max(residual),
        });
    }
    Ok((
        x,
        SolveStats {
            kind: SolverKind::Gmres,
            iterations,
            residual: final_res,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(4.0, 0.5)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0, 0.1)));
                t.push((i + 1, i, c(-1.0, 0.1)));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, c(1.0, 0.0)), (0, 0, c(2.0, 1.0)), (1, 0, c(3.0, 0.0))]);
        assert_eq!(m.get(0, 0), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), c(3.0, 0.0));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
        assert_eq!(m.nnz(), 2);
        assert!(!m.is_symmetric());
    }

    #[test]
    fn direct_and_gmres_agree() {
        let a = tridiag(50);
        assert!(a.is_symmetric());
        let b: Vec<Complex64> = (0..50).map(|i| c((i as f64).sin(), 1.0)).collect();
        let (x1, s1) = DirectSolver::factor(&a).unwrap().solve(&b, 1e-12).unwrap();
        let (x2, s2) = gmres(&a, &b, &a.diagonal(), 1e-12, 30, 500).unwrap();
        assert!(s1.residual <= 1e-12 && s2.residual <= 1e-12);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = tridiag(5);
        let (x, _) = DirectSolver::factor(&a)
            .unwrap()
            .solve(&[c(0.0, 0.0); 5], 1e-12)
            .unwrap();
        assert!(x.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn gmres_reports_non_convergence() {
        let a = tridiag(200);
        let b = vec![c(1.0, 0.0); 200];
        match gmres(&a, &b, &a.diagonal(), 1e-14, 2, 3) {
            Err(Error::Solver { iterations, .. }) => assert!(iterations <= 3),
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
