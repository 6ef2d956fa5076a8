//! Frequency-domain solver for the homogenized Maxwell system in two
//! dimensions, TM polarization: in-plane electric field `(E1, E2)` and
//! out-of-plane magnetic field `H`, `mu0 = c = 1`.
//!
//! `H` lives at cell centres of a square staggered grid, `E1` on the
//! horizontal faces and `E2` on the vertical faces. Eliminating `E` gives
//!
//! ```text
//! d1(s2 / (s1 eps22) d1 H) + d2(s1 / (s2 eps11) d2 H) + omega^2 s1 s2 H
//!     = -d1(J2 / eps22) + d2(J1 / eps11)
//! ```
//!
//! with PML stretching `s = 1 + i sigma / omega`. The matrix is complex
//! symmetric. Outside the PML the field is zero (or periodic in `y1`).

mod dump;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{relative_residual, CsrMatrix, DirectSolver, SolveStats};

pub use dump::{field_svg, read_field, read_field_tagged, write_field, write_field_tagged, FIELD_MAGIC, FIELD_VERSION};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gaussian patches are cut off at this many radii.
pub const SOURCE_CUTOFF: f64 = 4.0;
pub const DEFAULT_SOURCE_CELLS: f64 = 2.0;

/// Cell-centred grid of `nx * ny` square cells of side `spacing` whose
/// lower-left corner is `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing,
            self.origin[1] + (j as f64 + 0.5) * self.spacing,
        ]
    }

    fn x(&self, i: f64) -> f64 {
        self.origin[0] + i * self.spacing
    }

    fn y(&self, j: f64) -> f64 {
        self.origin[1] + j * self.spacing
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralBoundary {
    Pml,
    Periodic,
}

/// Polynomial grading `sigma(d) = sigma_max (d / L)^order` chosen so that a
/// normally incident wave returns with amplitude `reflection`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pml {
    pub cells: usize,
    pub order: f64,
    pub reflection: f64,
}

impl Default for Pml {
    fn default() -> Self {
        Self {
            cells: 10,
            order: 3.0,
            reflection: 1e-8,
        }
    }
}

/// Axis-aligned rectangle of constant diagonal permittivity. Infinite
/// bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub eps: [Complex64; 3],
}

impl Block {
    fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x[0] && p[0] < self.x[1] && p[1] >= self.y[0] && p[1] < self.y[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    /// Gaussian current patch `J = moment g(x)`, `g` normalised to unit
    /// integral on the grid.
    Dipole {
        center: [f64; 2],
        moment: [Complex64; 2],
        radius: f64,
    },
    /// Uniform current sheet `J1 = amplitude delta(y2 - y)`; used with
    /// periodic lateral boundaries to launch plane waves.
    Sheet { y: f64, amplitude: Complex64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroProblem {
    pub grid: Grid,
    pub omega: f64,
    pub ambient: [Complex64; 3],
    /// Later blocks take precedence.
    pub blocks: Vec<Block>,
    pub sources: Vec<Source>,
    pub pml: Pml,
    pub lateral: LateralBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroField {
    pub grid: Grid,
    pub omega: f64,
    /// `nx * ny`, row-major with `j` slow.
    pub h: Vec<Complex64>,
    /// `E1` on horizontal faces, `nx * (ny + 1)`.
    pub e1: Vec<Complex64>,
    /// `E2` on vertical faces, `(nx + 1) * ny`.
    pub e2: Vec<Complex64>,
    pub stats: SolveStats,
}

impl MacroField {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.h[j * self.grid.nx + i]
    }
}

impl MacroProblem {
    pub fn eps_at(&self, p: [f64; 2]) -> [Complex64; 3] {
        self.blocks
            .iter()
            .rev()
            .find(|b| b.contains(p))
            .map(|b| b.eps)
            .unwrap_or(self.ambient)
    }

    fn x_pml(&self) -> bool {
        self.lateral == LateralBoundary::Pml
    }

    /// Whether the point lies outside the absorbing layers.
    pub fn in_interior(&self, p: [f64; 2]) -> bool {
        let g = &self.grid;
        let w = self.pml.cells as f64;
        let inside_y = p[1] >= g.y(w) && p[1] <= g.y(g.ny as f64 - w);
        let inside_x = !self.x_pml() || (p[0] >= g.x(w) && p[0] <= g.x(g.nx as f64 - w));
        inside_y && inside_x
    }

    /// Copy with `extra` more PML cells on every absorbing side; the
    /// interior and everything placed in it stay put.
    pub fn with_extra_pml(&self, extra: usize) -> Self {
        let mut p = self.clone();
        let g = &mut p.grid;
        g.ny += 2 * extra;
        g.origin[1] -= extra as f64 * g.spacing;
        if self.x_pml() {
            g.nx += 2 * extra;
            g.origin[0] -= extra as f64 * g.spacing;
        }
        p.pml.cells += extra;
        p
    }

    /// Same physical domain and PML thickness on a grid `factor` times
    /// finer.
    pub fn refined(&self, factor: usize) -> Self {
        let mut p = self.clone();
        p.grid.nx *= factor;
        p.grid.ny *= factor;
        p.grid.spacing /= factor as f64;
        p.pml.cells *= factor;
        p
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.spacing > 0.0) || !g.spacing.is_finite() {
            return Err(Error::invalid("grid.spacing", "must be positive"));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid("omega", "must be positive"));
        }
        let w = self.pml.cells;
        if 2 * w + 1 > g.ny || (self.x_pml() && 2 * w + 1 > g.nx) {
            return Err(Error::invalid("pml.cells", "layers leave no interior"));
        }
        if !(self.pml.reflection > 0.0 && self.pml.reflection < 1.0) || !(self.pml.order >= 0.0) {
            return Err(Error::invalid("pml", "need 0 < reflection < 1 and order >= 0"));
        }
        let all = std::iter::once(&self.ambient).chain(self.blocks.iter().map(|b| &b.eps));
        for eps in all {
            for v in &eps[..2] {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::invalid("eps", "entries must be finite"));
                }
                if *v == ZERO {
                    return Err(Error::invalid(
                        "eps",
                        "an in-plane entry is exactly zero; include the material loss as a nonzero imaginary part",
                    ));
                }
            }
        }
        for s in &self.sources {
            match *s {
                Source::Dipole { center, radius, .. } => {
                    if !(radius > 0.0) {
                        return Err(Error::invalid("source.radius", "must be positive"));
                    }
                    let r = SOURCE_CUTOFF * radius;
                    let corners = [[center[0] - r, center[1] - r], [center[0] + r, center[1] + r]];
                    if !corners.iter().all(|&c| self.in_interior(c)) {
                        return Err(Error::invalid(
                            "source",
                            "support overlaps the absorbing layer or leaves the grid",
                        ));
                    }
                }
                Source::Sheet { y, .. } => {
                    if self.lateral != LateralBoundary::Periodic {
                        return Err(Error::invalid(
                            "source",
                            "current sheets need periodic lateral boundaries",
                        ));
                    }
                    if !self.in_interior([g.x(0.5 * g.nx as f64), y]) {
                        return Err(Error::invalid("source", "sheet lies in the absorbing layer"));
                    }
                }
            }
        }
        Ok(())
    }

    fn sigma_max(&self) -> f64 {
        let l = self.pml.cells as f64 * self.grid.spacing;
        -(self.pml.order + 1.0) * self.pml.reflection.ln() / (2.0 * l)
    }

    /// Stretch factor at grid coordinate `t` (in cells) along an axis with
    /// `n` cells.
    fn stretch(&self, t: f64, n: usize, active: bool) -> Complex64 {
        let w = self.pml.cells as f64;
        if !active || w == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let depth = if t < w {
            w - t
        } else if t > n as f64 - w {
            t - (n as f64 - w)
        } else {
            0.0
        };
        let sigma = self.sigma_max() * (depth / w).powf(self.pml.order);
        Complex64::new(1.0, sigma / self.omega)
    }

    fn s1(&self, i: f64) -> Complex64 {
        self.stretch(i, self.grid.nx, self.x_pml())
    }

    fn s2(&self, j: f64) -> Complex64 {
        self.stretch(j, self.grid.ny, true)
    }

    /// Flux coefficient `1 / eps_k` of the face at `p` with normal along
    /// `normal`. The two half cells on either side act in series, so a face
    /// on a material interface gets the inverse of the mean permittivity.
    fn inv_eps_face(&self, p: [f64; 2], normal: usize, k: usize) -> Complex64 {
        let d = 0.25 * self.grid.spacing;
        let mut a = p;
        let mut b = p;
        a[normal] -= d;
        b[normal] += d;
        2.0 / (self.eps_at(a)[k] + self.eps_at(b)[k])
    }

    /// Current densities `(J1 on horizontal faces, J2 on vertical faces)`.
    pub fn currents(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let g = self.grid;
        let (nx, ny, dx) = (g.nx, g.ny, g.spacing);
        let mut j1 = vec![ZERO; nx * (ny + 1)];
        let mut j2 = vec![ZERO; (nx + 1) * ny];
        for s in &self.sources {
            match *s {
                Source::Dipole { center, moment, radius } => {
                    let bump = |p: [f64; 2]| {
                        let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                        if r2 > (SOURCE_CUTOFF * radius).powi(2) {
                            0.0
                        } else {
                            (-0.5 * r2 / (radius * radius)).exp()
                        }
                    };
                    let mut w1 = vec![0.0; j1.len()];
                    for j in 0..=ny {
                        for i in 0..nx {
                            w1[j * nx + i] = bump([g.x(i as f64 + 0.5), g.y(j as f64)]);
                        }
                    }
                    let mut w2 = vec![0.0; j2.len()];
                    for j in 0..ny {
                        for i in 0..=nx {
                            w2[j * (nx + 1) + i] = bump([g.x(i as f64), g.y(j as f64 + 0.5)]);
                        }
                    }
                    let (t1, t2): (f64, f64) = (w1.iter().sum(), w2.iter().sum());
                    for (v, w) in j1.iter_mut().zip(&w1) {
                        *v += moment[0] * (w / (t1 * dx * dx));
                    }
                    for (v, w) in j2.iter_mut().zip(&w2) {
                        *v += moment[1] * (w / (t2 * dx * dx));
                    }
                }
                Source::Sheet { y, amplitude } => {
                    let j = ((y - g.origin[1]) / dx).round() as usize;
                    for i in 0..nx {
                        j1[j * nx + i] += amplitude / dx;
                    }
                }
            }
        }
        (j1, j2)
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::invalid("tol", format!("must lie in (0, 1e-6], got {tol}")));
    }
    Ok(())
}

/// Face coefficients and stretch data shared by assembly and field
/// recovery.
struct Coefficients {
    /// `1 / eps22` on vertical faces, `(nx + 1) * ny`.
    inv2: Vec<Complex64>,
    /// `1 / eps11` on horizontal faces, `nx * (ny + 1)`.
    inv1: Vec<Complex64>,
}

fn coefficients(p: &MacroProblem) -> Coefficients {
    let g = p.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut inv2 = vec![ZERO; (nx + 1) * ny];
    for j in 0..ny {
        for i in 0..=nx {
            inv2[j * (nx + 1) + i] = p.inv_eps_face([g.x(i as f64), g.y(j as f64 + 0.5)], 0, 1);
        }
    }
    let mut inv1 = vec![ZERO; nx * (ny + 1)];
    for j in 0..=ny {
        for i in 0..nx {
            inv1[j * nx + i] = p.inv_eps_face([g.x(i as f64 + 0.5), g.y(j as f64)], 1, 0);
        }
    }
    Coefficients { inv2, inv1 }
}

/// Assembled operator and right-hand side.
pub fn assemble_macro(p: &MacroProblem) -> Result<(CsrMatrix, Vec<Complex64>)> {
    p.validate()?;
    let g = p.grid;
    let (nx, ny, dx) = (g.nx, g.ny, g.spacing);
    let periodic = p.lateral == LateralBoundary::Periodic;
    let c = coefficients(p);
    let (j1, j2) = p.currents();
    let idx = |i: usize, j: usize| j * nx + i;
    let h2 = dx * dx;
    let mut trip = Vec::with_capacity(5 * nx * ny);
    let mut diag = vec![ZERO; nx * ny];
    let mut rhs = vec![ZERO; nx * ny];

    // vertical faces: flux along y1
    for j in 0..ny {
        let s2 = p.s2(j as f64 + 0.5);
        let faces = if periodic { 0..nx } else { 0..nx + 1 };
        for i in faces {
            let w = s2 / p.s1(i as f64) * c.inv2[j * (nx + 1) + i] / h2;
            let left = if i > 0 {
                Some(i - 1)
            } else if periodic {
                Some(nx - 1)
            } else {
                None
            };
            let right = if i < nx { Some(i) } else { None };
            match (left, right) {
                (Some(a), Some(b)) => {
                    let (a, b) = (idx(a, j), idx(b, j));
                    diag[a] -= w;
                    diag[b] -= w;
                    trip.push((a, b, w));
                    trip.push((b, a, w));
                }
                (Some(a), None) | (None, Some(a)) => diag[idx(a, j)] -= w,
                (None, None) => {}
            }
        }
        // -d1(J2 / eps22)
        for i in 0..nx {
            let f = |k: usize| j2[j * (nx + 1) + k] * c.inv2[j * (nx + 1) + k];
            let right = if periodic && i + 1 == nx { f(0) } else { f(i + 1) };
            rhs[idx(i, j)] -= (right - f(i)) / dx;
        }
    }
    // horizontal faces: flux along y2
    for j in 0..=ny {
        let s2 = p.s2(j as f64);
        for i in 0..nx {
            let w = p.s1(i as f64 + 0.5) / s2 * c.inv1[j * nx + i] / h2;
            let below = if j > 0 { Some(j - 1) } else { None };
            let above = if j < ny { Some(j) } else { None };
            match (below, above) {
                (Some(a), Some(b)) => {
                    let (a, b) = (idx(i, a), idx(i, b));
                    diag[a] -= w;
                    diag[b] -= w;
                    trip.push((a, b, w));
                    trip.push((b, a, w));
                }
                (Some(a), None) | (None, Some(a)) => diag[idx(i, a)] -= w,
                (None, None) => {}
            }
        }
    }
    // d2(J1 / eps11)
    for j in 0..ny {
        for i in 0..nx {
            let f = |k: usize| j1[k * nx + i] * c.inv1[k * nx + i];
            rhs[idx(i, j)] += (f(j + 1) - f(j)) / dx;
        }
    }
    let w2 = p.omega * p.omega;
    for j in 0..ny {
        for i in 0..nx {
            let k = idx(i, j);
            trip.push((k, k, diag[k] + w2 * p.s1(i as f64 + 0.5) * p.s2(j as f64 + 0.5)));
        }
    }
    Ok((CsrMatrix::from_triplets(nx * ny, nx * ny, &trip), rhs))
}

/// Solves for `H` by sparse LU and recovers `E` from the discrete Ampere law.
pub fn solve_macro(p: &MacroProblem, tol: f64) -> Result<MacroField> {
    check_tol(tol)?;
    let (a, b) = assemble_macro(p)?;
    let lu = DirectSolver::factor(&a)?;
    let (h, mut stats) = lu.solve(&b, tol)?;
    stats.residual = relative_residual(&a, &h, &b);
    if !stats.residual.is_finite() {
        return Err(Error::Solver {
            reason: "macro system is singular; add loss to near-zero permittivities".into(),
            iterations: stats.iterations,
            residual: stats.residual,
        });
    }
    let (e1, e2) = electric_field(p, &h);
    Ok(MacroField {
        grid: p.grid,
        omega: p.omega,
        h,
        e1,
        e2,
        stats,
    })
}

/// `E1 = i (d2 H - J1) / (omega eps11)` and `E2 = (d1 H + J2) / (i omega eps22)`
/// with stretched derivatives; `H` vanishes beyond absorbing edges.
fn electric_field(p: &MacroProblem, h: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let g = p.grid;
    let (nx, ny, dx) = (g.nx, g.ny, g.spacing);
    let periodic = p.lateral == LateralBoundary::Periodic;
    let c = coefficients(p);
    let (j1, j2) = p.currents();
    let hv = |i: usize, j: usize| h[j * nx + i];
    let mut e1 = vec![ZERO; nx * (ny + 1)];
    for j in 0..=ny {
        for i in 0..nx {
            let above = if j < ny { hv(i, j) } else { ZERO };
            let below = if j > 0 { hv(i, j - 1) } else { ZERO };
            let d2 = (above - below) / (dx * p.s2(j as f64));
            let k = j * nx + i;
            e1[k] = I * (d2 - j1[k]) * c.inv1[k] / p.omega;
        }
    }
    let mut e2 = vec![ZERO; (nx + 1) * ny];
    for j in 0..ny {
        for i in 0..=nx {
            let right = if i < nx {
                hv(i, j)
            } else if periodic {
                hv(0, j)
            } else {
                ZERO
            };
            let left = if i > 0 {
                hv(i - 1, j)
            } else if periodic {
                hv(nx - 1, j)
            } else {
                ZERO
            };
            let d1 = (right - left) / (dx * p.s1(i as f64));
            let k = j * (nx + 1) + i;
            e2[k] = (d1 + j2[k]) * c.inv2[k] / (I * p.omega);
        }
    }
    (e1, e2)
}

/// `||div(eps E) - div J / (i omega)|| / (||eps E|| / spacing + ||div J|| / omega)`
/// over grid nodes outside the absorbing layers.
pub fn divergence_check(f: &MacroField, p: &MacroProblem) -> f64 {
    let g = p.grid;
    let (nx, dx) = (g.nx, g.spacing);
    let c = coefficients(p);
    let (j1, j2) = p.currents();
    let d1 = |i: usize, j: usize| f.e1[j * nx + i] / c.inv1[j * nx + i];
    let d2 = |i: usize, j: usize| f.e2[j * (nx + 1) + i] / c.inv2[j * (nx + 1) + i];
    let (mut num, mut d_norm, mut s_norm) = (0.0, 0.0, 0.0);
    for j in 1..g.ny {
        for i in 1..nx {
            if !p.in_interior([g.x(i as f64), g.y(j as f64)]) {
                continue;
            }
            let div_d = (d1(i, j) - d1(i - 1, j) + d2(i, j) - d2(i, j - 1)) / dx;
            let div_j = (j1[j * nx + i] - j1[j * nx + i - 1] + j2[j * (nx + 1) + i] - j2[(j - 1) * (nx + 1) + i]) / dx;
            num += (div_d - div_j / (I * p.omega)).norm_sqr();
            d_norm += d1(i, j).norm_sqr() + d2(i, j).norm_sqr();
            s_norm += div_j.norm_sqr();
        }
    }
    let den = d_norm.sqrt() / dx + s_norm.sqrt() / p.omega;
    if den == 0.0 {
        0.0
    } else {
        num.sqrt() / den
    }
}

/// `sum J . E dA` of `source` radiating against the field `f`; symmetric
/// under exchange of the two sources on the same problem.
pub fn reaction(f: &MacroField, p: &MacroProblem, source: Source) -> Complex64 {
    let probe = MacroProblem {
        sources: vec![source],
        ..p.clone()
    };
    let (j1, j2) = probe.currents();
    let da = p.grid.spacing * p.grid.spacing;
    let s1: Complex64 = j1.iter().zip(&f.e1).map(|(j, e)| j * e).sum();
    let s2: Complex64 = j2.iter().zip(&f.e2).map(|(j, e)| j * e).sum();
    (s1 + s2) * da
}

/// Sum of `|H|^2 dA` over cells outside the absorbing layers.
pub fn interior_energy(f: &MacroField, p: &MacroProblem) -> f64 {
    let g = p.grid;
    let mut e = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if p.in_interior(g.center(i, j)) {
                e += f.at(i, j).norm_sqr();
            }
        }
    }
    e * g.spacing * g.spacing
}

/// RMS of `|H|` over cells whose centres lie in `[x0, x1) x [y0, y1)`.
pub fn rms_amplitude(f: &MacroField, x: [f64; 2], y: [f64; 2]) -> f64 {
    let g = f.grid;
    let (mut s, mut n) = (0.0, 0usize);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.center(i, j);
            if c[0] >= x[0] && c[0] < x[1] && c[1] >= y[0] && c[1] < y[1] {
                s += f.at(i, j).norm_sqr();
                n += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Largest spread, in degrees, of the phase of `H` along `y2` within the
/// slab `y in [y0, y1)`, taken over the grid columns outside the absorbing
/// layers and over cells with `|H| > threshold * max |H|` in the slab.
pub fn phase_spread_deg(f: &MacroField, p: &MacroProblem, y: [f64; 2], threshold: f64) -> f64 {
    let g = f.grid;
    let cells: Vec<(usize, usize)> = (0..g.ny)
        .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let c = g.center(i, j);
            c[1] >= y[0] && c[1] < y[1] && p.in_interior(c)
        })
        .collect();
    let peak = cells.iter().map(|&(i, j)| f.at(i, j).norm()).fold(0.0, f64::max);
    let mut spread: f64 = 0.0;
    for i in 0..g.nx {
        let column: Vec<Complex64> = cells
            .iter()
            .filter(|c| c.0 == i)
            .map(|&(i, j)| f.at(i, j))
            .filter(|v| v.norm() > threshold * peak)
            .collect();
        let Some(reference) = column.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) else {
            continue;
        };
        let phases: Vec<f64> = column.iter().map(|v| (v / reference).arg()).collect();
        let lo = phases.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    spread * 180.0 / PI
}

/// Dipole beneath a slab, laid out in units of the free-space wavelength
/// `L = 2 pi / omega`: interior `3L x 3L`, slab `y2 in [1.25L, 1.75L)`
/// across the full width, dipole along `y1` at `(1.5L, 0.75L)` with the
/// default radius of two cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlabLayout {
    pub omega: f64,
    pub slab_eps: [Complex64; 3],
    pub points_per_wavelength: usize,
    pub pml: Pml,
}

impl SlabLayout {
    pub fn new(omega: f64, slab_eps: [Complex64; 3]) -> Self {
        Self {
            omega,
            slab_eps,
            points_per_wavelength: 20,
            pml: Pml::default(),
        }
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn slab(&self) -> [f64; 2] {
        let l = self.wavelength();
        [1.25 * l, 1.75 * l]
    }

    /// Band above the slab used for the transmitted amplitude.
    pub fn transmitted_band(&self) -> ([f64; 2], [f64; 2]) {
        let l = self.wavelength();
        ([0.0, 3.0 * l], [2.0 * l, 2.75 * l])
    }

    pub fn problem(&self) -> Result<MacroProblem> {
        let ppw = self.points_per_wavelength;
        if ppw < 4 || !ppw.is_multiple_of(4) {
            return Err(Error::invalid(
                "points_per_wavelength",
                "must be a positive multiple of 4",
            ));
        }
        let l = self.wavelength();
        let dx = l / ppw as f64;
        let w = self.pml.cells;
        let n = 3 * ppw + 2 * w;
        let grid = Grid {
            nx: n,
            ny: n,
            spacing: dx,
            origin: [-(w as f64) * dx, -(w as f64) * dx],
        };
        let one = Complex64::new(1.0, 0.0);
        Ok(MacroProblem {
            grid,
            omega: self.omega,
            ambient: [one; 3],
            blocks: vec![Block {
                x: [f64::NEG_INFINITY, f64::INFINITY],
                y: self.slab(),
                eps: self.slab_eps,
            }],
            sources: vec![Source::Dipole {
                center: [1.5 * l, 0.75 * l],
                moment: [one, ZERO],
                radius: DEFAULT_SOURCE_CELLS * dx,
            }],
            pml: self.pml,
            lateral: LateralBoundary::Pml,
        })
    }
}
