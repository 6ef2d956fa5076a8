//! Effective permittivity tensor from the cell correctors, the closed form
//! for configurations without correctors, and the structural checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cellsolver::{corrector_gradient, CorrectorField};
use crate::error::{Error, Result};
use crate::geometry::{GeometryKind, Mesh, UnitCellGeometry};
use crate::materials::{MaterialSpec, Region};

/// Relative bound on off-diagonal entries for a tensor to count as diagonal.
pub const OFF_DIAGONAL_TOL: f64 = 1e-8;
/// Relative tolerance for the quarter-turn equality of the tube tensor.
pub const TUBE_ISOTROPY_TOL: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Fem,
    ClosedForm,
    Factorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTensor {
    pub matrix: [[Complex64; 3]; 3],
    pub omega_tilde: f64,
    pub provenance: Provenance,
    pub geometry: GeometryKind,
    pub material: MaterialSpec,
}

impl EffectiveTensor {
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[i - 1][j - 1]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..3).map(|i| self.matrix[i][i].norm()).fold(0.0, f64::max)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    m = m.max(self.matrix[i][j].norm());
                }
            }
        }
        m
    }

    /// `{omega_tilde, eps_eff, provenance}` with complex entries as `[re, im]`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|v| [v.re, v.im]).collect())
            .collect();
        serde_json::json!({
            "omega_tilde": self.omega_tilde,
            "eps_eff": rows,
            "provenance": self.provenance,
        })
    }
}

/// `int_Y eps` with the exact region areas of the geometry.
pub fn bulk_average(mat: &MaterialSpec, geom: &UnitCellGeometry) -> Complex64 {
    let inner = if geom.has_inner_region() {
        geom.inner_area()
    } else {
        0.0
    };
    mat.eps_bulk.value(Region::Outer) * (1.0 - inner) + mat.eps_bulk.value(Region::Inner) * inner
}

/// `int eps - eta |Sigma| - (lambda / i omega) * #edges`.
fn axial_entry(mat: &MaterialSpec, geom: &UnitCellGeometry, omega_tilde: f64) -> Result<Complex64> {
    let eta = mat.eta(omega_tilde)?;
    let line = mat.line_eta(omega_tilde)?;
    Ok(bulk_average(mat, geom) - eta * geom.surface_measure() - line * geom.edges.len() as f64)
}

/// Homogenised tensor from solved correctors for `j = 1, 2`.
pub fn effective_permittivity_fem(
    mesh: &Mesh,
    geom: &UnitCellGeometry,
    correctors: &[CorrectorField],
    mat: &MaterialSpec,
    omega_tilde: f64,
) -> Result<EffectiveTensor> {
    let eta = mat.eta(omega_tilde)?;
    let mut by_dir: [Option<&CorrectorField>; 2] = [None, None];
    for c in correctors {
        match c.direction {
            1 | 2 => by_dir[c.direction - 1] = Some(c),
            d => return Err(Error::Contract(format!("unexpected corrector direction {d}"))),
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[zero; 3]; 3];
    for j in 0..2 {
        let field = by_dir[j].ok_or_else(|| Error::Contract(format!("missing corrector for direction {}", j + 1)))?;
        let grad = corrector_gradient(field, mesh)?;
        let dt = field.tangential_derivative(mesh)?;
        for i in 0..2 {
            let mut vol = zero;
            for (t, g) in grad.iter().enumerate() {
                let eps = mat.eps_bulk.value(mesh.regions[t]);
                let delta = if i == j { 1.0 } else { 0.0 };
                vol += eps * (g[i] + delta) * mesh.triangle_area(t);
            }
            let mut surf = zero;
            for (s, d) in dt.iter().enumerate() {
                let tan = mesh.segment_tangent(s);
                surf += (d + tan[j]) * (tan[i] * mesh.segment_length(s));
            }
            m[i][j] = vol - eta * surf;
        }
    }
    m[2][2] = axial_entry(mat, geom, omega_tilde)?;
    Ok(EffectiveTensor {
        matrix: m,
        omega_tilde,
        provenance: Provenance::Fem,
        geometry: geom.kind,
        material: *mat,
    })
}

/// Which of the conditions for an identically vanishing corrector hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceFreeReport {
    /// Bulk permittivity has no internal jumps.
    pub volume_ok: bool,
    /// Tangential divergence of the surface conductivity vanishes.
    pub surface_ok: bool,
    /// Normal surface current at sheet edges matches the line current.
    pub edge_ok: bool,
    pub overall: bool,
}

impl DivergenceFreeReport {
    pub fn failing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.volume_ok {
            out.push("volume");
        }
        if !self.surface_ok {
            out.push("surface");
        }
        if !self.edge_ok {
            out.push("edge");
        }
        out
    }
}

/// Conductivities are spatially constant on each sheet and edge, so the
/// conditions reduce to geometric ones.
pub fn check_divergence_free(mat: &MaterialSpec, geom: &UnitCellGeometry) -> DivergenceFreeReport {
    let no_sigma = mat.sigma_surface == Complex64::new(0.0, 0.0);
    let volume_ok = mat.eps_bulk.is_uniform() || !geom.has_inner_region();
    let surface_ok = no_sigma || geom.interfaces.iter().all(|c| c.is_straight());
    let edge_ok = geom.edges.is_empty() || no_sigma;
    DivergenceFreeReport {
        volume_ok,
        surface_ok,
        edge_ok,
        overall: volume_ok && surface_ok && edge_ok,
    }
}

/// `int eps I - eta int P_t - (lambda / i omega) sum_edges e3 e3^T`; only
/// valid when the correctors vanish.
pub fn effective_permittivity_closed_form(
    mat: &MaterialSpec,
    geom: &UnitCellGeometry,
    omega_tilde: f64,
) -> Result<EffectiveTensor> {
    let report = check_divergence_free(mat, geom);
    if !report.overall {
        return Err(Error::Precondition(format!(
            "correctors do not vanish: {} condition(s) violated",
            report.failing().join(", ")
        )));
    }
    let eta = mat.eta(omega_tilde)?;
    let avg = bulk_average(mat, geom);
    let tt = geom.tangent_moment();
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[zero; 3]; 3];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { avg } else { zero };
            m[i][j] = delta - eta * tt[i][j];
        }
    }
    m[2][2] = axial_entry(mat, geom, omega_tilde)?;
    Ok(EffectiveTensor {
        matrix: m,
        omega_tilde,
        provenance: Provenance::ClosedForm,
        geometry: geom.kind,
        material: *mat,
    })
}

/// Outcome of comparing a tensor with the sparsity pattern expected for its
/// geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub pass: bool,
    pub pattern: char,
    pub off_diagonal_ratio: f64,
    pub diagnostics: Vec<String>,
}

/// Checks diagonality and the geometry-specific equalities: for planar
/// sheets `eps_22` is the bulk value and `eps_11 = eps_33`, for ribbons
/// `eps_22` is the bulk value, and for tubes `eps_11 = eps_22` within
/// [`TUBE_ISOTROPY_TOL`].
pub fn tensor_structure_check(t: &EffectiveTensor, geom: &UnitCellGeometry) -> StructureReport {
    let max_diag = t.max_diagonal();
    let ratio = if max_diag > 0.0 {
        t.max_off_diagonal() / max_diag
    } else {
        0.0
    };
    let mut diagnostics = Vec::new();
    if ratio > OFF_DIAGONAL_TOL {
        diagnostics.push(format!("off-diagonal ratio {ratio:.3e} exceeds {OFF_DIAGONAL_TOL:e}"));
    }
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let bulk = bulk_average(&t.material, geom);
    let pattern = match geom.kind {
        GeometryKind::PlanarSheet => 'S',
        GeometryKind::Ribbon { .. } => 'R',
        GeometryKind::Tube { .. } => 'T',
        GeometryKind::Corrugated { .. } => 'C',
    };
    match pattern {
        'S' | 'R' => {
            let d = rel(t.entry(2, 2), bulk);
            if d > 1e-8 {
                diagnostics.push(format!("eps_22 differs from bulk average by {d:.3e}"));
            }
            if pattern == 'S' {
                let d = rel(t.entry(1, 1), t.entry(3, 3));
                if d > 1e-8 {
                    diagnostics.push(format!("eps_11 and eps_33 differ by {d:.3e}"));
                }
            }
        }
        'T' => {
            let d = rel(t.entry(1, 1), t.entry(2, 2));
            if d > TUBE_ISOTROPY_TOL {
                diagnostics.push(format!("eps_11 and eps_22 differ by {d:.3e}"));
            }
        }
        _ => {}
    }
    StructureReport {
        pass: diagnostics.is_empty(),
        pattern,
        off_diagonal_ratio: ratio,
        diagnostics,
    }
}
