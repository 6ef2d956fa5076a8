use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellsolver::{solve_correctors, SolveOptions};
use crate::effperm::{
    check_divergence_free, effective_permittivity_closed_form, effective_permittivity_fem, EffectiveTensor, Provenance,
};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, UnitCellGeometry};
use crate::materials::{rescaled_eta, BulkPermittivity, MaterialSpec};
use crate::plot::{line_plot, Series};

/// Diagonal tensor entry selected for fitting and root finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TensorEntry {
    #[serde(rename = "eps11")]
    Eps11,
    #[serde(rename = "eps22")]
    Eps22,
    #[serde(rename = "eps33")]
    Eps33,
}

impl TensorEntry {
    pub fn index(self) -> usize {
        match self {
            TensorEntry::Eps11 => 0,
            TensorEntry::Eps22 => 1,
            TensorEntry::Eps33 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TensorEntry::Eps11 => "eps11",
            TensorEntry::Eps22 => "eps22",
            TensorEntry::Eps33 => "eps33",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eps11" | "11" => Some(TensorEntry::Eps11),
            "eps22" | "22" => Some(TensorEntry::Eps22),
            "eps33" | "33" => Some(TensorEntry::Eps33),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "reason")]
pub enum PointStatus {
    Ok,
    Failed(String),
}

/// Effective tensor diagonal at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub omega_tilde: f64,
    /// `eps_11, eps_22, eps_33`; `None` when the point failed.
    pub diagonal: Option<[Complex64; 3]>,
    pub max_off_diagonal: f64,
    pub eta: Complex64,
    pub mesh_id: u64,
    pub provenance: Option<Provenance>,
    pub status: PointStatus,
    /// Wall time of this point; not written to any artifact.
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl SweepRecord {
    pub fn value(&self, entry: TensorEntry) -> Option<Complex64> {
        self.diagonal.map(|d| d[entry.index()])
    }

    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }
}

/// `(omega, value)` of the successful points.
pub fn samples(records: &[SweepRecord], entry: TensorEntry) -> (Vec<f64>, Vec<Complex64>) {
    records
        .iter()
        .filter_map(|r| r.value(entry).map(|v| (r.omega_tilde, v)))
        .unzip()
}

/// `n` equally spaced frequencies from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
        .collect()
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "frequency grid is empty"));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "grid",
            format!("frequencies must be strictly increasing ({} then {})", w[0], w[1]),
        ));
    }
    if let Some(w) = grid.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("grid", format!("frequencies must be positive, got {w}")));
    }
    Ok(())
}

/// Drude sheets with the rescaled surface conductivity at every frequency.
pub fn drude_sheets(
    eps_bulk: BulkPermittivity,
    fermi_energy_tilde: f64,
    spacing_tilde: f64,
    lambda_line: Complex64,
) -> impl Fn(f64) -> Result<MaterialSpec> + Sync {
    move |omega| {
        let eta = rescaled_eta(fermi_energy_tilde, spacing_tilde, omega)?;
        let mut m = MaterialSpec::from_eta(eps_bulk.outer, eta, omega);
        m.eps_bulk = eps_bulk;
        m.lambda_line = lambda_line;
        Ok(m)
    }
}

/// Effective tensor at one frequency: closed form when the correctors
/// vanish, finite elements otherwise.
pub fn effective_tensor(
    geom: &UnitCellGeometry,
    mesh: &Mesh,
    mat: &MaterialSpec,
    omega_tilde: f64,
    opts: SolveOptions,
) -> Result<EffectiveTensor> {
    if check_divergence_free(mat, geom).overall {
        effective_permittivity_closed_form(mat, geom, omega_tilde)
    } else {
        let chi = solve_correctors(mesh, mat, omega_tilde, opts)?;
        effective_permittivity_fem(mesh, geom, &chi, mat, omega_tilde)
    }
}

/// Evaluates the effective tensor on `grid`, in parallel on the current
/// rayon pool. Records come back in grid order; a failing point is marked
/// and the sweep continues.
pub fn frequency_sweep<F>(
    geom: &UnitCellGeometry,
    mesh: &Mesh,
    material: F,
    grid: &[f64],
    opts: SolveOptions,
) -> Result<Vec<SweepRecord>>
where
    F: Fn(f64) -> Result<MaterialSpec> + Sync,
{
    check_grid(grid)?;
    let mesh_id = mesh.fingerprint();
    Ok(grid
        .par_iter()
        .map(|&omega| {
            let start = Instant::now();
            let mat = material(omega);
            let eta = mat.as_ref().ok().and_then(|m| m.eta(omega).ok()).unwrap_or_default();
            let outcome = mat.and_then(|m| effective_tensor(geom, mesh, &m, omega, opts));
            let elapsed_s = start.elapsed().as_secs_f64();
            match outcome {
                Ok(t) => SweepRecord {
                    omega_tilde: omega,
                    diagonal: Some([t.matrix[0][0], t.matrix[1][1], t.matrix[2][2]]),
                    max_off_diagonal: t.max_off_diagonal(),
                    eta,
                    mesh_id,
                    provenance: Some(t.provenance),
                    status: PointStatus::Ok,
                    elapsed_s,
                },
                Err(e) => SweepRecord {
                    omega_tilde: omega,
                    diagonal: None,
                    max_off_diagonal: f64::NAN,
                    eta,
                    mesh_id,
                    provenance: None,
                    status: PointStatus::Failed(e.to_string()),
                    elapsed_s,
                },
            }
        })
        .collect())
}

pub const SWEEP_CSV_HEADER: &str = "omega_tilde,re_eps11,im_eps11,re_eps22,im_eps22,re_eps33,im_eps33,status";

/// Sweep table. `comment` (if any) goes on a leading `#` line.
pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord], comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        write!(w, "{:.12e}", r.omega_tilde)?;
        match r.diagonal {
            Some(d) => {
                for v in d {
                    write!(w, ",{:.12e},{:.12e}", v.re, v.im)?;
                }
            }
            None => write!(w, ",nan,nan,nan,nan,nan,nan")?,
        }
        match &r.status {
            PointStatus::Ok => writeln!(w, ",ok")?,
            PointStatus::Failed(reason) => writeln!(w, ",failed: {}", reason.replace([',', '\n'], ";"))?,
        }
    }
    Ok(())
}

/// Re and Im of one entry against frequency, with the bands of negative
/// real part shaded.
pub fn sweep_svg(records: &[SweepRecord], entry: TensorEntry) -> String {
    let (x, v) = samples(records, entry);
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let mut bands = Vec::new();
    let mut open: Option<f64> = None;
    for (k, (&w, &r)) in x.iter().zip(&re).enumerate() {
        match (r < 0.0, open) {
            (true, None) => open = Some(if k == 0 { w } else { 0.5 * (x[k - 1] + w) }),
            (false, Some(a)) => {
                bands.push((a, 0.5 * (x[k - 1] + w)));
                open = None;
            }
            _ => {}
        }
    }
    if let (Some(a), Some(&b)) = (open, x.last()) {
        bands.push((a, b));
    }
    let title = format!("{} vs omega_tilde", entry.name());
    line_plot(
        &title,
        "omega_tilde",
        &[
            Series {
                label: "Re",
                colour: "#1f4e9c",
                x: &x,
                y: &re,
            },
            Series {
                label: "Im",
                colour: "#c0392b",
                x: &x,
                y: &im,
            },
        ],
        &bands,
    )
}
