use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate, Calibration};
use super::kk::kk_residual_samples;
use super::lorentz::{fit_lorentzian_samples, LorentzianFit};
use super::roots::{enz_crossings, first_rising_above, EnzCrossing};
use super::sweep::{frequency_sweep, samples, SweepRecord, TensorEntry};
use crate::cellsolver::SolveOptions;
use crate::error::Result;
use crate::geometry::{build_geometry, generate_mesh, GeometryKind};
use crate::materials::MaterialSpec;

/// Sweep of one geometry on one mesh, reduced to its resonance data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSummary {
    pub h: f64,
    pub vertices: usize,
    pub fit: LorentzianFit,
    pub crossings: Vec<EnzCrossing>,
    /// First rising zero above the resonance.
    pub enz: Option<f64>,
    pub kk_residual: f64,
    pub kk_reliable: bool,
    pub failed_points: usize,
    pub elapsed_s: f64,
}

pub fn resonance_summary<F>(
    kind: GeometryKind,
    h: f64,
    material: &F,
    grid: &[f64],
    entry: TensorEntry,
    opts: SolveOptions,
) -> Result<(ResonanceSummary, Vec<SweepRecord>)>
where
    F: Fn(f64) -> Result<MaterialSpec> + Sync,
{
    let start = Instant::now();
    let geom = build_geometry(kind)?;
    let mesh = generate_mesh(&geom, h)?;
    let records = frequency_sweep(&geom, &mesh, material, grid, opts)?;
    let failed_points = records.iter().filter(|r| !r.is_ok()).count();
    let (w, v) = samples(&records, entry);
    let fit = fit_lorentzian_samples(&w, &v)?;
    let crossings = enz_crossings(&w, &v, Some(&fit.model()));
    let kk = kk_residual_samples(&w, &v)?;
    let summary = ResonanceSummary {
        h,
        vertices: mesh.vertices.len(),
        enz: first_rising_above(&crossings, fit.resonance_freq),
        fit,
        crossings,
        kk_residual: kk.residual,
        kk_reliable: kk.reliable,
        failed_points,
        elapsed_s: start.elapsed().as_secs_f64(),
    };
    Ok((summary, records))
}

/// Outcome of calibrating a geometry parameter on the coarsest mesh and
/// refining with the parameter held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceStudy {
    pub kind: GeometryKind,
    pub calibration: Calibration,
    /// One entry per mesh, coarsest first.
    pub refinements: Vec<ResonanceSummary>,
    /// Whether the last refinement moved the resonance by less than the
    /// requested fraction.
    pub converged: bool,
}

impl ResonanceStudy {
    pub fn finest(&self) -> &ResonanceSummary {
        self.refinements.last().expect("at least one mesh")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub h0: f64,
    /// Relative movement of the fitted resonance that ends refinement.
    pub settle: f64,
    pub max_refinements: usize,
    /// Relative tolerance of the calibration.
    pub calibration_tol: f64,
    pub entry: TensorEntry,
    pub solve: SolveOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            h0: 0.05,
            settle: 5e-3,
            max_refinements: 3,
            calibration_tol: 1e-4,
            entry: TensorEntry::Eps11,
            solve: SolveOptions::default(),
        }
    }
}

/// Finds the parameter in `bracket` whose coarse-mesh resonance equals
/// `target`, then halves `h` until the resonance settles.
pub fn resonance_study<G, F>(
    geometry: G,
    bracket: [f64; 2],
    target: f64,
    material: &F,
    grid: &[f64],
    opts: StudyOptions,
) -> Result<ResonanceStudy>
where
    G: Fn(f64) -> GeometryKind,
    F: Fn(f64) -> Result<MaterialSpec> + Sync,
{
    let coarse = |p: f64| {
        resonance_summary(geometry(p), opts.h0, material, grid, opts.entry, opts.solve)
            .map(|(s, _)| s.fit.resonance_freq)
    };
    let calibration = calibrate(coarse, bracket[0], bracket[1], target, opts.calibration_tol)?;
    let kind = geometry(calibration.parameter);
    let mut refinements = vec![resonance_summary(kind, opts.h0, material, grid, opts.entry, opts.solve)?.0];
    let mut converged = false;
    let mut h = opts.h0;
    for _ in 0..opts.max_refinements {
        h *= 0.5;
        let next = resonance_summary(kind, h, material, grid, opts.entry, opts.solve)?.0;
        let prev = refinements.last().expect("nonempty").fit.resonance_freq;
        let moved = (next.fit.resonance_freq - prev).abs() / prev;
        refinements.push(next);
        if moved < opts.settle {
            converged = true;
            break;
        }
    }
    Ok(ResonanceStudy {
        kind,
        calibration,
        refinements,
        converged,
    })
}
