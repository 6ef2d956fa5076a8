//! One function per task. Each writes its artifacts and returns a short
//! result for the summary line.

use plasmahom::analysis::{
    enz_crossings, first_rising_above, fit_lorentzian_samples, frequency_sweep, kk_residual_samples, samples,
    sweep_svg, write_sweep_csv, TensorEntry,
};
use plasmahom::cellsolver::{solve_correctors, write_corrector_csv, SolveOptions};
use plasmahom::effperm::{check_divergence_free, tensor_structure_check};
use plasmahom::enz::{enz_report, EnzParams};
use plasmahom::geometry::{build_geometry, generate_mesh, write_mesh, Mesh, UnitCellGeometry};
use plasmahom::macrosolver::{
    divergence_check, field_svg, interior_energy, phase_spread_deg, rms_amplitude, solve_macro, write_field_tagged,
    Pml, SlabLayout,
};
use plasmahom::materials::DrudeParams;
use plasmahom::{analysis, Complex64};
use serde_json::{json, Value};

use crate::config::{Format, Loaded, Task};
use crate::output::Artifacts;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Solver(#[from] plasmahom::Error),
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
}

/// Fraction of the peak above which the slab phase is inspected.
const PHASE_THRESHOLD: f64 = 0.1;

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn solve_opts(l: &Loaded) -> SolveOptions {
    SolveOptions {
        tol: l.config.solver.tol,
        backend: l.config.solver.backend,
    }
}

fn setup(l: &Loaded) -> Result<(UnitCellGeometry, Mesh), RunError> {
    let geom = build_geometry(l.config.geometry)?;
    let mesh = generate_mesh(&geom, l.config.solver.h)?;
    Ok((geom, mesh))
}

fn mesh_json(mesh: &Mesh) -> Value {
    json!({
        "h": mesh.h,
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "interface_segments": mesh.interface_segments.len(),
        "interface_length": mesh.interface_length(),
        "fingerprint": format!("{:016x}", mesh.fingerprint()),
    })
}

pub fn run(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    match &l.config.task {
        Task::Mesh {} => mesh_task(l, out),
        Task::Cell { .. } => cell_task(l, out),
        Task::Effperm { .. } => effperm_task(l, out),
        Task::Sweep { omega, entry } => sweep_task(l, out, &omega.values(), *entry),
        Task::Enz { .. } => enz_task(l, out),
        Task::Macro { .. } => macro_task(l, out),
    }
}

fn mesh_task(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    let (_, mesh) = setup(l)?;
    mesh.check()?;
    if l.config.wants(Format::Txt) {
        let mut text = Vec::new();
        write_mesh(&mesh, &mut text)?;
        // the format header stays on the first line
        let split = text.iter().position(|b| *b == b'\n').map_or(text.len(), |k| k + 1);
        let mut body = text[..split].to_vec();
        body.extend_from_slice(format!("# {}\n", out.provenance().line()).as_bytes());
        body.extend_from_slice(&text[split..]);
        out.write_bytes("mesh.txt", &body)?;
    }
    let summary = json!({
        "geometry": l.config.geometry,
        "mesh": mesh_json(&mesh),
        "periodic_pairs": mesh.periodic_pairs.len(),
        "edge_vertices": mesh.edge_vertices.len(),
    });
    out.write_json("mesh.json", summary.clone())?;
    Ok(summary["mesh"].clone())
}

fn cell_task(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    let omega = l.config.omega().expect("validated");
    let (geom, mesh) = setup(l)?;
    let mat = l.config.material.at(omega)?;
    let chi = solve_correctors(&mesh, &mat, omega, solve_opts(l))?;
    let mut fields = Vec::new();
    for c in &chi {
        let j = c.direction;
        if l.config.wants(Format::Csv) {
            let mut body = Vec::new();
            write_corrector_csv(&mut body, c, &mesh)?;
            out.write_commented(&format!("corrector_{j}.csv"), "# ", &body)?;
        }
        if l.config.wants(Format::Svg) {
            out.write_svg(&format!("corrector_{j}.svg"), &c.to_svg(&mesh)?)?;
        }
        fields.push(json!({
            "direction": j,
            "max_abs": c.values.iter().map(|v| v.norm()).fold(0.0, f64::max),
            "mean": pair(c.mean(&mesh)),
            "solver": c.stats,
        }));
    }
    let df = check_divergence_free(&mat, &geom);
    let summary = json!({
        "omega_tilde": omega,
        "eta": pair(mat.eta(omega)?),
        "geometry": l.config.geometry,
        "mesh": mesh_json(&mesh),
        "divergence_free": df,
        "correctors": fields,
        "note": "the third corrector vanishes identically for cells invariant along y3",
    });
    out.write_json("cell.json", summary.clone())?;
    Ok(json!({ "correctors": summary["correctors"] }))
}

fn effperm_task(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    let omega = l.config.omega().expect("validated");
    let (geom, mesh) = setup(l)?;
    let mat = l.config.material.at(omega)?;
    let t = analysis::effective_tensor(&geom, &mesh, &mat, omega, solve_opts(l))?;
    let structure = tensor_structure_check(&t, &geom);
    let mut v = t.to_json();
    v["geometry"] = json!(l.config.geometry);
    v["mesh"] = mesh_json(&mesh);
    v["structure"] = json!(structure);
    out.write_json("tensor.json", v.clone())?;
    Ok(json!({
        "eps_eff_diagonal": [v["eps_eff"][0][0], v["eps_eff"][1][1], v["eps_eff"][2][2]],
        "provenance": v["provenance"],
        "structure_pass": structure.pass,
    }))
}

fn sweep_task(l: &Loaded, out: &mut Artifacts, grid: &[f64], entry: TensorEntry) -> Result<Value, RunError> {
    let (geom, mesh) = setup(l)?;
    let material = l.config.material;
    let records = frequency_sweep(&geom, &mesh, |w| material.at(w), grid, solve_opts(l))?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if l.config.wants(Format::Csv) {
        let mut body = Vec::new();
        write_sweep_csv(&mut body, &records, Some(&out.provenance().line()))?;
        out.write_bytes("sweep.csv", &body)?;
    }
    if l.config.wants(Format::Svg) {
        out.write_svg("sweep.svg", &sweep_svg(&records, entry))?;
    }
    let (w, v) = samples(&records, entry);
    let fit = fit_lorentzian_samples(&w, &v);
    let crossings = enz_crossings(&w, &v, fit.as_ref().ok().map(|f| f.model()).as_ref());
    let above = fit.as_ref().map_or(0.0, |f| f.resonance_freq);
    let enz = first_rising_above(&crossings, above);
    let kk = kk_residual_samples(&w, &v);
    let mut result = json!({
        "entry": entry,
        "points": records.len(),
        "failed_points": failed,
        "mesh": mesh_json(&mesh),
        "crossings": crossings,
        "enz_omega_tilde": enz,
    });
    match &fit {
        Ok(f) => result["fit"] = json!(f),
        Err(e) => result["fit_error"] = json!(e.to_string()),
    }
    match &kk {
        Ok(k) => result["kramers_kronig"] = json!({ "residual": k.residual, "reliable": k.reliable }),
        Err(e) => result["kramers_kronig_error"] = json!(e.to_string()),
    }
    out.write_json("fit.json", result.clone())?;
    Ok(json!({
        "failed_points": failed,
        "resonance_freq": fit.as_ref().ok().map(|f| f.resonance_freq),
        "enz_omega_tilde": enz,
        "kk_residual": kk.as_ref().ok().map(|k| k.residual),
    }))
}

fn enz_params(l: &Loaded) -> Result<EnzParams, RunError> {
    let Task::Enz {
        spacing,
        eps_bar,
        sigma_d,
        lambda_d,
        ..
    } = &l.config.task
    else {
        unreachable!("called for the enz task only")
    };
    let m = &l.config.material;
    let omega = l.config.omega().expect("validated");
    let d = spacing.or(m.drude.map(|d| d.d_tilde)).expect("validated");
    let sigma = match (sigma_d, &m.drude) {
        (Some(s), _) => *s,
        (None, Some(dr)) => DrudeParams::new(dr.fermi_energy_tilde, omega, dr.d_tilde)
            .with_relax_time(dr.tau_ps * 1e-12)
            .sigma_d_tilde()?,
        (None, None) => m.sigma_surface.unwrap_or_default() * d,
    };
    let lambda = lambda_d.unwrap_or(m.lambda_line * (d * d));
    let eps = eps_bar.unwrap_or(m.eps_bulk.to_bulk().outer);
    Ok(EnzParams::new(eps, sigma, lambda, omega, d)?)
}

fn enz_task(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    let Task::Enz { max_loss, .. } = &l.config.task else {
        unreachable!("called for the enz task only")
    };
    let p = enz_params(l)?;
    let report = enz_report(&p, *max_loss)?;
    let mut v = report.to_json();
    v["omega_tilde"] = json!(p.omega);
    v["spacing"] = json!(p.spacing);
    v["eps_bar"] = json!(pair(p.eps_bar));
    v["sigma_d"] = json!(pair(p.sigma_bar_d));
    v["lambda_d"] = json!(pair(p.lambda_bar_d));
    v["max_loss"] = json!(max_loss);
    out.write_json("enz.json", v)?;
    Ok(report.to_json())
}

fn macro_task(l: &Loaded, out: &mut Artifacts) -> Result<Value, RunError> {
    let Task::Macro {
        slab_eps,
        points_per_wavelength,
        pml_cells,
        tol,
        checks,
        ..
    } = &l.config.task
    else {
        unreachable!("called for the macro task only")
    };
    let omega = l.config.omega().expect("validated");
    let eps = match slab_eps {
        Some(e) => *e,
        None => {
            let (geom, mesh) = setup(l)?;
            let mat = l.config.material.at(omega)?;
            let t = analysis::effective_tensor(&geom, &mesh, &mat, omega, solve_opts(l))?;
            [t.entry(1, 1), t.entry(2, 2), t.entry(3, 3)]
        }
    };
    let layout = SlabLayout {
        points_per_wavelength: *points_per_wavelength,
        pml: Pml {
            cells: *pml_cells,
            ..Pml::default()
        },
        ..SlabLayout::new(omega, eps)
    };
    let p = layout.problem()?;
    let field = solve_macro(&p, *tol)?;
    let (bx, by) = layout.transmitted_band();
    let amplitude = rms_amplitude(&field, bx, by);
    let energy = interior_energy(&field, &p);
    let mut result = json!({
        "omega_tilde": omega,
        "slab_eps": eps.map(pair),
        "grid": p.grid,
        "pml": p.pml,
        "phase_spread_deg": phase_spread_deg(&field, &p, layout.slab(), PHASE_THRESHOLD),
        "phase_threshold": PHASE_THRESHOLD,
        "divergence_residual": divergence_check(&field, &p),
        "interior_energy": energy,
        "transmitted_amplitude": amplitude,
        "solver": field.stats,
    });
    if *checks {
        let thick = p.with_extra_pml(p.pml.cells);
        let e2 = interior_energy(&solve_macro(&thick, *tol)?, &thick);
        let fine = p.refined(2);
        let a2 = rms_amplitude(&solve_macro(&fine, *tol)?, bx, by);
        result["pml_doubling_change"] = json!((e2 - energy).abs() / energy);
        result["grid_doubling_change"] = json!((a2 - amplitude).abs() / amplitude);
    }
    if l.config.wants(Format::Bin) {
        let mut bytes = Vec::new();
        write_field_tagged(&mut bytes, &field, &out.provenance().line())?;
        out.write_bytes("field.bin", &bytes)?;
    }
    if l.config.wants(Format::Svg) {
        out.write_svg("field.svg", &field_svg(&field))?;
    }
    out.write_json("macro.json", result.clone())?;
    Ok(json!({
        "phase_spread_deg": result["phase_spread_deg"],
        "divergence_residual": result["divergence_residual"],
        "pml_doubling_change": result.get("pml_doubling_change"),
        "grid_doubling_change": result.get("grid_doubling_change"),
    }))
}
