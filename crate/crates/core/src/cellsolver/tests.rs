use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::geometry::{build_geometry, generate_mesh, GeometryKind};
use crate::sparse::relative_residual;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mesh_of(kind: GeometryKind, h: f64) -> Mesh {
    generate_mesh(&build_geometry(kind).unwrap(), h).unwrap()
}

fn sheet(eta: Complex64) -> MaterialSpec {
    MaterialSpec::from_eta(c(1.0, 0.0), eta, 2.0)
}

fn tube() -> GeometryKind {
    GeometryKind::Tube {
        radius: 0.3,
        center: [0.5, 0.5],
    }
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn matrix_is_exactly_complex_symmetric() {
    let mesh = mesh_of(GeometryKind::Ribbon { width: 0.6 }, 0.05);
    let sys = assemble(&mesh, &sheet(c(0.6, 0.01)), 2.0, 1).unwrap();
    assert!(sys.operator.matrix.is_symmetric());
    assert!(sys.operator.bordered_matrix().is_symmetric());
    let (_, classes) = mesh.periodic_classes();
    assert_eq!(sys.operator.n_dof, classes);
    assert_eq!(sys.operator.matrix.nrows, classes);
}

#[test]
fn planar_sheet_forcing_vanishes_along_the_sheet() {
    let mesh = mesh_of(GeometryKind::PlanarSheet, 0.05);
    let sys = assemble(&mesh, &sheet(c(0.9, 0.02)), 2.0, 1).unwrap();
    assert!(inf_norm(&sys.rhs) <= 1e-12 * sys.operator.matrix.norm_inf());
    let chi = solve(&sys, 1e-10).unwrap();
    assert!(inf_norm(&chi.values) <= 1e-8);
}

#[test]
fn dielectric_forcing_vanishes() {
    let mat = MaterialSpec::dielectric(c(2.5, 0.1));
    for kind in [GeometryKind::Ribbon { width: 0.5 }, tube()] {
        let mesh = mesh_of(kind, 0.05);
        for j in [1, 2] {
            let sys = assemble(&mesh, &mat, 1.0, j).unwrap();
            assert!(inf_norm(&sys.rhs) <= 1e-12 * sys.operator.matrix.norm_inf());
            let chi = solve(&sys, 1e-10).unwrap();
            assert!(inf_norm(&chi.values) <= 1e-12);
        }
    }
}

#[test]
fn ribbon_forcing_sits_at_the_edges() {
    let mesh = mesh_of(GeometryKind::Ribbon { width: 0.6 }, 0.05);
    let sys = assemble(&mesh, &sheet(c(0.6, 0.01)), 2.0, 1).unwrap();
    let (k, _) = sys
        .rhs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let v = sys.operator.dof_of_vertex.iter().position(|&d| d == k).unwrap();
    let p = mesh.vertices[v];
    let near_edge = [0.2, 0.8].iter().any(|&x| (p[0] - x).hypot(p[1] - 0.5) < 1e-9);
    assert!(near_edge, "largest forcing at {p:?}");
}

#[test]
fn third_direction_is_rejected() {
    let mesh = mesh_of(GeometryKind::PlanarSheet, 0.25);
    let err = assemble(&mesh, &sheet(c(1.0, 0.0)), 2.0, 3).unwrap_err();
    assert!(matches!(err, crate::Error::UnsupportedDirection(3)));
}

#[test]
fn missing_mean_constraint_is_an_assembly_error() {
    let mesh = mesh_of(tube(), 0.1);
    let mut sys = assemble(&mesh, &sheet(c(0.5, 0.01)), 2.0, 1).unwrap();
    sys.operator.mean_constraint = None;
    assert!(matches!(solve(&sys, 1e-10), Err(crate::Error::AssemblyContract(_))));
}

#[test]
fn tolerance_outside_range_is_rejected() {
    let mesh = mesh_of(tube(), 0.1);
    let sys = assemble(&mesh, &sheet(c(0.5, 0.01)), 2.0, 1).unwrap();
    assert!(solve(&sys, 1e-3).is_err());
    assert!(solve(&sys, 0.0).is_err());
}

#[test]
fn zero_rhs_gives_zero_field() {
    let mesh = mesh_of(tube(), 0.1);
    let mut sys = assemble(&mesh, &sheet(c(0.5, 0.01)), 2.0, 1).unwrap();
    sys.rhs.iter_mut().for_each(|v| *v = c(0.0, 0.0));
    let chi = solve(&sys, 1e-10).unwrap();
    assert!(inf_norm(&chi.values) == 0.0);
}

#[test]
fn solution_is_galerkin_consistent_and_zero_mean() {
    let mesh = mesh_of(tube(), 0.04);
    let sys = assemble(&mesh, &sheet(c(0.5, 0.01)), 2.0, 1).unwrap();
    let tol = 1e-10;
    let chi = solve(&sys, tol).unwrap();
    let dofs: Vec<Complex64> = {
        let mut d = vec![c(0.0, 0.0); sys.operator.n_dof];
        for (v, &k) in sys.operator.dof_of_vertex.iter().enumerate() {
            d[k] = chi.values[v];
        }
        d
    };
    assert!(relative_residual(&sys.operator.matrix, &dofs, &sys.rhs) <= tol);
    assert!(chi.mean(&mesh).norm() <= 1e-12 * inf_norm(&chi.values));
    for p in &mesh.periodic_pairs {
        assert_eq!(chi.values[p.low], chi.values[p.high]);
    }
}

#[test]
fn iterative_backend_matches_direct() {
    let mesh = mesh_of(tube(), 0.05);
    let sys = assemble(&mesh, &sheet(c(0.5, 0.05)), 2.0, 2).unwrap();
    let direct = solve_with(
        &sys,
        SolveOptions {
            tol: 1e-10,
            backend: Backend::Direct,
        },
    )
    .unwrap();
    let iter = solve_with(
        &sys,
        SolveOptions {
            tol: 1e-10,
            backend: Backend::Iterative,
        },
    )
    .unwrap();
    let diff: f64 = direct
        .values
        .iter()
        .zip(&iter.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-6 * inf_norm(&direct.values), "diff {diff}");
}

#[test]
fn common_scaling_leaves_correctors_unchanged() {
    let mesh = mesh_of(tube(), 0.06);
    let mat = sheet(c(0.7, 0.02));
    let k = c(2.0, 0.5);
    let a = solve(&assemble(&mesh, &mat, 2.0, 1).unwrap(), 1e-10).unwrap();
    let b = solve(&assemble(&mesh, &mat.scaled(k), 2.0, 1).unwrap(), 1e-10).unwrap();
    let scale = inf_norm(&a.values);
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).norm() <= 1e-9 * scale);
    }
}

#[test]
fn both_directions_share_one_factorisation() {
    let mesh = mesh_of(tube(), 0.06);
    let mat = sheet(c(0.7, 0.02));
    let [a, b] = solve_correctors(&mesh, &mat, 2.0, SolveOptions::default()).unwrap();
    let a1 = solve(&assemble(&mesh, &mat, 2.0, 1).unwrap(), 1e-10).unwrap();
    let b1 = solve(&assemble(&mesh, &mat, 2.0, 2).unwrap(), 1e-10).unwrap();
    assert_eq!((a.direction, b.direction), (1, 2));
    assert_eq!(a.values, a1.values);
    assert_eq!(b.values, b1.values);
}

#[test]
fn constant_field_has_zero_gradient() {
    let mesh = mesh_of(tube(), 0.1);
    let field = CorrectorField {
        direction: 1,
        values: vec![c(3.0, -1.0); mesh.vertices.len()],
        mesh_fingerprint: mesh.fingerprint(),
        stats: crate::sparse::SolveStats {
            kind: crate::sparse::SolverKind::DirectLu,
            iterations: 0,
            residual: 0.0,
        },
    };
    for g in corrector_gradient(&field, &mesh).unwrap() {
        assert!(g[0].norm() < 1e-12 && g[1].norm() < 1e-12);
    }
}

#[test]
fn field_from_another_mesh_is_rejected() {
    let a = mesh_of(tube(), 0.1);
    let b = mesh_of(tube(), 0.08);
    let chi = solve(&assemble(&a, &sheet(c(0.5, 0.0)), 2.0, 1).unwrap(), 1e-10).unwrap();
    assert!(corrector_gradient(&chi, &b).is_err());
}

#[test]
fn ribbon_gradient_peaks_next_to_an_edge() {
    let h = 0.04;
    let mesh = mesh_of(GeometryKind::Ribbon { width: 0.6 }, h);
    let chi = solve(&assemble(&mesh, &sheet(c(0.3, 0.01)), 2.0, 1).unwrap(), 1e-10).unwrap();
    let grad = corrector_gradient(&chi, &mesh).unwrap();
    let (t, _) = grad
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1[0].norm_sqr() + a.1[1].norm_sqr()).total_cmp(&(b.1[0].norm_sqr() + b.1[1].norm_sqr())))
        .unwrap();
    let p = mesh.centroid(t);
    let d = [0.2, 0.8]
        .iter()
        .map(|&x| (p[0] - x).hypot(p[1] - 0.5))
        .fold(f64::INFINITY, f64::min);
    assert!(d <= 2.0 * h, "peak at {p:?}");
}

fn manufactured(p: crate::geometry::Point) -> Complex64 {
    c((2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin(), 0.0)
}

fn manufactured_errors(h: f64) -> (f64, f64) {
    let mesh = mesh_of(GeometryKind::PlanarSheet, h);
    let mat = MaterialSpec::dielectric(c(1.0, 0.0));
    let sys = assemble_with_load(&mesh, &mat, 1.0, |p| manufactured(p) * (8.0 * PI * PI)).unwrap();
    let chi = solve(&sys, 1e-10).unwrap();
    let l2 = chi.l2_error(&mesh, manufactured).unwrap();
    let grad = corrector_gradient(&chi, &mesh).unwrap();
    let mut g2 = 0.0;
    for (t, g) in grad.iter().enumerate() {
        for (w, bc) in crate::quadrature::DEGREE5 {
            let q = crate::quadrature::map(
                *bc,
                [
                    mesh.vertices[mesh.triangles[t][0]],
                    mesh.vertices[mesh.triangles[t][1]],
                    mesh.vertices[mesh.triangles[t][2]],
                ],
            );
            let ex = 2.0 * PI * (2.0 * PI * q[0]).cos() * (2.0 * PI * q[1]).sin();
            let ey = 2.0 * PI * (2.0 * PI * q[0]).sin() * (2.0 * PI * q[1]).cos();
            g2 += w * mesh.triangle_area(t) * ((g[0] - ex).norm_sqr() + (g[1] - ey).norm_sqr());
        }
    }
    (l2, g2.sqrt())
}

#[test]
fn manufactured_solution_converges() {
    let hs = [0.1, 0.05, 0.025];
    let errs: Vec<(f64, f64)> = hs.iter().map(|&h| manufactured_errors(h)).collect();
    for k in 1..hs.len() {
        let p0 = (errs[k - 1].0 / errs[k].0).ln() / (hs[k - 1] / hs[k]).ln();
        let p1 = (errs[k - 1].1 / errs[k].1).ln() / (hs[k - 1] / hs[k]).ln();
        assert!(p0 >= 1.8, "L2 order {p0}");
        assert!(p1 >= 0.9, "gradient order {p1}");
    }
}

#[test]
fn corrector_csv_and_svg() {
    let mesh = mesh_of(GeometryKind::Ribbon { width: 0.5 }, 0.1);
    let chi = solve(&assemble(&mesh, &sheet(c(0.5, 0.01)), 2.0, 1).unwrap(), 1e-10).unwrap();
    let mut buf = Vec::new();
    write_corrector_csv(&mut buf, &chi, &mesh).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("vertex,y1,y2,re_chi,im_chi\n"));
    assert_eq!(text.lines().count(), mesh.vertices.len() + 1);
    let svg = chi.to_svg(&mesh).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}
