use plasmahom::cellsolver::{corrector_gradient, solve_correctors, SolveOptions};
use plasmahom::effperm::{
    check_divergence_free, effective_permittivity_closed_form, effective_permittivity_fem, Provenance,
};
use plasmahom::geometry::{build_geometry, generate_mesh, GeometryKind, Mesh};
use plasmahom::materials::{rescaled_eta, BulkPermittivity, MaterialSpec};
use plasmahom::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn drude(omega: f64) -> MaterialSpec {
    MaterialSpec::from_eta(c(1.0, 0.0), rescaled_eta(1.0, 20.72, omega).unwrap(), omega)
}

fn energy(mesh: &Mesh, mat: &MaterialSpec, omega: f64) -> f64 {
    let chi = solve_correctors(mesh, mat, omega, SolveOptions::default()).unwrap();
    let mut e = 0.0;
    for field in &chi {
        let g = corrector_gradient(field, mesh).unwrap();
        for (t, gt) in g.iter().enumerate() {
            let eps = mat.eps_bulk.value(mesh.regions[t]).re;
            e += eps * (gt[0].norm_sqr() + gt[1].norm_sqr()) * mesh.triangle_area(t);
        }
    }
    e
}

#[test]
fn tube_energy_settles_under_refinement() {
    let geom = build_geometry(GeometryKind::Tube {
        radius: 0.3,
        center: [0.5, 0.5],
    })
    .unwrap();
    let mat = drude(1.0);
    let e: Vec<f64> = [0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| energy(&generate_mesh(&geom, h).unwrap(), &mat, 1.0))
        .collect();
    let change = (e[2] - e[1]).abs() / e[2];
    assert!(change < 1e-2, "{e:?}");
    assert!(e[2] > 0.0);
}

fn certified_cases() -> Vec<(GeometryKind, MaterialSpec)> {
    vec![
        (GeometryKind::PlanarSheet, drude(2.0)),
        (GeometryKind::PlanarSheet, drude(0.7)),
        (
            GeometryKind::Ribbon { width: 0.7 },
            MaterialSpec::new(c(1.0, 0.0), c(0.0, 0.0), c(0.3, 2.0)),
        ),
        (
            GeometryKind::Tube {
                radius: 0.3,
                center: [0.5, 0.5],
            },
            MaterialSpec::dielectric(c(2.5, 0.1)),
        ),
        (
            GeometryKind::Corrugated {
                amplitude: 0.25,
                periods: 1,
            },
            MaterialSpec::dielectric(c(1.0, 0.0)),
        ),
    ]
}

#[test]
fn certified_correctors_vanish_and_match_the_closed_form() {
    for (kind, mat) in certified_cases() {
        let geom = build_geometry(kind).unwrap();
        assert!(check_divergence_free(&mat, &geom).overall, "{kind:?}");
        let mesh = generate_mesh(&geom, 0.05).unwrap();
        let omega = 2.0;
        let chi = solve_correctors(&mesh, &mat, omega, SolveOptions::default()).unwrap();
        for f in &chi {
            let sup = f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(sup <= 1e-8, "{kind:?}: {sup}");
        }
        let fem = effective_permittivity_fem(&mesh, &geom, &chi, &mat, omega).unwrap();
        let closed = effective_permittivity_closed_form(&mat, &geom, omega).unwrap();
        assert_eq!(fem.provenance, Provenance::Fem);
        for i in 1..=3 {
            for j in 1..=3 {
                let (a, b) = (fem.entry(i, j), closed.entry(i, j));
                let scale = closed.max_diagonal();
                assert!((a - b).norm() <= 1e-6 * scale, "{kind:?} ({i},{j}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn dielectric_inclusions_give_a_real_positive_tensor() {
    let geom = build_geometry(GeometryKind::Tube {
        radius: 0.3,
        center: [0.5, 0.5],
    })
    .unwrap();
    let mut mat = MaterialSpec::dielectric(c(1.0, 0.0));
    mat.eps_bulk = BulkPermittivity {
        outer: c(1.0, 0.0),
        inner: Some(c(4.0, 0.0)),
    };
    assert!(!check_divergence_free(&mat, &geom).volume_ok);
    let mesh = generate_mesh(&geom, 0.04).unwrap();
    let chi = solve_correctors(&mesh, &mat, 1.0, SolveOptions::default()).unwrap();
    let t = effective_permittivity_fem(&mesh, &geom, &chi, &mat, 1.0).unwrap();
    let m = |i, j| t.entry(i, j);
    for i in 1..=3 {
        for j in 1..=3 {
            assert!(m(i, j).im.abs() <= 1e-12 * t.max_diagonal());
            assert!((m(i, j) - m(j, i)).norm() <= 1e-10 * t.max_diagonal());
        }
    }
    let (a, b, d) = (m(1, 1).re, m(2, 2).re, m(1, 2).re);
    assert!(a > 0.0 && a * b - d * d > 0.0 && m(3, 3).re > 0.0);
    // between the harmonic and arithmetic means of the phases
    let f = std::f64::consts::PI * 0.09;
    let arith = 1.0 - f + 4.0 * f;
    let harm = 1.0 / (1.0 - f + f / 4.0);
    assert!(a > harm && a < arith, "{a}");
    assert!((m(3, 3).re - arith).abs() < 2e-2);
}
