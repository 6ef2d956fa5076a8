use num_complex::Complex64;

use super::*;
use crate::cellsolver::SolveOptions;
use crate::geometry::{build_geometry, generate_mesh, GeometryKind};
use crate::materials::{rescaled_eta, BulkPermittivity};
use crate::Error;

fn one() -> BulkPermittivity {
    BulkPermittivity::uniform(Complex64::new(1.0, 0.0))
}

fn planar_sweep(grid: &[f64]) -> Vec<SweepRecord> {
    let geom = build_geometry(GeometryKind::PlanarSheet).unwrap();
    let mesh = generate_mesh(&geom, 0.25).unwrap();
    let mat = drude_sheets(one(), 1.0, 20.72, Complex64::new(0.0, 0.0));
    frequency_sweep(&geom, &mesh, mat, grid, SolveOptions::default()).unwrap()
}

#[test]
fn planar_sweep_is_one_minus_eta() {
    let grid = linear_grid(0.5, 4.0, 36);
    let recs = planar_sweep(&grid);
    for r in &recs {
        let eta = rescaled_eta(1.0, 20.72, r.omega_tilde).unwrap();
        let close = |v: Complex64| (v - (1.0 - eta)).norm() <= 1e-13 * eta.norm();
        assert!(close(r.value(TensorEntry::Eps11).unwrap()));
        assert!(close(r.value(TensorEntry::Eps33).unwrap()));
        assert_eq!(r.value(TensorEntry::Eps22).unwrap(), Complex64::new(1.0, 0.0));
    }
}

#[test]
fn planar_zero_crossing_is_near_two() {
    let recs = planar_sweep(&linear_grid(0.5, 4.0, 351));
    let roots = find_enz_frequency(&recs, TensorEntry::Eps11);
    assert_eq!(roots.len(), 1);
    let w = roots[0].omega_tilde;
    assert_eq!(roots[0].direction, Direction::Rising);
    assert!((w - 2.0).abs() <= 0.01, "{w}");
    let re = 1.0 - rescaled_eta(1.0, 20.72, w).unwrap().re;
    assert!(re.abs() <= 1e-6, "{re}");
}

#[test]
fn grid_must_increase() {
    let geom = build_geometry(GeometryKind::PlanarSheet).unwrap();
    let mesh = generate_mesh(&geom, 0.25).unwrap();
    let mat = drude_sheets(one(), 1.0, 20.72, Complex64::new(0.0, 0.0));
    for bad in [vec![], vec![1.0, 1.0], vec![2.0, 1.0], vec![0.0, 1.0]] {
        assert!(frequency_sweep(&geom, &mesh, &mat, &bad, SolveOptions::default()).is_err());
    }
}

#[test]
fn failures_are_marked_and_the_sweep_continues() {
    let geom = build_geometry(GeometryKind::Ribbon { width: 0.5 }).unwrap();
    let mesh = generate_mesh(&geom, 0.1).unwrap();
    let base = drude_sheets(one(), 1.0, 20.72, Complex64::new(0.0, 0.0));
    let mat = |w: f64| {
        if (w - 2.0).abs() < 1e-12 {
            Err(Error::invalid("omega_tilde", "synthetic failure"))
        } else {
            base(w)
        }
    };
    let recs = frequency_sweep(&geom, &mesh, mat, &[1.0, 2.0, 3.0], SolveOptions::default()).unwrap();
    assert!(recs[0].is_ok() && !recs[1].is_ok() && recs[2].is_ok());
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &recs, None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], SWEEP_CSV_HEADER);
    assert!(lines[2].contains(",nan,") && lines[2].contains("failed"));
    assert!(lines[1].ends_with(",ok"));
}

#[test]
fn sweeps_are_bitwise_reproducible_across_thread_counts() {
    let geom = build_geometry(GeometryKind::Tube {
        radius: 0.3,
        center: [0.5, 0.5],
    })
    .unwrap();
    let mesh = generate_mesh(&geom, 0.08).unwrap();
    let grid = linear_grid(1.0, 3.0, 12);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mat = drude_sheets(one(), 1.0, 20.72, Complex64::new(0.0, 0.0));
            let recs = frequency_sweep(&geom, &mesh, mat, &grid, SolveOptions::default()).unwrap();
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &recs, Some("test")).unwrap();
            buf
        })
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(1));
}

#[test]
fn ribbon_goes_negative_and_plots_a_band() {
    let geom = build_geometry(GeometryKind::Ribbon { width: 0.7 }).unwrap();
    let mesh = generate_mesh(&geom, 0.1).unwrap();
    let mat = drude_sheets(one(), 1.0, 20.72, Complex64::new(0.0, 0.0));
    let recs = frequency_sweep(&geom, &mesh, mat, &linear_grid(0.5, 4.0, 100), SolveOptions::default()).unwrap();
    assert!(recs.iter().any(|r| r.value(TensorEntry::Eps11).unwrap().re < 0.0));
    let svg = sweep_svg(&recs, TensorEntry::Eps11);
    assert!(svg.contains("#dddddd"));
}

#[test]
fn entry_names_round_trip() {
    for e in [TensorEntry::Eps11, TensorEntry::Eps22, TensorEntry::Eps33] {
        assert_eq!(TensorEntry::parse(e.name()), Some(e));
    }
    assert_eq!(TensorEntry::parse("eps12"), None);
}
