use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::Region;

pub type Point = [f64; 2];

/// Distance under which a point counts as lying on an interface.
pub const ON_INTERFACE_TOL: f64 = 1e-9;

/// The prototypical cross-sections of the unit cell. All of them are
/// invariant along the third cell axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryKind {
    /// Flat sheet at `y2 = 1/2` spanning the cell.
    PlanarSheet,
    /// Strip of the given width at `y2 = 1/2`, centred in the cell.
    Ribbon { width: f64 },
    /// Cylinder of the given radius.
    Tube {
        radius: f64,
        #[serde(default = "cell_center")]
        center: Point,
    },
    /// Sheet following `y2 = 1/2 + amplitude * sin(2 pi periods y1)`.
    Corrugated {
        amplitude: f64,
        #[serde(default = "one_period")]
        periods: u32,
    },
}

fn cell_center() -> Point {
    [0.5, 0.5]
}

fn one_period() -> u32 {
    1
}

impl GeometryKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::PlanarSheet => "planar_sheet",
            GeometryKind::Ribbon { .. } => "ribbon",
            GeometryKind::Tube { .. } => "tube",
            GeometryKind::Corrugated { .. } => "corrugated",
        }
    }
}

/// Shape of a single interface curve in the `y1 y2` cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CurveShape {
    Segment {
        start: Point,
        end: Point,
    },
    /// Counter-clockwise circle.
    Circle {
        center: Point,
        radius: f64,
    },
    /// Graph of `base + amplitude * sin(2 pi periods y1)` over `y1 in [0, 1]`.
    Sine {
        base: f64,
        amplitude: f64,
        periods: u32,
    },
}

/// Oriented interface curve, parametrised by `s in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurve {
    pub shape: CurveShape,
}

const SINE_QUADRATURE_POINTS: usize = 4096;

impl InterfaceCurve {
    pub fn new(shape: CurveShape) -> Self {
        Self { shape }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.shape, CurveShape::Circle { .. })
    }

    pub fn is_straight(&self) -> bool {
        match self.shape {
            CurveShape::Segment { .. } => true,
            CurveShape::Sine { amplitude, .. } => amplitude == 0.0,
            CurveShape::Circle { .. } => false,
        }
    }

    /// True when the curve runs from the face `y1 = 0` to the face `y1 = 1`.
    pub fn spans_cell(&self) -> bool {
        match self.shape {
            CurveShape::Sine { .. } => true,
            CurveShape::Segment { start, end } => start[0] == 0.0 && end[0] == 1.0 && start[1] == end[1],
            CurveShape::Circle { .. } => false,
        }
    }

    pub fn point(&self, s: f64) -> Point {
        match self.shape {
            CurveShape::Segment { start, end } => {
                [start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])]
            }
            CurveShape::Circle { center, radius } => {
                let theta = 2.0 * PI * s;
                [center[0] + radius * theta.cos(), center[1] + radius * theta.sin()]
            }
            CurveShape::Sine {
                base,
                amplitude,
                periods,
            } => {
                let k = 2.0 * PI * periods as f64;
                [s, base + amplitude * (k * s).sin()]
            }
        }
    }

    fn derivative(&self, s: f64) -> Point {
        match self.shape {
            CurveShape::Segment { start, end } => [end[0] - start[0], end[1] - start[1]],
            CurveShape::Circle { radius, .. } => {
                let theta = 2.0 * PI * s;
                [-2.0 * PI * radius * theta.sin(), 2.0 * PI * radius * theta.cos()]
            }
            CurveShape::Sine { amplitude, periods, .. } => {
                let k = 2.0 * PI * periods as f64;
                [1.0, amplitude * k * (k * s).cos()]
            }
        }
    }

    /// Unit tangent in the direction of increasing parameter.
    pub fn tangent(&self, s: f64) -> Point {
        let d = self.derivative(s);
        let n = d[0].hypot(d[1]);
        [d[0] / n, d[1] / n]
    }

    /// Unit normal: the tangent turned clockwise by a right angle (outward
    /// for the circle).
    pub fn normal(&self, s: f64) -> Point {
        let t = self.tangent(s);
        [t[1], -t[0]]
    }

    pub fn length(&self) -> f64 {
        match self.shape {
            CurveShape::Segment { start, end } => (end[0] - start[0]).hypot(end[1] - start[1]),
            CurveShape::Circle { radius, .. } => 2.0 * PI * radius,
            // periodic integrand: the trapezoidal rule converges geometrically
            CurveShape::Sine { .. } => {
                let n = SINE_QUADRATURE_POINTS;
                (0..n)
                    .map(|i| {
                        let d = self.derivative(i as f64 / n as f64);
                        d[0].hypot(d[1])
                    })
                    .sum::<f64>()
                    / n as f64
            }
        }
    }

    /// `integral of t t^T` along the curve (the in-plane projector moment).
    pub fn tangent_moment(&self) -> [[f64; 2]; 2] {
        match self.shape {
            CurveShape::Segment { .. } => {
                let t = self.tangent(0.0);
                let l = self.length();
                [[l * t[0] * t[0], l * t[0] * t[1]], [l * t[1] * t[0], l * t[1] * t[1]]]
            }
            CurveShape::Circle { radius, .. } => [[PI * radius, 0.0], [0.0, PI * radius]],
            CurveShape::Sine { .. } => {
                let n = SINE_QUADRATURE_POINTS;
                let mut m = [[0.0; 2]; 2];
                for i in 0..n {
                    let d = self.derivative(i as f64 / n as f64);
                    let speed = d[0].hypot(d[1]);
                    let t = [d[0] / speed, d[1] / speed];
                    for a in 0..2 {
                        for b in 0..2 {
                            m[a][b] += t[a] * t[b] * speed / n as f64;
                        }
                    }
                }
                m
            }
        }
    }

    /// Closest curve parameter and distance to `p`.
    pub fn closest(&self, p: Point) -> (f64, f64) {
        match self.shape {
            CurveShape::Segment { start, end } => {
                let d = [end[0] - start[0], end[1] - start[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let s = (((p[0] - start[0]) * d[0] + (p[1] - start[1]) * d[1]) / len2).clamp(0.0, 1.0);
                let q = self.point(s);
                (s, (p[0] - q[0]).hypot(p[1] - q[1]))
            }
            CurveShape::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let r = dx.hypot(dy);
                let s = dy.atan2(dx).rem_euclid(2.0 * PI) / (2.0 * PI);
                (s, (r - radius).abs())
            }
            CurveShape::Sine { .. } => {
                let samples = 512;
                let dist2 = |s: f64| {
                    let q = self.point(s);
                    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
                };
                let mut best = 0.0;
                let mut best_d = f64::INFINITY;
                for i in 0..=samples {
                    let s = i as f64 / samples as f64;
                    let d = dist2(s);
                    if d < best_d {
                        best_d = d;
                        best = s;
                    }
                }
                // golden-section polish on the bracketing interval
                let (mut lo, mut hi) = (
                    (best - 1.0 / samples as f64).max(0.0),
                    (best + 1.0 / samples as f64).min(1.0),
                );
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..80 {
                    let a = hi - g * (hi - lo);
                    let b = lo + g * (hi - lo);
                    if dist2(a) < dist2(b) {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                let s = 0.5 * (lo + hi);
                (s, dist2(s).sqrt())
            }
        }
    }

    /// Parameter values `0 = s_0 < ... < s_n` (or `< 1` for the circle)
    /// giving segments of arc length at most `h`. Curved shapes use a power
    /// of two segments so halving `h` exactly doubles the count.
    pub fn uniform_parameters(&self, h: f64) -> Vec<f64> {
        let len = self.length();
        let curved = |min: usize| ((len / h).ceil() as usize).max(min).next_power_of_two();
        match self.shape {
            CurveShape::Circle { .. } => {
                let n = curved(16);
                (0..n).map(|i| i as f64 / n as f64).collect()
            }
            CurveShape::Segment { .. } => {
                let n = ((len / h).round() as usize).max(1);
                (0..=n).map(|i| i as f64 / n as f64).collect()
            }
            CurveShape::Sine { .. } => {
                let n = curved(4);
                // invert the cumulative arc length on a fine table
                let fine = SINE_QUADRATURE_POINTS;
                let mut cum = vec![0.0; fine + 1];
                for i in 0..fine {
                    let a = self.derivative(i as f64 / fine as f64);
                    let b = self.derivative((i + 1) as f64 / fine as f64);
                    cum[i + 1] = cum[i] + 0.5 * (a[0].hypot(a[1]) + b[0].hypot(b[1])) / fine as f64;
                }
                let total = cum[fine];
                let mut out = Vec::with_capacity(n + 1);
                out.push(0.0);
                let mut k = 0;
                for i in 1..n {
                    let target = total * i as f64 / n as f64;
                    while cum[k + 1] < target {
                        k += 1;
                    }
                    let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
                    out.push((k as f64 + frac) / fine as f64);
                }
                out.push(1.0);
                out
            }
        }
    }
}

/// End point of an open sheet, carrying the in-sheet outward tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgePoint {
    pub position: Point,
    pub outward: Point,
    pub curve: usize,
}

/// Cross-section of the unit cell with its embedded sheets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCellGeometry {
    pub kind: GeometryKind,
    pub interfaces: Vec<InterfaceCurve>,
    pub edges: Vec<EdgePoint>,
}

impl UnitCellGeometry {
    /// Index of the cell axis along which nothing varies (1-based).
    pub const INVARIANT_AXIS: usize = 3;

    /// Total interface length in the cross-section (surface measure per unit
    /// extent along the invariant axis).
    pub fn surface_measure(&self) -> f64 {
        self.interfaces.iter().map(InterfaceCurve::length).sum()
    }

    /// `integral over the interfaces of t t^T`.
    pub fn tangent_moment(&self) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for c in &self.interfaces {
            let cm = c.tangent_moment();
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += cm[a][b];
                }
            }
        }
        m
    }

    /// Area of the inner region (inside closed curves or below spanning ones).
    pub fn inner_area(&self) -> f64 {
        self.interfaces
            .iter()
            .map(|c| match c.shape {
                CurveShape::Circle { radius, .. } => PI * radius * radius,
                CurveShape::Sine { base, .. } => base,
                CurveShape::Segment { start, .. } if c.spans_cell() => start[1],
                CurveShape::Segment { .. } => 0.0,
            })
            .sum()
    }

    /// Which side of the interfaces `p` lies on.
    pub fn region_of(&self, p: Point) -> Region {
        for c in &self.interfaces {
            let inside = match c.shape {
                CurveShape::Circle { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) < radius,
                CurveShape::Sine { .. } => p[1] < c.point(p[0])[1],
                CurveShape::Segment { start, .. } if c.spans_cell() => p[1] < start[1],
                CurveShape::Segment { .. } => false,
            };
            if inside {
                return Region::Inner;
            }
        }
        Region::Outer
    }

    /// True when some region of the cell is enclosed or bounded by a sheet.
    pub fn has_inner_region(&self) -> bool {
        self.interfaces.iter().any(|c| c.is_closed() || c.spans_cell())
    }

    /// Nearest interface to `p`: `(curve index, parameter, distance)`.
    pub fn nearest_interface(&self, p: Point) -> Option<(usize, f64, f64)> {
        self.interfaces
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (s, d) = c.closest(p);
                (i, s, d)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }
}

pub fn build_geometry(kind: GeometryKind) -> Result<UnitCellGeometry> {
    let mut edges = Vec::new();
    let interfaces = match kind {
        GeometryKind::PlanarSheet => vec![InterfaceCurve::new(CurveShape::Segment {
            start: [0.0, 0.5],
            end: [1.0, 0.5],
        })],
        GeometryKind::Ribbon { width } => {
            if !(width > 0.0 && width < 1.0) {
                return Err(Error::Geometry(format!("ribbon width must lie in (0, 1), got {width}")));
            }
            let start = [0.5 - 0.5 * width, 0.5];
            let end = [0.5 + 0.5 * width, 0.5];
            edges.push(EdgePoint {
                position: start,
                outward: [-1.0, 0.0],
                curve: 0,
            });
            edges.push(EdgePoint {
                position: end,
                outward: [1.0, 0.0],
                curve: 0,
            });
            vec![InterfaceCurve::new(CurveShape::Segment { start, end })]
        }
        GeometryKind::Tube { radius, center } => {
            if !(radius > 0.0 && radius < 0.5) {
                return Err(Error::Geometry(format!(
                    "tube radius must lie in (0, 0.5), got {radius}"
                )));
            }
            let fits = center[0] - radius > 0.0
                && center[0] + radius < 1.0
                && center[1] - radius > 0.0
                && center[1] + radius < 1.0;
            if !fits {
                return Err(Error::Geometry(format!(
                    "tube of radius {radius} at ({}, {}) leaves the cell",
                    center[0], center[1]
                )));
            }
            vec![InterfaceCurve::new(CurveShape::Circle { center, radius })]
        }
        GeometryKind::Corrugated { amplitude, periods } => {
            if !(0.0..0.5).contains(&amplitude) {
                return Err(Error::Geometry(format!(
                    "corrugation amplitude must lie in [0, 0.5), got {amplitude}"
                )));
            }
            if periods == 0 {
                return Err(Error::Geometry("corrugation needs at least one period".into()));
            }
            vec![InterfaceCurve::new(CurveShape::Sine {
                base: 0.5,
                amplitude,
                periods,
            })]
        }
    };
    Ok(UnitCellGeometry {
        kind,
        interfaces,
        edges,
    })
}

/// Tangential projector `t t^T` of the interface through `point`.
pub fn surface_projection(geom: &UnitCellGeometry, point: Point) -> Result<[[f64; 2]; 2]> {
    let (curve, s, distance) = geom
        .nearest_interface(point)
        .ok_or_else(|| Error::Geometry("geometry has no interfaces".into()))?;
    if distance > ON_INTERFACE_TOL {
        return Err(Error::OffInterface {
            x: point[0],
            y: point[1],
            distance,
        });
    }
    let t = geom.interfaces[curve].tangent(s);
    Ok(projector(t))
}

pub(crate) fn projector(t: Point) -> [[f64; 2]; 2] {
    [[t[0] * t[0], t[0] * t[1]], [t[1] * t[0], t[1] * t[1]]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    }

    #[test]
    fn planar_sheet_has_unit_length_and_no_edges() {
        let g = build_geometry(GeometryKind::PlanarSheet).unwrap();
        assert!(g.edges.is_empty());
        assert_eq!(g.surface_measure(), 1.0);
        let p = surface_projection(&g, [0.3, 0.5]).unwrap();
        assert_eq!(p, [[1.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn tube_circumference() {
        let g = build_geometry(GeometryKind::Tube {
            radius: 0.25,
            center: [0.5, 0.5],
        })
        .unwrap();
        assert!(g.edges.is_empty());
        assert!(g.interfaces[0].is_closed());
        assert!((g.surface_measure() - 2.0 * PI * 0.25).abs() < 1e-15);
    }

    #[test]
    fn ribbon_has_two_edges() {
        let g = build_geometry(GeometryKind::Ribbon { width: 0.7 }).unwrap();
        assert_eq!(g.edges.len(), 2);
        assert!((g.surface_measure() - 0.7).abs() < 1e-15);
        assert!((g.edges[0].position[0] - 0.15).abs() < 1e-15 && g.edges[0].position[1] == 0.5);
        assert_eq!(g.edges[1].outward, [1.0, 0.0]);
    }

    #[test]
    fn corrugated_length_matches_quadrature() {
        let g = build_geometry(GeometryKind::Corrugated {
            amplitude: 0.25,
            periods: 1,
        })
        .unwrap();
        // independent composite Simpson with many panels
        let n = 200_000;
        let f = |x: f64| (1.0 + (0.25 * 2.0 * PI * (2.0 * PI * x).cos()).powi(2)).sqrt();
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let simpson = s * h / 3.0;
        assert!((g.surface_measure() - simpson).abs() < 1e-10);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(build_geometry(GeometryKind::Ribbon { width: 1.0 }).is_err());
        assert!(build_geometry(GeometryKind::Ribbon { width: 0.0 }).is_err());
        assert!(build_geometry(GeometryKind::Tube {
            radius: 0.6,
            center: [0.5, 0.5]
        })
        .is_err());
        assert!(build_geometry(GeometryKind::Tube {
            radius: 0.3,
            center: [0.2, 0.5]
        })
        .is_err());
        assert!(build_geometry(GeometryKind::Corrugated {
            amplitude: 0.5,
            periods: 1
        })
        .is_err());
        assert!(build_geometry(GeometryKind::Corrugated {
            amplitude: 0.1,
            periods: 0
        })
        .is_err());
    }

    #[test]
    fn tube_projection_at_angle() {
        let g = build_geometry(GeometryKind::Tube {
            radius: 0.25,
            center: [0.5, 0.5],
        })
        .unwrap();
        let theta: f64 = 0.7;
        let p = [0.5 + 0.25 * theta.cos(), 0.5 + 0.25 * theta.sin()];
        let proj = surface_projection(&g, p).unwrap();
        let t = [-theta.sin(), theta.cos()];
        for i in 0..2 {
            for j in 0..2 {
                assert!((proj[i][j] - t[i] * t[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn off_interface_point_is_rejected() {
        let g = build_geometry(GeometryKind::PlanarSheet).unwrap();
        assert!(matches!(
            surface_projection(&g, [0.3, 0.6]),
            Err(Error::OffInterface { .. })
        ));
    }

    #[test]
    fn regions() {
        let g = build_geometry(GeometryKind::Tube {
            radius: 0.25,
            center: [0.5, 0.5],
        })
        .unwrap();
        assert_eq!(g.region_of([0.5, 0.5]), Region::Inner);
        assert_eq!(g.region_of([0.05, 0.05]), Region::Outer);
        assert!((g.inner_area() - PI / 16.0).abs() < 1e-15);
        let r = build_geometry(GeometryKind::Ribbon { width: 0.5 }).unwrap();
        assert_eq!(r.region_of([0.5, 0.2]), Region::Outer);
        assert!(!r.has_inner_region());
    }

    fn any_curve() -> impl Strategy<Value = InterfaceCurve> {
        prop_oneof![
            (0.05f64..0.45).prop_map(|r| InterfaceCurve::new(CurveShape::Circle {
                center: [0.5, 0.5],
                radius: r
            })),
            (0.0f64..0.45, 1u32..4).prop_map(|(a, k)| InterfaceCurve::new(CurveShape::Sine {
                base: 0.5,
                amplitude: a,
                periods: k
            })),
            (0.05f64..0.95).prop_map(|w| InterfaceCurve::new(CurveShape::Segment {
                start: [0.5 - w / 2.0, 0.5],
                end: [0.5 + w / 2.0, 0.5]
            })),
        ]
    }

    proptest! {
        #[test]
        fn projector_properties(curve in any_curve(), s in 0.0f64..1.0) {
            let t = curve.tangent(s);
            let nu = curve.normal(s);
            let p = projector(t);
            let p2 = matmul(p, p);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((p2[i][j] - p[i][j]).abs() < 1e-12);
                    prop_assert!((p[i][j] - p[j][i]).abs() < 1e-12);
                }
                let pnu = p[i][0] * nu[0] + p[i][1] * nu[1];
                prop_assert!(pnu.abs() < 1e-12);
            }
            prop_assert!((nu[0].hypot(nu[1]) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn projection_via_geometry(curve in any_curve(), s in 0.0f64..1.0) {
            let g = UnitCellGeometry { kind: GeometryKind::PlanarSheet, interfaces: vec![curve], edges: vec![] };
            let p = surface_projection(&g, curve.point(s)).unwrap();
            let nu = curve.normal(s);
            for i in 0..2 {
                prop_assert!((p[i][0] * nu[0] + p[i][1] * nu[1]).abs() < 1e-9);
            }
        }
    }
}
