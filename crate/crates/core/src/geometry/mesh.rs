use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::shapes::{CurveShape, Point, UnitCellGeometry};
use crate::error::{Error, Result};
use crate::materials::Region;

/// Relative tolerance (in units of `h`) for matching periodic partners.
pub const PERIODIC_TOL: f64 = 1e-12;

/// Interior background vertices closer than this fraction of the grid
/// spacing to an interface are dropped in favour of interface vertices.
const INTERFACE_CLEARANCE: f64 = 0.45;
/// Number of geometric refinement rings around each sheet edge.
const EDGE_RINGS: usize = 5;
const RING_POINTS: usize = 12;

/// Straight piece of a discretised interface; always a triangle edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceSegment {
    pub start: usize,
    pub end: usize,
    pub curve: usize,
}

/// Identification of a vertex on a lower face with its image on the upper
/// face. `axis` is 0 for the faces `y1 = 0, 1` and 1 for `y2 = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicPair {
    pub axis: u8,
    pub low: usize,
    pub high: usize,
}

/// Interface-conforming triangulation of the cell cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub interface_segments: Vec<InterfaceSegment>,
    pub edge_vertices: Vec<usize>,
    pub periodic_pairs: Vec<PeriodicPair>,
    pub h: f64,
}

impl Mesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn segment_length(&self, s: usize) -> f64 {
        let seg = self.interface_segments[s];
        let a = self.vertices[seg.start];
        let b = self.vertices[seg.end];
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Unit tangent of a segment, oriented from `start` to `end`.
    pub fn segment_tangent(&self, s: usize) -> Point {
        let seg = self.interface_segments[s];
        let a = self.vertices[seg.start];
        let b = self.vertices[seg.end];
        let l = (b[0] - a[0]).hypot(b[1] - a[1]);
        [(b[0] - a[0]) / l, (b[1] - a[1]) / l]
    }

    pub fn interface_length(&self) -> f64 {
        (0..self.interface_segments.len()).map(|s| self.segment_length(s)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Vertices on a face `y_axis = value`.
    pub fn face_vertices(&self, axis: usize, value: f64) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&v| self.vertices[v][axis] == value)
            .collect()
    }

    /// Content hash used to tie correctors to the mesh they were solved on.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.vertices.len() as u64);
        eat(self.triangles.len() as u64);
        for v in &self.vertices {
            eat(v[0].to_bits());
            eat(v[1].to_bits());
        }
        for t in &self.triangles {
            for &i in t {
                eat(i as u64);
            }
        }
        for s in &self.interface_segments {
            eat(s.start as u64);
            eat(s.end as u64);
        }
        h
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn check(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::Mesh(format!("triangle {t} is not positively oriented")));
            }
        }
        let edges = self.edge_set();
        for (i, s) in self.interface_segments.iter().enumerate() {
            if !edges.contains(&ordered(s.start, s.end)) {
                return Err(Error::Mesh(format!(
                    "interface segment {i} ({}, {}) is not a triangle edge",
                    s.start, s.end
                )));
            }
        }
        let tol = PERIODIC_TOL * self.h;
        for p in &self.periodic_pairs {
            let axis = p.axis as usize;
            let (lo, hi) = (self.vertices[p.low], self.vertices[p.high]);
            if lo[axis] != 0.0 || hi[axis] != 1.0 || (lo[1 - axis] - hi[1 - axis]).abs() > tol {
                return Err(Error::Mesh(format!("bad periodic pair {p:?}")));
            }
        }
        Ok(())
    }

    pub(crate) fn edge_set(&self) -> HashSet<(usize, usize)> {
        let mut edges = HashSet::with_capacity(3 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            edges.insert(ordered(a, b));
            edges.insert(ordered(b, c));
            edges.insert(ordered(c, a));
        }
        edges
    }

    /// Periodic equivalence classes: `(class of each vertex, class count)`.
    /// Classes are numbered in order of their smallest vertex.
    pub fn periodic_classes(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for p in &self.periodic_pairs {
            let a = find(&mut parent, p.low);
            let b = find(&mut parent, p.high);
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
        let mut class = vec![usize::MAX; n];
        let mut count = 0;
        let mut root_class = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_class[r] == usize::MAX {
                root_class[r] = count;
                count += 1;
            }
            class[v] = root_class[r];
        }
        (class, count)
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Point set under construction with exact-duplicate suppression.
struct PointSet {
    points: Vec<Point>,
    seen: std::collections::HashMap<(u64, u64), usize>,
}

impl PointSet {
    fn new() -> Self {
        Self {
            points: Vec::new(),
            seen: Default::default(),
        }
    }

    fn add(&mut self, p: Point) -> usize {
        // normalise -0.0
        let p = [p[0] + 0.0, p[1] + 0.0];
        let key = (p[0].to_bits(), p[1].to_bits());
        if let Some(&i) = self.seen.get(&key) {
            return i;
        }
        self.points.push(p);
        self.seen.insert(key, self.points.len() - 1);
        self.points.len() - 1
    }
}

/// Interface-fitted triangulation of the cell: a structured background grid
/// of spacing `1/ceil(1/h)`, background vertices near the interfaces replaced
/// by interface vertices, geometric rings of vertices around sheet edges, and
/// a constrained Delaunay re-triangulation that keeps every interface
/// segment as a mesh edge. Boundary vertices are placed identically on
/// opposite faces so they pair up exactly.
pub fn generate_mesh(geom: &UnitCellGeometry, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::invalid("h", format!("must lie in (0, 0.5], got {h}")));
    }
    let n = (1.0 / h).ceil() as usize;
    let hh = 1.0 / n as f64;
    let grid = |k: usize| if k == n { 1.0 } else { k as f64 / n as f64 };

    let mut set = PointSet::new();
    let mut constraints: Vec<(usize, usize, usize)> = Vec::new();

    // boundary: grid points plus the points where sheets cross the faces
    let mut face_coords: Vec<f64> = (0..=n).map(grid).collect();
    let mut crossings: Vec<f64> = Vec::new();
    for c in &geom.interfaces {
        if c.spans_cell() {
            crossings.push(c.point(0.0)[1]);
        }
    }
    // crossings only exist on the y1 faces; keep the y2 faces on the plain grid
    let mut side_coords = face_coords.clone();
    for &y in &crossings {
        side_coords.retain(|&v| v == 0.0 || v == 1.0 || (v - y).abs() >= 0.4 * hh || v == y);
        side_coords.push(y);
    }
    side_coords.sort_by(f64::total_cmp);
    side_coords.dedup();
    face_coords.sort_by(f64::total_cmp);
    for &x in &face_coords {
        set.add([x, 0.0]);
        set.add([x, 1.0]);
    }
    for &y in &side_coords {
        set.add([0.0, y]);
        set.add([1.0, y]);
    }

    // interface vertices and constraint segments
    let mut curve_points: Vec<Vec<Point>> = Vec::new();
    for (ci, curve) in geom.interfaces.iter().enumerate() {
        let params = match curve.shape {
            CurveShape::Segment { .. } if !curve.spans_cell() => graded_segment_parameters(curve.length(), hh),
            _ => curve.uniform_parameters(hh),
        };
        let mut pts: Vec<Point> = params.iter().map(|&s| curve.point(s)).collect();
        if curve.spans_cell() {
            // pin the face crossings exactly
            let y0 = curve.point(0.0)[1];
            pts[0] = [0.0, y0];
            let last = pts.len() - 1;
            pts[last] = [1.0, y0];
        }
        let ids: Vec<usize> = pts.iter().map(|&p| set.add(p)).collect();
        let count = if curve.is_closed() { ids.len() } else { ids.len() - 1 };
        for k in 0..count {
            let a = ids[k];
            let b = ids[(k + 1) % ids.len()];
            if a == b {
                return Err(Error::Mesh(format!("interface {ci} discretisation collapsed")));
            }
            constraints.push((a, b, ci));
        }
        curve_points.push(pts);
    }

    // refinement rings around sheet edges
    let mut edge_ids = Vec::new();
    for edge in &geom.edges {
        let e = edge.position;
        edge_ids.push(set.add(e));
        let into_sheet = (-edge.outward[1]).atan2(-edge.outward[0]);
        for k in 0..EDGE_RINGS {
            let r = hh / f64::powi(2.0, k as i32);
            for m in 0..RING_POINTS {
                let ang = into_sheet + 2.0 * std::f64::consts::PI * m as f64 / RING_POINTS as f64;
                if m == 0 {
                    continue; // on the sheet: already an interface vertex
                }
                let p = [e[0] + r * ang.cos(), e[1] + r * ang.sin()];
                let margin = 0.5 * r;
                if p[0] > margin && p[0] < 1.0 - margin && p[1] > margin && p[1] < 1.0 - margin {
                    set.add(p);
                }
            }
        }
    }

    // interior background vertices away from interfaces and edges
    for i in 1..n {
        for j in 1..n {
            let p = [grid(i), grid(j)];
            let near_edge = geom
                .edges
                .iter()
                .any(|e| (p[0] - e.position[0]).hypot(p[1] - e.position[1]) < 1.2 * hh);
            if near_edge {
                continue;
            }
            let near_curve = geom
                .interfaces
                .iter()
                .any(|c| c.closest(p).1 < INTERFACE_CLEARANCE * hh);
            if near_curve {
                continue;
            }
            set.add(p);
        }
    }

    let vertices = set.points;
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(vertices.len());
    for p in &vertices {
        let hnd = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Mesh(format!("vertex insertion failed at ({}, {}): {e:?}", p[0], p[1])))?;
        handles.push(hnd);
    }
    let mut spade_to_ours = vec![usize::MAX; cdt.num_vertices()];
    for (ours, hnd) in handles.iter().enumerate() {
        if spade_to_ours[hnd.index()] != usize::MAX {
            return Err(Error::Mesh("coincident vertices after insertion".into()));
        }
        spade_to_ours[hnd.index()] = ours;
    }
    for &(a, b, ci) in &constraints {
        if !cdt.can_add_constraint(handles[a], handles[b]) {
            return Err(Error::Mesh(format!(
                "interface {ci} segment ({a}, {b}) crosses another interface"
            )));
        }
        cdt.add_constraint(handles[a], handles[b]);
    }

    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| spade_to_ours[v.fix().index()]);
        if a == usize::MAX || b == usize::MAX || c == usize::MAX {
            return Err(Error::Mesh("triangulation introduced an unknown vertex".into()));
        }
        let area = signed_area(vertices[a], vertices[b], vertices[c]);
        if area > 0.0 {
            triangles.push([a, b, c]);
        } else if area < 0.0 {
            triangles.push([a, c, b]);
        } else {
            return Err(Error::Mesh(format!("degenerate triangle ({a}, {b}, {c})")));
        }
    }
    // deterministic ordering independent of the triangulator's internals
    triangles.sort_unstable_by_key(|t| {
        let mut s = *t;
        s.sort_unstable();
        s
    });

    let interface_segments = constraints
        .iter()
        .map(|&(start, end, curve)| InterfaceSegment { start, end, curve })
        .collect::<Vec<_>>();

    let mut mesh = Mesh {
        regions: Vec::new(),
        vertices,
        triangles,
        interface_segments,
        edge_vertices: edge_ids,
        periodic_pairs: Vec::new(),
        h: hh,
    };
    mesh.regions = (0..mesh.triangles.len())
        .map(|t| geom.region_of(mesh.centroid(t)))
        .collect();
    mesh.periodic_pairs = pair_faces(&mesh)?;
    mesh.check()?;
    Ok(mesh)
}

/// Parameters in `[0, 1]` for an open segment: uniform spacing close to
/// `hh` in the middle and the geometric ring radii near both ends.
fn graded_segment_parameters(length: f64, hh: f64) -> Vec<f64> {
    let n = ((length / hh).round() as usize).max(1);
    let mut d: Vec<f64> = (1..n)
        .map(|i| length * i as f64 / n as f64)
        .filter(|&x| x.min(length - x) >= 1.5 * hh)
        .collect();
    for k in 0..EDGE_RINGS {
        let r = hh / f64::powi(2.0, k as i32);
        if r < 0.4 * length {
            d.push(r);
            d.push(length - r);
        }
    }
    d.push(0.0);
    d.push(length);
    d.sort_by(f64::total_cmp);
    d.dedup();
    d.into_iter().map(|x| x / length).collect()
}

fn pair_faces(mesh: &Mesh) -> Result<Vec<PeriodicPair>> {
    let tol = PERIODIC_TOL * mesh.h;
    let mut pairs = Vec::new();
    for axis in 0..2 {
        let other = 1 - axis;
        let mut low = mesh.face_vertices(axis, 0.0);
        let mut high = mesh.face_vertices(axis, 1.0);
        low.sort_by(|&a, &b| mesh.vertices[a][other].total_cmp(&mesh.vertices[b][other]));
        high.sort_by(|&a, &b| mesh.vertices[a][other].total_cmp(&mesh.vertices[b][other]));
        if low.len() != high.len() {
            return Err(Error::Mesh(format!(
                "faces y{} = 0 and y{} = 1 carry {} and {} vertices",
                axis + 1,
                axis + 1,
                low.len(),
                high.len()
            )));
        }
        for (&a, &b) in low.iter().zip(&high) {
            if (mesh.vertices[a][other] - mesh.vertices[b][other]).abs() > tol {
                return Err(Error::Mesh(format!(
                    "no periodic partner for vertex {a} on face y{} = 0",
                    axis + 1
                )));
            }
            pairs.push(PeriodicPair {
                axis: axis as u8,
                low: a,
                high: b,
            });
        }
    }
    Ok(pairs)
}
