//! Structured triangulations of truncated positive phases.
//!
//! Every generator is deterministic. Boundary edges carry a tag: `FREE`
//! edges lie on the free boundary and store the exact mean curvature at
//! both endpoints, `DIRICHLET` edges are artificial truncation cuts.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::solutions::{self, SolutionKind};
use crate::{Error, Point, Result};

/// Smallest admissible triangle area.
pub const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeTag {
    Free,
    Dirichlet,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Free => "FREE",
            EdgeTag::Dirichlet => "DIRICHLET",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: EdgeTag,
    /// Mean curvature at the two endpoints (zero on `DIRICHLET` edges).
    pub h: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = 180.0f64;
        for tri in &self.triangles {
            let p = tri.map(|i| self.vertices[i]);
            for k in 0..3 {
                let u = sub(p[(k + 1) % 3], p[k]);
                let v = sub(p[(k + 2) % 3], p[k]);
                let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Longest edge length.
    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| norm(sub(self.vertices[a], self.vertices[b])))
            .fold(0.0, f64::max)
    }

    /// Number of distinct edges.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        norm(sub(self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]))
    }

    pub fn tagged_length(&self, tag: EdgeTag) -> f64 {
        self.boundary_edges.iter().filter(|e| e.tag == tag).map(|e| self.edge_length(e)).sum()
    }

    pub fn count_edges(&self, tag: EdgeTag) -> usize {
        self.boundary_edges.iter().filter(|e| e.tag == tag).count()
    }

    /// Vertices touching a `DIRICHLET` edge.
    pub fn dirichlet_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in self.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Dirichlet) {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    /// Vertices touching a `FREE` edge.
    pub fn free_boundary_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for e in self.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Free) {
            mask[e.vertices[0]] = true;
            mask[e.vertices[1]] = true;
        }
        mask
    }

    /// Check every structural invariant: index ranges, positive orientation,
    /// boundary edges matching the topological boundary exactly once,
    /// zero curvature on `DIRICHLET` edges and no unused vertices.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        let mut used = vec![false; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::Argument(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Argument(format!("triangle {t} repeats a vertex")));
            }
            let a = self.signed_area(t);
            if a < MIN_AREA {
                return Err(Error::Argument(format!("triangle {t} has signed area {a:e}")));
            }
            for &i in tri {
                used[i] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Argument(format!("vertex {v} belongs to no triangle")));
        }
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Argument(format!("edge {e:?} is shared by {c} triangles")));
        }
        let topological = count.values().filter(|&&c| c == 1).count();
        let mut tagged = HashMap::new();
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let [a, b] = e.vertices;
            if a >= nv || b >= nv {
                return Err(Error::Argument(format!("boundary edge {k} references a missing vertex")));
            }
            let key = edge_key(a, b);
            if count.get(&key) != Some(&1) {
                return Err(Error::Argument(format!("boundary edge {k} ({a}, {b}) is not on the mesh boundary")));
            }
            if tagged.insert(key, k).is_some() {
                return Err(Error::Argument(format!("boundary edge ({a}, {b}) is tagged twice")));
            }
            if e.tag == EdgeTag::Dirichlet && e.h != [0.0, 0.0] {
                return Err(Error::Argument(format!("DIRICHLET edge {k} carries nonzero curvature")));
            }
            if !(e.h[0].is_finite() && e.h[1].is_finite()) {
                return Err(Error::Argument(format!("boundary edge {k} has non-finite curvature")));
            }
        }
        if tagged.len() != topological {
            return Err(Error::Argument(format!(
                "{} boundary edges are tagged but the mesh boundary has {topological}",
                tagged.len()
            )));
        }
        Ok(())
    }

    /// Disjoint union of two meshes.
    pub fn union(&self, other: &TriMesh) -> TriMesh {
        let off = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + off)));
        out.boundary_edges.extend(other.boundary_edges.iter().map(|e| BoundaryEdge {
            vertices: e.vertices.map(|i| i + off),
            ..*e
        }));
        out
    }
}

/// Collect boundary edges (edges of exactly one triangle) in triangle
/// order, oriented as in their triangle, and tag them with `classify`.
fn tag_boundary(triangles: &[[usize; 3]], mut classify: impl FnMut(usize, usize) -> (EdgeTag, [f64; 2])) -> Vec<BoundaryEdge> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            *count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut out = Vec::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if count[&edge_key(a, b)] == 1 {
                let (tag, h) = classify(a, b);
                out.push(BoundaryEdge { vertices: [a, b], tag, h });
            }
        }
    }
    out
}

/// Split the logical cell with corners `(i, j)`, `(i+1, j)`, `(i+1, j+1)`,
/// `(i, j+1)` (counterclockwise in logical space) into two triangles,
/// alternating the diagonal with the parity of `parity`.
fn split_cell(a: usize, b: usize, c: usize, d: usize, parity: i64) -> [[usize; 3]; 2] {
    if parity.rem_euclid(2) == 0 {
        [[a, b, c], [a, c, d]]
    } else {
        [[a, b, d], [b, c, d]]
    }
}

/// Annulus `1 ≤ r ≤ R` truncating the disk-complement phase.
///
/// Radial spacing is uniform, `(R − 1)/n_r`, so families with `(R − 1)·n_r⁻¹`
/// fixed are nested. The inner circle is `FREE` with `H = 1`; the outer
/// circle is `DIRICHLET`.
pub fn annulus_mesh(outer: f64, n_r: usize, n_theta: usize) -> Result<TriMesh> {
    if !(outer > 1.0 && outer.is_finite()) {
        return Err(Error::Argument(format!("annulus needs R > 1, got {outer}")));
    }
    annulus(1.0, outer, n_r, n_theta, EdgeTag::Free)
}

/// Annulus `ρ ≤ r ≤ R` with `ρ > 1`: a piece of the disk-complement phase
/// away from the free boundary, with both circles `DIRICHLET`.
pub fn annulus_collar_mesh(inner: f64, outer: f64, n_r: usize, n_theta: usize) -> Result<TriMesh> {
    if !(inner > 1.0 && outer > inner && outer.is_finite()) {
        return Err(Error::Argument(format!("collar needs 1 < ρ < R, got ρ = {inner}, R = {outer}")));
    }
    annulus(inner, outer, n_r, n_theta, EdgeTag::Dirichlet)
}

fn annulus(inner: f64, outer: f64, n_r: usize, n_theta: usize, inner_tag: EdgeTag) -> Result<TriMesh> {
    if n_r < 2 || n_theta < 8 {
        return Err(Error::Argument(format!("annulus needs n_r ≥ 2 and n_θ ≥ 8, got {n_r}, {n_theta}")));
    }
    let dr = (outer - inner) / n_r as f64;
    let mut vertices = Vec::with_capacity((n_r + 1) * n_theta);
    for i in 0..=n_r {
        let r = if i == n_r { outer } else { inner + i as f64 * dr };
        for j in 0..n_theta {
            let (s, c) = (2.0 * PI * j as f64 / n_theta as f64).sin_cos();
            vertices.push([r * c, r * s]);
        }
    }
    let id = |i: usize, j: usize| i * n_theta + j % n_theta;
    let mut triangles = Vec::with_capacity(2 * n_r * n_theta);
    for i in 0..n_r {
        for j in 0..n_theta {
            let cells = split_cell(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), (i + j) as i64);
            triangles.extend(cells);
        }
    }
    let boundary_edges = tag_boundary(&triangles, |a, b| {
        if a < n_theta && b < n_theta && inner_tag == EdgeTag::Free {
            (EdgeTag::Free, [1.0, 1.0])
        } else {
            (EdgeTag::Dirichlet, [0.0, 0.0])
        }
    });
    Ok(TriMesh { vertices, triangles, boundary_edges })
}

/// Number of vertices on ring `k` of [`disk_mesh`].
pub fn disk_ring_size(k: usize) -> usize {
    if k == 0 {
        1
    } else {
        8 * k
    }
}

/// Unit-disk mesh on `n_rings` concentric rings.
///
/// Ring `k` (radius `k/n_rings`) holds `8k` equally spaced vertices, the
/// center is a single vertex, so there are `1 + 4n(n+1)` vertices and `8n²`
/// triangles. The boundary polygon is inscribed in the unit circle and all
/// of its edges are `FREE` with `H = 1`.
pub fn disk_mesh(n_rings: usize) -> Result<TriMesh> {
    if n_rings < 1 {
        return Err(Error::Argument("disk mesh needs at least one ring".into()));
    }
    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=n_rings {
        ring_start.push(vertices.len());
        let m = disk_ring_size(k);
        let r = k as f64 / n_rings as f64;
        for j in 0..m {
            let (s, c) = (2.0 * PI * j as f64 / m as f64).sin_cos();
            vertices.push([r * c, r * s]);
        }
    }
    let mut triangles = Vec::with_capacity(8 * n_rings * n_rings);
    for k in 1..=n_rings {
        let outer = |o: usize| ring_start[k] + o % disk_ring_size(k);
        let no = disk_ring_size(k);
        if k == 1 {
            for o in 0..no {
                triangles.push([0, outer(o), outer(o + 1)]);
            }
            continue;
        }
        let ni = disk_ring_size(k - 1);
        let inner = |i: usize| ring_start[k - 1] + i % ni;
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            // compare next angles (i+1)/ni and (o+1)/no exactly
            let advance_outer = i == ni || (o < no && (o + 1) * ni <= (i + 1) * no);
            if advance_outer {
                triangles.push([inner(i), outer(o), outer(o + 1)]);
                o += 1;
            } else {
                triangles.push([inner(i), outer(o), inner(i + 1)]);
                i += 1;
            }
        }
    }
    let first_boundary = ring_start[n_rings];
    let boundary_edges = tag_boundary(&triangles, |_, _| (EdgeTag::Free, [1.0, 1.0]));
    debug_assert!(boundary_edges.iter().all(|e| e.vertices.iter().all(|&v| v >= first_boundary)));
    Ok(TriMesh { vertices, triangles, boundary_edges })
}

/// Hairpin truncation `|Re w| ≤ S` of the strip, mapped by `Φ(w) = w + sinh w`.
///
/// The strip rectangle `[−S, S] × [−π/2, π/2]` is gridded `n_s × n_t`.
/// Edges on `Im w = ±π/2` are `FREE` (exact catenary curvature `sech² s`),
/// edges on `Re w = ±S` are `DIRICHLET`.
pub fn hairpin_mesh(s_cut: f64, n_s: usize, n_t: usize) -> Result<TriMesh> {
    if !(s_cut > 0.0 && s_cut <= solutions::MAX_STRIP_REAL) {
        return Err(Error::Argument(format!("hairpin cut S must lie in (0, {}], got {s_cut}", solutions::MAX_STRIP_REAL)));
    }
    hairpin_strip_mesh(-s_cut, s_cut, n_s, n_t)
}

/// Hairpin piece `s_min ≤ Re w ≤ s_max`; see [`hairpin_mesh`].
pub fn hairpin_strip_mesh(s_min: f64, s_max: f64, n_s: usize, n_t: usize) -> Result<TriMesh> {
    if !(s_min < s_max && s_min >= -solutions::MAX_STRIP_REAL && s_max <= solutions::MAX_STRIP_REAL) {
        return Err(Error::Argument(format!(
            "hairpin strip needs -{m} ≤ s_min < s_max ≤ {m}, got [{s_min}, {s_max}]",
            m = solutions::MAX_STRIP_REAL
        )));
    }
    if n_s < 1 || n_t < 2 {
        return Err(Error::Argument(format!("hairpin mesh needs n_s ≥ 1 and n_t ≥ 2, got {n_s}, {n_t}")));
    }
    let ds = (s_max - s_min) / n_s as f64;
    let dt = PI / n_t as f64;
    let row = n_s + 1;
    let mut vertices = Vec::with_capacity(row * (n_t + 1));
    let mut params = Vec::with_capacity(row * (n_t + 1));
    for l in 0..=n_t {
        for k in 0..=n_s {
            let s = if k == n_s { s_max } else { s_min + k as f64 * ds };
            let p = if l == 0 || l == n_t {
                solutions::boundary_param(SolutionKind::Hairpin, usize::from(l == 0), s)?.point
            } else {
                let t = -FRAC_PI_2 + l as f64 * dt;
                let (z, _) = solutions::strip_map(Complex64::new(s, t))?;
                [z.re, z.im]
            };
            vertices.push(p);
            params.push(s);
        }
    }
    let id = |k: usize, l: usize| l * row + k;
    // global column index so that diagonals of nested strips line up
    let k0 = (s_min / ds).round() as i64;
    let mut triangles = Vec::with_capacity(2 * n_s * n_t);
    for l in 0..n_t {
        for k in 0..n_s {
            let parity = k0 + k as i64 + l as i64;
            triangles.extend(split_cell(id(k, l), id(k + 1, l), id(k + 1, l + 1), id(k, l + 1), parity));
        }
    }
    let top = n_t * row;
    let boundary_edges = tag_boundary(&triangles, |a, b| {
        let on_top = a >= top && b >= top;
        let on_bottom = a < row && b < row;
        if on_top || on_bottom {
            let h = |v: usize| {
                let s = params[v];
                1.0 / (s.cosh() * s.cosh())
            };
            (EdgeTag::Free, [h(a), h(b)])
        } else {
            (EdgeTag::Dirichlet, [0.0, 0.0])
        }
    });
    Ok(TriMesh { vertices, triangles, boundary_edges })
}

/// Two-sided hairpin collar `S₁ ≤ |Re w| ≤ S₂`, each side gridded `n_s × n_t`.
/// With `S₁ = 0` this is the single truncation `|Re w| ≤ S₂`.
pub fn hairpin_collar_mesh(s1: f64, s2: f64, n_s: usize, n_t: usize) -> Result<TriMesh> {
    if !(s1 >= 0.0 && s2 > s1) {
        return Err(Error::Argument(format!("collar needs 0 ≤ S₁ < S₂, got [{s1}, {s2}]")));
    }
    if s1 == 0.0 {
        return hairpin_strip_mesh(-s2, s2, 2 * n_s, n_t);
    }
    let right = hairpin_strip_mesh(s1, s2, n_s, n_t)?;
    let left = hairpin_strip_mesh(-s2, -s1, n_s, n_t)?;
    Ok(left.union(&right))
}

/// Plane truncation `[0, L] × [−L, L]`, gridded `n × 2n`. The edge on
/// `x₁ = 0` is `FREE` with `H = 0`; the other three sides are `DIRICHLET`.
pub fn plane_mesh(side: f64, n: usize) -> Result<TriMesh> {
    if !(side > 0.0 && side.is_finite()) || n < 1 {
        return Err(Error::Argument(format!("plane mesh needs L > 0 and n ≥ 1, got {side}, {n}")));
    }
    let h = side / n as f64;
    let row = n + 1;
    let mut vertices = Vec::with_capacity(row * (2 * n + 1));
    for j in 0..=2 * n {
        for i in 0..=n {
            vertices.push([i as f64 * h, -side + j as f64 * h]);
        }
    }
    let id = |i: usize, j: usize| j * row + i;
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..2 * n {
        for i in 0..n {
            // parity relative to y = 0 keeps nested rectangles aligned
            let parity = i as i64 + j as i64 - n as i64;
            triangles.extend(split_cell(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1), parity));
        }
    }
    let boundary_edges = tag_boundary(&triangles, |a, b| {
        if a % row == 0 && b % row == 0 {
            (EdgeTag::Free, [0.0, 0.0])
        } else {
            (EdgeTag::Dirichlet, [0.0, 0.0])
        }
    });
    Ok(TriMesh { vertices, triangles, boundary_edges })
}

const CURVE_TOL: f64 = 1e-9;

/// Exact placement of the midpoint of a `FREE` edge, when its endpoints lie
/// on a recognised free-boundary curve: a circle about the origin (snapped
/// radially, `H = 1/r`) or a hairpin catenary (snapped through the chart,
/// `H = sech² s`).
fn snap_free_midpoint(p: Point, q: Point) -> Option<(Point, f64)> {
    let (rp, rq) = (norm(p), norm(q));
    if rp > 0.0 && (rp - rq).abs() <= CURVE_TOL * rp {
        let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let rm = norm(m);
        if rm > 0.0 {
            let r = 0.5 * (rp + rq);
            return Some(([m[0] * r / rm, m[1] * r / rm], 1.0 / r));
        }
    }
    let on_catenary = |a: Point| (a[1].abs() - (FRAC_PI_2 + a[0].cosh())).abs() <= CURVE_TOL * (1.0 + a[1].abs());
    if on_catenary(p) && on_catenary(q) && p[1].signum() == q[1].signum() {
        let branch = usize::from(p[1] < 0.0);
        let s = 0.5 * (p[0] + q[0]);
        let b = solutions::boundary_param(SolutionKind::Hairpin, branch, s).ok()?;
        return Some((b.point, b.mean_curvature));
    }
    None
}

/// Uniform red refinement: every triangle splits into four.
///
/// Midpoints of `FREE` edges on a recognised curve are moved onto the curve
/// and get the exact curvature there; other boundary midpoints take the
/// linear interpolant. Tags are inherited.
pub fn refine(mesh: &TriMesh) -> TriMesh {
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let [a, b] = e.vertices;
        let m = midpoint(a, b, &mut vertices);
        let hm = match e.tag {
            EdgeTag::Dirichlet => 0.0,
            EdgeTag::Free => match snap_free_midpoint(mesh.vertices[a], mesh.vertices[b]) {
                Some((p, h)) => {
                    vertices[m] = p;
                    h
                }
                None => 0.5 * (e.h[0] + e.h[1]),
            },
        };
        boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: e.tag, h: [e.h[0], hm] });
        boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: e.tag, h: [hm, e.h[1]] });
    }
    TriMesh { vertices, triangles, boundary_edges }
}

/// Serialize in the `fbmesh 1` text format.
pub fn to_text(mesh: &TriMesh) -> String {
    let mut out = String::from("fbmesh 1\n");
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {:.16e} {:.16e}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(out, "e {} {} {} {:.16e} {:.16e}", e.vertices[0], e.vertices[1], e.tag.as_str(), e.h[0], e.h[1]);
    }
    out
}

/// Parse the `fbmesh 1` format. `origin` only labels error messages.
pub fn parse_text(text: &str, origin: &Path) -> Result<TriMesh> {
    let err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "fbmesh 1")) => {}
        Some((n, other)) => return Err(err(n, format!("expected header 'fbmesh 1', found '{other}'"))),
        None => return Err(err(1, "empty mesh file".into())),
    }
    let mut mesh = TriMesh::default();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let float = |s: &str| s.parse::<f64>().map_err(|_| err(n, format!("invalid number '{s}'")));
        let index = |s: &str| s.parse::<usize>().map_err(|_| err(n, format!("invalid index '{s}'")));
        match fields.as_slice() {
            ["v", x, y] => mesh.vertices.push([float(x)?, float(y)?]),
            ["t", i, j, k] => {
                let tri = [index(i)?, index(j)?, index(k)?];
                if let Some(&bad) = tri.iter().find(|&&v| v >= mesh.vertices.len()) {
                    return Err(err(n, format!("triangle references undefined vertex {bad}")));
                }
                mesh.triangles.push(tri);
                let area = mesh.signed_area(mesh.triangles.len() - 1);
                if area < MIN_AREA {
                    return Err(err(n, format!("triangle is not counterclockwise (signed area {area:e})")));
                }
            }
            ["e", i, j, tag, hi, hj] => {
                let tag = match *tag {
                    "FREE" => EdgeTag::Free,
                    "DIRICHLET" => EdgeTag::Dirichlet,
                    other => return Err(err(n, format!("unknown edge tag '{other}'"))),
                };
                let v = [index(i)?, index(j)?];
                if v.iter().any(|&x| x >= mesh.vertices.len()) {
                    return Err(err(n, "edge references undefined vertex".into()));
                }
                mesh.boundary_edges.push(BoundaryEdge { vertices: v, tag, h: [float(hi)?, float(hj)?] });
            }
            _ => return Err(err(n, format!("unrecognised line '{line}'"))),
        }
    }
    mesh.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(mesh)
}

/// Write the mesh atomically (temporary file, then rename).
pub fn store(mesh: &TriMesh, path: &Path) -> Result<()> {
    write_atomic(path, to_text(mesh).as_bytes())
}

pub fn load(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_text(&text, path)
}

/// Write through a `.tmp` sibling and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
