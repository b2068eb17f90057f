//! P1 finite elements for the second variation form
//! `Q(φ, φ) = ∫|∇φ|² − ∫_F H φ²` with `φ = 0` on truncation edges.

use crate::linalg::BandLdlt;
use crate::meshgen::{EdgeTag, TriMesh, MIN_AREA};
use crate::sparse::CsrMatrix;
use crate::{Error, Point, Result};

/// Relative residual accepted from [`solve_poisson_robin`].
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Assembled matrices of one mesh.
///
/// `a`, `m`, `b` are indexed by vertex; `k` and `m_free` are restricted to
/// the free degrees of freedom (vertices not on a `DIRICHLET` edge), in
/// increasing vertex order.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub a: CsrMatrix,
    pub m: CsrMatrix,
    pub b: CsrMatrix,
    /// `free_dofs[d]` is the vertex of degree of freedom `d`.
    pub free_dofs: Vec<usize>,
    pub dof_of_vertex: Vec<Option<usize>>,
    pub k: CsrMatrix,
    pub m_free: CsrMatrix,
}

impl AssembledForms {
    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.dof_of_vertex.len()
    }

    /// Per-vertex field from free-dof values, zero on constrained vertices.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_free());
        let mut out = vec![0.0; self.n_vertices()];
        for (d, &v) in self.free_dofs.iter().enumerate() {
            out[v] = x[d];
        }
        out
    }

    /// Free-dof values of a per-vertex field.
    pub fn restrict(&self, field: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&v| field[v]).collect()
    }

    /// `Q(φ, φ)` for a per-vertex field.
    pub fn q_value(&self, field: &[f64]) -> f64 {
        self.a.quadratic_form(field) - self.b.quadratic_form(field)
    }
}

/// Gradients of the barycentric coordinates and the area of a triangle.
pub fn barycentric_gradients(p: [Point; 3]) -> (f64, [[f64; 2]; 3]) {
    let two_area = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(p[j][1] - p[k][1]) / two_area, (p[k][0] - p[j][0]) / two_area];
    }
    (0.5 * two_area, g)
}

pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let (area, g) = barycentric_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

/// Exact `∫λᵢλⱼ = area/12·(1 + δᵢⱼ)`.
pub fn element_mass(p: [Point; 3]) -> [[f64; 3]; 3] {
    let (area, _) = barycentric_gradients(p);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// Exact `∫_e H φᵢφⱼ` for `H` linear along an edge of length `len`.
pub fn edge_matrix(len: f64, h1: f64, h2: f64) -> [[f64; 2]; 2] {
    let c = len / 12.0;
    [[c * (3.0 * h1 + h2), c * (h1 + h2)], [c * (h1 + h2), c * (h1 + 3.0 * h2)]]
}

fn triangle_points(mesh: &TriMesh, t: usize) -> [Point; 3] {
    mesh.triangles[t].map(|i| mesh.vertices[i])
}

/// Boundary mass on edges with `tag`; with `unit_weight` the curvature is
/// replaced by 1, giving the `L²` trace form.
pub fn boundary_mass(mesh: &TriMesh, tag: EdgeTag, unit_weight: bool) -> CsrMatrix {
    let mut trip = Vec::new();
    for e in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
        let (h1, h2) = if unit_weight { (1.0, 1.0) } else { (e.h[0], e.h[1]) };
        let em = edge_matrix(mesh.edge_length(e), h1, h2);
        for (a, &va) in e.vertices.iter().enumerate() {
            for (b, &vb) in e.vertices.iter().enumerate() {
                trip.push((va, vb, em[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.vertices.len(), trip)
}

/// Assemble stiffness, mass and Robin boundary mass.
///
/// Contributions are accumulated in triangle order, so each matrix entry
/// is summed in a fixed order and the result is bit-reproducible.
pub fn assemble(mesh: &TriMesh) -> Result<AssembledForms> {
    let nv = mesh.vertices.len();
    let mut ta = Vec::with_capacity(9 * mesh.triangles.len());
    let mut tm = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&i| i >= nv) {
            return Err(Error::Assembly { triangle: t, message: "vertex index out of range".into() });
        }
        let p = triangle_points(mesh, t);
        let area = mesh.signed_area(t);
        if area < MIN_AREA {
            return Err(Error::Assembly { triangle: t, message: format!("degenerate or inverted (signed area {area:e})") });
        }
        let ke = element_stiffness(p);
        let me = element_mass(p);
        for i in 0..3 {
            for j in 0..3 {
                ta.push((tri[i], tri[j], ke[i][j]));
                tm.push((tri[i], tri[j], me[i][j]));
            }
        }
    }
    let a = CsrMatrix::from_triplets(nv, ta);
    let m = CsrMatrix::from_triplets(nv, tm);
    let b = boundary_mass(mesh, EdgeTag::Free, false);

    let constrained = mesh.dirichlet_vertices();
    let free_dofs: Vec<usize> = (0..nv).filter(|&v| !constrained[v]).collect();
    let mut dof_of_vertex = vec![None; nv];
    for (d, &v) in free_dofs.iter().enumerate() {
        dof_of_vertex[v] = Some(d);
    }
    let k = a.linear_combination(1.0, &b, -1.0).principal_submatrix(&free_dofs);
    let m_free = m.principal_submatrix(&free_dofs);
    Ok(AssembledForms { a, m, b, free_dofs, dof_of_vertex, k, m_free })
}

/// Solve `K v = M f − K_{free,dir} g` for the free values, with `v = g` on
/// constrained vertices.
///
/// `f` is a per-vertex load interpolant; `dirichlet_data` is per-vertex and
/// read only on constrained vertices. The constrained operator must be
/// positive definite (first Dirichlet–Robin eigenvalue positive); otherwise
/// the subdomain is not stable and a stability violation is reported.
pub fn solve_poisson_robin(mesh: &TriMesh, f: &[f64], dirichlet_data: &[f64]) -> Result<Vec<f64>> {
    let forms = assemble(mesh)?;
    solve_with_forms(&forms, f, dirichlet_data)
}

pub fn solve_with_forms(forms: &AssembledForms, f: &[f64], dirichlet_data: &[f64]) -> Result<Vec<f64>> {
    let nv = forms.n_vertices();
    if f.len() != nv || dirichlet_data.len() != nv {
        return Err(Error::Argument(format!(
            "load and data must have one value per vertex ({nv}), got {} and {}",
            f.len(),
            dirichlet_data.len()
        )));
    }
    let mut lift = vec![0.0; nv];
    for v in 0..nv {
        if forms.dof_of_vertex[v].is_none() {
            lift[v] = dirichlet_data[v];
        }
    }
    let k_full = forms.a.linear_combination(1.0, &forms.b, -1.0);
    let mf = forms.m.mul_vec(f);
    let kg = k_full.mul_vec(&lift);
    let rhs: Vec<f64> = forms.free_dofs.iter().map(|&v| mf[v] - kg[v]).collect();

    let n = forms.n_free();
    let mut solution = lift;
    if n == 0 {
        return Ok(solution);
    }
    let fact = BandLdlt::factor(&forms.k).map_err(|e| match e {
        Error::Breakdown { pivot, .. } => Error::StabilityViolation(format!(
            "constrained form is singular (pivot {pivot}); the subdomain is not strictly stable"
        )),
        other => other,
    })?;
    let pivots = fact.pivot_values();
    let n_nonpos = pivots.iter().filter(|&&d| d <= 0.0).count();
    if n_nonpos > 0 {
        return Err(Error::StabilityViolation(format!(
            "constrained form has {n_nonpos} non-positive pivot(s); the first eigenvalue is not positive"
        )));
    }
    let x = fact.solve(&rhs);
    let kx = forms.k.mul_vec(&x);
    let res = kx.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res > SOLVE_RESIDUAL_TOL * rhs_norm.max(f64::MIN_POSITIVE) && res > 0.0 {
        return Err(Error::Numerical(format!("Robin–Poisson residual {res:e} exceeds {SOLVE_RESIDUAL_TOL:e}·‖rhs‖ = {rhs_norm:e}")));
    }
    for (d, &v) in forms.free_dofs.iter().enumerate() {
        solution[v] = x[d];
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;

    const UNIT: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn unit_triangle_matrices() {
        let k = element_stiffness(UNIT);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        let m = element_mass(UNIT);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((m[i][j] - e).abs() < 1e-16);
            }
        }
        let l = 0.3;
        let e = edge_matrix(l, 1.0, 1.0);
        assert!((e[0][0] - 2.0 * l / 6.0).abs() < 1e-16 && (e[0][1] - l / 6.0).abs() < 1e-16);
    }

    /// Seven-point degree-5 rule on the reference triangle.
    fn seven_point() -> Vec<(f64, f64, f64)> {
        let a1 = 0.059_715_871_789_769_82;
        let b1 = 0.470_142_064_105_115_1;
        let a2 = 0.797_426_985_353_087_3;
        let b2 = 0.101_286_507_323_456_3;
        let w1 = 0.132_394_152_788_506_2;
        let w2 = 0.125_939_180_544_827_1;
        vec![
            (1.0 / 3.0, 1.0 / 3.0, 0.225),
            (a1, b1, w1),
            (b1, a1, w1),
            (b1, b1, w1),
            (a2, b2, w2),
            (b2, a2, w2),
            (b2, b2, w2),
        ]
    }

    #[test]
    fn assembly_matches_quadrature_oracle() {
        let mesh = meshgen::hairpin_mesh(1.0, 6, 4).unwrap();
        assert!(mesh.triangles.len() <= 100);
        let forms = assemble(&mesh).unwrap();
        let nv = mesh.vertices.len();
        let mut a = vec![vec![0.0; nv]; nv];
        let mut m = vec![vec![0.0; nv]; nv];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = triangle_points(&mesh, t);
            let area = mesh.signed_area(t);
            let (_, g) = barycentric_gradients(p);
            for (l1, l2, w) in seven_point() {
                let lam = [1.0 - l1 - l2, l1, l2];
                for i in 0..3 {
                    for j in 0..3 {
                        m[tri[i]][tri[j]] += w * area * lam[i] * lam[j];
                        a[tri[i]][tri[j]] += w * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
        }
        // boundary: Gauss–Legendre on each edge with linear H
        let mut b = vec![vec![0.0; nv]; nv];
        let gl = crate::quadrature::GaussLegendre::new(4);
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Free) {
            let len = mesh.edge_length(e);
            for (x, w) in gl.on(0.0, 1.0) {
                let phi = [1.0 - x, x];
                let h = e.h[0] * phi[0] + e.h[1] * phi[1];
                for i in 0..2 {
                    for j in 0..2 {
                        b[e.vertices[i]][e.vertices[j]] += w * len * h * phi[i] * phi[j];
                    }
                }
            }
        }
        for i in 0..nv {
            for j in 0..nv {
                assert!((forms.a.get(i, j) - a[i][j]).abs() < 1e-12);
                assert!((forms.m.get(i, j) - m[i][j]).abs() < 1e-12);
                assert!((forms.b.get(i, j) - b[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn structural_invariants() {
        let mesh = meshgen::annulus_mesh(2.0, 4, 16).unwrap();
        let f = assemble(&mesh).unwrap();
        assert!(f.a.is_symmetric(1e-14) && f.m.is_symmetric(1e-14) && f.b.is_symmetric(1e-14));
        assert!(f.a.row_sums().iter().all(|s| s.abs() < 1e-12));
        let free = mesh.free_boundary_vertices();
        for (i, j, v) in f.b.entries() {
            assert!(v == 0.0 || (free[i] && free[j]));
        }
        assert_eq!(f.n_free(), 4 * 16);
        let plane = assemble(&meshgen::plane_mesh(1.0, 4).unwrap()).unwrap();
        assert_eq!(plane.b.norm_inf(), 0.0);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
        };
        assert!(matches!(assemble(&mesh), Err(Error::Assembly { triangle: 0, .. })));
    }

    #[test]
    fn constants_reproduced_with_zero_curvature() {
        let mesh = meshgen::plane_mesh(2.0, 6).unwrap();
        let nv = mesh.vertices.len();
        let v = solve_poisson_robin(&mesh, &vec![0.0; nv], &vec![1.0; nv]).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn annulus_collar_harmonic_interpolant() {
        let (rho, big_r) = (2.0f64, 5.0f64);
        let w = |r: f64| (r.powi(-2) + 1.0) / 2.0;
        let slope = (w(big_r) - w(rho)) / (big_r / rho).ln();
        let exact = |r: f64| w(rho) + slope * (r / rho).ln();
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let mesh = meshgen::annulus_collar_mesh(rho, big_r, n, 8 * n).unwrap();
            let data: Vec<f64> = mesh.vertices.iter().map(|p| w(p[0].hypot(p[1]))).collect();
            let v = solve_poisson_robin(&mesh, &vec![0.0; data.len()], &data).unwrap();
            let err = mesh
                .vertices
                .iter()
                .zip(&v)
                .map(|(p, x)| (x - exact(p[0].hypot(p[1]))).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[2] < 1e-3, "{errs:?}");
        let rate = (errs[1] / errs[2]).log2();
        assert!(rate > 1.7, "{errs:?}");
    }

    #[test]
    fn unstable_domain_is_rejected() {
        // the disk form has a negative direction
        let mesh = meshgen::disk_mesh(4).unwrap();
        let nv = mesh.vertices.len();
        let r = solve_poisson_robin(&mesh, &vec![1.0; nv], &vec![0.0; nv]);
        assert!(matches!(r, Err(Error::StabilityViolation(_))), "{r:?}");
    }

    #[test]
    fn galerkin_residual_vanishes() {
        let mesh = meshgen::hairpin_collar_mesh(1.5, 3.0, 12, 8).unwrap();
        let forms = assemble(&mesh).unwrap();
        let f: Vec<f64> = mesh.vertices.iter().map(|p| 1.0 + 0.1 * p[0].sin()).collect();
        let g: Vec<f64> = mesh.vertices.iter().map(|p| 0.5 + 0.01 * p[1]).collect();
        let v = solve_with_forms(&forms, &f, &g).unwrap();
        let k_full = forms.a.linear_combination(1.0, &forms.b, -1.0);
        let kv = k_full.mul_vec(&v);
        let mf = forms.m.mul_vec(&f);
        let scale = mf.iter().map(|x| x * x).sum::<f64>().sqrt();
        for &d in &forms.free_dofs {
            assert!((kv[d] - mf[d]).abs() <= 1e-10 * scale);
        }
    }
}
