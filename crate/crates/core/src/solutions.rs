//! Closed-form global solutions of the one-phase problem in the plane.
//!
//! * [`SolutionKind::Plane`]: `u = max(x₁, 0)`.
//! * [`SolutionKind::DiskComplement`]: `u = max(log|x|, 0)`.
//! * [`SolutionKind::Hairpin`]: realized through the strip chart
//!   `Φ(w) = w + sinh w` on `|Im w| ≤ π/2`, with `u(Φ(w)) = Re cosh w` and
//!   `G(Φ(w)) = tanh(w/2)`. The free boundary is the pair of catenaries
//!   `x₂ = ±(π/2 + cosh x₁)`; branch 0 is the upper curve, branch 1 the lower.
//!
//! `G = 2∂_z u = u_{x₁} − i u_{x₂}` is holomorphic on the positive phase, so
//! `∇u = (Re G, −Im G)` and `|D²u|² = 2|G′|²`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quadrature;
use crate::{Error, Point, Result};

/// Largest `|Re w|` accepted by the strip chart (cosh overflow guard).
pub const MAX_STRIP_REAL: f64 = 25.0;

const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    Plane,
    DiskComplement,
    Hairpin,
}

impl SolutionKind {
    pub const ALL: [SolutionKind; 3] = [SolutionKind::Plane, SolutionKind::DiskComplement, SolutionKind::Hairpin];

    pub fn name(self) -> &'static str {
        match self {
            SolutionKind::Plane => "plane",
            SolutionKind::DiskComplement => "disk-complement",
            SolutionKind::Hairpin => "hairpin",
        }
    }

    /// Number of free-boundary branches.
    pub fn branches(self) -> usize {
        match self {
            SolutionKind::Hairpin => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolutionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(SolutionKind::Plane),
            "disk-complement" => Ok(SolutionKind::DiskComplement),
            "hairpin" => Ok(SolutionKind::Hairpin),
            other => Err(Error::Argument(format!("unknown solution '{other}'"))),
        }
    }
}

/// Where to evaluate: planar coordinates, or the strip coordinate `w` of the hairpin chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coord {
    Planar(Point),
    Strip(Complex64),
}

/// Value, gradient and squared Hessian norm of a solution at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub u: f64,
    pub grad: [f64; 2],
    pub hess_sq: f64,
}

/// A point on the free boundary with its local geometry.
///
/// `tangent` and `normal` form a positively oriented frame, with `normal`
/// the outward unit normal `ν = −∇u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Point,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub mean_curvature: f64,
    /// Length per unit parameter.
    pub arclen_density: f64,
}

/// The strip chart `z = w + sinh w` and its derivative `dz/dw = 1 + cosh w`.
pub fn strip_map(w: Complex64) -> Result<(Complex64, Complex64)> {
    check_strip(w)?;
    Ok((w + w.sinh(), 1.0 + w.cosh()))
}

/// Inverse of the strip chart: the `w` with `|Im w| ≤ π/2` and `w + sinh w = z`.
///
/// Newton iteration from `asinh(z/2)`; fails with a domain error if `z`
/// is not in the closed hairpin phase.
pub fn strip_map_inv(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite point {z}")));
    }
    let mut w = (0.5 * z).asinh();
    for _ in 0..100 {
        w.im = w.im.clamp(-FRAC_PI_2, FRAC_PI_2);
        let f = w + w.sinh() - z;
        let step = f / (1.0 + w.cosh());
        w -= step;
        if step.norm() <= 1e-15 * (1.0 + w.norm()) {
            break;
        }
    }
    let residual = (w + w.sinh() - z).norm();
    if w.im.abs() > FRAC_PI_2 + 1e-9 || residual > 1e-9 * (1.0 + z.norm()) {
        return Err(Error::Domain(format!("{z} lies outside the hairpin positive phase")));
    }
    w.im = w.im.clamp(-FRAC_PI_2, FRAC_PI_2);
    check_strip(w)?;
    Ok(w)
}

fn check_strip(w: Complex64) -> Result<()> {
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite strip coordinate {w}")));
    }
    if w.im.abs() > FRAC_PI_2 + PHASE_TOL {
        return Err(Error::Domain(format!("strip coordinate {w} has |Im w| > π/2")));
    }
    if w.re.abs() > MAX_STRIP_REAL {
        return Err(Error::Domain(format!(
            "strip coordinate {w} has |Re w| > {MAX_STRIP_REAL} (overflow guard)"
        )));
    }
    Ok(())
}

fn planar(kind: SolutionKind, at: Coord) -> Result<Point> {
    match at {
        Coord::Planar(p) => Ok(p),
        Coord::Strip(_) => Err(Error::Domain(format!("{kind} is evaluated at planar coordinates"))),
    }
}

fn strip(at: Coord) -> Result<Complex64> {
    match at {
        Coord::Strip(w) => {
            check_strip(w)?;
            Ok(w)
        }
        Coord::Planar(_) => Err(Error::Domain("hairpin evaluation requires a strip coordinate".into())),
    }
}

/// Value, gradient and `|D²u|²` at a point of the closed positive phase.
pub fn eval(kind: SolutionKind, at: Coord) -> Result<Evaluation> {
    match kind {
        SolutionKind::Plane => {
            let p = planar(kind, at)?;
            if p[0] < -PHASE_TOL {
                return Err(Error::Domain(format!("{p:?} lies outside the plane solution's positive phase")));
            }
            Ok(Evaluation { u: p[0].max(0.0), grad: [1.0, 0.0], hess_sq: 0.0 })
        }
        SolutionKind::DiskComplement => {
            let p = planar(kind, at)?;
            let r2 = p[0] * p[0] + p[1] * p[1];
            if r2.sqrt() < 1.0 - PHASE_TOL {
                return Err(Error::Domain(format!("{p:?} lies inside the unit disk")));
            }
            Ok(Evaluation {
                u: 0.5 * r2.ln().max(0.0),
                grad: [p[0] / r2, p[1] / r2],
                hess_sq: 2.0 / (r2 * r2),
            })
        }
        SolutionKind::Hairpin => {
            let w = strip(at)?;
            let g = (0.5 * w).tanh();
            let gp = hairpin_g_prime(w);
            Ok(Evaluation {
                u: w.cosh().re.max(0.0),
                grad: [g.re, -g.im],
                hess_sq: 2.0 * gp.norm_sqr(),
            })
        }
    }
}

/// `G′(z)` for the hairpin at strip coordinate `w`: `(d tanh(w/2)/dw) / (1 + cosh w) = sech⁴(w/2)/4`.
fn hairpin_g_prime(w: Complex64) -> Complex64 {
    let sech = 1.0 / (0.5 * w).cosh();
    let s2 = sech * sech;
    0.25 * s2 * s2
}

/// The holomorphic map `G = 2∂_z u` onto the unit disk.
pub fn conformal_g(kind: SolutionKind, at: Coord) -> Result<Complex64> {
    match kind {
        SolutionKind::Plane => Err(Error::Unsupported("the disk reduction is not used for the plane solution".into())),
        SolutionKind::DiskComplement => {
            let p = planar(kind, at)?;
            let z = Complex64::new(p[0], p[1]);
            if z.norm() < 1.0 - PHASE_TOL {
                return Err(Error::Domain(format!("{z} lies inside the unit disk")));
            }
            Ok(z.inv())
        }
        SolutionKind::Hairpin => Ok((0.5 * strip(at)?).tanh()),
    }
}

/// Complex derivative `G′(z)`.
pub fn conformal_g_prime(kind: SolutionKind, at: Coord) -> Result<Complex64> {
    match kind {
        SolutionKind::Plane => Err(Error::Unsupported("the disk reduction is not used for the plane solution".into())),
        SolutionKind::DiskComplement => {
            let p = planar(kind, at)?;
            let z = Complex64::new(p[0], p[1]);
            if z.norm() < 1.0 - PHASE_TOL {
                return Err(Error::Domain(format!("{z} lies inside the unit disk")));
            }
            Ok(-(z * z).inv())
        }
        SolutionKind::Hairpin => Ok(hairpin_g_prime(strip(at)?)),
    }
}

/// Preimage of a disk point under `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub z: Complex64,
    /// Strip coordinate, for the hairpin.
    pub w: Option<Complex64>,
}

impl Preimage {
    pub fn coord(&self) -> Coord {
        match self.w {
            Some(w) => Coord::Strip(w),
            None => Coord::Planar([self.z.re, self.z.im]),
        }
    }
}

/// Inverse of [`conformal_g`] on the closed disk minus the punctures.
pub fn conformal_g_inv(kind: SolutionKind, zeta: Complex64) -> Result<Preimage> {
    if zeta.norm() > 1.0 + PHASE_TOL {
        return Err(Error::Domain(format!("{zeta} lies outside the closed unit disk")));
    }
    match kind {
        SolutionKind::Plane => Err(Error::Unsupported("the disk reduction is not used for the plane solution".into())),
        SolutionKind::DiskComplement => {
            if zeta.norm() == 0.0 {
                return Err(Error::Domain("ζ = 0 is the puncture of the disk-complement map".into()));
            }
            Ok(Preimage { z: zeta.inv(), w: None })
        }
        SolutionKind::Hairpin => {
            if (zeta - 1.0).norm() == 0.0 || (zeta + 1.0).norm() == 0.0 {
                return Err(Error::Domain("ζ = ±1 are the punctures of the hairpin map".into()));
            }
            let mut w = 2.0 * zeta.atanh();
            // atanh may land on the far side of the branch cut for |ζ| = 1.
            w.im = w.im.clamp(-FRAC_PI_2, FRAC_PI_2);
            let (z, _) = strip_map(w)?;
            Ok(Preimage { z, w: Some(w) })
        }
    }
}

/// Free-boundary point of `branch` at parameter `s`.
///
/// Parametrizations: the plane uses `(0, s)`; the disk complement
/// `(cos s, sin s)`; the hairpin `(s, ±(π/2 + cosh s))`.
pub fn boundary_param(kind: SolutionKind, branch: usize, s: f64) -> Result<BoundaryPoint> {
    if branch >= kind.branches() {
        return Err(Error::Domain(format!("{kind} has no free-boundary branch {branch}")));
    }
    if !s.is_finite() {
        return Err(Error::Domain("non-finite boundary parameter".into()));
    }
    Ok(match kind {
        SolutionKind::Plane => BoundaryPoint {
            point: [0.0, s],
            tangent: [0.0, 1.0],
            normal: [-1.0, 0.0],
            mean_curvature: 0.0,
            arclen_density: 1.0,
        },
        SolutionKind::DiskComplement => {
            let (sn, cs) = s.sin_cos();
            BoundaryPoint {
                point: [cs, sn],
                tangent: [-sn, cs],
                normal: [-cs, -sn],
                mean_curvature: 1.0,
                arclen_density: 1.0,
            }
        }
        SolutionKind::Hairpin => {
            if s.abs() > MAX_STRIP_REAL {
                return Err(Error::Domain(format!("|s| > {MAX_STRIP_REAL} (overflow guard)")));
            }
            let (ch, sh) = (s.cosh(), s.sinh());
            let sign = if branch == 0 { 1.0 } else { -1.0 };
            BoundaryPoint {
                point: [s, sign * (FRAC_PI_2 + ch)],
                tangent: [sign / ch, sh / ch],
                normal: [-sh / ch, sign / ch],
                mean_curvature: 1.0 / (ch * ch),
                arclen_density: ch,
            }
        }
    })
}

/// Strip coordinate of the hairpin boundary point `(branch, s)`.
pub fn hairpin_boundary_strip(branch: usize, s: f64) -> Complex64 {
    Complex64::new(s, if branch == 0 { FRAC_PI_2 } else { -FRAC_PI_2 })
}

/// `∫ H dℋ¹` over the arc `s ∈ [s₁, s₂]` of `branch`, by adaptive quadrature.
pub fn total_curvature(kind: SolutionKind, branch: usize, s1: f64, s2: f64) -> Result<f64> {
    if s1 > s2 {
        return Err(Error::Argument(format!("total_curvature needs s₁ ≤ s₂, got [{s1}, {s2}]")));
    }
    boundary_param(kind, branch, s1)?;
    boundary_param(kind, branch, s2)?;
    let mut failure = None;
    let value = quadrature::integrate(
        |s| match boundary_param(kind, branch, s) {
            Ok(b) => b.mean_curvature * b.arclen_density,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        s1,
        s2,
        1e-13,
        1e-13,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Closed-form total curvature over the whole free boundary (`2π` for both
/// nontrivial solutions, `0` for the plane).
pub fn total_curvature_closed_form(kind: SolutionKind) -> f64 {
    match kind {
        SolutionKind::Plane => 0.0,
        SolutionKind::DiskComplement | SolutionKind::Hairpin => 2.0 * PI,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plane_values() {
        let e = eval(SolutionKind::Plane, Coord::Planar([2.0, 5.0])).unwrap();
        assert_eq!(e, Evaluation { u: 2.0, grad: [1.0, 0.0], hess_sq: 0.0 });
        assert!(eval(SolutionKind::Plane, Coord::Planar([-1.0, 0.0])).is_err());
    }

    #[test]
    fn disk_complement_at_e() {
        let e = eval(SolutionKind::DiskComplement, Coord::Planar([E, 0.0])).unwrap();
        assert!((e.u - 1.0).abs() < 1e-15);
        assert!((e.grad[0] - 1.0 / E).abs() < 1e-15 && e.grad[1] == 0.0);
        assert!((e.hess_sq - 2.0 / E.powi(4)).abs() < 1e-15);

        // central differences, step 1e-5
        let h = 1e-5;
        let u = |x: f64, y: f64| eval(SolutionKind::DiskComplement, Coord::Planar([x, y])).unwrap().u;
        let gx = (u(E + h, 0.0) - u(E - h, 0.0)) / (2.0 * h);
        let gy = (u(E, h) - u(E, -h)) / (2.0 * h);
        assert!((gx - e.grad[0]).abs() < 1e-8 && gy.abs() < 1e-8);
        let uxx = (u(E + h, 0.0) - 2.0 * u(E, 0.0) + u(E - h, 0.0)) / (h * h);
        let uyy = (u(E, h) - 2.0 * u(E, 0.0) + u(E, -h)) / (h * h);
        // u_xy = 0 on the axis by symmetry
        assert!(((uxx * uxx + uyy * uyy) - e.hess_sq).abs() < 1e-4);
        assert!(eval(SolutionKind::DiskComplement, Coord::Planar([0.5, 0.0])).is_err());
    }

    #[test]
    fn hairpin_center() {
        let e = eval(SolutionKind::Hairpin, Coord::Strip(c(0.0, 0.0))).unwrap();
        assert!((e.u - 1.0).abs() < 1e-15);
        assert!(e.grad[0].abs() < 1e-15 && e.grad[1].abs() < 1e-15);
        assert!((e.hess_sq - 0.125).abs() < 1e-15);
        assert!(eval(SolutionKind::Hairpin, Coord::Planar([0.0, 0.0])).is_err());
    }

    #[test]
    fn strip_map_examples() {
        let (z, j) = strip_map(c(0.0, 0.0)).unwrap();
        assert_eq!((z, j), (c(0.0, 0.0), c(2.0, 0.0)));
        let (z, _) = strip_map(c(0.0, FRAC_PI_2)).unwrap();
        assert!((z - c(0.0, FRAC_PI_2 + 1.0)).norm() < 1e-15);
        let (z, _) = strip_map(c(1.0, FRAC_PI_2)).unwrap();
        assert!((z - c(1.0, FRAC_PI_2 + 1f64.cosh())).norm() < 1e-14);
        assert!(strip_map(c(0.0, 1.6)).is_err());
        assert!(strip_map(c(26.0, 0.0)).is_err());
    }

    #[test]
    fn strip_map_inverse_round_trip() {
        for &(s, t) in &[(0.0, 0.0), (0.3, 1.2), (-4.0, -1.5), (7.5, FRAC_PI_2), (-2.0, -FRAC_PI_2), (12.0, 0.1)] {
            let w = c(s, t);
            let (z, _) = strip_map(w).unwrap();
            let back = strip_map_inv(z).unwrap();
            assert!((back - w).norm() < 1e-10 * (1.0 + w.norm()), "{w} -> {back}");
        }
        assert!(strip_map_inv(c(0.0, 10.0)).is_err());
    }

    #[test]
    fn conformal_g_examples() {
        let g = conformal_g(SolutionKind::DiskComplement, Coord::Planar([2.0, 0.0])).unwrap();
        assert!((g - c(0.5, 0.0)).norm() < 1e-15);
        let g = conformal_g(SolutionKind::Hairpin, Coord::Strip(c(0.0, FRAC_PI_2))).unwrap();
        assert!((g - c(0.0, 1.0)).norm() < 1e-15);
        let g = conformal_g(SolutionKind::Hairpin, Coord::Strip(c(0.0, 0.0))).unwrap();
        assert_eq!(g, c(0.0, 0.0));
        assert!(matches!(conformal_g(SolutionKind::Plane, Coord::Planar([1.0, 0.0])), Err(Error::Unsupported(_))));
    }

    #[test]
    fn conformal_g_inv_examples() {
        let p = conformal_g_inv(SolutionKind::DiskComplement, c(0.5, 0.0)).unwrap();
        assert!((p.z - c(2.0, 0.0)).norm() < 1e-15);
        let p = conformal_g_inv(SolutionKind::Hairpin, c(0.0, 1.0)).unwrap();
        assert!((p.w.unwrap() - c(0.0, FRAC_PI_2)).norm() < 1e-14);
        assert!((p.z - c(0.0, FRAC_PI_2 + 1.0)).norm() < 1e-14);
        let p = conformal_g_inv(SolutionKind::Hairpin, c(0.0, 0.0)).unwrap();
        assert!(p.z.norm() < 1e-15);
        assert!(conformal_g_inv(SolutionKind::DiskComplement, c(0.0, 0.0)).is_err());
        assert!(conformal_g_inv(SolutionKind::Hairpin, c(1.0, 0.0)).is_err());
        assert!(conformal_g_inv(SolutionKind::Hairpin, c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn boundary_param_examples() {
        let b = boundary_param(SolutionKind::DiskComplement, 0, 0.3).unwrap();
        assert!((b.point[0] - 0.3f64.cos()).abs() < 1e-15);
        assert_eq!((b.mean_curvature, b.arclen_density), (1.0, 1.0));
        let b = boundary_param(SolutionKind::Hairpin, 0, 0.7).unwrap();
        assert!((b.point[1] - (FRAC_PI_2 + 0.7f64.cosh())).abs() < 1e-15);
        assert!((b.mean_curvature - 1.0 / 0.7f64.cosh().powi(2)).abs() < 1e-15);
        assert!((b.arclen_density - 0.7f64.cosh()).abs() < 1e-15);
        let b = boundary_param(SolutionKind::Plane, 0, 3.0).unwrap();
        assert_eq!((b.point, b.mean_curvature), ([0.0, 3.0], 0.0));
        assert!(boundary_param(SolutionKind::Plane, 1, 0.0).is_err());
        assert!(boundary_param(SolutionKind::Hairpin, 2, 0.0).is_err());
    }

    #[test]
    fn total_curvature_examples() {
        let t = total_curvature(SolutionKind::DiskComplement, 0, 0.0, 2.0 * PI).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-12);
        let t = total_curvature(SolutionKind::Hairpin, 0, -20.0, 20.0).unwrap();
        assert!((t - PI).abs() < 1e-6);
        for s in [0.5, 1.0, 3.0, 8.0] {
            let t = total_curvature(SolutionKind::Hairpin, 1, 0.0, s).unwrap();
            assert!((t - s.sinh().atan()).abs() < 1e-12);
        }
        assert!(total_curvature(SolutionKind::Hairpin, 0, 1.0, 0.0).is_err());
    }
}
