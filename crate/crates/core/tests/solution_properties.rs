use std::f64::consts::FRAC_PI_2;

use fbindex::solutions::{self, Coord, SolutionKind};
use num_complex::Complex64;
use proptest::prelude::*;

fn halton(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-random interior points with the coordinate each solution evaluates on.
fn interior_points(kind: SolutionKind, n: usize) -> Vec<Coord> {
    (1..=n)
        .map(|i| {
            let (a, b) = (halton(i, 2), halton(i, 3));
            match kind {
                SolutionKind::Plane => Coord::Planar([1e-3 + 10.0 * a, -10.0 + 20.0 * b]),
                SolutionKind::DiskComplement => {
                    let r = 1.0 + 1e-3 + 20.0 * a;
                    let t = 2.0 * std::f64::consts::PI * b;
                    Coord::Planar([r * t.cos(), r * t.sin()])
                }
                SolutionKind::Hairpin => Coord::Strip(Complex64::new(-10.0 + 20.0 * a, (0.999 * (2.0 * b - 1.0)) * FRAC_PI_2)),
            }
        })
        .collect()
}

fn physical(c: Coord) -> [f64; 2] {
    match c {
        Coord::Planar(p) => p,
        Coord::Strip(w) => {
            let (z, _) = solutions::strip_map(w).unwrap();
            [z.re, z.im]
        }
    }
}

fn u_at(kind: SolutionKind, p: [f64; 2]) -> f64 {
    let c = match kind {
        SolutionKind::Hairpin => Coord::Strip(solutions::strip_map_inv(Complex64::new(p[0], p[1])).unwrap()),
        _ => Coord::Planar(p),
    };
    solutions::eval(kind, c).unwrap().u
}

#[test]
fn gradient_bound_at_ten_thousand_points() {
    for kind in SolutionKind::ALL {
        for c in interior_points(kind, 10_000) {
            let g = solutions::eval(kind, c).unwrap().grad;
            let norm = g[0].hypot(g[1]);
            assert!(norm <= 1.0 + 1e-15, "{kind}: |∇u| = {norm}");
            if kind != SolutionKind::Plane {
                assert!(norm < 1.0, "{kind}: |∇u| = 1 in the interior at {c:?}");
            }
        }
    }
}

#[test]
fn five_point_laplacian_is_second_order() {
    for kind in SolutionKind::ALL {
        for c in interior_points(kind, 20) {
            let p = physical(c);
            let u = |q: [f64; 2]| u_at(kind, q);
            let lap = |h: f64| {
                (u([p[0] + h, p[1]]) + u([p[0] - h, p[1]]) + u([p[0], p[1] + h]) + u([p[0], p[1] - h]) - 4.0 * u(p)) / (h * h)
            };
            // step well inside the phase; the fourth derivatives scale like the inverse distance to the boundary
            let d = match kind {
                SolutionKind::Plane => p[0],
                SolutionKind::DiskComplement => p[0].hypot(p[1]) - 1.0,
                SolutionKind::Hairpin => match c {
                    Coord::Strip(w) => (1.0 + w.cosh()).norm() * (FRAC_PI_2 - w.im.abs()),
                    Coord::Planar(_) => unreachable!(),
                },
            };
            let h = (0.1 * d).min(0.02);
            let (l1, l2) = (lap(h).abs(), lap(0.5 * h).abs());
            assert!(l2 < 1e-6 || l2 <= 0.3 * l1, "{kind} at {p:?}: {l1:e} then {l2:e}");
        }
    }
}

#[test]
fn free_boundary_samples() {
    for kind in SolutionKind::ALL {
        for branch in 0..kind.branches() {
            for i in 0..1000 {
                let s = -6.0 + 12.0 * i as f64 / 999.0;
                let b = solutions::boundary_param(kind, branch, s).unwrap();
                let c = match kind {
                    SolutionKind::Hairpin => Coord::Strip(solutions::hairpin_boundary_strip(branch, s)),
                    _ => Coord::Planar(b.point),
                };
                let e = solutions::eval(kind, c).unwrap();
                assert!((e.grad[0].hypot(e.grad[1]) - 1.0).abs() <= 1e-10);
                assert!(b.mean_curvature >= 0.0);
                assert!(e.u.abs() <= 1e-10);
                if kind != SolutionKind::Plane {
                    // H = Re(−Ḡ² G′) on the free boundary
                    let g = solutions::conformal_g(kind, c).unwrap();
                    let gp = solutions::conformal_g_prime(kind, c).unwrap();
                    let h = (-(g.conj() * g.conj()) * gp).re;
                    assert!((h - b.mean_curvature).abs() <= 1e-8, "{kind} s={s}: {h} vs {}", b.mean_curvature);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn hairpin_chart_is_nonnegative(s in -20.0f64..20.0, t in -FRAC_PI_2..FRAC_PI_2) {
        let e = solutions::eval(SolutionKind::Hairpin, Coord::Strip(Complex64::new(s, t))).unwrap();
        prop_assert!(e.u >= 0.0);
    }

    #[test]
    fn hairpin_chart_boundary(s in -20.0f64..20.0, upper in any::<bool>()) {
        let t = if upper { FRAC_PI_2 } else { -FRAC_PI_2 };
        let w = Complex64::new(s, t);
        let e = solutions::eval(SolutionKind::Hairpin, Coord::Strip(w)).unwrap();
        prop_assert!(e.u.abs() <= 1e-9 * s.cosh());
        prop_assert!(((0.5 * w).tanh().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strip_chart_round_trip(s in -12.0f64..12.0, t in -FRAC_PI_2..FRAC_PI_2) {
        let w = Complex64::new(s, t);
        let (z, _) = solutions::strip_map(w).unwrap();
        let back = solutions::strip_map_inv(z).unwrap();
        prop_assert!((back - w).norm() <= 1e-9 * (1.0 + w.norm()));
    }

    #[test]
    fn g_is_the_complex_gradient(r in 1.01f64..30.0, theta in 0.0f64..6.28) {
        let p = [r * theta.cos(), r * theta.sin()];
        let e = solutions::eval(SolutionKind::DiskComplement, Coord::Planar(p)).unwrap();
        let g = solutions::conformal_g(SolutionKind::DiskComplement, Coord::Planar(p)).unwrap();
        prop_assert!((g.re - e.grad[0]).abs() < 1e-14 && (g.im + e.grad[1]).abs() < 1e-14);
        prop_assert!((e.hess_sq - 2.0 * solutions::conformal_g_prime(SolutionKind::DiskComplement, Coord::Planar(p)).unwrap().norm_sqr()).abs() < 1e-13);
    }
}
