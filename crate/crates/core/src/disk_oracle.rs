//! Mesh-free spectrum of the disk form `Q0(ψ) = ∫_D |∇ψ|² − ∫_{∂D} ψ²`.
//!
//! Separating `ψ = R(r)·cos kθ` in `−Δψ = λψ`, `ψ_r = ψ` on `r = 1` gives
//! `R = I_k(x r)` with `λ = −x²` and the secular equation
//! `x I_k′(x) = I_k(x)`, or `R = J_k(x r)` with `λ = x²` and
//! `x J_k′(x) = J_k(x)`. The harmonic `r cos θ`, `r sin θ` are the `λ = 0` pair.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_ORDER: usize = 50;
pub const MAX_ARG: f64 = 30.0;
/// Grid step of the sign-change scans.
pub const SCAN_STEP: f64 = 0.01;
pub const ROOT_TOL: f64 = 1e-12;

// Above this argument the alternating J series loses too many digits.
const J_SERIES_LIMIT: f64 = 12.0;

fn check_range(k: usize, x: f64) -> Result<()> {
    if k > MAX_ORDER || !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Domain(format!("Bessel evaluation needs 0 ≤ k ≤ {MAX_ORDER}, 0 ≤ x ≤ {MAX_ARG}; got k = {k}, x = {x}")));
    }
    Ok(())
}

/// `(x/2)^k / k!`
fn leading(k: usize, x: f64) -> f64 {
    let mut t = 1.0;
    for j in 1..=k {
        t *= 0.5 * x / j as f64;
    }
    t
}

fn series(k: usize, x: f64, sign: f64) -> f64 {
    let mut term = leading(k, x);
    let mut sum = term;
    let q = 0.25 * x * x;
    for m in 1..500 {
        term *= sign * q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() && m as f64 > q.sqrt() {
            break;
        }
    }
    sum
}

/// Modified Bessel function `I_k(x)` by its power series.
pub fn bessel_i(k: usize, x: f64) -> Result<f64> {
    check_range(k, x)?;
    Ok(series(k, x, 1.0))
}

/// Bessel function `J_k(x)`: power series for `x ≤ 12` (or `k ≥ x`),
/// normalized backward recurrence above.
pub fn bessel_j(k: usize, x: f64) -> Result<f64> {
    check_range(k, x)?;
    Ok(j_unchecked(k, x))
}

fn j_unchecked(k: usize, x: f64) -> f64 {
    if x <= J_SERIES_LIMIT || k as f64 >= x {
        series(k, x, -1.0)
    } else {
        miller_j(k, x)
    }
}

fn miller_j(k: usize, x: f64) -> f64 {
    // start well above both k and x; even index for the normalization sum
    let mut top = k.max(x as usize) + 40;
    top += top % 2;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for n in (1..=top).rev() {
        let prev = 2.0 * n as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let idx = n - 1;
        if idx == k {
            wanted = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
    }
    norm += cur;
    wanted / norm
}

/// `I_k′ = (I_{k−1} + I_{k+1})/2`, with `I_{−1} = I_1`.
pub fn bessel_i_prime(k: usize, x: f64) -> Result<f64> {
    check_range(k, x)?;
    Ok(0.5 * (series(k.abs_diff(1), x, 1.0) + series(k + 1, x, 1.0)))
}

/// `J_k′ = (J_{k−1} − J_{k+1})/2`, with `J_{−1} = −J_1`.
pub fn bessel_j_prime(k: usize, x: f64) -> Result<f64> {
    check_range(k, x)?;
    if k == 0 {
        return Ok(-j_unchecked(1, x));
    }
    Ok(0.5 * (j_unchecked(k - 1, x) - j_unchecked(k + 1, x)))
}

/// `x I_k′(x) − I_k(x)`; roots give the negative eigenvalues `−x²`.
pub fn secular_i(k: usize, x: f64) -> Result<f64> {
    Ok(x * bessel_i_prime(k, x)? - bessel_i(k, x)?)
}

/// `x J_k′(x) − J_k(x)`; roots give the positive eigenvalues `x²`.
pub fn secular_j(k: usize, x: f64) -> Result<f64> {
    Ok(x * bessel_j_prime(k, x)? - bessel_j(k, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `I_k(x r)`, negative eigenvalue.
    ModifiedBessel,
    /// `J_k(x r)`, positive eigenvalue.
    Bessel,
    /// `r^k`, zero eigenvalue.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskEigenvalue {
    pub k: usize,
    pub lambda: f64,
    /// Root `x` of the secular equation (`0` for the zero mode).
    pub x: f64,
    pub profile: RadialProfile,
    /// 1 for `k = 0`, 2 for `k ≥ 1` (cosine and sine).
    pub multiplicity: usize,
}

fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = f(a)?;
    while b - a > ROOT_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Sign-change roots of `f` on `(0, MAX_ARG]`, scanned from `SCAN_STEP`.
fn scan_roots<F: FnMut(f64) -> Result<f64>>(mut f: F, limit: usize) -> Result<Vec<f64>> {
    let steps = (MAX_ARG / SCAN_STEP).round() as usize;
    let mut roots = Vec::new();
    let mut xa = SCAN_STEP;
    let mut fa = f(xa)?;
    for i in 2..=steps {
        let xb = i as f64 * SCAN_STEP;
        let fb = f(xb)?;
        if fa == 0.0 || (fa < 0.0) != (fb < 0.0) {
            roots.push(if fa == 0.0 { xa } else { bisect(&mut f, xa, xb)? });
            if roots.len() >= limit {
                break;
            }
        }
        xa = xb;
        fa = fb;
    }
    Ok(roots)
}

/// All negative eigenvalues of `Q0` with `0 ≤ k ≤ 50`, `x ≤ 30`.
pub fn negative_eigenvalues_q0() -> Result<Vec<DiskEigenvalue>> {
    let mut out = Vec::new();
    for k in 0..=MAX_ORDER {
        for x in scan_roots(|x| secular_i(k, x), usize::MAX)? {
            out.push(DiskEigenvalue {
                k,
                lambda: -x * x,
                x,
                profile: RadialProfile::ModifiedBessel,
                multiplicity: if k == 0 { 1 } else { 2 },
            });
        }
    }
    Ok(out)
}

/// `min (x I_k′(x)/I_k(x) − 1)` over the scan grid: positive means
/// mode `k` has no negative eigenvalue in the window.
pub fn min_ratio_excess(k: usize) -> Result<f64> {
    let steps = (MAX_ARG / SCAN_STEP).round() as usize;
    let mut min = f64::INFINITY;
    for i in 1..=steps {
        let x = i as f64 * SCAN_STEP;
        let r = x * bessel_i_prime(k, x)? / bessel_i(k, x)? - 1.0;
        min = min.min(r);
    }
    Ok(min)
}

/// The first `per_mode` nonnegative eigenvalues of each mode `k ≤ k_max`,
/// grouped by `k` and ascending within a mode. Mode 1 starts with the zero
/// eigenvalue of multiplicity 2.
pub fn positive_eigenvalues_q0(k_max: usize, per_mode: usize) -> Result<Vec<DiskEigenvalue>> {
    if k_max > MAX_ORDER {
        return Err(Error::Domain(format!("k_max must be ≤ {MAX_ORDER}, got {k_max}")));
    }
    let mut out = Vec::new();
    for k in 0..=k_max {
        let mult = if k == 0 { 1 } else { 2 };
        let mut found = 0;
        if k == 1 && per_mode > 0 {
            out.push(DiskEigenvalue { k, lambda: 0.0, x: 0.0, profile: RadialProfile::Power, multiplicity: 2 });
            found += 1;
        }
        for x in scan_roots(|x| secular_j(k, x), per_mode - found.min(per_mode))? {
            out.push(DiskEigenvalue { k, lambda: x * x, x, profile: RadialProfile::Bessel, multiplicity: mult });
        }
    }
    Ok(out)
}

/// `a + Σ r^k (c_k cos kθ + d_k sin kθ)/√π`, with `c[0]`, `d[0]` the `k = 1` coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FourierHarmonic {
    pub a: f64,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl FourierHarmonic {
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let s = 1.0 / PI.sqrt();
        let mut v = self.a;
        for (i, (&c, &d)) in self.coefficients().enumerate() {
            let k = (i + 1) as f64;
            v += s * r.powf(k) * (c * (k * theta).cos() + d * (k * theta).sin());
        }
        v
    }

    /// `(∂_r, r⁻¹ ∂_θ)` at `(r, θ)`.
    pub fn grad_polar(&self, r: f64, theta: f64) -> [f64; 2] {
        let s = 1.0 / PI.sqrt();
        let (mut gr, mut gt) = (0.0, 0.0);
        for (i, (&c, &d)) in self.coefficients().enumerate() {
            let k = (i + 1) as f64;
            let rk1 = r.powf(k - 1.0);
            let (sn, cs) = (k * theta).sin_cos();
            gr += s * k * rk1 * (c * cs + d * sn);
            gt += s * k * rk1 * (-c * sn + d * cs);
        }
        [gr, gt]
    }

    fn coefficients(&self) -> impl Iterator<Item = (&f64, &f64)> {
        let n = self.c.len().max(self.d.len());
        (0..n).map(move |i| (self.c.get(i).unwrap_or(&0.0), self.d.get(i).unwrap_or(&0.0)))
    }
}

/// Closed-form `Q0` of a harmonic: `Σ (k − 1)(c_k² + d_k²) − 2π a²`.
pub fn q0_value(h: &FourierHarmonic) -> f64 {
    let mut q = -2.0 * PI * h.a * h.a;
    for (i, (&c, &d)) in h.coefficients().enumerate() {
        q += i as f64 * (c * c + d * d);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn anchors() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        // 1 + 1/4 + 1/64 + 1/2304 + … by explicit partial sums
        let mut s = 0.0;
        let mut t = 1.0;
        for m in 0..12 {
            if m > 0 {
                t /= 4.0 * (m * m) as f64;
            }
            s += t;
        }
        assert!((bessel_i(0, 1.0).unwrap() - s).abs() < 1e-15);
        assert!((s - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!(bessel_i(0, 31.0).is_err() && bessel_j(51, 1.0).is_err() && bessel_j(0, -1.0).is_err());
    }

    #[test]
    fn first_zero_of_j0() {
        let z = bisect(|x| bessel_j(0, x), 2.0, 3.0).unwrap();
        assert!((z - 2.404_825_557_695_773).abs() < 1e-10, "{z}");
    }

    #[test]
    fn series_and_recurrence_agree_where_both_work() {
        for k in [0usize, 1, 3, 7] {
            for x in [12.5, 13.0, 15.0] {
                let series_value = series(k, x, -1.0);
                let m = miller_j(k, x);
                assert!((series_value - m).abs() < 1e-9, "k={k} x={x}: {series_value} vs {m}");
            }
        }
    }

    #[test]
    fn j_satisfies_three_term_recurrence_at_large_argument() {
        for x in [13.0, 20.0, 29.5] {
            for k in 1..10usize {
                let lhs = bessel_j(k - 1, x).unwrap() + bessel_j(k + 1, x).unwrap();
                let rhs = 2.0 * k as f64 / x * bessel_j(k, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-12, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn secular_function_at_origin() {
        assert_eq!(secular_i(0, 0.0).unwrap(), -1.0);
        for k in 1..5 {
            assert_eq!(secular_i(k, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_negative_eigenvalue() {
        let neg = negative_eigenvalues_q0().unwrap();
        assert_eq!(neg.len(), 1);
        let e = neg[0];
        assert_eq!(e.k, 0);
        assert!(secular_i(0, 1.6).unwrap() < 0.0 && secular_i(0, 1.65).unwrap() > 0.0);
        assert!(e.x > 1.60 && e.x < 1.62, "{}", e.x);
        assert!((e.lambda + 2.59).abs() < 0.01);
        assert!(min_ratio_excess(1).unwrap() > 0.0);
    }

    #[test]
    fn positive_spectrum_structure() {
        let pos = positive_eigenvalues_q0(3, 3).unwrap();
        let k1: Vec<_> = pos.iter().filter(|e| e.k == 1).collect();
        assert_eq!(k1[0].lambda, 0.0);
        assert_eq!(k1[0].multiplicity, 2);
        for k in 0..=3 {
            let l: Vec<f64> = pos.iter().filter(|e| e.k == k).map(|e| e.lambda).collect();
            assert_eq!(l.len(), 3);
            assert!(l.windows(2).all(|w| w[0] < w[1]));
        }
        for e in pos.iter().filter(|e| e.lambda > 0.0) {
            assert!(secular_j(e.k, e.x).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn q0_examples() {
        let h = |a: f64, c: Vec<f64>| FourierHarmonic { a, c, d: vec![] };
        assert!((q0_value(&h(1.0, vec![])) + 2.0 * PI).abs() < 1e-15);
        assert_eq!(q0_value(&h(0.0, vec![1.0])), 0.0);
        assert_eq!(q0_value(&h(0.0, vec![0.0, 1.0])), 1.0);
    }

    /// `∫_D |∇h|² − ∫_{∂D} h²`: Gauss–Legendre in `r`, periodic trapezoid in `θ`.
    fn q0_quadrature(h: &FourierHarmonic) -> f64 {
        let kmax = h.c.len().max(h.d.len());
        let gr = GaussLegendre::new(kmax + 4);
        let nt = 4 * kmax + 8;
        let wt = 2.0 * PI / nt as f64;
        let thetas: Vec<f64> = (0..nt).map(|j| j as f64 * wt).collect();
        let mut area = 0.0;
        for (r, wr) in gr.on(0.0, 1.0) {
            for &t in &thetas {
                let g = h.grad_polar(r, t);
                area += wr * wt * r * (g[0] * g[0] + g[1] * g[1]);
            }
        }
        let boundary: f64 = thetas.iter().map(|&t| wt * h.eval(1.0, t).powi(2)).sum();
        area - boundary
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn q0_identity_matches_quadrature(
            a in -2.0f64..2.0,
            c in proptest::collection::vec(-1.0f64..1.0, 0..6),
            d in proptest::collection::vec(-1.0f64..1.0, 0..6),
        ) {
            let h = FourierHarmonic { a, c, d };
            let q = q0_value(&h);
            prop_assert!((q - q0_quadrature(&h)).abs() < 1e-10 * (1.0 + q.abs()));
        }

        #[test]
        fn mean_free_harmonics_are_nonnegative(
            c in proptest::collection::vec(-1.0f64..1.0, 0..6),
            d in proptest::collection::vec(-1.0f64..1.0, 0..6),
        ) {
            let h = FourierHarmonic { a: 0.0, c, d };
            prop_assert!(q0_value(&h) >= 0.0);
        }
    }
}
