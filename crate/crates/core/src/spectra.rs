//! Morse index by inertia, and low eigenpairs of the pencil `(K, M)`.
//!
//! Two independent routes: band `LDLᵀ` factorizations (inertia, Sylvester
//! counts, inverse iteration) scale to large meshes; a dense symmetric
//! eigensolver serves small meshes and cross-checks the first route.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fem::AssembledForms;
use crate::linalg::{BandLdlt, Inertia};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Default zero threshold, relative to `‖K‖∞`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

/// Largest dimension accepted by the dense path.
pub const DENSE_LIMIT: usize = 4000;

/// Residual bound required of every returned eigenpair:
/// `‖Kφ − λMφ‖ ≤ RESIDUAL_REL·‖Kφ‖ + RESIDUAL_ABS`.
pub const RESIDUAL_REL: f64 = 1e-8;
pub const RESIDUAL_ABS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub inertia: Inertia,
    /// The `k` smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Matching `M`-orthonormal eigenvectors on the free dofs.
    pub eigenvectors: Vec<Vec<f64>>,
    pub zero_tol: f64,
}

/// Discrete Morse index: inertia of `K` from a band `LDLᵀ` factorization.
/// Pivots with `|d| ≤ zero_tol·‖K‖∞` are counted as zero.
pub fn morse_index(forms: &AssembledForms, zero_tol: f64) -> Result<Inertia> {
    inertia_of(&forms.k, zero_tol)
}

pub fn inertia_of(k: &CsrMatrix, zero_tol: f64) -> Result<Inertia> {
    if !(zero_tol >= 0.0) {
        return Err(Error::Argument(format!("zero_tol must be nonnegative, got {zero_tol}")));
    }
    if k.dim() == 0 {
        return Ok(Inertia { n_neg: 0, n_zero: 0, n_pos: 0 });
    }
    let f = BandLdlt::factor(k)?;
    Ok(f.inertia(zero_tol * k.norm_inf()))
}

fn shifted(forms: &AssembledForms, sigma: f64) -> CsrMatrix {
    forms.k.linear_combination(1.0, &forms.m_free, -sigma)
}

/// Number of pencil eigenvalues strictly below `sigma` (Sylvester).
pub fn count_below(forms: &AssembledForms, sigma: f64) -> Result<usize> {
    Ok(BandLdlt::factor(&shifted(forms, sigma))?.pivot_values().iter().filter(|&&d| d < 0.0).count())
}

/// Number of pencil eigenvalues in `[−δ, δ)`.
pub fn count_near_zero(forms: &AssembledForms, delta: f64) -> Result<usize> {
    Ok(count_below(forms, delta)? - count_below(forms, -delta)?)
}

fn dense_k_and_m(forms: &AssembledForms) -> (DMatrix<f64>, DMatrix<f64>) {
    (forms.k.to_dense(), forms.m_free.to_dense())
}

/// Inertia of `K` from its dense eigenvalues (no factorization involved).
pub fn dense_inertia(forms: &AssembledForms, zero_tol: f64) -> Result<Inertia> {
    let n = forms.n_free();
    if n > DENSE_LIMIT {
        return Err(size_error(n));
    }
    let eig = forms.k.to_dense().symmetric_eigenvalues();
    let zero_abs = zero_tol * forms.k.norm_inf();
    let mut out = Inertia { n_neg: 0, n_zero: 0, n_pos: 0 };
    for &l in eig.iter() {
        if l.abs() <= zero_abs {
            out.n_zero += 1;
        } else if l < 0.0 {
            out.n_neg += 1;
        } else {
            out.n_pos += 1;
        }
    }
    Ok(out)
}

fn size_error(n: usize) -> Error {
    Error::Size(format!(
        "{n} free dofs exceed the dense eigenpair limit of {DENSE_LIMIT}; use morse_index (inertia scales, eigenpairs do not)"
    ))
}

/// The `k` smallest eigenpairs of `K φ = λ M φ`, by Cholesky reduction of
/// `M` to a standard symmetric problem and a dense tridiagonal QR solve.
/// The reported inertia classifies the eigenvalues of `K` itself with the
/// same threshold as [`morse_index`].
pub fn lowest_eigenpairs(forms: &AssembledForms, k: usize, zero_tol: f64) -> Result<SpectralResult> {
    let n = forms.n_free();
    if n > DENSE_LIMIT {
        return Err(size_error(n));
    }
    if k > n {
        return Err(Error::Argument(format!("requested {k} eigenpairs of a {n}-dimensional problem")));
    }
    let (kd, md) = dense_k_and_m(forms);
    let chol = md
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let mut c = kd.clone();
    if !l.solve_lower_triangular_mut(&mut c) {
        return Err(Error::Numerical("singular Cholesky factor".into()));
    }
    let mut ct = c.transpose();
    l.solve_lower_triangular_mut(&mut ct);
    let c = (&ct + ct.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        let mut x: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        if !lt.solve_upper_triangular_mut(&mut x) {
            return Err(Error::Numerical("singular Cholesky factor".into()));
        }
        let kx = &kd * &x;
        let res = (&kx - (&md * &x) * lambda).norm();
        if res > RESIDUAL_REL * kx.norm() + RESIDUAL_ABS {
            return Err(Error::Numerical(format!("eigenpair residual {res:e} too large for λ = {lambda}")));
        }
        eigenvalues.push(lambda);
        eigenvectors.push(x.iter().copied().collect());
    }
    let inertia = dense_inertia(forms, zero_tol)?;
    Ok(SpectralResult { inertia, eigenvalues, eigenvectors, zero_tol })
}

/// First eigenpair found without dense algebra: Sylvester bisection
/// isolates `λ₁`, then inverse iteration with a shift just below it
/// converges to the eigenvector. Works at any size the band factorization
/// handles.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstEigenpair {
    pub lambda: f64,
    /// `M`-normalized, sign fixed so the largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    /// Sylvester bracket `count_below(lo) = 0`, `count_below(hi) = 1`.
    pub bracket: (f64, f64),
    /// Whether `λ₂ > λ₁ + gap_probe` (simplicity witness).
    pub simple: bool,
    pub gap_probe: f64,
}

pub fn first_eigenpair(forms: &AssembledForms) -> Result<FirstEigenpair> {
    let n = forms.n_free();
    if n == 0 {
        return Err(Error::Argument("no free degrees of freedom".into()));
    }
    let scale = forms.k.norm_inf() / forms.m_free.norm_inf().max(f64::MIN_POSITIVE);
    // bracket: lo with no eigenvalue below, hi with at least one
    let mut step = 1.0f64;
    let mut lo = -step;
    while count_below(forms, lo)? > 0 {
        step *= 2.0;
        lo = -step;
        if step > 1e6 * scale.max(1.0) {
            return Err(Error::Numerical("could not bound the spectrum from below".into()));
        }
    }
    let mut hi = 1.0f64.max(lo + 1.0);
    step = 1.0;
    let mut count_hi = count_below(forms, hi)?;
    while count_hi == 0 {
        lo = hi;
        step *= 2.0;
        hi += step;
        if hi > 4.0 * scale + 1.0 {
            return Err(Error::Numerical("could not bound the first eigenvalue from above".into()));
        }
        count_hi = count_below(forms, hi)?;
    }
    // shrink until λ₁ is the only eigenvalue in [lo, hi) and the bracket is tight
    for _ in 0..200 {
        let width = hi - lo;
        if count_hi == 1 && width <= 1e-3 * (lo.abs().max(hi.abs())).max(1e-3) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let c = count_below(forms, mid)?;
        if c == 0 {
            lo = mid;
        } else {
            hi = mid;
            count_hi = c;
        }
    }
    if count_hi != 1 {
        return Err(Error::Numerical(format!("could not isolate the first eigenvalue in [{lo}, {hi})")));
    }
    // shift strictly below λ₁ keeps K − σM positive definite
    let sigma = lo - 1e-3 * (hi - lo).max(1e-12);
    let fact = BandLdlt::factor(&shifted(forms, sigma))?;
    let mut x = vec![1.0; n];
    let mut lambda = f64::NAN;
    for it in 0..500 {
        let mx = forms.m_free.mul_vec(&x);
        let mut y = fact.solve(&mx);
        let ny = forms.m_free.quadratic_form(&y).sqrt();
        y.iter_mut().for_each(|v| *v /= ny);
        let rq = forms.k.quadratic_form(&y);
        x = y;
        let done = it > 2 && (rq - lambda).abs() <= 1e-15 * rq.abs().max(1e-12);
        lambda = rq;
        if done {
            break;
        }
    }
    let kx = forms.k.mul_vec(&x);
    let mx = forms.m_free.mul_vec(&x);
    let res = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let kn = kx.iter().map(|v| v * v).sum::<f64>().sqrt();
    if res > RESIDUAL_REL * kn + RESIDUAL_ABS {
        return Err(Error::Numerical(format!("inverse iteration residual {res:e} for λ₁ = {lambda}")));
    }
    let imax = (0..n).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap();
    if x[imax] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let gap_probe = 1e-6 * lambda.abs().max(1.0);
    let simple = count_below(forms, lambda + gap_probe)? == 1;
    Ok(FirstEigenpair { lambda, vector: x, bracket: (lo, hi), simple, gap_probe })
}

/// Sign-definiteness of a vector: after fixing the sign at the entry of
/// largest magnitude, every entry is strictly positive.
pub fn is_sign_definite(x: &[f64]) -> bool {
    let Some(imax) = (0..x.len()).max_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())) else {
        return false;
    };
    let s = x[imax].signum();
    x.iter().all(|&v| s * v > 0.0)
}

/// Entries below this fraction of `max |x|` are under the round-off floor
/// of a normwise backward-stable solve and carry no sign information.
pub const SIGN_RESOLUTION: f64 = 1e-10;

/// Number of entries with `|x_i| ≤ SIGN_RESOLUTION · max |x|`.
pub fn unresolved_entries(x: &[f64]) -> usize {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    x.iter().filter(|v| v.abs() <= SIGN_RESOLUTION * m).count()
}

/// [`is_sign_definite`] restricted to the resolved entries.
pub fn is_sign_definite_resolved(x: &[f64]) -> bool {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let resolved: Vec<f64> = x.iter().copied().filter(|v| v.abs() > SIGN_RESOLUTION * m).collect();
    is_sign_definite(&resolved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::meshgen;

    #[test]
    fn diagonal_example() {
        let k = CsrMatrix::from_triplets(2, vec![(0, 0, -1.0), (1, 1, 2.0)]);
        let i = inertia_of(&k, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((i.n_neg, i.n_zero, i.n_pos), (1, 0, 1));
    }

    #[test]
    fn dense_and_factored_routes_agree_on_disk() {
        let forms = assemble(&meshgen::disk_mesh(6).unwrap()).unwrap();
        let a = morse_index(&forms, DEFAULT_ZERO_TOL).unwrap();
        let r = lowest_eigenpairs(&forms, 4, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(a, r.inertia);
        assert_eq!(a.n_neg, 1);
        assert!(r.eigenvalues[0] < -2.0 && r.eigenvalues[1] > 0.0);
        assert!(r.eigenvalues[1] < 0.1 && r.eigenvalues[2] < 0.1);
        assert!(r.eigenvalues[3] > 1.0);
    }

    #[test]
    fn eigenvectors_are_m_orthonormal() {
        let forms = assemble(&meshgen::annulus_mesh(3.0, 6, 24).unwrap()).unwrap();
        let r = lowest_eigenpairs(&forms, 5, DEFAULT_ZERO_TOL).unwrap();
        for i in 0..5 {
            let mi = forms.m_free.mul_vec(&r.eigenvectors[i]);
            for j in 0..5 {
                let g: f64 = mi.iter().zip(&r.eigenvectors[j]).map(|(a, b)| a * b).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-10, "({i},{j}): {g}");
            }
        }
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn first_eigenpair_matches_dense() {
        for mesh in [meshgen::disk_mesh(5).unwrap(), meshgen::hairpin_mesh(2.0, 16, 8).unwrap(), meshgen::plane_mesh(1.0, 6).unwrap()] {
            let forms = assemble(&mesh).unwrap();
            let d = lowest_eigenpairs(&forms, 2, DEFAULT_ZERO_TOL).unwrap();
            let s = first_eigenpair(&forms).unwrap();
            assert!((s.lambda - d.eigenvalues[0]).abs() <= 1e-10 * d.eigenvalues[0].abs().max(1.0));
            assert!(s.simple);
            assert!(is_sign_definite(&s.vector));
            let dot: f64 = forms.m_free.mul_vec(&s.vector).iter().zip(&d.eigenvectors[0]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn plane_truncation_is_positive() {
        let forms = assemble(&meshgen::plane_mesh(2.0, 6).unwrap()).unwrap();
        let r = lowest_eigenpairs(&forms, 3, DEFAULT_ZERO_TOL).unwrap();
        assert!(r.eigenvalues[0] > 0.0);
        assert_eq!(r.inertia.n_neg, 0);
    }

    #[test]
    fn size_bound_is_enforced() {
        let forms = assemble(&meshgen::disk_mesh(32).unwrap()).unwrap();
        assert!(matches!(lowest_eigenpairs(&forms, 1, DEFAULT_ZERO_TOL), Err(Error::Size(_))));
    }

    #[test]
    fn near_zero_window_counts() {
        let forms = assemble(&meshgen::disk_mesh(6).unwrap()).unwrap();
        assert_eq!(count_near_zero(&forms, 0.2).unwrap(), 2);
        assert_eq!(count_below(&forms, 0.0).unwrap(), 1);
    }
}
