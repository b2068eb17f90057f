//! Banded symmetric indefinite `LDLᵀ` factorization with reverse
//! Cuthill–McKee ordering.
//!
//! Pivoting rule (fixed, so results are reproducible bit for bit): at step
//! `k` with `c = max_{i>k} |a_ik|`,
//!
//! 1. take a 1×1 pivot if `|a_kk| ≥ α·c` with `α = (1 + √17)/8`;
//! 2. otherwise take the 2×2 block on `(k, k+1)` if its determinant is not
//!    negligible relative to the block scale;
//! 3. otherwise take the 1×1 pivot anyway if `|a_kk|` exceeds round-off level;
//! 4. otherwise report a breakdown at `k`.
//!
//! No symmetric interchanges are performed, so the band of the RCM-ordered
//! matrix is preserved (the `L` factor needs one extra diagonal for 2×2 blocks).
//! By Sylvester's law the signs of the block-diagonal factor give the inertia.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

const ALPHA: f64 = 0.640_388_203_202_208_1; // (1 + √17) / 8
const TWO_BY_TWO_REL_DET: f64 = 1e-8;

/// Counts of negative, zero and positive eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_neg: usize,
    pub n_zero: usize,
    pub n_pos: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.n_neg + self.n_zero + self.n_pos
    }
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.n_neg, self.n_zero, self.n_pos)
    }
}

/// Reverse Cuthill–McKee ordering of a graph given by neighbour lists.
///
/// Returns `perm` with `perm[new] = old`. Each connected component starts
/// from a pseudo-peripheral vertex; neighbours are visited by increasing
/// degree, ties broken by index.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adj, &degree, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            next.dedup();
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &u in &adj[v] {
                if seen.insert(u) {
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        next.sort_unstable();
        levels.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut best = seed;
    let mut ecc = bfs_levels(adj, seed).len();
    loop {
        let levels = bfs_levels(adj, best);
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        let cand_ecc = bfs_levels(adj, cand).len();
        if cand_ecc > ecc {
            best = cand;
            ecc = cand_ecc;
        } else {
            return best;
        }
    }
}

/// Half bandwidth of `a` under the ordering `perm` (`perm[new] = old`).
pub fn bandwidth(a: &CsrMatrix, perm: &[usize]) -> usize {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    a.entries().map(|(i, j, _)| inv[i].abs_diff(inv[j])).max().unwrap_or(0)
}

/// `P A Pᵀ = L D Lᵀ` in band storage.
#[derive(Debug, Clone)]
pub struct BandLdlt {
    n: usize,
    /// Storage half bandwidth of `L`.
    w: usize,
    perm: Vec<usize>,
    /// Row-major lower band: entry `(i, j)` at `i·(w+1) + (j + w − i)`.
    l: Vec<f64>,
    d_diag: Vec<f64>,
    /// Off-diagonal of a 2×2 block starting at `k`, zero elsewhere.
    d_off: Vec<f64>,
    two_by_two: Vec<bool>,
}

impl BandLdlt {
    /// Factor a symmetric matrix after an RCM reordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(&a.adjacency());
        Self::factor_with_ordering(a, perm)
    }

    /// Factor with a caller-supplied ordering (`perm[new] = old`).
    pub fn factor_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        assert_eq!(perm.len(), n, "ordering length mismatch");
        let band = bandwidth(a, &perm);
        let w = band + 1;
        let stride = w + 1;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut l = vec![0.0; n * stride];
        for (i, j, v) in a.entries() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj <= pi {
                l[pi * stride + pj + w - pi] = v;
            }
        }
        let at = |i: usize, j: usize| i * stride + j + w - i;
        let tiny = f64::EPSILON * a.norm_inf().max(f64::MIN_POSITIVE);

        let mut d_diag = vec![0.0; n];
        let mut d_off = vec![0.0; n];
        let mut two_by_two = vec![false; n];
        let mut k = 0;
        while k < n {
            let hi = n.min(k + band + 1);
            let colmax = ((k + 1)..hi).map(|i| l[at(i, k)].abs()).fold(0.0, f64::max);
            let akk = l[at(k, k)];
            if !akk.is_finite() || !colmax.is_finite() {
                return Err(Error::Breakdown { pivot: k, message: "non-finite entry".into() });
            }
            let one_by_one = akk.abs() >= ALPHA * colmax && akk.abs() > tiny;
            let block = if !one_by_one && k + 1 < n {
                let (p, q, r) = (akk, l[at(k + 1, k)], l[at(k + 1, k + 1)]);
                let det = p * r - q * q;
                let scale = p.abs().max(q.abs()).max(r.abs()).max(colmax);
                (det.abs() > TWO_BY_TWO_REL_DET * scale * scale).then_some((p, q, r, det))
            } else {
                None
            };

            if let Some((p, q, r, det)) = block {
                d_diag[k] = p;
                d_diag[k + 1] = r;
                d_off[k] = q;
                two_by_two[k] = true;
                l[at(k + 1, k)] = 0.0;
                let end = n.min(k + band + 2);
                let rows: Vec<(usize, f64, f64)> = ((k + 2)..end)
                    .map(|i| {
                        let a0 = if i - k <= w { l[at(i, k)] } else { 0.0 };
                        (i, a0, l[at(i, k + 1)])
                    })
                    .collect();
                let mult: Vec<(f64, f64)> =
                    rows.iter().map(|&(_, a0, a1)| ((a0 * r - a1 * q) / det, (a1 * p - a0 * q) / det)).collect();
                for (ri, &(i, _, _)) in rows.iter().enumerate() {
                    let (li0, li1) = mult[ri];
                    if li0 == 0.0 && li1 == 0.0 {
                        continue;
                    }
                    for &(j, aj0, aj1) in &rows[..=ri] {
                        l[at(i, j)] -= li0 * aj0 + li1 * aj1;
                    }
                }
                for (ri, &(i, _, _)) in rows.iter().enumerate() {
                    l[at(i, k)] = mult[ri].0;
                    l[at(i, k + 1)] = mult[ri].1;
                }
                k += 2;
            } else {
                if akk.abs() <= tiny {
                    return Err(Error::Breakdown {
                        pivot: k,
                        message: format!("pivot {akk:e} is at round-off level and no usable 2×2 block exists"),
                    });
                }
                d_diag[k] = akk;
                let col: Vec<(usize, f64)> = ((k + 1)..hi).map(|i| (i, l[at(i, k)])).filter(|&(_, v)| v != 0.0).collect();
                for (ci, &(i, aik)) in col.iter().enumerate() {
                    let li = aik / akk;
                    for &(j, ajk) in &col[..=ci] {
                        l[at(i, j)] -= li * ajk;
                    }
                }
                for &(i, aik) in &col {
                    l[at(i, k)] = aik / akk;
                }
                k += 1;
            }
        }
        Ok(Self { n, w, perm, l, d_diag, d_off, two_by_two })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of 2×2 pivot blocks used.
    pub fn two_by_two_count(&self) -> usize {
        self.two_by_two.iter().filter(|&&b| b).count()
    }

    /// Eigenvalues of the block-diagonal factor, in pivot order.
    pub fn pivot_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        let mut k = 0;
        while k < self.n {
            if self.two_by_two[k] {
                let (p, q, r) = (self.d_diag[k], self.d_off[k], self.d_diag[k + 1]);
                let mean = 0.5 * (p + r);
                let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
                out.push(mean - rad);
                out.push(mean + rad);
                k += 2;
            } else {
                out.push(self.d_diag[k]);
                k += 1;
            }
        }
        out
    }

    /// Inertia, classifying pivot values with `|d| ≤ zero_abs` as zero.
    pub fn inertia(&self, zero_abs: f64) -> Inertia {
        let mut inertia = Inertia { n_neg: 0, n_zero: 0, n_pos: 0 };
        for d in self.pivot_values() {
            if d.abs() <= zero_abs {
                inertia.n_zero += 1;
            } else if d < 0.0 {
                inertia.n_neg += 1;
            } else {
                inertia.n_pos += 1;
            }
        }
        inertia
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, w) = (self.n, self.w);
        let stride = w + 1;
        let at = |i: usize, j: usize| i * stride + j + w - i;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let mut s = y[i];
            for j in lo..i {
                s -= self.l[at(i, j)] * y[j];
            }
            y[i] = s;
        }
        let mut k = 0;
        while k < n {
            if self.two_by_two[k] {
                let (p, q, r) = (self.d_diag[k], self.d_off[k], self.d_diag[k + 1]);
                let det = p * r - q * q;
                let (b0, b1) = (y[k], y[k + 1]);
                y[k] = (r * b0 - q * b1) / det;
                y[k + 1] = (p * b1 - q * b0) / det;
                k += 2;
            } else {
                y[k] /= self.d_diag[k];
                k += 1;
            }
        }
        for i in (0..n).rev() {
            let hi = n.min(i + w + 1);
            let mut s = y[i];
            for j in (i + 1)..hi {
                s -= self.l[at(j, i)] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
