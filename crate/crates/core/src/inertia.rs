//! Eigenvalue counting by Sylvester inertia.
//!
//! `#{eigenvalues ≤ λ}` of a sparse symmetric `A` is read off a symmetric
//! indefinite factorization of `A - λI`. The matrix is first reordered by
//! reverse Cuthill–McKee so that it becomes block tridiagonal with blocks of
//! the bandwidth's size; the inertia is then accumulated over the Schur
//! complements `S_i = A_ii - λI - A_{i,i-1} S_{i-1}^{-1} A_{i-1,i}`, each
//! factored with Bunch–Kaufman pivoting.

use std::collections::VecDeque;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Bunch–Kaufman pivot threshold `(1 + √17) / 8`.
const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

/// Smallest Schur block size; tiny blocks only add per-step overhead.
const MIN_BLOCK: usize = 24;

/// Entry growth (relative to `max|A - λI|`) above which the block
/// elimination is abandoned in favour of a dense eigensolve.
const MAX_GROWTH: f64 = 1e8;

/// Signature of a symmetric matrix: counts of negative, zero and positive
/// eigenvalues, where "zero" means below the tie threshold in magnitude.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl Inertia {
    fn add(&mut self, other: Inertia) {
        self.negative += other.negative;
        self.zero += other.zero;
        self.positive += other.positive;
    }

    fn classify(&mut self, v: f64, tie: f64) {
        if v.abs() <= tie {
            self.zero += 1;
        } else if v < 0.0 {
            self.negative += 1;
        } else {
            self.positive += 1;
        }
    }
}

/// Dense symmetric matrix factored as `P L D Lᵀ Pᵀ` with Bunch–Kaufman
/// pivoting, lower storage, interchanges interleaved with the elimination
/// steps.
pub struct BunchKaufman {
    n: usize,
    /// Row-major; the strict lower triangle holds `L`, the diagonal and first
    /// subdiagonal hold `D`.
    a: Vec<f64>,
    /// `pivots[k] = Some(p)`: 1×1 block, row `k` interchanged with `p`.
    /// For a 2×2 block at `(k, k+1)` both entries are `Pair(p)`, with row
    /// `k+1` interchanged with `p`.
    pivots: Vec<Pivot>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pivot {
    Single(usize),
    Pair(usize),
}

impl BunchKaufman {
    /// Factors the symmetric matrix whose lower triangle is given in
    /// row-major `a` (`n × n`; the upper triangle is ignored).
    pub fn factor(n: usize, mut a: Vec<f64>) -> Self {
        assert_eq!(a.len(), n * n);
        let idx = |i: usize, j: usize| i * n + j;
        let mut pivots = vec![Pivot::Single(0); n];
        let mut k = 0;
        while k < n {
            let absakk = a[idx(k, k)].abs();
            let (mut imax, mut colmax) = (k, 0.0);
            for i in k + 1..n {
                let v = a[idx(i, k)].abs();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            let mut kstep = 1;
            let kp;
            if absakk.max(colmax) == 0.0 {
                // Zero column: the pivot is an exact zero of D.
                pivots[k] = Pivot::Single(k);
                k += 1;
                continue;
            } else if absakk >= BK_ALPHA * colmax {
                kp = k;
            } else {
                let mut rowmax: f64 = 0.0;
                for j in k..imax {
                    rowmax = rowmax.max(a[idx(imax, j)].abs());
                }
                for j in imax + 1..n {
                    rowmax = rowmax.max(a[idx(j, imax)].abs());
                }
                if absakk >= BK_ALPHA * colmax * (colmax / rowmax) {
                    kp = k;
                } else if a[idx(imax, imax)].abs() >= BK_ALPHA * rowmax {
                    kp = imax;
                } else {
                    kp = imax;
                    kstep = 2;
                }
            }

            let kk = k + kstep - 1;
            if kp != kk {
                // Interchange rows and columns kk and kp of the trailing block.
                for i in kp + 1..n {
                    a.swap(idx(i, kk), idx(i, kp));
                }
                for j in kk + 1..kp {
                    a.swap(idx(j, kk), idx(kp, j));
                }
                a.swap(idx(kk, kk), idx(kp, kp));
                if kstep == 2 {
                    a.swap(idx(k + 1, k), idx(kp, k));
                }
            }

            if kstep == 1 {
                let d = a[idx(k, k)];
                let r = 1.0 / d;
                for j in k + 1..n {
                    let ajk = a[idx(j, k)];
                    if ajk != 0.0 {
                        let s = r * ajk;
                        for i in j..n {
                            a[idx(i, j)] -= s * a[idx(i, k)];
                        }
                    }
                }
                for i in k + 1..n {
                    a[idx(i, k)] *= r;
                }
                pivots[k] = Pivot::Single(kp);
            } else {
                if k + 2 < n {
                    let d21 = a[idx(k + 1, k)];
                    let d11 = a[idx(k + 1, k + 1)] / d21;
                    let d22 = a[idx(k, k)] / d21;
                    let t = 1.0 / (d11 * d22 - 1.0);
                    let d21 = t / d21;
                    for j in k + 2..n {
                        let wk = d21 * (d11 * a[idx(j, k)] - a[idx(j, k + 1)]);
                        let wkp1 = d21 * (d22 * a[idx(j, k + 1)] - a[idx(j, k)]);
                        for i in j..n {
                            a[idx(i, j)] -= a[idx(i, k)] * wk + a[idx(i, k + 1)] * wkp1;
                        }
                        a[idx(j, k)] = wk;
                        a[idx(j, k + 1)] = wkp1;
                    }
                }
                pivots[k] = Pivot::Pair(kp);
                pivots[k + 1] = Pivot::Pair(kp);
            }
            k += kstep;
        }
        BunchKaufman { n, a, pivots }
    }

    /// Eigenvalues of the block-diagonal factor `D`, in block order.
    pub fn d_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        while k < n {
            match self.pivots[k] {
                Pivot::Single(_) => {
                    out.push(self.a[k * n + k]);
                    k += 1;
                }
                Pivot::Pair(_) => {
                    let (p, q, r) = (self.a[k * n + k], self.a[(k + 1) * n + k], self.a[(k + 1) * n + k + 1]);
                    let mean = 0.5 * (p + r);
                    let rad = (0.5 * (p - r)).hypot(q);
                    // Product form keeps the smaller root accurate.
                    let big = if mean >= 0.0 { mean + rad } else { mean - rad };
                    let small = if big != 0.0 { (p * r - q * q) / big } else { 0.0 };
                    out.push(big);
                    out.push(small);
                    k += 2;
                }
            }
        }
        out
    }

    pub fn inertia(&self, tie: f64) -> Inertia {
        let mut inertia = Inertia::default();
        for v in self.d_eigenvalues() {
            inertia.classify(v, tie);
        }
        inertia
    }

    /// Smallest `|eigenvalue|` of `D`.
    pub fn min_pivot(&self) -> f64 {
        self.d_eigenvalues().into_iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Solves `A X = B` in place; `b` is row-major `n × ncols`.
    pub fn solve(&self, b: &mut [f64], ncols: usize) {
        let n = self.n;
        let a = &self.a;
        let idx = |i: usize, j: usize| i * n + j;
        let swap_rows = |b: &mut [f64], r: usize, s: usize| {
            if r != s {
                for c in 0..ncols {
                    b.swap(r * ncols + c, s * ncols + c);
                }
            }
        };
        // L D y = P b
        let mut k = 0;
        while k < n {
            match self.pivots[k] {
                Pivot::Single(kp) => {
                    swap_rows(b, k, kp);
                    for i in k + 1..n {
                        let l = a[idx(i, k)];
                        if l != 0.0 {
                            for c in 0..ncols {
                                b[i * ncols + c] -= l * b[k * ncols + c];
                            }
                        }
                    }
                    let d = a[idx(k, k)];
                    for c in 0..ncols {
                        b[k * ncols + c] /= d;
                    }
                    k += 1;
                }
                Pivot::Pair(kp) => {
                    swap_rows(b, k + 1, kp);
                    for i in k + 2..n {
                        let (l0, l1) = (a[idx(i, k)], a[idx(i, k + 1)]);
                        if l0 != 0.0 || l1 != 0.0 {
                            for c in 0..ncols {
                                b[i * ncols + c] -= l0 * b[k * ncols + c] + l1 * b[(k + 1) * ncols + c];
                            }
                        }
                    }
                    let akm1k = a[idx(k + 1, k)];
                    let akm1 = a[idx(k, k)] / akm1k;
                    let ak = a[idx(k + 1, k + 1)] / akm1k;
                    let denom = akm1 * ak - 1.0;
                    for c in 0..ncols {
                        let bkm1 = b[k * ncols + c] / akm1k;
                        let bk = b[(k + 1) * ncols + c] / akm1k;
                        b[k * ncols + c] = (ak * bkm1 - bk) / denom;
                        b[(k + 1) * ncols + c] = (akm1 * bk - bkm1) / denom;
                    }
                    k += 2;
                }
            }
        }
        // Lᵀ Pᵀ x = y
        let mut k = n;
        while k > 0 {
            k -= 1;
            match self.pivots[k] {
                Pivot::Single(kp) => {
                    for i in k + 1..n {
                        let l = a[idx(i, k)];
                        if l != 0.0 {
                            for c in 0..ncols {
                                b[k * ncols + c] -= l * b[i * ncols + c];
                            }
                        }
                    }
                    swap_rows(b, k, kp);
                }
                Pivot::Pair(kp) => {
                    // k is the second row of the pair (k-1, k).
                    for i in k + 1..n {
                        let (l0, l1) = (a[idx(i, k - 1)], a[idx(i, k)]);
                        if l0 != 0.0 || l1 != 0.0 {
                            for c in 0..ncols {
                                let bi = b[i * ncols + c];
                                b[(k - 1) * ncols + c] -= l0 * bi;
                                b[k * ncols + c] -= l1 * bi;
                            }
                        }
                    }
                    swap_rows(b, k, kp);
                    k -= 1;
                }
            }
        }
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph of `m`.
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(m: &SymMatrix) -> Vec<usize> {
    let n = m.dim();
    let neighbours: Vec<Vec<usize>> = (0..n).map(|i| m.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let degree: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // Breadth-first level structure from `root` over unvisited vertices.
    let levels = |root: usize, visited: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = visited.to_vec();
        seen[root] = true;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &neighbours[v] {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    };

    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        // Pseudo-peripheral root (George–Liu).
        let mut root = start;
        let mut ls = levels(root, &visited);
        loop {
            let last = ls.last().unwrap();
            let candidate = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let next = levels(candidate, &visited);
            if next.len() > ls.len() {
                root = candidate;
                ls = next;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut fresh: Vec<usize> = neighbours[v].iter().copied().filter(|&w| !visited[w]).collect();
            fresh.sort_by_key(|&w| (degree[w], w));
            for w in fresh {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Tie threshold for `A - λI`: pivots smaller than this in magnitude are
/// treated as zero eigenvalues and counted as `≤ λ`.
pub fn tie_threshold(m: &SymMatrix, lambda: f64) -> f64 {
    m.dim() as f64 * f64::EPSILON * m.norm_inf().max(lambda.abs())
}

/// `#{eigenvalues of m ≤ λ}` from a dense eigensolve.
pub fn count_below_dense(m: &SymMatrix, lambda: f64) -> Result<usize> {
    let eig = dense_eigenvalues(&m.to_dense())?;
    Ok(eig.iter().filter(|&&v| v <= lambda).count())
}

/// Ascending eigenvalues of a symmetric dense matrix.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Contract("matrix is not square".into()));
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::Contract(format!("matrix is not symmetric at ({i},{j})")));
            }
        }
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// Reordered matrix ready for repeated counting at different shifts.
pub struct InertiaCounter {
    permuted: SymMatrix,
    original: SymMatrix,
    block: usize,
}

impl InertiaCounter {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        if !m.is_symmetric() {
            return Err(Error::Contract("inertia counting needs a symmetric matrix".into()));
        }
        let perm = reverse_cuthill_mckee(m);
        let permuted = m.permuted(&perm);
        let block = permuted.bandwidth().max(MIN_BLOCK).min(m.dim().max(1));
        Ok(InertiaCounter { permuted, original: m.clone(), block })
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Inertia of `A - λI`, or `None` when the block elimination met a
    /// near-singular Schur complement or excessive growth.
    pub fn inertia(&self, lambda: f64) -> Option<Inertia> {
        let a = &self.permuted;
        let n = a.dim();
        let s = self.block;
        let tie = tie_threshold(&self.original, lambda);
        let scale = a.max_abs().max(lambda.abs()).max(f64::MIN_POSITIVE);
        let mut total = Inertia::default();
        // The Schur complement of the previous block, with its factorization.
        let mut prev: Option<(usize, usize, BunchKaufman)> = None;
        let mut start = 0;
        let blocks = n.div_ceil(s);
        while start < n {
            let end = (start + s).min(n);
            let size = end - start;
            let mut schur = vec![0.0; size * size];
            for i in start..end {
                for (j, v) in a.row(i) {
                    if j >= start && j < end {
                        schur[(i - start) * size + (j - start)] = v;
                    }
                }
                schur[(i - start) * size + (i - start)] -= lambda;
            }
            if let Some((pstart, pend, bk)) = &prev {
                // S -= C S_prev^{-1} Cᵀ with C = A[start..end, pstart..pend].
                let psize = pend - pstart;
                let mut rhs = vec![0.0; psize * size];
                let mut nonzero_cols = Vec::new();
                for i in start..end {
                    let mut any = false;
                    for (j, v) in a.row(i) {
                        if j >= *pstart && j < *pend {
                            rhs[(j - pstart) * size + (i - start)] = v;
                            any = true;
                        }
                    }
                    if any {
                        nonzero_cols.push(i - start);
                    }
                }
                if !nonzero_cols.is_empty() {
                    bk.solve(&mut rhs, size);
                    for i in start..end {
                        for (j, v) in a.row(i) {
                            if j >= *pstart && j < *pend {
                                let x = &rhs[(j - pstart) * size..(j - pstart + 1) * size];
                                let row = &mut schur[(i - start) * size..(i - start + 1) * size];
                                for (r, xv) in row.iter_mut().zip(x) {
                                    *r -= v * xv;
                                }
                            }
                        }
                    }
                }
            }
            let growth = schur.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
            if !growth.is_finite() || growth > MAX_GROWTH {
                return None;
            }
            // Symmetrize against rounding in the update before factoring.
            for i in 0..size {
                for j in 0..i {
                    let m = 0.5 * (schur[i * size + j] + schur[j * size + i]);
                    schur[i * size + j] = m;
                }
            }
            let bk = BunchKaufman::factor(size, schur);
            let part = bk.inertia(tie);
            if blocks > 1 && end < n && part.zero > 0 {
                // A (near) singular complement cannot be eliminated reliably.
                return None;
            }
            total.add(part);
            prev = Some((start, end, bk));
            start = end;
        }
        Some(total)
    }

    /// `#{eigenvalues ≤ λ}`; falls back to a dense eigensolve when the block
    /// elimination is unreliable.
    pub fn count_below(&self, lambda: f64) -> Result<usize> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
        }
        match self.inertia(lambda) {
            Some(i) => Ok(i.negative + i.zero),
            None => {
                warn!(
                    "block inertia elimination unreliable at lambda = {lambda} (dim {}); using a dense eigensolve",
                    self.permuted.dim()
                );
                count_below_dense(&self.original, lambda)
            }
        }
    }
}

/// `#{eigenvalues of m ≤ λ}` by inertia.
pub fn count_below(m: &SymMatrix, lambda: f64) -> Result<usize> {
    InertiaCounter::new(m)?.count_below(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::SymBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn lower(m: &DMatrix<f64>) -> Vec<f64> {
        let n = m.nrows();
        (0..n * n).map(|k| m[(k / n, k % n)]).collect()
    }

    #[test]
    fn bunch_kaufman_solve_and_inertia() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 8, 25] {
            let m = random_symmetric(n, &mut rng);
            let bk = BunchKaufman::factor(n, lower(&m));
            let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
            let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect();
            bk.solve(&mut b, 1);
            for i in 0..n {
                assert!((b[i] - x[i]).abs() < 1e-9, "n={n} i={i}");
            }
            let eig = dense_eigenvalues(&m).unwrap();
            let neg = eig.iter().filter(|&&v| v < 0.0).count();
            assert_eq!(bk.inertia(0.0).negative, neg);
        }
    }

    #[test]
    fn two_by_two_pivots_are_exercised() {
        // Zero diagonal forces 2×2 pivots.
        let m = DMatrix::from_row_slice(4, 4, &[0.0, 1.0, 2.0, 0.5, 1.0, 0.0, 1.0, 3.0, 2.0, 1.0, 0.0, 1.0, 0.5, 3.0, 1.0, 0.0]);
        let bk = BunchKaufman::factor(4, lower(&m));
        assert!(bk.pivots.iter().any(|p| matches!(p, Pivot::Pair(_))));
        let mut b = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        bk.solve(&mut b, 4);
        let inv = DMatrix::from_row_slice(4, 4, &b);
        let prod = &m * inv;
        assert!((prod - DMatrix::identity(4, 4)).amax() < 1e-12);
        let eig = dense_eigenvalues(&m).unwrap();
        assert_eq!(bk.inertia(0.0).negative, eig.iter().filter(|&&v| v < 0.0).count());
    }

    #[test]
    fn rcm_reduces_bandwidth_of_scrambled_path() {
        let n = 40;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut b = SymBuilder::new(n);
        for i in 0..n - 1 {
            b.add_pair(scramble[i], scramble[i + 1], 1.0);
        }
        let m = b.build();
        assert!(m.bandwidth() > 10);
        let p = reverse_cuthill_mckee(&m);
        let mut sorted = p.clone();
        sorted.sort();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        assert_eq!(m.permuted(&p).bandwidth(), 1);
    }

    #[test]
    fn counts_agree_with_dense_on_random_sparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = 150;
            let mut b = SymBuilder::new(n);
            for i in 0..n {
                b.add_diag(i, rng.gen_range(-3.0..3.0));
                for _ in 0..2 {
                    let j = rng.gen_range(0..n);
                    if j != i && (i as i64 - j as i64).abs() < 30 {
                        b.add_pair(i, j, rng.gen_range(-1.0..1.0));
                    }
                }
            }
            let m = b.build();
            let counter = InertiaCounter::new(&m).unwrap();
            let eig = dense_eigenvalues(&m.to_dense()).unwrap();
            for probe in [-4.0, -1.3, 0.0, 0.77, 2.5, 5.0] {
                let direct = eig.iter().filter(|&&v| v <= probe).count();
                assert_eq!(counter.count_below(probe).unwrap(), direct);
            }
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 3.0]);
        assert!(matches!(count_below(&SymMatrix::from_dense(&d), 0.0), Err(Error::Contract(_))));
        assert!(matches!(dense_eigenvalues(&d), Err(Error::Contract(_))));
    }
}
