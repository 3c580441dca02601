//! Symmetric tridiagonal eigenvalue routines used for Jacobi matrices of
//! orthogonal polynomials.

use crate::error::{Error, Result};

/// A real symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct SymTridiagonal {
    /// Diagonal entries, length n.
    pub diag: Vec<f64>,
    /// Sub-diagonal entries, length n-1 (`off[i]` couples i and i+1).
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal must have n-1 entries");
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// All eigenvalues in ascending order (implicit QL with Wilkinson-type
    /// shifts).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        e[..n.saturating_sub(1)].copy_from_slice(&self.off);
        ql_implicit(&mut d, &mut e).map_err(|_| Error::NonConvergence { degree: n })?;
        d.sort_by(|a, b| a.total_cmp(b));
        Ok(d)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count through the
    /// LDL^T pivots of `T - xI`).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = if i == 0 {
                self.diag[0] - x
            } else {
                self.diag[i] - x - coupling / q
            };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval enclosing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `index`-th eigenvalue (0-based, ascending) by bisection on the
    /// Sturm count, to absolute width `tol`.
    pub fn eigenvalue_by_bisection(&self, index: usize, tol: f64) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        while hi - lo > tol.max(f64::EPSILON * hi.abs().max(lo.abs())) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> std::result::Result<(), ()> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    const MAX_ITER: usize = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(());
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
