//! Hermite and Laguerre polynomials, Laguerre zeros, the combinatorial
//! polynomials `p_{N,k}`, and the zero-avoidance sequence around a point
//! outside the Laguerre zero set.

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Largest `N + k` for which `p_{N,k}` and the overlap closed form are
/// evaluated.
pub const MAX_COMBINED_DEGREE: usize = 120;

/// Points closer than this to a Laguerre zero are treated as zeros.
pub const DEGENERATE_DISTANCE: f64 = 1e-10;

/// Normalization of the Hermite polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolynomialConvention {
    /// `φ_N = ((x - ∂x)/√2)^N e^{-x²/2} = H_N(x) e^{-x²/2}`; equals
    /// `2^{-N/2}` times the physicists' polynomial.
    LadderHermite,
    /// `H_{n+1} = 2x H_n - 2n H_{n-1}`, `H_0 = 1`, `H_1 = 2x`.
    PhysicistsHermite,
}

/// Hermite polynomial of degree `n` at `x` by three-term recurrence.
pub fn hermite_poly(n: usize, x: f64, conv: PolynomialConvention) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let (mut cur, step) = match conv {
        PolynomialConvention::PhysicistsHermite => (2.0 * x, 2.0),
        PolynomialConvention::LadderHermite => (std::f64::consts::SQRT_2 * x, 1.0),
    };
    let lead = match conv {
        PolynomialConvention::PhysicistsHermite => 2.0 * x,
        PolynomialConvention::LadderHermite => std::f64::consts::SQRT_2 * x,
    };
    // Ladder:      H_{m+1} = √2 x H_m - m H_{m-1}
    // Physicists': H_{m+1} = 2x H_m - 2m H_{m-1}
    for m in 1..n {
        let next = lead * cur - step * m as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `‖φ_N‖² = √π N!` for the Hermite functions `H_N(x) e^{-x²/2}`.
pub fn hermite_norm_sq(n: usize) -> f64 {
    std::f64::consts::PI.sqrt() * factorial(n)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Laguerre polynomial `L_n(x)`.
pub fn laguerre_poly(n: usize, x: f64) -> f64 {
    laguerre_pair(n, x).0
}

/// `(L_n(x), L_{n-1}(x))`, with `L_{-1} := 0`.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for m in 1..n {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 - x) * cur - mf * prev) / (mf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(L_n(x), L_n'(x))`. The derivative uses `x L_n' = n (L_n - L_{n-1})`,
/// so `x` must be nonzero for `n > 0`.
pub fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (l, lm1) = laguerre_pair(n, x);
    if n == 0 {
        return (l, 0.0);
    }
    (l, n as f64 * (l - lm1) / x)
}

/// Jacobi matrix whose eigenvalues are the zeros of `L_n`.
pub fn laguerre_jacobi(n: usize) -> SymTridiagonal {
    let diag = (0..n).map(|i| (2 * i + 1) as f64).collect();
    let off = (1..n).map(|i| i as f64).collect();
    SymTridiagonal::new(diag, off)
}

fn newton_polish(n: usize, mut x: f64, iterations: usize) -> f64 {
    for _ in 0..iterations {
        let (l, dl) = laguerre_with_derivative(n, x);
        if dl == 0.0 {
            break;
        }
        let step = l / dl;
        x -= step;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

fn zero_residual_ok(n: usize, x: f64) -> bool {
    let (l, dl) = laguerre_with_derivative(n, x);
    l.abs() <= 1e-12 * dl.abs().max(1.0)
}

/// All `n` zeros of `L_n`, ascending: Jacobi-matrix eigenvalues followed by
/// Newton refinement.
pub fn laguerre_zeros(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("L_0 has no zeros".into()));
    }
    let raw = laguerre_jacobi(n).eigenvalues().map_err(|_| Error::NonConvergence { degree: n })?;
    let zeros: Vec<f64> = raw.into_iter().map(|x| newton_polish(n, x, 8)).collect();
    let ordered = zeros.windows(2).all(|w| w[0] < w[1]);
    if !ordered || zeros[0] <= 0.0 || !zeros.iter().all(|&x| zero_residual_ok(n, x)) {
        return Err(Error::NonConvergence { degree: n });
    }
    Ok(zeros)
}

/// Zeros of `L_1, …, L_{degree_max}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LaguerreZeroSet {
    pub degree_max: usize,
    /// `zeros[k - 1]` holds the `k` zeros of `L_k`.
    pub zeros: Vec<Vec<f64>>,
}

impl LaguerreZeroSet {
    pub fn compute(degree_max: usize) -> Result<Self> {
        let zeros = (1..=degree_max).map(laguerre_zeros).collect::<Result<Vec<_>>>()?;
        Ok(LaguerreZeroSet { degree_max, zeros })
    }

    pub fn of_degree(&self, k: usize) -> &[f64] {
        &self.zeros[k - 1]
    }
}

/// `C(n, j)` in double-double.
fn binomial_dd(n: usize, j: usize) -> Dd {
    let j = j.min(n - j);
    let mut acc = Dd::ONE;
    for i in 0..j {
        acc = acc * ((n - i) as f64) / ((i + 1) as f64);
    }
    acc
}

fn factorial_dd(n: usize) -> Dd {
    (1..=n).fold(Dd::ONE, |acc, i| acc * i as f64)
}

/// `p_{N,k}(Z) = Σ_{j=0}^{min(N,k)} (-1)^{k-j} C(N,j) C(k,j) j! Z^{N+k-2j}`.
///
/// Summed in double-double; refuses `N + k > 120`.
pub fn p_polynomial(n: usize, k: usize, z: f64) -> Result<f64> {
    if n + k > MAX_COMBINED_DEGREE {
        return Err(Error::Precision(format!(
            "p_{{N,k}} requested with N + k = {} > {MAX_COMBINED_DEGREE}",
            n + k
        )));
    }
    let zd = Dd::new(z);
    let mut sum = Dd::ZERO;
    let mut magnitude = 0.0;
    for j in 0..=n.min(k) {
        let coeff = binomial_dd(n, j) * binomial_dd(k, j) * factorial_dd(j);
        let mut term = coeff * zd.powi((n + k - 2 * j) as u32);
        if (k - j) % 2 == 1 {
            term = -term;
        }
        magnitude += term.hi.abs();
        sum = sum + term;
    }
    if !magnitude.is_finite() {
        return Err(Error::Precision(format!("p_{{{n},{k}}}({z}) overflows")));
    }
    Ok(sum.to_f64())
}

/// The diagonal polynomial `p_N(Z) = Σ_j C(N,j)² (N-j)! Z^j`, which
/// satisfies `p_N(-Z) = N! L_N(Z)`.
pub fn p_diagonal(n: usize, z: f64) -> Result<f64> {
    if 2 * n > MAX_COMBINED_DEGREE {
        return Err(Error::Precision(format!("p_N requested with N = {n}")));
    }
    let zd = Dd::new(z);
    let mut sum = Dd::ZERO;
    for j in 0..=n {
        let c = binomial_dd(n, j);
        sum = sum + c * c * factorial_dd(n - j) * zd.powi(j as u32);
    }
    Ok(sum.to_f64())
}

/// The zero of `L_degree` closest to some point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NearestZero {
    pub degree: usize,
    /// 1-based position among the ascending zeros of `L_degree`.
    pub index: usize,
    pub zero: f64,
    pub distance: f64,
}

fn bracketed_zero(jacobi: &SymTridiagonal, degree: usize, index: usize) -> f64 {
    // Bisection on the Sturm count to a coarse bracket, then safeguarded
    // Newton on L_degree itself.
    let (mut lo, mut hi) = jacobi.gershgorin();
    lo = lo.max(0.0);
    for _ in 0..200 {
        let width = hi - lo;
        if width <= 1e-6 * hi.abs().max(1e-3) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if jacobi.count_below(mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..20 {
        let (l, dl) = laguerre_with_derivative(degree, x);
        if dl == 0.0 {
            break;
        }
        let next = x - l / dl;
        if !(next > lo && next < hi) {
            break;
        }
        let done = (next - x).abs() <= 2.0 * f64::EPSILON * x.abs();
        x = next;
        if done {
            break;
        }
    }
    x
}

/// The zero of `L_degree` nearest to `x0`, located without computing the
/// full zero list.
pub fn nearest_laguerre_zero(degree: usize, x0: f64) -> NearestZero {
    assert!(degree >= 1);
    let jacobi = laguerre_jacobi(degree);
    let below = jacobi.count_below(x0);
    let mut best: Option<NearestZero> = None;
    let candidates = [below.checked_sub(1), (below < degree).then_some(below)];
    for index in candidates.into_iter().flatten() {
        let zero = bracketed_zero(&jacobi, degree, index);
        let cand = NearestZero { degree, index: index + 1, zero, distance: (zero - x0).abs() };
        if best.map_or(true, |b| cand.distance < b.distance) {
            best = Some(cand);
        }
    }
    best.expect("a nonempty zero set has a nearest element")
}

/// Minimum distance from `x0` to the zeros of `L_1, …, L_kmax`, with the
/// achieving zero (smallest degree on ties).
pub fn zero_set_distance(x0: f64, kmax: usize) -> Result<NearestZero> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::Domain(format!("x0 must be positive, got {x0}")));
    }
    if kmax == 0 {
        return Err(Error::Domain("kmax must be at least 1".into()));
    }
    let mut best = nearest_laguerre_zero(1, x0);
    for k in 2..=kmax {
        let cand = nearest_laguerre_zero(k, x0);
        if cand.distance < best.distance {
            best = cand;
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct AvoidanceEntry {
    /// Smallest degree with a zero strictly inside the `delta` window.
    pub k: usize,
    pub delta: f64,
    /// Zero of `L_k` closest to `x0`.
    pub nearest_zero: f64,
}

/// Degrees `k_j` and radii `δ_j` such that every `L_k` with `k < k_j` keeps
/// its zeros at distance at least `δ_j` from `x0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AvoidanceSequence {
    pub x0: f64,
    pub kcap: usize,
    pub entries: Vec<AvoidanceEntry>,
    /// Set when the degree cap was reached before `jmax` entries were found.
    pub exhausted: bool,
}

impl AvoidanceSequence {
    /// Radius of the next window, `|nearest_zero - x0| / 10` of the last
    /// entry.
    pub fn next_delta(&self) -> f64 {
        self.entries.last().map_or(0.1, |e| (e.nearest_zero - self.x0).abs() / 10.0)
    }
}

/// Builds the avoidance sequence starting from `δ_1 = 1/10`.
///
/// Degrees are scanned upward from 1; every scanned degree is also checked
/// against [`DEGENERATE_DISTANCE`], so a point that is numerically a zero of
/// any visited `L_k` yields [`Error::DegenerateInput`].
pub fn nondegenerate_sequence(x0: f64, jmax: usize, kcap: usize) -> Result<AvoidanceSequence> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::Domain(format!("x0 must be positive, got {x0}")));
    }
    let mut seq = AvoidanceSequence { x0, kcap, entries: Vec::with_capacity(jmax), exhausted: false };
    let mut delta = 0.1;
    let mut k = 0;
    while seq.entries.len() < jmax {
        k += 1;
        if k > kcap {
            seq.exhausted = true;
            break;
        }
        let nz = nearest_laguerre_zero(k, x0);
        if nz.distance < DEGENERATE_DISTANCE {
            return Err(Error::DegenerateInput { x0, degree: k, distance: nz.distance });
        }
        if nz.distance < delta {
            seq.entries.push(AvoidanceEntry { k, delta, nearest_zero: nz.zero });
            delta = nz.distance / 10.0;
        }
    }
    Ok(seq)
}
