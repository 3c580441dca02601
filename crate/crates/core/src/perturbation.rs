//! First-order eigenvalue splitting of the levels `N + ½`, the second-order
//! form and quasimodes for the degenerate levels, and finite-difference
//! oracles on the AB-frame operator.
//!
//! Conventions. The AB-frame operator is `A + εB` with `A` the harmonic
//! oscillator on `L²(ℝ; ℂ²)` and
//!
//! ```text
//! B = [[β₁ I, β₂ D], [β₂ Dᵀ, β₁ I]],   D_{Nk} = (T₊φ_N, T₋φ_k) / (‖φ_N‖‖φ_k‖).
//! ```
//!
//! In the product basis `φ_k ⊗ e_s` the index of `(k, s)` is `s·(K+1) + k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build, ModelSpec, AB_FRAME_MAX_CUTOFF};
use crate::overlaps::{displacement_matrix, overlap_normalized};
use crate::specfun::MAX_COMBINED_DEGREE;
use crate::spectral::eigen_spectrum;

/// `|overlap_ratio|` below this is treated as a first-order degeneracy.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Sign relating the second-order form to the actual `ε²/2` coefficient of
/// the eigenvalues: `λ(ε) = λ_N + εμ + ½ε²·σ·μ₂ + O(ε³)`.
///
/// The form carries weights `(λ_k − λ_N)⁻¹`; eigenvalue corrections carry
/// `(λ_N − λ_k)⁻¹`. Checked against [`calibrate_sigma`] in the tests.
pub const SIGMA: f64 = -1.0;

/// Cutoff beyond the spectral-sum cutoff `K` that [`quasimode_residual`]
/// expects before it trusts the truncated operator.
pub const RESIDUAL_MARGIN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiParameters {
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eps: f64,
}

impl RabiParameters {
    pub fn new(alpha: f64, gamma1: f64, gamma2: f64, eps: f64) -> Self {
        RabiParameters { alpha, gamma1, gamma2, eps }
    }

    /// `γ₁ = Δ`, `γ₂ = −Δ`.
    pub fn from_delta(alpha: f64, delta: f64, eps: f64) -> Self {
        RabiParameters { alpha, gamma1: delta, gamma2: -delta, eps }
    }

    pub fn beta1(&self) -> f64 {
        0.5 * (self.gamma1 + self.gamma2)
    }

    pub fn beta2(&self) -> f64 {
        0.5 * (self.gamma1 - self.gamma2)
    }

    pub fn ab_frame(&self, cutoff: usize) -> ModelSpec {
        ModelSpec::ab_frame(self.alpha, self.gamma1, self.gamma2, self.eps, cutoff)
    }

    pub fn qr(&self, cutoff: usize) -> ModelSpec {
        ModelSpec::qr(self.alpha, self.gamma1, self.gamma2, self.eps, cutoff)
    }

    fn check(&self) -> Result<()> {
        if [self.alpha, self.gamma1, self.gamma2, self.eps].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain("Rabi parameters must be finite".into()))
        }
    }
}

/// Eigen-decomposition of `M = [[β₁, β₂r], [β₂r, β₁]]`, the restriction of
/// `B` to the level `N + ½`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderSplit {
    #[serde(rename = "N")]
    pub n: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub w_plus: [f64; 2],
    pub w_minus: [f64; 2],
    pub beta1: f64,
    pub beta2: f64,
    pub overlap_ratio: f64,
    pub degenerate: bool,
}

impl FirstOrderSplit {
    pub fn splitting(&self) -> f64 {
        self.mu_plus - self.mu_minus
    }
}

/// `sgn` with `sgn 0 = 1`.
fn sign_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn first_order(n: usize, params: &RabiParameters) -> Result<FirstOrderSplit> {
    params.check()?;
    let r = overlap_normalized(n, n, params.alpha)?;
    let (beta1, beta2) = (params.beta1(), params.beta2());
    let degenerate = r.abs() < DEGENERACY_THRESHOLD;
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let s = sign_or_one(r);
    let (mu_plus, mu_minus) = if degenerate { (beta1, beta1) } else { (beta1 + beta2 * r.abs(), beta1 - beta2 * r.abs()) };
    Ok(FirstOrderSplit {
        n,
        mu_plus,
        mu_minus,
        w_plus: [s * half, half],
        w_minus: [s * half, -half],
        beta1,
        beta2,
        overlap_ratio: r,
        degenerate,
    })
}

/// `min(N + 60, 120 − N)`: the largest spectral-sum cutoff the overlap
/// degree limit allows, up to `N + 60`.
pub fn default_form_cutoff(n: usize) -> usize {
    (n + 60).min(MAX_COMBINED_DEGREE.saturating_sub(n))
}

/// Matrix of the second-order form in the first-order basis `{w₊, w₋}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeForm {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k_cutoff: usize,
    /// Rows and columns ordered `(w₊, w₋)`.
    pub matrix: [[f64; 2]; 2],
    pub mu2_minus: f64,
    pub mu2_plus: f64,
    /// Unit eigenvectors of the form in `ℂ²` coordinates.
    pub v_minus: [f64; 2],
    pub v_plus: [f64; 2],
    /// Sum of the discarded terms over `K < k ≤ min(2K − N, 120 − N)`, or
    /// the magnitude of the last kept term when no further degree is
    /// available.
    pub tail_estimate: f64,
}

fn check_cutoff(n: usize, k: usize) -> Result<()> {
    if k <= n {
        return Err(Error::Domain(format!("spectral-sum cutoff K={k} must exceed N={n}")));
    }
    if n + k > MAX_COMBINED_DEGREE {
        return Err(Error::Domain(format!("N + K = {} exceeds the overlap degree limit {MAX_COMBINED_DEGREE}", n + k)));
    }
    Ok(())
}

/// `Σ_{k ∈ range} (k − N)⁻¹ M_{N,k}ᵀ M_{N,k}` with
/// `M_{N,k} = β₂ [[0, D_{Nk}], [D_{kN}, 0]]`.
fn form_sum(n: usize, alpha: f64, beta2: f64, range: std::ops::RangeInclusive<usize>) -> Result<([[f64; 2]; 2], f64)> {
    let mut q = [[0.0; 2]; 2];
    let mut last = 0.0;
    for k in range {
        if k == n {
            continue;
        }
        let a = beta2 * overlap_normalized(n, k, alpha)?;
        let b = beta2 * overlap_normalized(k, n, alpha)?;
        let weight = 1.0 / (k as f64 - n as f64);
        // Mᵀ M for M = [[0, a], [b, 0]].
        q[0][0] += weight * b * b;
        q[1][1] += weight * a * a;
        last = weight * a.abs().max(b.abs()).powi(2);
    }
    Ok((q, last))
}

/// Eigenpairs of a real symmetric 2×2 matrix, ascending.
fn symmetric_eigen2(m: [[f64; 2]; 2]) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
    let (a, b, d) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    if b == 0.0 {
        return if a <= d { ((a, [1.0, 0.0]), (d, [0.0, 1.0])) } else { ((d, [0.0, 1.0]), (a, [1.0, 0.0])) };
    }
    let lo = mean - radius;
    let hi = mean + radius;
    let unit = |x: f64, y: f64| {
        let h = x.hypot(y);
        [x / h, y / h]
    };
    ((lo, unit(b, lo - a)), (hi, unit(b, hi - a)))
}

/// The form `Q(w, w') = 2 Σ_{k≠N, k≤K} (λ_k − λ_N)⁻¹ ⟨M_{N,k}w, M_{N,k}w'⟩`
/// written in the `{w₊, w₋}` basis of [`first_order`].
///
/// Degeneracy of the level is not checked; for a nondegenerate level the
/// diagonal entries are still the second-order coefficients of the two
/// branches (up to [`SIGMA`]).
pub fn quasimode_form(n: usize, params: &RabiParameters, k_cutoff: usize) -> Result<QuasimodeForm> {
    params.check()?;
    check_cutoff(n, k_cutoff)?;
    let split = first_order(n, params)?;
    let (raw, last) = form_sum(n, params.alpha, params.beta2(), 0..=k_cutoff)?;
    let upper = (2 * k_cutoff - n).min(MAX_COMBINED_DEGREE - n);
    let tail_estimate = if upper > k_cutoff {
        let (t, _) = form_sum(n, params.alpha, params.beta2(), k_cutoff + 1..=upper)?;
        2.0 * t[0][0].abs().max(t[1][1].abs())
    } else {
        2.0 * last
    };
    let q = [[2.0 * raw[0][0], 0.0], [0.0, 2.0 * raw[1][1]]];
    // Change of basis to (w₊, w₋).
    let w = [split.w_plus, split.w_minus];
    let mut matrix = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            matrix[i][j] = (0..2).map(|r| w[i][r] * q[r][r] * w[j][r]).sum();
        }
    }
    let ((mu2_minus, e_minus), (mu2_plus, e_plus)) = symmetric_eigen2(matrix);
    let to_c2 = |e: [f64; 2]| [e[0] * w[0][0] + e[1] * w[1][0], e[0] * w[0][1] + e[1] * w[1][1]];
    Ok(QuasimodeForm {
        n,
        k_cutoff,
        matrix,
        mu2_minus,
        mu2_plus,
        v_minus: to_c2(e_minus),
        v_plus: to_c2(e_plus),
        tail_estimate,
    })
}

/// Second-order quasimode data for the level `N + ½`.
///
/// Coefficient vectors live in the AB-frame basis truncated at `K`
/// (length `2(K+1)`); `u_±(ε) = u₀ + εu⁽¹⁾ + ½ε²u⁽²⁾` approximates an
/// eigenvector with eigenvalue `λ₀ + εμ₁ + ½ε²·λ⁽²⁾_±`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeExpansion {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k_cutoff: usize,
    pub lambda0: f64,
    pub mu1: f64,
    pub mu2_plus: f64,
    pub mu2_minus: f64,
    pub sigma: f64,
    /// `σ·μ₂±`, the coefficients used in `λ_±(ε)`.
    pub lambda2_plus: f64,
    pub lambda2_minus: f64,
    pub w_plus: [f64; 2],
    pub w_minus: [f64; 2],
    pub u0_plus: Vec<f64>,
    pub u0_minus: Vec<f64>,
    pub u1_plus: Vec<f64>,
    pub u1_minus: Vec<f64>,
    pub u2_plus: Vec<f64>,
    pub u2_minus: Vec<f64>,
}

impl QuasimodeExpansion {
    /// `λ_±(ε)` for `sign = ±1`.
    pub fn eigenvalue(&self, plus: bool, eps: f64) -> f64 {
        let l2 = if plus { self.lambda2_plus } else { self.lambda2_minus };
        self.lambda0 + eps * self.mu1 + 0.5 * eps * eps * l2
    }

    /// `u_±(ε)`, not normalized.
    pub fn vector(&self, plus: bool, eps: f64) -> Vec<f64> {
        let (u0, u1, u2) = if plus {
            (&self.u0_plus, &self.u1_plus, &self.u2_plus)
        } else {
            (&self.u0_minus, &self.u1_minus, &self.u2_minus)
        };
        (0..u0.len()).map(|i| u0[i] + eps * u1[i] + 0.5 * eps * eps * u2[i]).collect()
    }
}

/// The perturbation `B` on the basis truncated at `cutoff`, dense.
fn perturbation_matrix(params: &RabiParameters, cutoff: usize) -> Result<DMatrix<f64>> {
    let fock = cutoff + 1;
    let d = displacement_matrix(cutoff, params.alpha)?;
    let (beta1, beta2) = (params.beta1(), params.beta2());
    let mut b = DMatrix::zeros(2 * fock, 2 * fock);
    for i in 0..2 * fock {
        b[(i, i)] = beta1;
    }
    for n in 0..fock {
        for k in 0..fock {
            b[(n, fock + k)] = beta2 * d[(n, k)];
            b[(fock + k, n)] = beta2 * d[(n, k)];
        }
    }
    Ok(b)
}

/// `R₀(μ − B)u`, where `R₀` inverts `A − λ_N` off the level `N` and
/// vanishes on it.
fn reduced_resolvent_step(b: &DMatrix<f64>, mu: f64, u: &[f64], n: usize, fock: usize) -> Vec<f64> {
    let bu = b * nalgebra::DVector::from_column_slice(u);
    (0..2 * fock)
        .map(|i| {
            let k = i % fock;
            if k == n {
                0.0
            } else {
                (mu * u[i] - bu[i]) / (k as f64 - n as f64)
            }
        })
        .collect()
}

/// `u⁽¹⁾ = R₀(μ₁ − B)u₀` and `u⁽²⁾ = 2R₀(μ₁ − B)u⁽¹⁾` for both branches.
///
/// `K` is limited by the AB-frame cutoff limit because `u⁽²⁾` needs the full
/// displacement block up to `K`.
pub fn quasimode_vectors(n: usize, params: &RabiParameters, k_cutoff: usize) -> Result<QuasimodeExpansion> {
    params.check()?;
    check_cutoff(n, k_cutoff)?;
    if k_cutoff > AB_FRAME_MAX_CUTOFF {
        return Err(Error::Domain(format!(
            "quasimode vectors need K ≤ {AB_FRAME_MAX_CUTOFF}, got K={k_cutoff}"
        )));
    }
    let form = quasimode_form(n, params, k_cutoff)?;
    let mu1 = first_order(n, params)?.mu_plus;
    let fock = k_cutoff + 1;
    let b = perturbation_matrix(params, k_cutoff)?;
    let lift = |w: [f64; 2]| {
        let mut u = vec![0.0; 2 * fock];
        u[n] = w[0];
        u[fock + n] = w[1];
        u
    };
    let branch = |w: [f64; 2]| {
        let u0 = lift(w);
        let u1 = reduced_resolvent_step(&b, mu1, &u0, n, fock);
        let u2: Vec<f64> = reduced_resolvent_step(&b, mu1, &u1, n, fock).into_iter().map(|v| 2.0 * v).collect();
        (u0, u1, u2)
    };
    let (u0_plus, u1_plus, u2_plus) = branch(form.v_plus);
    let (u0_minus, u1_minus, u2_minus) = branch(form.v_minus);
    Ok(QuasimodeExpansion {
        n,
        k_cutoff,
        lambda0: n as f64 + 0.5,
        mu1,
        mu2_plus: form.mu2_plus,
        mu2_minus: form.mu2_minus,
        sigma: SIGMA,
        lambda2_plus: SIGMA * form.mu2_plus,
        lambda2_minus: SIGMA * form.mu2_minus,
        w_plus: form.v_plus,
        w_minus: form.v_minus,
        u0_plus,
        u0_minus,
        u1_plus,
        u1_minus,
        u2_plus,
        u2_minus,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasimodeResidual {
    pub eps: f64,
    /// Max over the two branches.
    pub residual: f64,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub cutoff: usize,
    /// `false` when `cutoff < K + RESIDUAL_MARGIN`.
    pub margin_ok: bool,
}

/// `‖(A + εB)u_±(ε) − λ_±(ε)u_±(ε)‖ / ‖u_±(ε)‖` with the AB-frame operator
/// truncated at `cutoff`.
pub fn quasimode_residual_of(expansion: &QuasimodeExpansion, params: &RabiParameters, eps: f64, cutoff: usize) -> Result<QuasimodeResidual> {
    let k = expansion.k_cutoff;
    if cutoff < k {
        return Err(Error::Domain(format!("residual cutoff {cutoff} is below K={k}")));
    }
    let margin_ok = cutoff >= k + RESIDUAL_MARGIN;
    if !margin_ok {
        log::warn!("quasimode residual: cutoff {cutoff} < K + {RESIDUAL_MARGIN}; truncation may dominate");
    }
    let op = build(&RabiParameters { eps, ..*params }.ab_frame(cutoff))?;
    let (small, big) = (k + 1, cutoff + 1);
    let embed = |v: &[f64]| {
        let mut out = vec![0.0; 2 * big];
        for s in 0..2 {
            out[s * big..s * big + small].copy_from_slice(&v[s * small..(s + 1) * small]);
        }
        out
    };
    let residual = |plus: bool| {
        let u = embed(&expansion.vector(plus, eps));
        let lambda = expansion.eigenvalue(plus, eps);
        let hu = op.matrix.matvec(&u);
        let r: f64 = hu.iter().zip(&u).map(|(h, x)| (h - lambda * x).powi(2)).sum::<f64>().sqrt();
        r / u.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let (rp, rm) = (residual(true), residual(false));
    Ok(QuasimodeResidual { eps, residual: rp.max(rm), residual_plus: rp, residual_minus: rm, cutoff, margin_ok })
}

pub fn quasimode_residual(n: usize, params: &RabiParameters, eps: f64, k_cutoff: usize, cutoff: usize) -> Result<QuasimodeResidual> {
    let expansion = quasimode_vectors(n, params, k_cutoff)?;
    quasimode_residual_of(&expansion, params, eps, cutoff)
}

/// Powers of `√10` from `10^{lo}` to `10^{hi}`, ascending.
pub fn sqrt10_grid(lo: i32, hi: i32) -> Vec<f64> {
    (2 * lo..=2 * hi).map(|p| 10f64.powf(p as f64 / 2.0)).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// The two AB-frame eigenvalues continuing from `N + ½` (sorted indices
/// `2N`, `2N + 1`), valid while `|ε|·‖B‖ < ½`.
pub fn level_pair(n: usize, params: &RabiParameters, eps: f64, cutoff: usize) -> Result<(f64, f64)> {
    if cutoff <= n {
        return Err(Error::Domain(format!("cutoff {cutoff} must exceed N={n}")));
    }
    let ev = eigen_spectrum(&build(&RabiParameters { eps, ..*params }.ab_frame(cutoff))?)?;
    Ok((ev[2 * n], ev[2 * n + 1]))
}

/// `λ_+ − λ_-` at `ε`.
pub fn numeric_splitting(n: usize, params: &RabiParameters, eps: f64, cutoff: usize) -> Result<f64> {
    let (lo, hi) = level_pair(n, params, eps, cutoff)?;
    Ok(hi - lo)
}

/// Central differences `(λ(h) − λ(−h)) / 2h` along the two analytic
/// branches, returned as `(slope₋, slope₊)`.
///
/// For `ε > 0` the lower eigenvalue lies on the branch with the smaller
/// slope; for `ε < 0` it lies on the other one.
fn branch_differences(n: usize, params: &RabiParameters, h: f64, cutoff: usize) -> Result<(f64, f64)> {
    let (lo_p, hi_p) = level_pair(n, params, h, cutoff)?;
    let (lo_m, hi_m) = level_pair(n, params, -h, cutoff)?;
    Ok(((lo_p - hi_m) / (2.0 * h), (hi_p - lo_m) / (2.0 * h)))
}

/// Richardson-extrapolated first derivatives `(4D(h/2) − D(h)) / 3` of the
/// two branches at `ε = 0`, as `(slope₋, slope₊)`.
pub fn first_order_slopes(n: usize, params: &RabiParameters, h: f64, cutoff: usize) -> Result<(f64, f64)> {
    let coarse = branch_differences(n, params, h, cutoff)?;
    let fine = branch_differences(n, params, 0.5 * h, cutoff)?;
    Ok(((4.0 * fine.0 - coarse.0) / 3.0, (4.0 * fine.1 - coarse.1) / 3.0))
}

/// Second differences `(λ(h) − 2λ(0) + λ(−h)) / h²` along the two branches,
/// ascending. They approximate the second derivatives, i.e. `σ·μ₂±`.
pub fn second_differences(n: usize, params: &RabiParameters, h: f64, cutoff: usize) -> Result<(f64, f64)> {
    let (lo_p, hi_p) = level_pair(n, params, h, cutoff)?;
    let (lo_m, hi_m) = level_pair(n, params, -h, cutoff)?;
    let (lo_0, hi_0) = level_pair(n, params, 0.0, cutoff)?;
    let a = (lo_p - lo_0 - hi_0 + hi_m) / (h * h);
    let b = (hi_p - hi_0 - lo_0 + lo_m) / (h * h);
    Ok((a.min(b), a.max(b)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaCalibration {
    pub sigma: f64,
    /// Branch second differences `(−, +)`.
    pub second_differences: (f64, f64),
    /// Diagonal of the form in the `{w₊, w₋}` basis, `(−, +)`.
    pub form_diagonal: (f64, f64),
    /// `max |second difference − σ·form|` for the chosen sign.
    pub mismatch: f64,
}

/// Determines the sign in front of the second-order form by comparing it
/// with branch second differences of the eigenvalues at level `N`.
///
/// Works at nondegenerate levels too: there each branch is followed
/// individually and its second derivative is the corresponding diagonal
/// entry of the form times σ.
pub fn calibrate_sigma(n: usize, params: &RabiParameters, h: f64, cutoff: usize) -> Result<SigmaCalibration> {
    let k = default_form_cutoff(n);
    let form = quasimode_form(n, params, k)?;
    // For ε > 0 the branch with slope μ₋ is the lower one.
    let (lo_p, hi_p) = level_pair(n, params, h, cutoff)?;
    let (lo_m, hi_m) = level_pair(n, params, -h, cutoff)?;
    let (lo_0, hi_0) = level_pair(n, params, 0.0, cutoff)?;
    let minus = (lo_p - lo_0 - hi_0 + hi_m) / (h * h);
    let plus = (hi_p - hi_0 - lo_0 + lo_m) / (h * h);
    let diag = (form.matrix[1][1], form.matrix[0][0]);
    let miss = |s: f64| (minus - s * diag.0).abs().max((plus - s * diag.1).abs());
    let sigma = if miss(-1.0) <= miss(1.0) { -1.0 } else { 1.0 };
    Ok(SigmaCalibration { sigma, second_differences: (minus, plus), form_diagonal: diag, mismatch: miss(sigma) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlaps::laguerre_argument;
    use crate::specfun::laguerre_zeros;
    use proptest::prelude::*;

    fn degenerate_alpha(degree: usize) -> f64 {
        // laguerre_argument(α) = 2α² placed at the smallest zero of L_degree.
        let s = laguerre_zeros(degree).unwrap()[0];
        let alpha = (s / 2.0).sqrt();
        assert!((laguerre_argument(alpha) - s).abs() < 1e-14);
        alpha
    }

    #[test]
    fn ground_level_split() {
        for alpha in [0.3f64, 1.0, 1.7] {
            let f = first_order(0, &RabiParameters::new(alpha, 1.0, -1.0, 0.0)).unwrap();
            let e = (-alpha * alpha).exp();
            assert!((f.mu_plus - e).abs() < 1e-15 && (f.mu_minus + e).abs() < 1e-15);
            assert!(!f.degenerate);
        }
    }

    #[test]
    fn split_invariants() {
        let p = RabiParameters::new(0.8, 1.3, -0.4, 0.0);
        for n in 0..20 {
            let f = first_order(n, &p).unwrap();
            let gap = 2.0 * f.beta2 * f.overlap_ratio.abs();
            assert!((f.splitting() - gap).abs() <= 4.0 * f64::EPSILON * f.mu_plus.abs().max(f.mu_minus.abs()));
            let dot = f.w_plus[0] * f.w_minus[0] + f.w_plus[1] * f.w_minus[1];
            assert!(dot.abs() < 1e-15);
            for w in [f.w_plus, f.w_minus] {
                assert!((w[0].hypot(w[1]) - 1.0).abs() < 1e-15);
            }
            // M w = μ w.
            let m = |w: [f64; 2]| [f.beta1 * w[0] + f.beta2 * f.overlap_ratio * w[1], f.beta2 * f.overlap_ratio * w[0] + f.beta1 * w[1]];
            for (w, mu) in [(f.w_plus, f.mu_plus), (f.w_minus, f.mu_minus)] {
                let mw = m(w);
                assert!((mw[0] - mu * w[0]).abs() < 1e-14 && (mw[1] - mu * w[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_of_laguerre_is_degenerate() {
        for degree in 1..=3 {
            let alpha = degenerate_alpha(degree);
            let f = first_order(degree, &RabiParameters::new(alpha, 1.0, -1.0, 0.0)).unwrap();
            assert!(f.degenerate, "N={degree}");
            assert_eq!(f.mu_plus, f.beta1);
            assert_eq!(f.mu_minus, f.beta1);
        }
    }

    #[test]
    fn first_order_matches_finite_differences() {
        let p = RabiParameters::new(1.0, 1.0, -1.0, 0.0);
        for n in [0, 1, 4] {
            let f = first_order(n, &p).unwrap();
            let (sm, sp) = first_order_slopes(n, &p, 1e-3, 40).unwrap();
            assert!((sm - f.mu_minus).abs() < 1e-4 && (sp - f.mu_plus).abs() < 1e-4, "N={n}: {sm} {sp} vs {f:?}");
        }
    }

    #[test]
    fn sigma_is_minus_one() {
        let cal = calibrate_sigma(0, &RabiParameters::new(1.0, 1.0, -1.0, 0.0), 1e-3, 50).unwrap();
        assert_eq!(cal.sigma, SIGMA);
        assert!(cal.mismatch < 1e-4, "{cal:?}");
    }

    #[test]
    fn form_is_symmetric_and_k_stable() {
        for (n, alpha) in [(1usize, degenerate_alpha(1)), (2, degenerate_alpha(2)), (3, 2.0)] {
            let p = RabiParameters::new(alpha, 1.0, -1.0, 0.0);
            let a = quasimode_form(n, &p, n + 40).unwrap();
            let b = quasimode_form(n, &p, 2 * (n + 40)).unwrap();
            assert_eq!(a.matrix[0][1], a.matrix[1][0]);
            assert!((a.mu2_plus - b.mu2_plus).abs() < 1e-8 && (a.mu2_minus - b.mu2_minus).abs() < 1e-8);
            assert!(a.tail_estimate < 1e-8);
        }
    }

    #[test]
    fn degenerate_form_matches_second_differences() {
        let alpha = degenerate_alpha(1);
        let p = RabiParameters::new(alpha, 1.0, -1.0, 0.0);
        let form = quasimode_form(1, &p, 41).unwrap();
        let (a, b) = second_differences(1, &p, 1e-3, 50).unwrap();
        assert!((a - SIGMA * form.mu2_minus).abs() < 1e-4, "{a} vs {}", SIGMA * form.mu2_minus);
        assert!((b - SIGMA * form.mu2_plus).abs() < 1e-4, "{b} vs {}", SIGMA * form.mu2_plus);
    }

    #[test]
    fn degenerate_form_is_scalar() {
        // M_{N,k}ᵀM_{N,k} = β₂² D_{Nk}² I, so the form never separates the
        // two branches at second order.
        for degree in 1..=3 {
            let p = RabiParameters::new(degenerate_alpha(degree), 1.0, -1.0, 0.0);
            let form = quasimode_form(degree, &p, degree + 40).unwrap();
            assert!((form.mu2_plus - form.mu2_minus).abs() <= 1e-14 * form.mu2_plus.abs());
        }
    }

    #[test]
    fn cutoff_not_above_level_rejected() {
        let p = RabiParameters::new(1.0, 1.0, -1.0, 0.0);
        assert!(matches!(quasimode_form(5, &p, 5), Err(Error::Domain(_))));
        assert!(matches!(quasimode_vectors(5, &p, 3), Err(Error::Domain(_))));
        assert!(matches!(quasimode_vectors(1, &p, 61), Err(Error::Domain(_))));
    }

    #[test]
    fn first_correction_avoids_level() {
        let p = RabiParameters::new(degenerate_alpha(1), 1.0, -1.0, 0.0);
        let q = quasimode_vectors(1, &p, 41).unwrap();
        let fock = 42;
        for u in [&q.u1_plus, &q.u1_minus, &q.u2_plus, &q.u2_minus] {
            assert_eq!(u[1], 0.0);
            assert_eq!(u[fock + 1], 0.0);
        }
        let q2 = quasimode_vectors(1, &p, 60).unwrap();
        let norm = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm(&q.u1_plus) - norm(&q2.u1_plus)).abs() < 1e-8);
    }

    #[test]
    fn residual_vanishes_at_zero_and_scales_as_cube() {
        let p = RabiParameters::new(degenerate_alpha(1), 1.0, -1.0, 0.0);
        let q = quasimode_vectors(1, &p, 41).unwrap();
        let r0 = quasimode_residual_of(&q, &p, 0.0, 50).unwrap();
        assert!(r0.residual < 1e-12 && r0.margin_ok);
        let eps = sqrt10_grid(-3, -1);
        let res: Vec<f64> = eps.iter().map(|&e| quasimode_residual_of(&q, &p, e, 50).unwrap().residual).collect();
        let slope = loglog_slope(&eps, &res);
        assert!(slope >= 2.9, "slope {slope}, residuals {res:?}");
    }

    #[test]
    fn slope_of_power_law() {
        let xs = sqrt10_grid(-3, -1);
        assert_eq!(xs.len(), 5);
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * x.powi(3)).collect();
        assert!((loglog_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn uncoupled_levels_have_zero_form(alpha in 0.0f64..2.0, g in -2.0f64..2.0, n in 0usize..8) {
            let p = RabiParameters::new(alpha, g, g, 0.0);
            let form = quasimode_form(n, &p, n + 20).unwrap();
            prop_assert_eq!(form.matrix, [[0.0; 2]; 2]);
            let q = quasimode_vectors(n, &p, n + 20).unwrap();
            prop_assert!(q.u1_plus.iter().chain(&q.u1_minus).all(|&v| v == 0.0));
        }
    }
}
