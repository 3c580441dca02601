//! Overlaps of oppositely displaced Hermite functions,
//! `(T₊φ_N, T₋φ_k) = ∫ φ_N(x - α) φ_k(x + α) dx`, in closed form and by
//! Gauss–Hermite quadrature, and the displacement matrix built from them.
//!
//! Closed form:
//!
//! ```text
//! √π e^{-α²} Σ_j (-1)^{N-j} C(N,j) C(k,j) j! c^{N+k-2j},   c = √2 α
//! ```
//!
//! The diagonal reduces to `√π N! e^{-α²} L_N(2α²)`. Both constants were
//! calibrated against [`overlap_quadrature`] at `N = k = 1`, which gives
//! `√π e^{-α²} (1 - 2α²)`; the variant with `c = 2α`, i.e. Laguerre
//! argument `4α²`, is what one gets by pairing the physicists' Taylor
//! identity with the `√π N!` norms and does not match the integral.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite, orthonormal_hermite_dd, MAX_HERMITE_NODES};
use crate::specfun::{hermite_norm_sq, laguerre_poly, MAX_COMBINED_DEGREE};

/// `c / α` in the closed form.
pub const DISPLACEMENT_COEFFICIENT: f64 = std::f64::consts::SQRT_2;

/// `s / α²` for the Laguerre argument of the diagonal overlap.
pub const LAGUERRE_ARGUMENT_FACTOR: f64 = 2.0;

/// Laguerre argument of the diagonal overlap at displacement `alpha`.
pub fn laguerre_argument(alpha: f64) -> f64 {
    LAGUERRE_ARGUMENT_FACTOR * alpha * alpha
}

/// The uncalibrated argument `4α²`, kept for diagnostics only.
pub fn uncalibrated_laguerre_argument(alpha: f64) -> f64 {
    4.0 * alpha * alpha
}

/// Largest absolute error (in units of `‖φ_N‖‖φ_k‖`) the closed form may
/// carry before it refuses to answer.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMethod {
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub value: f64,
    pub method: OverlapMethod,
}

impl OverlapResult {
    /// `‖φ_N‖ ‖φ_k‖`, the Cauchy–Schwarz bound on `|value|`.
    pub fn norm_bound(&self) -> f64 {
        (hermite_norm_sq(self.n) * hermite_norm_sq(self.k)).sqrt()
    }
}

fn check_degree(n: usize, k: usize) -> Result<()> {
    if n + k > MAX_COMBINED_DEGREE {
        return Err(Error::Precision(format!(
            "overlap requested with N + k = {} > {MAX_COMBINED_DEGREE}",
            n + k
        )));
    }
    Ok(())
}

/// Overlap of the orthonormal Hermite functions,
/// `(T₊φ_N, T₋φ_k) / (‖φ_N‖ ‖φ_k‖)`.
///
/// The terms of the alternating sum are generated in double-double by the
/// ratio `t_j / t_{j+1} = -(j+1) c² / ((N-j)(k-j))`, so no factorial is
/// formed explicitly.
pub fn overlap_normalized(n: usize, k: usize, alpha: f64) -> Result<f64> {
    check_degree(n, k)?;
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
    }
    let m = n.min(k);
    let big = n.max(k);
    let d = big - m;
    let c2 = Dd::product(LAGUERRE_ARGUMENT_FACTOR * alpha, alpha);
    let c = if alpha < 0.0 { -c2.sqrt() } else { c2.sqrt() };

    // t_m = (-1)^{N-m} c^d sqrt(big!/m!) / d!
    let mut ratio = Dd::ONE;
    for i in m + 1..=big {
        ratio = ratio * i as f64;
    }
    let mut term = c.powi(d as u32) * ratio.sqrt();
    for i in 2..=d {
        term = term / i as f64;
    }
    if (n - m) % 2 == 1 {
        term = -term;
    }
    let mut sum = term;
    let mut magnitude = term.hi.abs();
    for j in (0..m).rev() {
        term = term * (c2 * (-((j + 1) as f64))) / (((n - j) * (k - j)) as f64);
        sum = sum + term;
        magnitude += term.hi.abs();
    }
    let damping = (-alpha * alpha).exp();
    let error_estimate = damping * magnitude * ((m + 1) as f64).sqrt() * 2f64.powi(-104);
    if !magnitude.is_finite() || error_estimate > CLOSED_FORM_TOLERANCE {
        return Err(Error::Precision(format!(
            "closed-form overlap ({n},{k}) at alpha={alpha}: cancellation leaves error ~{error_estimate:e}"
        )));
    }
    Ok(damping * sum.to_f64())
}

/// `∫ φ_N(x - α) φ_k(x + α) dx` by the closed form.
pub fn overlap_closed(n: usize, k: usize, alpha: f64) -> Result<f64> {
    let scale = (hermite_norm_sq(n) * hermite_norm_sq(k)).sqrt();
    Ok(overlap_normalized(n, k, alpha)? * scale)
}

/// Minimum Gauss–Hermite node count that integrates the overlap exactly.
pub fn required_nodes(n: usize, k: usize) -> usize {
    (n + k) / 2 + 1
}

/// Quadrature analogue of [`overlap_normalized`].
pub fn overlap_quadrature_normalized(n: usize, k: usize, alpha: f64, nodes: usize) -> Result<f64> {
    let required = required_nodes(n, k);
    if nodes < required {
        return Err(Error::InsufficientNodes { nodes, degree: n + k, required });
    }
    if nodes > MAX_HERMITE_NODES {
        return Err(Error::Domain(format!("at most {MAX_HERMITE_NODES} quadrature nodes are supported")));
    }
    let rule = gauss_hermite(nodes)?;
    // The Hermite values are evaluated in the orthonormal normalization and
    // rescaled by the caller; this is the same integrand without the
    // factorial growth of the unnormalized polynomials. Summation is in
    // double-double because the sum cancels heavily for small overlaps.
    let a = Dd::new(alpha);
    let mut sum = Dd::ZERO;
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (pn, _) = orthonormal_hermite_dd(n, t - a);
        let (pk, _) = orthonormal_hermite_dd(k, t + a);
        sum = sum + w * pn * pk;
    }
    Ok((-alpha * alpha).exp() * sum.to_f64())
}

/// `e^{-α²} Σ_i w_i H_N(t_i - α) H_k(t_i + α)` with the unnormalized
/// Hermite polynomials and the `nodes`-point Gauss–Hermite rule.
pub fn overlap_quadrature(n: usize, k: usize, alpha: f64, nodes: usize) -> Result<f64> {
    let scale = (hermite_norm_sq(n) * hermite_norm_sq(k)).sqrt();
    Ok(overlap_quadrature_normalized(n, k, alpha, nodes)? * scale)
}

pub fn overlap(n: usize, k: usize, alpha: f64, method: OverlapMethod, nodes: Option<usize>) -> Result<OverlapResult> {
    let value = match method {
        OverlapMethod::ClosedForm => overlap_closed(n, k, alpha)?,
        OverlapMethod::Quadrature => {
            let nodes = nodes.unwrap_or_else(|| required_nodes(n, k) + 20);
            overlap_quadrature(n, k, alpha, nodes)?
        }
    };
    Ok(OverlapResult { n, k, alpha, value, method })
}

/// `√π N! e^{-α²} L_N(s)` with the calibrated argument `s = 2α²`.
pub fn diagonal_overlap_laguerre(n: usize, alpha: f64) -> f64 {
    hermite_norm_sq(n) * (-alpha * alpha).exp() * laguerre_poly(n, laguerre_argument(alpha))
}

/// `D_{N,k} = (T₊φ_N, T₋φ_k) / (‖φ_N‖‖φ_k‖)` for `0 ≤ N, k ≤ cutoff`: the
/// truncated matrix of `u ↦ u(· - 2α)` in the orthonormal oscillator basis.
pub fn displacement_matrix(cutoff: usize, alpha: f64) -> Result<DMatrix<f64>> {
    let dim = cutoff + 1;
    let mut d = DMatrix::zeros(dim, dim);
    for n in 0..dim {
        for k in 0..=n {
            let v = overlap_normalized(n, k, alpha)?;
            d[(n, k)] = v;
            d[(k, n)] = if (n + k) % 2 == 0 { v } else { -v };
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_displacement_is_orthogonality() {
        for n in 0..8 {
            for k in 0..8 {
                let v = overlap_closed(n, k, 0.0).unwrap();
                let expect = if n == k { hermite_norm_sq(n) } else { 0.0 };
                assert!((v - expect).abs() < 1e-12 * expect.max(1.0), "({n},{k})");
            }
        }
    }

    #[test]
    fn low_order_closed_forms() {
        for &a in &[0.1f64, 0.5, 1.0, 2.0] {
            let g = PI.sqrt() * (-a * a).exp();
            assert!((overlap_closed(0, 0, a).unwrap() - g).abs() < 1e-15 * g.max(1e-300));
            let v11 = overlap_closed(1, 1, a).unwrap();
            assert!((v11 - g * (1.0 - 2.0 * a * a)).abs() < 1e-14);
        }
    }

    #[test]
    fn calibration_against_quadrature() {
        // (1,1): √π e^{-α²} (1 - c²). Recover c² from the integral.
        let a: f64 = 0.8;
        let q = overlap_quadrature(1, 1, a, 4).unwrap();
        let c2 = 1.0 - q / (PI.sqrt() * (-a * a).exp());
        assert!((c2 - DISPLACEMENT_COEFFICIENT.powi(2) * a * a).abs() < 1e-13);
        assert!((c2 - laguerre_argument(a)).abs() < 1e-13);
        assert!((c2 - uncalibrated_laguerre_argument(a)).abs() > 1.0);
    }

    #[test]
    fn quadrature_examples() {
        let v = overlap_quadrature(0, 0, 0.5, 1).unwrap();
        assert!((v - PI.sqrt() * (-0.25f64).exp()).abs() < 1e-15);
        assert_eq!(
            overlap_quadrature(2, 3, 1.0, 2),
            Err(Error::InsufficientNodes { nodes: 2, degree: 5, required: 3 })
        );
    }

    #[test]
    fn degree_cap() {
        assert!(matches!(overlap_closed(61, 60, 0.5), Err(Error::Precision(_))));
        assert!(overlap_closed(60, 60, 0.5).is_ok());
    }

    #[test]
    fn displacement_matrix_properties() {
        let id = displacement_matrix(6, 0.0).unwrap();
        assert_eq!(id, DMatrix::identity(7, 7));
        let a: f64 = 0.7;
        let d = displacement_matrix(50, a).unwrap();
        assert!((d[(0, 0)] - (-a * a).exp()).abs() < 1e-15);
        for k in 0..=50 {
            let norm = d.column(k).norm();
            assert!(norm <= 1.0 + 1e-12, "column {k}");
            if k <= 10 {
                assert!((norm - 1.0).abs() < 1e-10, "column {k} norm {norm}");
            }
        }
    }

    #[test]
    fn diagonal_laguerre_small() {
        for n in 0..=10 {
            let a: f64 = 0.9;
            let v = overlap_closed(n, n, a).unwrap();
            let l = diagonal_overlap_laguerre(n, a);
            assert!((v - l).abs() < 1e-11 * hermite_norm_sq(n));
        }
    }

    proptest! {
        #[test]
        fn antisymmetry(n in 0usize..40, k in 0usize..40, a in -3.0f64..3.0) {
            let x = overlap_closed(n, k, a).unwrap();
            let y = overlap_closed(k, n, a).unwrap();
            let sign = if (n + k) % 2 == 0 { 1.0 } else { -1.0 };
            let scale = (hermite_norm_sq(n) * hermite_norm_sq(k)).sqrt();
            prop_assert!((x - sign * y).abs() <= 1e-14 * scale);
        }

        #[test]
        fn cauchy_schwarz(n in 0usize..60, k in 0usize..60, a in -3.0f64..3.0) {
            let r = overlap(n, k, a, OverlapMethod::ClosedForm, None);
            prop_assume!(!matches!(r, Err(Error::Precision(_))));
            let r = r.unwrap();
            prop_assert!(r.value.abs() <= r.norm_bound() * (1.0 + 1e-12));
        }
    }
}
