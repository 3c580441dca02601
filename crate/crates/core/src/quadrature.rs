//! Gauss rules: Gauss–Hermite for the weight `e^{-x²}` (Golub–Welsch with
//! double-double Newton polish, cached per node count) and Gauss–Legendre on `[-1, 1]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Largest supported Gauss–Hermite node count. Beyond this the orthonormal
/// recurrence overflows at the outermost nodes.
pub const MAX_HERMITE_NODES: usize = 300;

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Orthonormal Hermite polynomials `p_0..p_{n}` at `x` for the weight
/// `e^{-x²}`: `x p_k = √((k+1)/2) p_{k+1} + √(k/2) p_{k-1}`.
pub fn orthonormal_hermite(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(std::f64::consts::PI.powf(-0.25));
    if n >= 1 {
        p.push(std::f64::consts::SQRT_2 * x * p[0]);
    }
    for k in 1..n {
        let next = (x * p[k] - (k as f64 / 2.0).sqrt() * p[k - 1]) / ((k + 1) as f64 / 2.0).sqrt();
        p.push(next);
    }
    p
}

/// π to double-double precision.
const PI_DD: Dd = Dd { hi: std::f64::consts::PI, lo: 1.2246467991473532e-16 };

/// `√(k/2)` for `k = 0..=n`, in double-double.
fn half_sqrts(n: usize) -> Vec<Dd> {
    (0..=n).map(|k| Dd::new(k as f64 * 0.5).sqrt()).collect()
}

/// Double-double evaluation of the orthonormal Hermite recurrence, returning
/// `(p_n(x), p_{n-1}(x))` (with `p_{-1} = 0`).
pub fn orthonormal_hermite_dd(n: usize, x: Dd) -> (Dd, Dd) {
    let s = half_sqrts(n);
    orthonormal_hermite_dd_with(&s, n, x)
}

fn orthonormal_hermite_dd_with(s: &[Dd], n: usize, x: Dd) -> (Dd, Dd) {
    let p0 = Dd::ONE / PI_DD.sqrt().sqrt();
    if n == 0 {
        return (p0, Dd::ZERO);
    }
    let mut prev = p0;
    let mut cur = x * p0 / s[1];
    for k in 1..n {
        let next = (x * cur - s[k] * prev) / s[k + 1];
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss–Hermite rule with nodes and weights carried in double-double.
#[derive(Clone, Debug)]
pub struct HermiteRule {
    pub nodes: Vec<Dd>,
    pub weights: Vec<Dd>,
}

impl HermiteRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn to_f64(&self) -> GaussRule {
        GaussRule {
            nodes: self.nodes.iter().map(|x| x.to_f64()).collect(),
            weights: self.weights.iter().map(|w| w.to_f64()).collect(),
        }
    }
}

fn build_hermite(n: usize) -> Result<HermiteRule> {
    let jacobi = SymTridiagonal::new(vec![0.0; n], (1..n).map(|i| (i as f64 / 2.0).sqrt()).collect());
    let s = half_sqrts(n);
    let mut nodes = Vec::with_capacity(n);
    for x0 in jacobi.eigenvalues()? {
        // p_n' = √(2n) p_{n-1}
        let mut x = Dd::new(x0);
        for _ in 0..6 {
            let (p, pm1) = orthonormal_hermite_dd_with(&s, n, x);
            let step = p / (pm1 * s[n] * 2.0);
            x = x - step;
            if step.hi.abs() <= 1e-31 * x.hi.abs().max(1.0) {
                break;
            }
        }
        nodes.push(x);
    }
    // The rule is symmetric; enforce it exactly.
    for i in 0..n / 2 {
        let m = (nodes[n - 1 - i] - nodes[i]) * 0.5;
        nodes[i] = -m;
        nodes[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        nodes[n / 2] = Dd::ZERO;
    }
    let p0 = Dd::ONE / PI_DD.sqrt().sqrt();
    let weights = nodes
        .iter()
        .map(|&x| {
            // Christoffel function: w = 1 / Σ_{k<n} p_k(x)²
            let mut total = p0 * p0;
            let mut prev = p0;
            let mut cur = Dd::ZERO;
            if n > 1 {
                cur = x * p0 / s[1];
                total = total + cur * cur;
            }
            for k in 1..n.saturating_sub(1) {
                let next = (x * cur - s[k] * prev) / s[k + 1];
                prev = cur;
                cur = next;
                total = total + cur * cur;
            }
            Dd::ONE / total
        })
        .collect();
    Ok(HermiteRule { nodes, weights })
}

/// The `n`-point Gauss–Hermite rule for `∫ f(x) e^{-x²} dx`, exact for
/// polynomials of degree `≤ 2n - 1`. Rules are built once and shared.
pub fn gauss_hermite(n: usize) -> Result<Arc<HermiteRule>> {
    if n == 0 || n > MAX_HERMITE_NODES {
        return Err(Error::Domain(format!("Gauss-Hermite node count must be in 1..={MAX_HERMITE_NODES}, got {n}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.lock().unwrap().get(&n) {
        return Ok(rule.clone());
    }
    // Built outside the lock; concurrent builders produce identical rules.
    let rule = Arc::new(build_hermite(n)?);
    Ok(cache.lock().unwrap().entry(n).or_insert(rule).clone())
}

/// The `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::Domain("Gauss-Legendre needs at least one node".into()));
    }
    let off = (1..n).map(|i| i as f64 / ((4 * i * i - 1) as f64).sqrt()).collect();
    let nodes = SymTridiagonal::new(vec![0.0; n], off).eigenvalues()?;
    let mut rule = GaussRule { nodes: Vec::with_capacity(n), weights: Vec::with_capacity(n) };
    for mut x in nodes {
        let mut dp = 1.0;
        for _ in 0..6 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= f64::EPSILON {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.nodes.push(x);
        rule.weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    Ok(rule)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 1.0;
    let mut cur = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    let nf = n as f64;
    (cur, nf * (x * cur - prev) / (x * x - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_moments() {
        // ∫ x^{2m} e^{-x²} = Γ(m + 1/2)
        let rule = gauss_hermite(12).unwrap().to_f64();
        let mut gamma = PI.sqrt();
        for m in 0..12 {
            let got = rule.integrate(|x| x.powi(2 * m));
            assert!((got - gamma).abs() < 1e-13 * gamma, "m={m}");
            gamma *= m as f64 + 0.5;
        }
        assert!(rule.integrate(|x| x.powi(7)).abs() < 1e-14);
    }

    #[test]
    fn single_node_rule() {
        let rule = gauss_hermite(1).unwrap().to_f64();
        assert_eq!(rule.nodes, vec![0.0]);
        assert!((rule.weights[0] - PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn large_rule_orthonormality() {
        let rule = gauss_hermite(200).unwrap().to_f64();
        let total: f64 = rule.weights.iter().sum();
        assert!((total - PI.sqrt()).abs() < 1e-13);
        let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| orthonormal_hermite(150, x)).collect();
        for (a, b) in [(0, 0), (150, 150), (149, 150), (37, 91)] {
            let s: f64 = vals.iter().zip(&rule.weights).map(|(p, w)| w * p[a] * p[b]).sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((s - expect).abs() < 1e-12, "({a},{b}) -> {s}");
        }
    }

    #[test]
    fn out_of_range_counts() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(MAX_HERMITE_NODES + 1).is_err());
    }

    #[test]
    fn legendre_polynomials_integrated() {
        let rule = gauss_legendre(10).unwrap();
        for m in 0..20 {
            let exact = if m % 2 == 1 { 0.0 } else { 2.0 / (m + 1) as f64 };
            assert!((rule.integrate(|x| x.powi(m)) - exact).abs() < 1e-14, "m={m}");
        }
    }
}
