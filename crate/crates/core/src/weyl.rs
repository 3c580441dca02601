//! Two-term Weyl asymptotics of the counting function, empirical counts by
//! inertia, and the pointwise eigenvalue-gap check of the perturbed
//! semiprincipal symbols.
//!
//! Phase-space points are `X = (x_1 … x_n, ξ_1 … ξ_n)`, and the energy
//! surface is `p₂(X) = |X|²/2 = 1`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build, Family, ModelSpec};
use crate::quadrature::gauss_legendre;
use crate::spectral::{count_below, count_below_many};

/// Legendre nodes per polar angle in the product rule on the sphere.
pub const SPHERE_POLAR_NODES: usize = 24;
/// Sphere samples for the Monte Carlo route (`n ≥ 3`).
pub const DEFAULT_MC_SAMPLES: usize = 4096;
/// Counting is trusted up to this fraction of the smallest cutoff.
pub const DEFAULT_RELIABILITY_FRACTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereIntegration {
    Product,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPrediction {
    pub n: usize,
    #[serde(rename = "Nlev")]
    pub nlev: usize,
    pub leading_coeff: f64,
    pub subleading_coeff: f64,
    pub integration: SphereIntegration,
    /// Number of sphere points used.
    pub samples: usize,
    /// Only meaningful for Monte Carlo.
    pub seed: u64,
}

impl WeylPrediction {
    /// `leading·λⁿ − subleading·λ^{n−½}`.
    pub fn predict(&self, lambda: f64) -> f64 {
        self.leading_coeff * lambda.powi(self.n as i32) - self.subleading_coeff * lambda.powf(self.n as f64 - 0.5)
    }
}

/// Surface area of the unit sphere `S^{d−1}` in `ℝ^d`.
pub fn unit_sphere_area(d: usize) -> f64 {
    // 2π^{d/2} / Γ(d/2), by recursion on d.
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * unit_sphere_area(d - 2),
    }
}

/// Points and weights of a product rule on the sphere of radius `r` in
/// `ℝ^d`: Gauss-Legendre in each polar angle (Jacobian `sin^p θ` folded
/// into the weights) and the trapezoid rule in the azimuth.
pub fn sphere_product_rule(d: usize, r: f64, polar_nodes: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if d < 2 {
        return Err(Error::Domain(format!("sphere product rule needs dimension ≥ 2, got {d}")));
    }
    let gl = gauss_legendre(polar_nodes)?;
    let theta: Vec<(f64, f64)> = gl.nodes.iter().zip(&gl.weights).map(|(&t, &w)| (0.5 * PI * (t + 1.0), 0.5 * PI * w)).collect();
    let azimuth = 2 * polar_nodes;
    let polar = d - 2;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![0usize; polar];
    loop {
        for a in 0..azimuth {
            let phi = 2.0 * PI * a as f64 / azimuth as f64;
            let mut w = 2.0 * PI / azimuth as f64 * r.powi(d as i32 - 1);
            let mut x = Vec::with_capacity(d);
            let mut radial = r;
            for (j, &i) in idx.iter().enumerate() {
                let (t, tw) = theta[i];
                w *= tw * t.sin().powi((d - 2 - j) as i32);
                x.push(radial * t.cos());
                radial *= t.sin();
            }
            x.push(radial * phi.cos());
            x.push(radial * phi.sin());
            points.push(x);
            weights.push(w);
        }
        // Odometer over the polar indices.
        let mut j = 0;
        while j < polar {
            idx[j] += 1;
            if idx[j] < polar_nodes {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == polar {
            break;
        }
    }
    Ok((points, weights))
}

/// `vol{|X|²/2 ≤ 1}` in `ℝ^{2n}` by the product rule for the sphere and
/// Gauss-Legendre in the radius.
pub fn ball_volume_numeric(n: usize) -> Result<f64> {
    let d = 2 * n;
    let (_, w) = sphere_product_rule(d, 1.0, SPHERE_POLAR_NODES)?;
    let area: f64 = w.iter().sum();
    let r_max = 2f64.sqrt();
    let radial = gauss_legendre(n + 1)?.integrate(|t| {
        let r = 0.5 * r_max * (t + 1.0);
        0.5 * r_max * r.powi(d as i32 - 1)
    });
    Ok(area * radial)
}

/// `(2π)ⁿ / n!`.
pub fn ball_volume_exact(n: usize) -> f64 {
    (1..=n).fold(1.0, |v, k| v * 2.0 * PI / k as f64)
}

/// Uniform point on `|X| = √2` in `ℝ^{2n}`.
fn sphere_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    g.into_iter().map(|v| v * 2f64.sqrt() / norm).collect()
}

fn symbol_families(spec: &ModelSpec) -> Result<()> {
    match spec.family {
        Family::ABFrame => Err(Error::Spec("Weyl asymptotics are stated for QR, QRabi, Xi, Lambda and Vee".into())),
        _ => Ok(()),
    }
}

/// Spin pairs and couplings of the degree-one symbol; the two-level models
/// are the `n = 1` chain.
fn couplings(spec: &ModelSpec) -> Vec<(usize, usize, f64)> {
    let nlev = spec.spin_dim();
    (1..=spec.modes())
        .map(|k| {
            let (lo, hi) = spec.family.coupled_pair(k, nlev);
            (lo, hi, spec.alpha[k - 1])
        })
        .collect()
}

/// `a₁(X) + ε b₁(X)`: entry `(lo, hi)` is `α_k (x_k − iεξ_k)` and entry
/// `(hi, lo)` its conjugate, on each coupled pair.
pub fn perturbed_symbol(spec: &ModelSpec, eps: f64, x: &[f64]) -> Result<DMatrix<Complex<f64>>> {
    symbol_families(spec)?;
    let n = spec.modes();
    if x.len() != 2 * n {
        return Err(Error::Domain(format!("phase-space point needs {} coordinates, got {}", 2 * n, x.len())));
    }
    let nlev = spec.spin_dim();
    let mut m = DMatrix::from_element(nlev, nlev, Complex::new(0.0, 0.0));
    for (k, (lo, hi, a)) in couplings(spec).into_iter().enumerate() {
        let psi = Complex::new(a * x[k], a * eps * x[n + k]);
        m[(hi, lo)] += psi;
        m[(lo, hi)] += psi.conj();
    }
    Ok(m)
}

/// `Tr a₁(X)`.
pub fn semiprincipal_trace(spec: &ModelSpec, x: &[f64]) -> Result<f64> {
    let m = perturbed_symbol(spec, 0.0, x)?;
    Ok((0..m.nrows()).map(|i| m[(i, i)].re).sum())
}

/// Prediction with the default Monte Carlo settings (seed 0).
pub fn weyl_prediction(spec: &ModelSpec) -> Result<WeylPrediction> {
    weyl_prediction_with(spec, 0, DEFAULT_MC_SAMPLES)
}

/// Leading coefficient `Nlev·(2π)⁻ⁿ·vol{p₂ ≤ 1} = Nlev/n!`; subleading
/// coefficient `(2π)⁻ⁿ ∫_{|X|=√2} Tr a₁ ds / √2` by the product rule for
/// `n ≤ 2` and seeded Monte Carlo otherwise.
pub fn weyl_prediction_with(spec: &ModelSpec, seed: u64, mc_samples: usize) -> Result<WeylPrediction> {
    spec.validate()?;
    symbol_families(spec)?;
    let n = spec.modes();
    let nlev = spec.spin_dim();
    let leading_coeff = nlev as f64 * ball_volume_exact(n) / (2.0 * PI).powi(n as i32);
    let r = 2f64.sqrt();
    let (integral, integration, samples) = if n <= 2 {
        let (points, weights) = sphere_product_rule(2 * n, r, SPHERE_POLAR_NODES)?;
        let mut total = 0.0;
        for (x, w) in points.iter().zip(&weights) {
            total += w * semiprincipal_trace(spec, x)?;
        }
        (total, SphereIntegration::Product, points.len())
    } else {
        if mc_samples == 0 {
            return Err(Error::Domain("Monte Carlo sphere integration needs at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        for _ in 0..mc_samples {
            total += semiprincipal_trace(spec, &sphere_point(&mut rng, n))?;
        }
        let area = unit_sphere_area(2 * n) * r.powi(2 * n as i32 - 1);
        (area * total / mc_samples as f64, SphereIntegration::MonteCarlo, mc_samples)
    };
    let subleading_coeff = integral / r / (2.0 * PI).powi(n as i32);
    Ok(WeylPrediction { n, nlev, leading_coeff, subleading_coeff, integration, samples, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingRow {
    pub lambda: f64,
    pub count: usize,
    pub prediction: f64,
    pub rel_err: f64,
    /// `λ` lies beyond the reliability limit of the truncation.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingTable {
    pub prediction: WeylPrediction,
    pub reliability_limit: f64,
    pub rows: Vec<CountingRow>,
    /// Eigenvalues `≤ 0` of the truncated operator.
    pub nonpositive_count: usize,
    pub positive: bool,
}

impl CountingTable {
    /// Least-squares slope of `|rel_err|` against `λ` over unflagged rows.
    pub fn trend_slope(&self) -> Option<f64> {
        let rows: Vec<&CountingRow> = self.rows.iter().filter(|r| !r.flagged).collect();
        if rows.len() < 2 {
            return None;
        }
        let n = rows.len() as f64;
        let mx = rows.iter().map(|r| r.lambda).sum::<f64>() / n;
        let my = rows.iter().map(|r| r.rel_err.abs()).sum::<f64>() / n;
        let sxy: f64 = rows.iter().map(|r| (r.lambda - mx) * (r.rel_err.abs() - my)).sum();
        let sxx: f64 = rows.iter().map(|r| (r.lambda - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// `N_A(λ)` by inertia on `build(spec)` next to the two-term prediction.
/// Rows with `λ > fraction · min cutoff` are flagged.
pub fn empirical_counting(spec: &ModelSpec, lambdas: &[f64], reliability_fraction: f64) -> Result<CountingTable> {
    empirical_counting_with(spec, lambdas, reliability_fraction, 0, DEFAULT_MC_SAMPLES)
}

/// [`empirical_counting`] with an explicit seed and sample count for the
/// Monte Carlo sphere integral.
pub fn empirical_counting_with(spec: &ModelSpec, lambdas: &[f64], reliability_fraction: f64, seed: u64, mc_samples: usize) -> Result<CountingTable> {
    if !(reliability_fraction > 0.0 && reliability_fraction <= 1.0) {
        return Err(Error::Domain(format!("reliability fraction must lie in (0, 1], got {reliability_fraction}")));
    }
    let prediction = weyl_prediction_with(spec, seed, mc_samples)?;
    let op = build(spec)?;
    let counts = count_below_many(&op, lambdas)?;
    let nonpositive_count = count_below(&op, 0.0)?;
    if nonpositive_count > 0 {
        log::warn!("truncated operator has {nonpositive_count} eigenvalue(s) ≤ 0");
    }
    let reliability_limit = reliability_fraction * spec.min_cutoff() as f64;
    let rows = lambdas
        .iter()
        .zip(counts)
        .map(|(&lambda, count)| {
            let p = prediction.predict(lambda);
            CountingRow { lambda, count, prediction: p, rel_err: count as f64 / p - 1.0, flagged: lambda > reliability_limit }
        })
        .collect();
    Ok(CountingTable { prediction, reliability_limit, rows, nonpositive_count, positive: nonpositive_count == 0 })
}

/// Complex Hermitian matrix as separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&DMatrix<Complex<f64>>> for ComplexMatrix {
    fn from(m: &DMatrix<Complex<f64>>) -> Self {
        let rows = |f: fn(&Complex<f64>) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        ComplexMatrix { re: rows(|c| c.re), im: rows(|c| c.im) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolSample {
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    pub a1_matrix: ComplexMatrix,
    pub b1_matrix: ComplexMatrix,
    pub eigenvalues: Vec<f64>,
    pub min_gap: f64,
    /// `max |S − S*|` for `S = a₁ + εb₁`.
    pub hermiticity_error: f64,
}

pub fn symbol_sample(spec: &ModelSpec, eps: f64, x: &[f64]) -> Result<SymbolSample> {
    let a1 = perturbed_symbol(spec, 0.0, x)?;
    let s = perturbed_symbol(spec, eps, x)?;
    let b1 = if eps == 0.0 { perturbed_symbol(spec, 1.0, x)? - &a1 } else { (&s - &a1) / Complex::new(eps, 0.0) };
    let hermiticity_error = (&s - s.adjoint()).iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut eigenvalues: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let min_gap = eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(SymbolSample {
        x: x.to_vec(),
        a1_matrix: ComplexMatrix::from(&a1),
        b1_matrix: ComplexMatrix::from(&b1),
        eigenvalues,
        min_gap,
        hermiticity_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Uniform random points from a ChaCha8 stream seeded with `seed`.
    Seeded,
    /// The product-rule nodes of the sphere; `seed` is ignored.
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub eps: f64,
    pub mode: SamplingMode,
    pub samples: usize,
    pub seed: u64,
    pub min_gap: f64,
    pub argmin: Vec<f64>,
    pub max_hermiticity_error: f64,
}

/// Smallest eigenvalue gap of `a₁ + εb₁` over points of `|X| = √2`.
///
/// In grid mode the number of polar nodes is the smallest `m` whose product
/// rule has at least `samples` points.
pub fn smges_gap_check(spec: &ModelSpec, eps: f64, samples: usize, seed: u64, mode: SamplingMode) -> Result<GapReport> {
    if !spec.family.is_n_level() {
        return Err(Error::Spec("the gap check applies to the Xi, Lambda and Vee families".into()));
    }
    spec.validate()?;
    if samples == 0 {
        return Err(Error::Domain("gap check needs at least one sample".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be finite and ≥ 0, got {eps}")));
    }
    let n = spec.modes();
    let points: Vec<Vec<f64>> = match mode {
        SamplingMode::Seeded => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).map(|_| sphere_point(&mut rng, n)).collect()
        }
        SamplingMode::Grid => {
            let d = 2 * n;
            let mut m: usize = 1;
            while 2 * m * m.pow(d as u32 - 2) < samples {
                m += 1;
            }
            sphere_product_rule(d, 2f64.sqrt(), m)?.0
        }
    };
    let mut min_gap = f64::INFINITY;
    let mut argmin = points[0].clone();
    let mut max_herm = 0.0f64;
    for x in &points {
        let s = symbol_sample(spec, eps, x)?;
        max_herm = max_herm.max(s.hermiticity_error);
        if s.min_gap < min_gap {
            min_gap = s.min_gap;
            argmin = x.clone();
        }
    }
    Ok(GapReport { eps, mode, samples: points.len(), seed, min_gap, argmin, max_hermiticity_error: max_herm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen_spectrum;
    use proptest::prelude::*;

    fn xi3() -> ModelSpec {
        ModelSpec::n_level(Family::Xi, vec![1.0, 1.0], vec![0.5, 1.0], 20)
    }

    #[test]
    fn volume_identity() {
        for n in 1..=3 {
            let v = ball_volume_numeric(n).unwrap();
            assert!((v / ball_volume_exact(n) - 1.0).abs() < 1e-10, "n={n}: {v}");
        }
    }

    #[test]
    fn sphere_points_on_energy_surface() {
        let (pts, _) = sphere_product_rule(4, 2f64.sqrt(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in pts.iter().cloned().chain((0..50).map(|_| sphere_point(&mut rng, 3))) {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            assert!((r2 - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leading_coefficients() {
        let qr = weyl_prediction(&ModelSpec::qr(1.0, 1.0, -1.0, 0.02, 50)).unwrap();
        assert!((qr.leading_coeff - 2.0).abs() < 1e-14);
        let xi = weyl_prediction(&xi3()).unwrap();
        assert!((xi.leading_coeff - 1.5).abs() < 1e-14);
        assert_eq!(xi.integration, SphereIntegration::Product);
        let vee4 = ModelSpec::n_level(Family::Vee, vec![1.0, 0.5, 2.0], vec![0.0, 1.0, 2.0], 4);
        let p = weyl_prediction(&vee4).unwrap();
        assert!((p.leading_coeff - 4.0 / 6.0).abs() < 1e-14);
        assert_eq!(p.integration, SphereIntegration::MonteCarlo);
    }

    #[test]
    fn subleading_vanishes() {
        for fam in [Family::Xi, Family::Lambda, Family::Vee] {
            for alpha in [vec![1.0], vec![1.0, -0.7], vec![0.3, 1.1, 2.0]] {
                let n = alpha.len();
                let spec = ModelSpec::n_level(fam, alpha, vec![0.0; n], 4);
                assert!(weyl_prediction(&spec).unwrap().subleading_coeff.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ab_frame_rejected() {
        assert!(matches!(weyl_prediction(&ModelSpec::ab_frame(1.0, 1.0, -1.0, 0.1, 10)), Err(Error::Spec(_))));
    }

    #[test]
    fn counting_matches_eigensolve() {
        let spec = ModelSpec::qr(1.0, 1.0, -1.0, 0.02, 200);
        let lambdas = [5.0, 20.5, 50.0, 99.0];
        let table = empirical_counting(&spec, &lambdas, DEFAULT_RELIABILITY_FRACTION).unwrap();
        let ev = eigen_spectrum(&build(&spec).unwrap()).unwrap();
        for row in &table.rows {
            assert_eq!(row.count, ev.iter().filter(|&&e| e <= row.lambda).count());
            assert!(!row.flagged);
        }
        // α²/2 = ½ pushes the ground level of QR slightly below zero.
        assert_eq!(table.positive, ev[0] > 0.0);
        assert_eq!(table.nonpositive_count, ev.iter().filter(|&&e| e <= 0.0).count());
    }

    #[test]
    fn rows_beyond_truncation_flagged() {
        let table = empirical_counting(&ModelSpec::qr(1.0, 1.0, -1.0, 0.02, 40), &[10.0, 30.0], 0.5).unwrap();
        assert!(!table.rows[0].flagged);
        assert!(table.rows[1].flagged);
    }

    #[test]
    fn negative_levels_reported() {
        let spec = ModelSpec::n_level(Family::Xi, vec![1.0, 1.0], vec![-3.0, -3.0], 10);
        let table = empirical_counting(&spec, &[2.0], 0.5).unwrap();
        assert!(!table.positive && table.nonpositive_count > 0);
    }

    #[test]
    fn unperturbed_symbol_vanishes_at_zero_position() {
        let s = symbol_sample(&xi3(), 0.0, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(s.eigenvalues.iter().all(|&e| e == 0.0));
        assert_eq!(s.min_gap, 0.0);
    }

    #[test]
    fn perturbed_chain_is_simple_at_zero_position() {
        let s = symbol_sample(&xi3(), 0.3, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(s.min_gap > 0.1, "{:?}", s.eigenvalues);
        // b₁ = i-weighted momentum couplings.
        assert_eq!(s.b1_matrix.im[1][0], 1.0);
        assert_eq!(s.b1_matrix.im[0][1], -1.0);
    }

    #[test]
    fn star_with_three_leaves_keeps_double_zero() {
        // A star graph matrix has eigenvalue 0 with multiplicity leaves − 1.
        for fam in [Family::Lambda, Family::Vee] {
            let spec = ModelSpec::n_level(fam, vec![1.0, 0.8, 1.2], vec![0.0, 1.0, 2.0], 4);
            let r = smges_gap_check(&spec, 0.5, 200, 1, SamplingMode::Seeded).unwrap();
            assert!(r.min_gap < 1e-12, "{fam:?}: {}", r.min_gap);
        }
    }

    #[test]
    fn grid_mode_ignores_seed() {
        let a = smges_gap_check(&xi3(), 0.5, 300, 1, SamplingMode::Grid).unwrap();
        let b = smges_gap_check(&xi3(), 0.5, 300, 99, SamplingMode::Grid).unwrap();
        assert_eq!(a.min_gap, b.min_gap);
        assert_eq!(a.argmin, b.argmin);
        assert!(a.samples >= 300);
    }

    #[test]
    fn seeded_mode_is_reproducible() {
        let a = smges_gap_check(&xi3(), 0.5, 100, 7, SamplingMode::Seeded).unwrap();
        let b = smges_gap_check(&xi3(), 0.5, 100, 7, SamplingMode::Seeded).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn symbols_are_hermitian_and_traceless(
            fam in prop::sample::select(vec![Family::Xi, Family::Lambda, Family::Vee]),
            eps in 0.0f64..1.0,
            seed in 0u64..1000,
            alpha in prop::collection::vec(-2.0f64..2.0, 1..4),
        ) {
            let n = alpha.len();
            let spec = ModelSpec::n_level(fam, alpha, vec![0.0; n], 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sphere_point(&mut rng, n);
            let s = symbol_sample(&spec, eps, &x).unwrap();
            prop_assert!(s.hermiticity_error <= 1e-14);
            prop_assert_eq!(semiprincipal_trace(&spec, &x).unwrap(), 0.0);
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
