//! Eigenvalues with truncation-convergence control, parity sectors,
//! inertia counting and Braak interval statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build, parity_labels, Family, ModelSpec, TruncatedOperator, AB_FRAME_MAX_CUTOFF};
use crate::inertia::{dense_eigenvalues, InertiaCounter};

/// Ascending eigenvalues of a truncated operator (dense symmetric solve).
pub fn eigen_spectrum(op: &TruncatedOperator) -> Result<Vec<f64>> {
    if !op.matrix.is_symmetric() {
        return Err(Error::Contract("operator matrix is not symmetric".into()));
    }
    dense_eigenvalues(&op.matrix.to_dense())
}

/// `#{eigenvalues ≤ λ}` via inertia of `op - λI`.
pub fn count_below(op: &TruncatedOperator, lambda: f64) -> Result<usize> {
    InertiaCounter::new(&op.matrix)?.count_below(lambda)
}

/// Counts at several shifts, reusing one reordering; results follow the
/// input order.
pub fn count_below_many(op: &TruncatedOperator, lambdas: &[f64]) -> Result<Vec<usize>> {
    let counter = InertiaCounter::new(&op.matrix)?;
    lambdas.par_iter().map(|&l| counter.count_below(l)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub parity: Option<Vec<Parity>>,
    /// Leading eigenvalues that are stable to `tol` under the last cutoff
    /// increase.
    pub converged_count: usize,
    pub requested: usize,
    pub tol: f64,
    pub converged: bool,
    /// Every cutoff vector tried, in order; the eigenvalues belong to the
    /// last one.
    pub cutoffs_used: Vec<Vec<usize>>,
    pub model: ModelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub growth: f64,
    pub cap_single_mode: usize,
    pub cap_multi_mode: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { growth: 1.5, cap_single_mode: 4096, cap_multi_mode: 160 }
    }
}

impl ConvergenceOptions {
    fn cap(&self, spec: &ModelSpec) -> usize {
        let cap = if spec.modes() == 1 { self.cap_single_mode } else { self.cap_multi_mode };
        if spec.family == Family::ABFrame {
            cap.min(AB_FRAME_MAX_CUTOFF)
        } else {
            cap
        }
    }
}

/// Eigenvalues (and parity labels, if requested) at one truncation.
fn solve_at(spec: &ModelSpec, with_parity: bool) -> Result<(Vec<f64>, Option<Vec<Parity>>)> {
    let op = build(spec)?;
    if !with_parity {
        return Ok((eigen_spectrum(&op)?, None));
    }
    let labels = parity_labels(&op.basis)?;
    let plus: Vec<usize> = (0..op.dim()).filter(|&i| labels[i] > 0).collect();
    let minus: Vec<usize> = (0..op.dim()).filter(|&i| labels[i] < 0).collect();
    let mut merged: Vec<(f64, Parity)> = Vec::with_capacity(op.dim());
    for (idx, p) in [(plus, Parity::Plus), (minus, Parity::Minus)] {
        let block = op.matrix.principal_submatrix(&idx);
        merged.extend(dense_eigenvalues(&block)?.into_iter().map(|v| (v, p)));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (values, parity) = merged.into_iter().unzip();
    Ok((values, Some(parity)))
}

fn converge(spec: &ModelSpec, m: usize, tol: f64, opts: &ConvergenceOptions, with_parity: bool) -> Result<Spectrum> {
    if m == 0 || !(tol > 0.0) {
        return Err(Error::Domain("need m >= 1 and tol > 0".into()));
    }
    spec.validate()?;
    let cap = opts.cap(spec);
    let spin = spec.spin_dim();
    let modes = spec.modes() as u32;
    // Smallest uniform cutoff whose basis holds at least m states.
    let mut floor = 1;
    while spin * (floor + 1usize).pow(modes) < m {
        floor += 1;
    }
    let start: Vec<usize> = spec.cutoffs.iter().map(|&c| c.max(floor).min(cap)).collect();
    let mut cutoffs = start;
    let mut used = vec![cutoffs.clone()];
    let mut current = solve_at(&spec.with_cutoffs(cutoffs.clone()), with_parity)?;
    loop {
        let next: Vec<usize> =
            cutoffs.iter().map(|&c| ((c as f64 * opts.growth).ceil() as usize).max(c + 1).min(cap)).collect();
        if next == cutoffs {
            // Started at the cap: nothing to compare against.
            return Ok(Spectrum {
                eigenvalues: current.0,
                parity: current.1,
                converged_count: 0,
                requested: m,
                tol,
                converged: false,
                cutoffs_used: used,
                model: spec.with_cutoffs(cutoffs),
            });
        }
        let refined = solve_at(&spec.with_cutoffs(next.clone()), with_parity)?;
        used.push(next.clone());
        let stable = stable_prefix(&current.0, &refined.0, tol);
        if stable >= m {
            return Ok(Spectrum {
                eigenvalues: refined.0,
                parity: refined.1,
                converged_count: m,
                requested: m,
                tol,
                converged: true,
                cutoffs_used: used,
                model: spec.with_cutoffs(next),
            });
        }
        let at_cap = next.iter().all(|&c| c == cap);
        if at_cap {
            return Ok(Spectrum {
                eigenvalues: refined.0,
                parity: refined.1,
                converged_count: stable.min(m),
                requested: m,
                tol,
                converged: false,
                cutoffs_used: used,
                model: spec.with_cutoffs(next),
            });
        }
        cutoffs = next;
        current = refined;
    }
}

/// Length of the common prefix of two ascending spectra that agrees to
/// `tol`.
fn stable_prefix(a: &[f64], b: &[f64], tol: f64) -> usize {
    a.iter().zip(b).take_while(|(x, y)| (*x - *y).abs() < tol).count()
}

/// Grows the cutoffs by the configured factor until the first `m`
/// eigenvalues move by less than `tol` between successive truncations.
pub fn converged_spectrum(spec: &ModelSpec, m: usize, tol: f64) -> Result<Spectrum> {
    converged_spectrum_with(spec, m, tol, &ConvergenceOptions::default())
}

pub fn converged_spectrum_with(spec: &ModelSpec, m: usize, tol: f64, opts: &ConvergenceOptions) -> Result<Spectrum> {
    converge(spec, m, tol, opts, false)
}

/// As [`converged_spectrum`], diagonalizing the two parity sectors
/// separately and labelling each eigenvalue by its sector.
pub fn parity_split(spec: &ModelSpec, m: usize, tol: f64) -> Result<Spectrum> {
    parity_split_with(spec, m, tol, &ConvergenceOptions::default())
}

pub fn parity_split_with(spec: &ModelSpec, m: usize, tol: f64, opts: &ConvergenceOptions) -> Result<Spectrum> {
    if !matches!(spec.family, Family::QR | Family::QRabi) {
        return Err(Error::Spec(format!("parity split needs a qr or qrabi model, got {}", spec.family.name())));
    }
    converge(spec, m, tol, opts, true)
}

/// Distance below which an eigenvalue counts as lying on an interval
/// boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalCount {
    /// Interval `[N, N + 1)`.
    #[serde(rename = "N")]
    pub n: i64,
    pub total_count: usize,
    pub count_plus: Option<usize>,
    pub count_minus: Option<usize>,
    /// Eigenvalues that sat on the upper boundary and were assigned here.
    pub boundary_hits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// `"+"`, `"-"`, or `"total"` for unlabelled spectra.
    pub class: String,
    pub max_two: bool,
    pub no_adjacent_empty: bool,
    pub no_adjacent_double: bool,
}

impl Verdict {
    pub fn all(&self) -> bool {
        self.max_two && self.no_adjacent_empty && self.no_adjacent_double
    }

    /// Evaluates the three criteria on per-interval counts.
    pub fn from_counts(class: &str, counts: &[usize]) -> Self {
        Verdict {
            class: class.to_string(),
            max_two: counts.iter().all(|&c| c <= 2),
            no_adjacent_empty: counts.windows(2).all(|w| !(w[0] == 0 && w[1] == 0)),
            no_adjacent_double: counts.windows(2).all(|w| !(w[0] >= 2 && w[1] >= 2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub shift_applied: f64,
    pub nmax: i64,
    pub per_interval: Vec<IntervalCount>,
    /// One verdict per parity class when labels exist, otherwise a single
    /// `"total"` verdict.
    pub verdicts: Vec<Verdict>,
    /// Shifted eigenvalues found within [`BOUNDARY_TOLERANCE`] of an
    /// integer.
    pub boundary_values: Vec<f64>,
}

impl IntervalReport {
    pub fn all_verdicts(&self) -> bool {
        self.verdicts.iter().all(Verdict::all)
    }
}

/// Interval index of a shifted eigenvalue: `floor(v)`, except that values
/// within [`BOUNDARY_TOLERANCE`] of an integer `b` go to `b - 1`.
pub fn interval_index(v: f64) -> (i64, bool) {
    let nearest = v.round();
    if (v - nearest).abs() <= BOUNDARY_TOLERANCE {
        (nearest as i64 - 1, true)
    } else {
        (v.floor() as i64, false)
    }
}

/// Counts shifted eigenvalues `λ + shift` in `[N, N + 1)` for
/// `N = 0..=nmax`, only from converged eigenvalues.
pub fn braak_intervals(spectrum: &Spectrum, shift: f64, nmax: i64) -> Result<IntervalReport> {
    let labelled = spectrum.parity.is_some();
    let classes: Vec<&str> = if labelled { vec!["+", "-"] } else { vec!["total"] };
    if nmax < 0 {
        return Ok(IntervalReport {
            shift_applied: shift,
            nmax,
            per_interval: Vec::new(),
            verdicts: classes.iter().map(|c| Verdict::from_counts(c, &[])).collect(),
            boundary_values: Vec::new(),
        });
    }
    let cc = spectrum.converged_count.min(spectrum.eigenvalues.len());
    let reach = if cc == 0 { f64::NEG_INFINITY } else { spectrum.eigenvalues[cc - 1] + shift };
    // Every eigenvalue below the last converged one is itself converged, so
    // coverage up to nmax + 1 requires the last converged value to reach it.
    if reach < (nmax + 1) as f64 {
        let first_uncovered = if reach.is_finite() { reach.floor().max(0.0) as i64 } else { 0 };
        return Err(Error::Coverage { first_uncovered });
    }
    let len = (nmax + 1) as usize;
    let mut per_interval: Vec<IntervalCount> = (0..=nmax)
        .map(|n| IntervalCount {
            n,
            total_count: 0,
            count_plus: labelled.then_some(0),
            count_minus: labelled.then_some(0),
            boundary_hits: 0,
        })
        .collect();
    let mut boundary_values = Vec::new();
    for (i, &lambda) in spectrum.eigenvalues[..cc].iter().enumerate() {
        let v = lambda + shift;
        let (n, on_boundary) = interval_index(v);
        if on_boundary {
            boundary_values.push(v);
        }
        if n < 0 || n > nmax {
            continue;
        }
        let slot = &mut per_interval[n as usize];
        slot.total_count += 1;
        if on_boundary {
            slot.boundary_hits += 1;
        }
        if let Some(labels) = &spectrum.parity {
            match labels[i] {
                Parity::Plus => *slot.count_plus.as_mut().unwrap() += 1,
                Parity::Minus => *slot.count_minus.as_mut().unwrap() += 1,
            }
        }
    }
    let verdicts = if labelled {
        let plus: Vec<usize> = per_interval.iter().map(|c| c.count_plus.unwrap()).collect();
        let minus: Vec<usize> = per_interval.iter().map(|c| c.count_minus.unwrap()).collect();
        vec![Verdict::from_counts("+", &plus), Verdict::from_counts("-", &minus)]
    } else {
        let total: Vec<usize> = per_interval.iter().map(|c| c.total_count).collect();
        vec![Verdict::from_counts("total", &total)]
    };
    debug_assert_eq!(per_interval.len(), len);
    Ok(IntervalReport { shift_applied: shift, nmax, per_interval, verdicts, boundary_values })
}
