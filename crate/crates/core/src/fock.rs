//! Truncated Fock-basis matrices for the Rabi-type Hamiltonians.
//!
//! Basis vectors are `|s⟩ ⊗ |n_1 … n_m⟩` with the spin index slowest and the
//! oscillator multi-index in row-major order (`n_m` fastest).

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::overlaps::displacement_matrix;
use crate::specfun::MAX_COMBINED_DEGREE;
use crate::symmat::{SymBuilder, SymMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub modes: usize,
    pub per_mode_cutoff: Vec<usize>,
    pub spin_dim: usize,
}

impl BasisDescriptor {
    pub fn new(spin_dim: usize, per_mode_cutoff: Vec<usize>) -> Result<Self> {
        if spin_dim == 0 || per_mode_cutoff.is_empty() {
            return Err(Error::Spec("basis needs at least one spin state and one mode".into()));
        }
        Ok(BasisDescriptor { modes: per_mode_cutoff.len(), per_mode_cutoff, spin_dim })
    }

    /// Number of oscillator states `Π (cutoff_j + 1)`.
    pub fn fock_dim(&self) -> usize {
        self.per_mode_cutoff.iter().map(|c| c + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.spin_dim * self.fock_dim()
    }

    /// Index step of mode `j` (0-based) within a spin block.
    pub fn stride(&self, j: usize) -> usize {
        self.per_mode_cutoff[j + 1..].iter().map(|c| c + 1).product()
    }

    pub fn index(&self, spin: usize, occupation: &[usize]) -> usize {
        debug_assert_eq!(occupation.len(), self.modes);
        let mut idx = 0;
        for (n, c) in occupation.iter().zip(&self.per_mode_cutoff) {
            debug_assert!(n <= c);
            idx = idx * (c + 1) + n;
        }
        spin * self.fock_dim() + idx
    }

    pub fn decompose(&self, index: usize) -> (usize, Vec<usize>) {
        let fock = self.fock_dim();
        let spin = index / fock;
        let mut rest = index % fock;
        let mut occ = vec![0; self.modes];
        for j in (0..self.modes).rev() {
            let m = self.per_mode_cutoff[j] + 1;
            occ[j] = rest % m;
            rest /= m;
        }
        (spin, occ)
    }

    /// `Σ_j n_j` for every oscillator index of a spin block.
    fn total_quanta(&self) -> Vec<usize> {
        (0..self.fock_dim()).map(|i| self.decompose(i).1.iter().sum()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    pub basis: BasisDescriptor,
    pub matrix: SymMatrix,
}

impl TruncatedOperator {
    pub fn new(basis: BasisDescriptor, matrix: SymMatrix) -> Result<Self> {
        if matrix.dim() != basis.dim() {
            return Err(Error::Spec(format!("matrix dimension {} does not match basis dimension {}", matrix.dim(), basis.dim())));
        }
        Ok(TruncatedOperator { basis, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `p₂ I₂ + α x σ_x + ε diag(γ₁, γ₂)`
    QR,
    /// `QR` with `γ₁ = -γ₂ = Δ`, minus `½ I`.
    QRabi,
    /// `P₀ ⊗ I₂ + ε [[β₁, β₂ D], [β₂ Dᵀ, β₁]]`, `D` the displacement matrix.
    ABFrame,
    /// Chain coupling `k ↔ k+1`.
    Xi,
    /// Every level coupled to the top level.
    Lambda,
    /// The bottom level coupled to every other level.
    Vee,
}

impl Family {
    pub fn is_n_level(self) -> bool {
        matches!(self, Family::Xi | Family::Lambda | Family::Vee)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::QR => "qr",
            Family::QRabi => "qrabi",
            Family::ABFrame => "abframe",
            Family::Xi => "xi",
            Family::Lambda => "lambda",
            Family::Vee => "vee",
        }
    }

    /// 0-based spin pair coupled through mode `k` (1-based) in an N-level
    /// family with `spin_dim` levels.
    pub fn coupled_pair(self, k: usize, spin_dim: usize) -> (usize, usize) {
        match self {
            Family::Lambda => (k - 1, spin_dim - 1),
            Family::Vee => (0, k),
            _ => (k - 1, k),
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "qr" => Family::QR,
            "qrabi" => Family::QRabi,
            "abframe" | "ab-frame" | "ab" => Family::ABFrame,
            "xi" => Family::Xi,
            "lambda" => Family::Lambda,
            "vee" | "v" => Family::Vee,
            other => return Err(Error::Spec(format!("unknown model family '{other}'"))),
        })
    }
}

/// A model Hamiltonian together with its truncation.
///
/// * `QR`, `ABFrame`: `alpha = [α]`, `gamma = [γ₁, γ₂]`.
/// * `QRabi`: `alpha = [α]`, `gamma = [Δ]`.
/// * `Xi`, `Lambda`, `Vee`: `alpha = [α_1 … α_n]`, `gamma = [γ_1 … γ_n]`
///   with `n = N - 1` modes; `eps` is not used by these families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eps: f64,
    pub cutoffs: Vec<usize>,
}

/// Largest cutoff for the AB-frame operator: its off-diagonal block needs
/// overlaps up to `N + k = 2·cutoff`.
pub const AB_FRAME_MAX_CUTOFF: usize = MAX_COMBINED_DEGREE / 2;

impl ModelSpec {
    pub fn qr(alpha: f64, gamma1: f64, gamma2: f64, eps: f64, cutoff: usize) -> Self {
        ModelSpec { family: Family::QR, alpha: vec![alpha], gamma: vec![gamma1, gamma2], eps, cutoffs: vec![cutoff] }
    }

    pub fn qrabi(alpha: f64, delta: f64, eps: f64, cutoff: usize) -> Self {
        ModelSpec { family: Family::QRabi, alpha: vec![alpha], gamma: vec![delta], eps, cutoffs: vec![cutoff] }
    }

    pub fn ab_frame(alpha: f64, gamma1: f64, gamma2: f64, eps: f64, cutoff: usize) -> Self {
        ModelSpec { family: Family::ABFrame, alpha: vec![alpha], gamma: vec![gamma1, gamma2], eps, cutoffs: vec![cutoff] }
    }

    /// An N-level model with `alpha.len()` modes, all truncated at `cutoff`.
    pub fn n_level(family: Family, alpha: Vec<f64>, gamma: Vec<f64>, cutoff: usize) -> Self {
        let modes = alpha.len();
        ModelSpec { family, alpha, gamma, eps: 0.0, cutoffs: vec![cutoff; modes] }
    }

    pub fn modes(&self) -> usize {
        if self.family.is_n_level() {
            self.alpha.len()
        } else {
            1
        }
    }

    pub fn spin_dim(&self) -> usize {
        if self.family.is_n_level() {
            self.alpha.len() + 1
        } else {
            2
        }
    }

    pub fn with_cutoffs(&self, cutoffs: Vec<usize>) -> Self {
        ModelSpec { cutoffs, ..self.clone() }
    }

    pub fn min_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().min().unwrap_or(0)
    }

    pub fn basis(&self) -> Result<BasisDescriptor> {
        BasisDescriptor::new(self.spin_dim(), self.cutoffs.clone())
    }

    /// Level energies on the spin diagonal, `(γ₁, γ₂)` for the two-level
    /// families.
    pub fn two_level_gammas(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::QR | Family::ABFrame => Some((self.gamma[0], self.gamma[1])),
            Family::QRabi => Some((self.gamma[0], -self.gamma[0])),
            _ => None,
        }
    }

    /// Structural checks needed before assembly.
    pub fn validate(&self) -> Result<()> {
        let finite = self.alpha.iter().chain(&self.gamma).all(|v| v.is_finite()) && self.eps.is_finite();
        if !finite {
            return Err(Error::Spec("parameters must be finite".into()));
        }
        if self.cutoffs.len() != self.modes() {
            return Err(Error::Spec(format!("{} cutoffs given for {} modes", self.cutoffs.len(), self.modes())));
        }
        let expect = |a: usize, g: usize| -> Result<()> {
            if self.alpha.len() != a || self.gamma.len() != g {
                return Err(Error::Spec(format!(
                    "{} expects {a} coupling(s) and {g} level energ{}, got {} and {}",
                    self.family.name(),
                    if g == 1 { "y" } else { "ies" },
                    self.alpha.len(),
                    self.gamma.len()
                )));
            }
            Ok(())
        };
        match self.family {
            Family::QR | Family::ABFrame => {
                expect(1, 2)?;
                if !(self.gamma[0] > self.gamma[1]) {
                    return Err(Error::Spec(format!("gamma1 = {} must exceed gamma2 = {}", self.gamma[0], self.gamma[1])));
                }
                if self.family == Family::ABFrame && self.cutoffs[0] > AB_FRAME_MAX_CUTOFF {
                    return Err(Error::Spec(format!("abframe cutoff {} exceeds {AB_FRAME_MAX_CUTOFF}", self.cutoffs[0])));
                }
            }
            Family::QRabi => {
                expect(1, 1)?;
                if !(self.gamma[0] > 0.0) {
                    return Err(Error::Spec(format!("Delta = {} must be positive", self.gamma[0])));
                }
            }
            Family::Xi | Family::Lambda | Family::Vee => {
                let n = self.alpha.len();
                if n == 0 {
                    return Err(Error::Spec("N-level models need at least two levels".into()));
                }
                expect(n, n)?;
                if self.gamma.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Spec("level energies must be nondecreasing".into()));
                }
            }
        }
        Ok(())
    }

    /// The nonvanishing-coupling hypothesis of the Weyl asymptotics.
    pub fn validate_weyl_hypotheses(&self) -> Result<()> {
        self.validate()?;
        if let Some(k) = self.alpha.iter().position(|&a| a == 0.0) {
            return Err(Error::Spec(format!("coupling alpha_{} vanishes", k + 1)));
        }
        Ok(())
    }
}

/// Multiplication by `x_mode` (1-based) in the orthonormal oscillator
/// basis: `⟨n+1|x|n⟩ = √((n+1)/2)`, identity on the other factors.
pub fn position_matrix(basis: &BasisDescriptor, mode: usize) -> Result<TruncatedOperator> {
    if mode == 0 || mode > basis.modes {
        return Err(Error::Domain(format!("mode {mode} outside 1..={}", basis.modes)));
    }
    let mut b = SymBuilder::new(basis.dim());
    add_position(&mut b, basis, mode - 1, 1.0, |s, t| s == t);
    TruncatedOperator::new(basis.clone(), b.build())
}

/// Adds `scale · x_j ⊗ (spin coupling)` for every pair of basis states
/// `(s, s')` accepted by `spins`, i.e. the entries
/// `(s, n) ↔ (s', n + e_j)` and `(s', n) ↔ (s, n + e_j)`.
fn add_position(
    b: &mut SymBuilder,
    basis: &BasisDescriptor,
    j: usize,
    scale: f64,
    spins: impl Fn(usize, usize) -> bool,
) {
    let fock = basis.fock_dim();
    let stride = basis.stride(j);
    let cut = basis.per_mode_cutoff[j];
    for s in 0..basis.spin_dim {
        for t in 0..basis.spin_dim {
            if !spins(s, t) {
                continue;
            }
            for i in 0..fock {
                let n = (i / stride) % (cut + 1);
                if n < cut {
                    let v = scale * ((n + 1) as f64 / 2.0).sqrt();
                    let row = s * fock + i;
                    let col = t * fock + i + stride;
                    // For s != t the (t, n)-(s, n+1) entry comes from the
                    // (t, s) visit.
                    b.add_pair(row, col, v);
                }
            }
        }
    }
}

/// `Σ_j (n_j + ½)` on the diagonal, for every spin block.
pub fn harmonic_matrix(basis: &BasisDescriptor) -> TruncatedOperator {
    let mut b = SymBuilder::new(basis.dim());
    add_harmonic(&mut b, basis);
    TruncatedOperator { basis: basis.clone(), matrix: b.build() }
}

fn harmonic_energies(basis: &BasisDescriptor) -> Vec<f64> {
    let half = 0.5 * basis.modes as f64;
    basis.total_quanta().into_iter().map(|q| q as f64 + half).collect()
}

fn add_harmonic(b: &mut SymBuilder, basis: &BasisDescriptor) {
    let fock = basis.fock_dim();
    let energies = harmonic_energies(basis);
    for s in 0..basis.spin_dim {
        for (i, &e) in energies.iter().enumerate() {
            b.add_diag(s * fock + i, e);
        }
    }
}

/// Assembles the truncated matrix of `spec`.
pub fn build(spec: &ModelSpec) -> Result<TruncatedOperator> {
    spec.validate()?;
    let basis = spec.basis()?;
    let fock = basis.fock_dim();
    let dim = basis.dim();
    let mut b = SymBuilder::new(dim);
    match spec.family {
        Family::QR | Family::QRabi => {
            let (g1, g2) = spec.two_level_gammas().unwrap();
            let shift = if spec.family == Family::QRabi { -0.5 } else { 0.0 };
            let energies = harmonic_energies(&basis);
            for (i, &e) in energies.iter().enumerate() {
                b.add_diag(i, e + spec.eps * g1 + shift);
                b.add_diag(fock + i, e + spec.eps * g2 + shift);
            }
            add_position(&mut b, &basis, 0, spec.alpha[0], |s, t| s != t);
        }
        Family::ABFrame => {
            let (g1, g2) = spec.two_level_gammas().unwrap();
            let beta1 = 0.5 * (g1 + g2);
            let beta2 = 0.5 * (g1 - g2);
            let energies = harmonic_energies(&basis);
            for (i, &e) in energies.iter().enumerate() {
                b.add_diag(i, e + spec.eps * beta1);
                b.add_diag(fock + i, e + spec.eps * beta1);
            }
            let d = displacement_matrix(spec.cutoffs[0], spec.alpha[0])?;
            for n in 0..fock {
                for k in 0..fock {
                    b.add_pair(n, fock + k, spec.eps * beta2 * d[(n, k)]);
                }
            }
        }
        Family::Xi | Family::Lambda | Family::Vee => {
            add_harmonic(&mut b, &basis);
            for k in 1..=basis.modes {
                let (lo, hi) = spec.family.coupled_pair(k, basis.spin_dim);
                add_position(&mut b, &basis, k - 1, spec.alpha[k - 1], |s, t| (s, t) == (lo, hi) || (s, t) == (hi, lo));
            }
            for (k, &g) in spec.gamma.iter().enumerate() {
                for i in 0..fock {
                    b.add_diag((k + 1) * fock + i, g);
                }
            }
        }
    }
    TruncatedOperator::new(basis, b.build())
}

/// Diagonal of `Π = σ_z (-1)^{a†a}`: `+(-1)^n` on the upper spin block,
/// `-(-1)^n` on the lower one.
pub fn parity_labels(basis: &BasisDescriptor) -> Result<Vec<i8>> {
    if basis.spin_dim != 2 || basis.modes != 1 {
        return Err(Error::Spec("parity is defined for the two-level single-mode basis only".into()));
    }
    let fock = basis.fock_dim();
    Ok((0..basis.dim())
        .map(|i| {
            let (spin, n) = (i / fock, i % fock);
            let even = n % 2 == 0;
            if (spin == 0) == even {
                1
            } else {
                -1
            }
        })
        .collect())
}

pub fn parity_matrix(basis: &BasisDescriptor) -> Result<TruncatedOperator> {
    let labels = parity_labels(basis)?;
    let mut b = SymBuilder::new(basis.dim());
    for (i, &p) in labels.iter().enumerate() {
        b.add_diag(i, p as f64);
    }
    TruncatedOperator::new(basis.clone(), b.build())
}

/// Largest entry of `|ΠH - HΠ|` for a diagonal `Π`.
pub fn parity_commutator_max(op: &TruncatedOperator) -> Result<f64> {
    let labels = parity_labels(&op.basis)?;
    let mut worst: f64 = 0.0;
    for i in 0..op.dim() {
        for (j, v) in op.matrix.row(i) {
            let c = (labels[i] as f64) * v - v * (labels[j] as f64);
            worst = worst.max(c.abs());
        }
    }
    Ok(worst)
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    rows: usize,
    cols: usize,
    basis: BasisDescriptor,
}

const DUMP_FORMAT: &str = "f64-le-row-major";

/// Writes a one-line JSON header followed by the dense matrix as
/// little-endian `f64` in row-major order.
pub fn write_dump(op: &TruncatedOperator, mut out: impl Write) -> std::io::Result<()> {
    let n = op.dim();
    let header = DumpHeader { format: DUMP_FORMAT.into(), rows: n, cols: n, basis: op.basis.clone() };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut row = vec![0.0; n];
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (j, v) in op.matrix.row(i) {
            row[j] = v;
        }
        for v in &row {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dump(mut input: impl Read) -> Result<TruncatedOperator> {
    let io = |e: std::io::Error| Error::Spec(format!("matrix dump: {e}"));
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(io)?;
    let split = bytes.iter().position(|&c| c == b'\n').ok_or_else(|| Error::Spec("matrix dump: missing header".into()))?;
    let header: DumpHeader =
        serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Spec(format!("matrix dump header: {e}")))?;
    if header.format != DUMP_FORMAT || header.rows != header.cols {
        return Err(Error::Spec("matrix dump: unsupported layout".into()));
    }
    let body = &bytes[split + 1..];
    let n = header.rows;
    if body.len() != n * n * 8 {
        return Err(Error::Spec(format!("matrix dump: expected {} bytes of data, found {}", n * n * 8, body.len())));
    }
    let dense = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let o = (i * n + j) * 8;
        f64::from_le_bytes(body[o..o + 8].try_into().unwrap())
    });
    TruncatedOperator::new(header.basis, SymMatrix::from_dense(&dense))
}
