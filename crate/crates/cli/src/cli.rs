use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

/// Spectral toolkit for the quantum Rabi model and its N-level
/// generalizations.
///
/// Every parameter can also be set in a flat TOML file passed with
/// `--config`, keyed by its long flag name; flags win.
#[derive(Parser, Debug)]
#[command(name = "qrm", version, about, allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat TOML file with parameter defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Displaced Hermite overlap (T₊φ_N, T₋φ_k).
    Overlap(OverlapArgs),
    /// Zeros of the Laguerre polynomial L_degree.
    LaguerreZeros(LaguerreArgs),
    /// Zero-avoidance sequence (k_j, δ_j) around x0.
    AvoidSeq(AvoidArgs),
    /// Leading eigenvalues with truncation-convergence control.
    Spectrum(SpectrumArgs),
    /// First-order splitting of the level N + 1/2.
    Perturb(PerturbArgs),
    /// Second-order form, quasimodes and their residuals at a degenerate level.
    Quasimode(QuasimodeArgs),
    /// Interval counts of shifted eigenvalues and the three verdicts.
    Braak(BraakArgs),
    /// Counting function against the two-term Weyl prediction.
    Weyl(WeylArgs),
    /// Minimum eigenvalue gap of the perturbed semiprincipal symbol.
    SmgesCheck(SmgesArgs),
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// qr | qrabi | abframe | xi | lambda | vee
    #[arg(long)]
    pub family: Option<String>,
    /// Couplings, comma-separated (one per mode).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    /// Level energies: γ₁,γ₂ (qr, abframe), Δ (qrabi), γ_1..γ_n (N-level).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Per-mode cutoffs; a single value applies to every mode.
    #[arg(long, value_delimiter = ',')]
    pub cutoff: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct OverlapArgs {
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// closed_form | quadrature
    #[arg(long)]
    pub method: Option<String>,
    /// Gauss-Hermite nodes for the quadrature route.
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct LaguerreArgs {
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AvoidArgs {
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long)]
    pub kcap: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of leading eigenvalues that must converge.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Diagonalize the parity sectors separately (qr, qrabi).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub parity: Option<bool>,
}

#[derive(Args, Debug)]
pub struct RabiArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// γ₁,γ₂
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub rabi: RabiArgs,
    /// Also compare with Richardson-extrapolated eigenvalue slopes.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check: Option<bool>,
    /// Step of the finite differences.
    #[arg(long)]
    pub h: Option<f64>,
    /// AB-frame cutoff of the finite-difference check.
    #[arg(long)]
    pub cutoff: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QuasimodeArgs {
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub rabi: RabiArgs,
    /// Spectral-sum cutoff.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// ε values for the residuals.
    #[arg(long = "eps-grid", value_delimiter = ',')]
    pub eps_grid: Option<Vec<f64>>,
    #[arg(long = "residual-cutoff")]
    pub residual_cutoff: Option<usize>,
    /// Proceed even if the first-order splitting does not vanish.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub force: Option<bool>,
    /// Include the coefficient vectors u⁽¹⁾, u⁽²⁾ in the JSON output.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub vectors: Option<bool>,
}

#[derive(Args, Debug)]
pub struct BraakArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Intervals [N, N+1) for N = 0..=nmax.
    #[arg(long)]
    pub nmax: Option<i64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Added to every eigenvalue (default α²/2).
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<f64>,
}

#[derive(Args, Debug)]
pub struct WeylArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Rows with λ above this fraction of the smallest cutoff are flagged.
    #[arg(long)]
    pub reliability: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sphere samples (n ≥ 3).
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SmgesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// seeded | grid
    #[arg(long)]
    pub mode: Option<String>,
}
