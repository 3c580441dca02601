//! Models shared by the benchmarks.

use qrm_core::{Family, ModelSpec};

/// Single-mode QR model, dimension `2(cutoff + 1)`.
pub fn qr_model(cutoff: usize) -> ModelSpec {
    ModelSpec::qr(1.0, 1.0, -1.0, 0.05, cutoff)
}

/// Three-mode chain with equal couplings and cutoff `c` per mode.
pub fn xi_model(c: usize) -> ModelSpec {
    ModelSpec::n_level(Family::Xi, vec![1.0, 0.8, 0.6], vec![0.0, 0.5, 1.0], c)
}
