//! Shared fixtures for the criterion benchmarks.

use udw_core::{DetectorPair, ProcessParams};

/// The reference decay: `m = 1`, `M = 4`, `P = 3`.
pub fn reference_process() -> ProcessParams {
    ProcessParams::new(1.0, 4.0, 3.0)
}

/// Gaps `Δ₁ = 2`, `Δ₂ = 3` at the given geometry.
pub fn reference_detectors(r: f64, alpha: f64) -> DetectorPair {
    DetectorPair::new(2.0, 3.0, r, alpha)
}
