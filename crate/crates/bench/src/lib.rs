//! Shared fixtures for the criterion benchmarks.

use duffing_core::ScaledParams;

/// The working point used throughout the benchmarks: `(λ, β, η)`.
pub const WORKING_POINT: (f64, f64, f64) = (0.027, 0.12, 0.03);

pub fn working_params(nbar: f64) -> ScaledParams {
    let (lambda, beta, eta) = WORKING_POINT;
    ScaledParams::new(lambda, beta, eta, nbar).expect("valid working point")
}
