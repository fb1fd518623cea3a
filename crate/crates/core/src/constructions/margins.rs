//! Quantitative stability margins.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// `δ = (1 − η^{1/n}) / (2‖A⁻¹‖)` with `A⁻¹` the inverse on the image
/// `A(ℝⁿ)`, Euclidean, so `‖A⁻¹‖ = 1/σ_min`.
///
/// A continuous `g` within `δr` of `x ↦ Ax` on a ball of radius `r` covers
/// the image ball shrunk by `η^{1/n}`.
pub fn lsc_margin(a: &Matrix, eta: f64) -> Result<f64> {
    let n = a.ncols();
    if n == 0 || n > a.nrows() {
        return Err(Error::precondition(format!("need 1 ≤ n ≤ m, got {}×{}", a.nrows(), n)));
    }
    let floor = 0.5f64.powi(n as i32);
    if !(eta > floor && eta < 1.0) {
        return Err(Error::precondition(format!("η = {eta} outside ({floor}, 1)")));
    }
    if !linalg::is_full_rank(a) {
        return Err(Error::DegenerateMap);
    }
    let sigma_min = *linalg::singular_values(a).last().expect("n ≥ 1");
    Ok((1.0 - eta.powf(1.0 / n as f64)) * sigma_min / 2.0)
}

/// `ε = δ/(K·N)`: if `ψ ≤ K` a.e. and the mean of `ψ` is at least `K(1 − ε)`,
/// then `ψ ≥ K − δ` on all but a `1/N` fraction of the space.
pub fn balls_epsilon(k: f64, delta: f64, n: u64) -> Result<f64> {
    if !(k > 0.0 && delta > 0.0 && n > 0) || !k.is_finite() || !delta.is_finite() {
        return Err(Error::precondition("K, δ and N must be positive"));
    }
    Ok(delta / (k * n as f64))
}
