//! Gaussian special functions shared by the analytic solvers.
//!
//! Everything here is a pure scalar function. Tail quantities are evaluated
//! in forms that stay accurate where naive expressions underflow or cancel.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1 / sqrt(2 pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Depth of the backward continued-fraction evaluation used for u >= `CF_SWITCH`.
const CF_TERMS: usize = 100;
const CF_SWITCH: f64 = 3.0;

/// Standard normal density.
#[inline]
pub fn gauss_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Upper tail of the standard normal, `Q(z) = P(Z > z)`.
///
/// Evaluated as `erfc(z / sqrt 2) / 2`, which keeps full relative accuracy in
/// the right tail instead of forming `1 - Phi(z)`.
#[inline]
pub fn q_function(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Tail excess `phi(u) - u Q(u)`, i.e. `E[(Z - u)_+]` for a standard normal Z.
///
/// The difference cancels badly for large `u`; there we use
/// `phi(u) K / (u + K)` with `K = 1/(u + 2/(u + 3/(u + ...)))`, the tail of the
/// Laplace continued fraction for the Mills ratio.
pub fn tail_excess(u: f64) -> f64 {
    if u < CF_SWITCH {
        return gauss_pdf(u) - u * q_function(u);
    }
    let mut t = 0.0;
    for k in (1..=CF_TERMS).rev() {
        t = k as f64 / (u + t);
    }
    gauss_pdf(u) * t / (u + t)
}

/// The reduced free-energy kernel `-(|a| - 1)^2 / (2 b)` for `|a| > 1`, else 0.
pub fn epsilon(a: f64, b: f64) -> Result<f64> {
    if b.is_nan() || b <= 0.0 || b.is_infinite() {
        return Err(Error::Domain(format!("epsilon needs b > 0, got {b}")));
    }
    let excess = a.abs() - 1.0;
    if excess > 0.0 {
        Ok(-excess * excess / (2.0 * b))
    } else {
        Ok(0.0)
    }
}

/// `sqrt(2 / pi)`, handy for the `2 phi(u)` terms.
#[inline]
pub fn two_pdf(z: f64) -> f64 {
    (2.0 / PI).sqrt() * (-0.5 * z * z).exp()
}
