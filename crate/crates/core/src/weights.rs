//! Optimal weight assignment.
//!
//! With the Lagrange multiplier fixed at one, the stationarity conditions
//! decouple: each block's rescaled weight `u` solves
//! `u e^{u^2/2} (rho/(1-rho) + 2 Q(u)) = 2/sqrt(2 pi)` on its own. The minimal
//! threshold is then the fraction-weighted mean of the per-density curve
//! `alpha(rho) = rho + (1 - rho) 2 Q(u(rho))`.

use crate::error::{Error, Result};
use crate::profile::{DensityProfile, Weight, WeightProfile};
use crate::roots::{brent, Tolerance};
use crate::special::{q_function, tail_excess, INV_SQRT_2PI};
use serde::Serialize;

const U_LO: f64 = 1e-10;
const U_HI: f64 = 40.0;
const U_FLOOR: f64 = 1e-300;

/// Optimal rescaled weights for a profile together with the thresholds they
/// achieve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalWeightSolution {
    /// `u_k` per block; `Excluded` for rho = 0, zero for rho = 1.
    pub u_values: Vec<Weight>,
    /// `alpha(rho_k)` per block.
    pub alpha_per_block: Vec<f64>,
    /// Fraction-weighted mean of `alpha_per_block`.
    pub alpha_c_min: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho must lie in [0, 1], got {rho}")))
    }
}

/// Optimality condition multiplied through by `(1 - rho) phi(u) sqrt(2 pi)`:
/// `rho u - 2 (1 - rho) (phi(u) - u Q(u))`. Strictly increasing in `u`.
pub fn optimality_residual(rho: f64, u: f64) -> f64 {
    rho * u - 2.0 * (1.0 - rho) * tail_excess(u)
}

/// Rescaled optimal weight for a component of density `rho`.
pub fn solve_optimal_u(rho: f64) -> Result<Weight> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(Weight::Excluded);
    }
    if rho == 1.0 {
        return Ok(Weight::Finite(0.0));
    }
    let h = |s: f64| optimality_residual(rho, s.exp());
    let mut lo = U_LO;
    while h(lo.ln()) >= 0.0 {
        lo *= 1e-10;
        if lo < U_FLOOR {
            return Err(Error::NoRoot(format!(
                "optimal u for rho = {rho} is below {U_FLOOR:e}"
            )));
        }
    }
    if h(U_HI.ln()) <= 0.0 {
        return Err(Error::NoRoot(format!(
            "optimal u for rho = {rho} exceeds {U_HI}"
        )));
    }
    let tol = Tolerance {
        ftol: 0.0,
        xtol: 1e-15,
        max_iter: 500,
    };
    let s = brent(h, lo.ln(), U_HI.ln(), tol)?;
    Ok(Weight::Finite(s.exp()))
}

/// Threshold `alpha(rho)` of an optimally weighted component of density `rho`,
/// which is also the unweighted threshold of a homogeneous source of that
/// density.
pub fn alpha_of_rho(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(alpha_with_u(rho, solve_optimal_u(rho)?))
}

fn alpha_with_u(rho: f64, u: Weight) -> f64 {
    match u {
        Weight::Excluded => rho,
        Weight::Finite(u) => rho + (1.0 - rho) * 2.0 * q_function(u),
    }
}

/// Optimal weights `w_k = u_k(rho_k)` and the minimal threshold they reach.
pub fn optimal_weights(profile: &DensityProfile) -> Result<(WeightProfile, OptimalWeightSolution)> {
    let mut u_values = Vec::with_capacity(profile.len());
    let mut alpha_per_block = Vec::with_capacity(profile.len());
    for b in profile.blocks() {
        let u = solve_optimal_u(b.rho)?;
        alpha_per_block.push(alpha_with_u(b.rho, u));
        u_values.push(u);
    }
    let alpha_c_min = profile
        .blocks()
        .iter()
        .zip(&alpha_per_block)
        .map(|(b, a)| b.fraction * a)
        .sum();
    let weights = WeightProfile::new(u_values.clone())?;
    Ok((
        weights,
        OptimalWeightSolution {
            u_values,
            alpha_per_block,
            alpha_c_min,
        },
    ))
}

/// Rescales finite weights so that their plain mean over blocks is one
/// (for two blocks, `w_+ + w_- = 2`). Weights that are all zero or excluded
/// are returned unchanged.
pub fn normalize_unit_mean(weights: &WeightProfile) -> Result<WeightProfile> {
    let finite: Vec<f64> = weights
        .weights()
        .iter()
        .filter_map(|w| w.finite())
        .collect();
    let mean = finite.iter().sum::<f64>() / finite.len().max(1) as f64;
    if mean > 0.0 {
        weights.scaled(1.0 / mean)
    } else {
        Ok(weights.clone())
    }
}

/// Weight asymmetry `dw` of a two-block weighting written as `w_b = c (1 - b dw)`,
/// with block +1 first.
pub fn two_block_delta_w(weights: &WeightProfile) -> Result<f64> {
    match weights.weights() {
        [Weight::Finite(plus), Weight::Finite(minus)] if plus + minus > 0.0 => {
            Ok((minus - plus) / (minus + plus))
        }
        _ => Err(Error::Domain(
            "delta_w needs exactly two finite weights with a positive sum".into(),
        )),
    }
}

/// Large-`u` approximation of the optimal weight: the `u` solving
/// `rho/(1-rho) = sqrt(2/pi) e^{-u^2/2} / u^3`.
///
/// Only accurate when the resulting `u` is large (sparse components); at
/// moderate densities it departs from [`solve_optimal_u`] by a wide margin.
pub fn asymptotic_u(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    let log_odds = rho.ln() - (-rho).ln_1p();
    let log_two_pdf0 = (2.0 * INV_SQRT_2PI).ln();
    // Log of the right-hand side minus the log odds; decreasing in u.
    let f = |s: f64| {
        let u = s.exp();
        log_two_pdf0 - 0.5 * u * u - 3.0 * s - log_odds
    };
    let (a, b) = (U_LO.ln(), U_HI.ln());
    if f(a) <= 0.0 {
        return Err(Error::NoRoot(format!(
            "rho/(1-rho) = {:e} exceeds the asymptotic right-hand side on u >= {U_LO:e}",
            log_odds.exp()
        )));
    }
    if f(b) >= 0.0 {
        return Err(Error::NoRoot(format!(
            "asymptotic u for rho = {rho} exceeds {U_HI}"
        )));
    }
    let tol = Tolerance {
        ftol: 0.0,
        xtol: 1e-15,
        max_iter: 500,
    };
    Ok(brent(f, a, b, tol)?.exp())
}
