//! Perfect-reconstruction threshold of weighted l1 minimisation.
//!
//! At the perfect-reconstruction saddle point every quantity depends on the
//! weights only through the rescaled weights `u_i = w_i / sqrt(q_hat)`. The
//! threshold is the root of `g3 = g2 - g1` in `q_hat`, with `alpha_c = g1` at
//! that root.

use crate::error::{Error, Result};
use crate::profile::{DensityProfile, Weight, WeightProfile};
use crate::roots::{brent, Tolerance};
use crate::special::{gauss_pdf, q_function, tail_excess, two_pdf};
use serde::Serialize;

/// Initial scan range for `q_hat`.
const Q_LO: f64 = 1e-8;
const Q_HI: f64 = 1e8;
/// Each expansion widens the scan by this many decades per side.
const EXPAND_DECADES: i32 = 8;
const MAX_DECADES: i32 = 150;
const SCAN_POINTS_PER_DECADE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValues {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

/// Solved threshold for one profile/weight pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Root of g3. `None` for the closed-form extremal case, where g1 does
    /// not depend on `q_hat`.
    pub q_hat: Option<f64>,
    pub alpha_c: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Whether the fixed point is stable for every alpha in `(alpha_c, 1]`.
    pub stable: bool,
    /// `q_hat` bracket of the reported root.
    pub bracket: Option<(f64, f64)>,
    /// Every sign-change bracket found by the scan.
    pub candidate_brackets: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityMargins {
    /// Multiplier of the `1/m_hat` recursion, `g1 / alpha`.
    pub mu1: f64,
    /// Ratio of the `q_hat` recursion, `alpha g2 / g1^2`; equals one at the
    /// self-consistent `q_hat` for this alpha.
    pub mu2: f64,
    pub stable: bool,
}

/// Evaluates `(g1, g2, g3)` at `q_hat`.
pub fn g_functions(
    profile: &DensityProfile,
    weights: &WeightProfile,
    q_hat: f64,
) -> Result<GValues> {
    check_q_hat(q_hat)?;
    weights.check_against(profile)?;
    Ok(eval_g(profile, weights, q_hat))
}

fn check_q_hat(q_hat: f64) -> Result<()> {
    if q_hat > 0.0 && q_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "q_hat must be positive, got {q_hat}"
        )))
    }
}

fn eval_g(profile: &DensityProfile, weights: &WeightProfile, q_hat: f64) -> GValues {
    let rho_bar = profile.mean_density();
    let inv_sqrt_q = 1.0 / q_hat.sqrt();
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for (block, w) in profile.blocks().iter().zip(weights.weights()) {
        // Excluded blocks have u = infinity: Q(u) = 0 and rho = 0.
        let Weight::Finite(w) = *w else { continue };
        let (rho, f) = (block.rho, block.fraction);
        let u = w * inv_sqrt_q;
        let two_q = 2.0 * q_function(u);
        s1 += f * (1.0 - rho) * two_q;
        s2 +=
            f * (rho * u * u - (1.0 - rho) * u * two_pdf(u) + (1.0 - rho) * (1.0 + u * u) * two_q);
        s3 += f * block_g3(rho, u);
    }
    GValues {
        g1: rho_bar + s1,
        g2: rho_bar + s2,
        g3: s3,
    }
}

/// One block's share of g3, `u (rho u - 2 (1 - rho) (phi(u) - u Q(u)))`.
/// The bracket is the weight optimality residual, so optimal weights zero it.
#[inline]
pub(crate) fn block_g3(rho: f64, u: f64) -> f64 {
    u * (rho * u - 2.0 * (1.0 - rho) * tail_excess(u))
}

/// Solves `g3(q_hat) = 0` and reports `alpha_c = g1(q_hat)`.
///
/// When several roots exist the one with the largest g1 is returned. Profiles
/// whose g1 cannot move off the mean density (no block with `0 < rho < 1`
/// and no sign change) get the closed form `alpha_c = rho_bar`.
pub fn threshold_solve(
    profile: &DensityProfile,
    weights: &WeightProfile,
) -> Result<ThresholdResult> {
    weights.check_against(profile)?;
    let g3_at = |s: f64| eval_g(profile, weights, s.exp()).g3;

    let mut lo_exp = Q_LO.log10().round() as i32;
    let mut hi_exp = Q_HI.log10().round() as i32;
    let brackets = loop {
        let found = scan_sign_changes(&g3_at, lo_exp, hi_exp);
        if !found.is_empty() || (lo_exp <= -MAX_DECADES && hi_exp >= MAX_DECADES) {
            break found;
        }
        lo_exp = (lo_exp - EXPAND_DECADES).max(-MAX_DECADES);
        hi_exp = (hi_exp + EXPAND_DECADES).min(MAX_DECADES);
    };

    if brackets.is_empty() {
        let interior = profile.blocks().iter().any(|b| b.rho > 0.0 && b.rho < 1.0);
        if interior {
            return Err(Error::NoSignChange {
                lo: 10f64.powi(lo_exp),
                hi: 10f64.powi(hi_exp),
            });
        }
        let rho_bar = profile.mean_density();
        return Ok(ThresholdResult {
            q_hat: None,
            alpha_c: rho_bar,
            g1: rho_bar,
            g2: rho_bar,
            g3: 0.0,
            stable: true,
            bracket: None,
            candidate_brackets: Vec::new(),
        });
    }

    let tol = Tolerance {
        ftol: 0.0,
        xtol: 1e-14,
        max_iter: 500,
    };
    let mut best: Option<(f64, GValues, (f64, f64))> = None;
    for &(a, b) in &brackets {
        let s = brent(&g3_at, a, b, tol)?;
        let q = s.exp();
        let g = eval_g(profile, weights, q);
        if best.as_ref().is_none_or(|(_, bg, _)| g.g1 > bg.g1) {
            best = Some((q, g, (a.exp(), b.exp())));
        }
    }
    let (q, g, bracket) = best.expect("at least one bracket");
    let stable = stability_from_g(g, 1.0).stable;
    Ok(ThresholdResult {
        q_hat: Some(q),
        alpha_c: g.g1,
        g1: g.g1,
        g2: g.g2,
        g3: g.g3,
        stable,
        bracket: Some(bracket),
        candidate_brackets: brackets.iter().map(|&(a, b)| (a.exp(), b.exp())).collect(),
    })
}

/// Sign changes of `f(ln q)` on a log grid from `10^lo_exp` to `10^hi_exp`,
/// returned as brackets in `ln q`.
fn scan_sign_changes<F: Fn(f64) -> f64>(f: &F, lo_exp: i32, hi_exp: i32) -> Vec<(f64, f64)> {
    let ln10 = std::f64::consts::LN_10;
    let steps = (hi_exp - lo_exp) * SCAN_POINTS_PER_DECADE;
    let s_at = |k: i32| ln10 * (lo_exp as f64 + k as f64 / SCAN_POINTS_PER_DECADE as f64);
    let mut out = Vec::new();
    let mut prev_s = s_at(0);
    let mut prev = f(prev_s);
    for k in 1..=steps {
        let s = s_at(k);
        let v = f(s);
        // A zero landing on a grid point closes the bracket on its right end;
        // a g3 that vanishes identically yields no bracket at all.
        if prev != 0.0 && (v == 0.0 || prev.signum() != v.signum()) {
            out.push((prev_s, s));
        }
        prev_s = s;
        prev = v;
    }
    out
}

/// Point `(rho_bar, alpha_c)` of the uniform-weight threshold curve at `q_hat`.
///
/// With `u = 1/sqrt(q_hat)` the implicit pair reads
/// `rho_bar / (1 - rho_bar) = 2 (phi(u) - u Q(u)) / u` and
/// `1 / alpha_c = 1 + u (1 - 2 Q(u)) / (2 phi(u))`; both are rearranged so that
/// nothing cancels or overflows at either end of the curve.
pub fn uniform_curve_point(q_hat: f64) -> Result<(f64, f64)> {
    check_q_hat(q_hat)?;
    let u = 1.0 / q_hat.sqrt();
    let excess = 2.0 * tail_excess(u);
    let rho_bar = excess / (u + excess);
    let pdf = gauss_pdf(u);
    let alpha = if pdf > 0.0 {
        let ratio = u * (1.0 - 2.0 * q_function(u)) / pdf;
        2.0 / (2.0 + ratio)
    } else {
        0.0
    };
    Ok((rho_bar, alpha))
}

/// Linearised multipliers of the reduced saddle-point iteration at the
/// perfect-reconstruction fixed point. Stable iff `alpha > g1(q_hat)`.
pub fn stability_margins(
    profile: &DensityProfile,
    weights: &WeightProfile,
    q_hat: f64,
    alpha: f64,
) -> Result<StabilityMargins> {
    check_q_hat(q_hat)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let g = g_functions(profile, weights, q_hat)?;
    Ok(stability_from_g(g, alpha))
}

fn stability_from_g(g: GValues, alpha: f64) -> StabilityMargins {
    let mu1 = g.g1 / alpha;
    let mu2 = alpha * g.g2 / (g.g1 * g.g1);
    StabilityMargins {
        mu1,
        mu2,
        stable: mu1 < 1.0,
    }
}
