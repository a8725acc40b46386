//! Monte Carlo recovery experiments.
//!
//! Each trial draws a Gaussian measurement matrix with `n` nested rows and a
//! Bernoulli-sparse Gaussian source, then bisects for the smallest row count
//! at which weighted l1 minimisation recovers the source. Sweeps average the
//! per-trial thresholds and fits in `1/n` extrapolate them to large systems.

use crate::error::{Error, Result};
use crate::format::{round10, sig10};
use crate::lp::{wl1_minimize, DenseMatrix, LpStatus};
use crate::profile::{DensityProfile, Weight};
use crate::weights::{normalize_unit_mean, optimal_weights};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// How profile blocks map onto component indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockAssignment {
    /// Block `k` occupies `fraction_k n` consecutive indices, in profile order.
    /// Every `fraction_k n` must be an integer.
    #[default]
    Contiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub n: usize,
    pub m_max: usize,
    /// `m_max x n`; the problem at `m` rows uses the first `m`.
    pub a_full: DenseMatrix,
    pub x0: Vec<f64>,
    pub densities: Vec<f64>,
    /// Optimal weights with unit mean over blocks; `Excluded` on zero-density
    /// components.
    pub weights: Vec<Weight>,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn nonzeros(&self) -> usize {
        self.x0.iter().filter(|&&v| v != 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub m_star: usize,
    pub alpha_star: f64,
    pub seed: u64,
    pub weighted: bool,
}

fn block_sizes(
    n: usize,
    profile: &DensityProfile,
    assignment: BlockAssignment,
) -> Result<Vec<usize>> {
    match assignment {
        BlockAssignment::Contiguous => {
            let mut sizes = Vec::with_capacity(profile.len());
            for b in profile.blocks() {
                let exact = b.fraction * n as f64;
                let size = exact.round();
                if (exact - size).abs() > 1e-9 * n as f64 {
                    return Err(Error::Domain(format!(
                        "n = {n} does not split into a block of fraction {}",
                        b.fraction
                    )));
                }
                sizes.push(size as usize);
            }
            if sizes.iter().sum::<usize>() != n {
                return Err(Error::Domain(format!(
                    "block sizes {sizes:?} do not add up to n = {n}"
                )));
            }
            Ok(sizes)
        }
    }
}

/// Draws an instance. The source is drawn first, then the matrix row by row,
/// all from one ChaCha8 stream seeded with `seed`.
pub fn generate_instance(
    n: usize,
    profile: &DensityProfile,
    assignment: BlockAssignment,
    seed: u64,
) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let sizes = block_sizes(n, profile, assignment)?;
    let (block_weights, _) = optimal_weights(profile)?;
    let block_weights = normalize_unit_mean(&block_weights)?;

    let mut densities = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for ((b, &w), &size) in profile
        .blocks()
        .iter()
        .zip(block_weights.weights())
        .zip(&sizes)
    {
        densities.extend(std::iter::repeat_n(b.rho, size));
        weights.extend(std::iter::repeat_n(w, size));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = densities
        .iter()
        .map(|&rho| {
            let on = rng.gen::<f64>() < rho;
            let v: f64 = rng.sample(StandardNormal);
            if on {
                v
            } else {
                0.0
            }
        })
        .collect();
    let data: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    Ok(ProblemInstance {
        n,
        m_max: n,
        a_full: DenseMatrix::new(n, n, data)?,
        x0,
        densities,
        weights,
        seed,
    })
}

fn norm2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Whether the first `m` rows suffice to recover `x0` to relative l2 error
/// `1e-6`. Unweighted recovery uses unit weights everywhere; weighted
/// recovery uses the instance weights and pins excluded components to zero.
pub fn recovery_success(instance: &ProblemInstance, m: usize, weighted: bool) -> Result<bool> {
    if m == 0 || m > instance.m_max {
        return Err(Error::Domain(format!(
            "m = {m} outside 1..={}",
            instance.m_max
        )));
    }
    let a = instance.a_full.top_rows(m);
    let y = a.mul_vec(&instance.x0);
    let (w, fixed): (Vec<f64>, Vec<usize>) = if weighted {
        let fixed = (0..instance.n)
            .filter(|&i| instance.weights[i].is_excluded())
            .collect();
        let w = instance
            .weights
            .iter()
            .map(|w| w.finite().unwrap_or(0.0))
            .collect();
        (w, fixed)
    } else {
        (vec![1.0; instance.n], Vec::new())
    };
    let sol = wl1_minimize(&a, &y, &w, &fixed)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(sol.status));
    }
    let err = norm2(sol.x.iter().zip(&instance.x0).map(|(a, b)| a - b));
    Ok(err <= 1e-6 * norm2(instance.x0.iter().copied()).max(1.0))
}

/// Smallest `m` with successful recovery, by bisection over nested rows.
///
/// Row counts below the number of nonzeros always fail (an optimal vertex has
/// at most `m` nonzeros), so the search starts there. An all-zero source gives
/// `m_star = 1`.
pub fn instance_threshold(instance: &ProblemInstance, weighted: bool) -> Result<TrialRecord> {
    let n = instance.m_max;
    let mut fail = instance.nonzeros().max(1) - 1;
    let mut ok = n;
    let mut ok_checked = false;
    while ok - fail > 1 {
        let mid = fail + (ok - fail) / 2;
        if recovery_success(instance, mid, weighted)? {
            ok = mid;
            ok_checked = true;
        } else {
            fail = mid;
        }
    }
    if !ok_checked && !recovery_success(instance, ok, weighted)? {
        return Err(Error::Trial(format!(
            "seed {}: no recovery even with all {n} rows",
            instance.seed
        )));
    }
    Ok(TrialRecord {
        n: instance.n,
        m_star: ok,
        alpha_star: ok as f64 / instance.n as f64,
        seed: instance.seed,
        weighted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub profile: DensityProfile,
    pub assignment: BlockAssignment,
    pub weighted: bool,
    pub base_seed: u64,
}

/// Aggregate over the successful trials at one size. One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: usize,
    pub trials: usize,
    pub mean_alpha: f64,
    pub stderr: f64,
    pub weighted: bool,
    pub seed: u64,
    #[serde(skip)]
    pub failed: usize,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

/// Runs `config.trials` trials at size `n` with seeds `base_seed ^ trial`.
/// Trials that error are dropped and counted; more than 1% dropped aborts.
pub fn sweep_size(config: &SweepConfig, n: usize) -> Result<SweepPoint> {
    if config.trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let outcomes: Vec<Result<TrialRecord>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let inst =
                generate_instance(n, &config.profile, config.assignment, config.base_seed ^ t)?;
            instance_threshold(&inst, config.weighted)
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            // Bad sizes or profiles are not trial failures.
            Err(e @ Error::Domain(_)) => return Err(e),
            Err(_) => failed += 1,
        }
    }
    if failed * 100 > config.trials || records.is_empty() {
        return Err(Error::TooManyFailures {
            n,
            failed,
            total: config.trials,
        });
    }
    let k = records.len() as f64;
    let mean = records.iter().map(|r| r.alpha_star).sum::<f64>() / k;
    let stderr = if records.len() > 1 {
        let var = records
            .iter()
            .map(|r| (r.alpha_star - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(SweepPoint {
        n,
        trials: records.len(),
        mean_alpha: mean,
        stderr,
        weighted: config.weighted,
        seed: config.base_seed,
        failed,
        records,
    })
}

pub fn threshold_sweep(config: &SweepConfig) -> Result<Vec<SweepPoint>> {
    config
        .sizes
        .iter()
        .map(|&n| sweep_size(config, n))
        .collect()
}

pub const SWEEP_HEADER: &str = "n,trials,mean_alpha,stderr,weighted,seed";

pub fn write_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.n,
            p.trials,
            sig10(p.mean_alpha),
            sig10(p.stderr),
            p.weighted,
            p.seed
        );
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
        return Err(Error::Parse(format!("expected header {SWEEP_HEADER:?}")));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// `alpha(n) = a0 + a1/n + a2/n^2` with standard errors from the fit
/// covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtrapolationFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub se0: f64,
    pub se1: f64,
    pub se2: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl ExtrapolationFit {
    pub fn coefficients(&self) -> [f64; 3] {
        [self.a0, self.a1, self.a2]
    }

    pub fn standard_errors(&self) -> [f64; 3] {
        [self.se0, self.se1, self.se2]
    }

    /// Pretty JSON with every number rounded to 10 significant digits.
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "a0": round10(self.a0),
            "a1": round10(self.a1),
            "a2": round10(self.a2),
            "se0": round10(self.se0),
            "se1": round10(self.se1),
            "se2": round10(self.se2),
            "chi2": round10(self.chi2),
            "dof": self.dof,
        });
        serde_json::to_string_pretty(&v).expect("json values serialize")
    }
}

/// Weighted least squares of `mean` on `(1, 1/n, 1/n^2)` with weights
/// `1/stderr^2`. Points are `(n, mean, stderr)`.
pub fn extrapolate(points: &[(f64, f64, f64)]) -> Result<ExtrapolationFit> {
    if points.len() < 4 {
        return Err(Error::Domain(format!(
            "need at least 4 sizes, got {}",
            points.len()
        )));
    }
    for &(n, mean, se) in points {
        if !(n > 0.0 && n.is_finite() && mean.is_finite()) {
            return Err(Error::Domain(format!("bad point ({n}, {mean})")));
        }
        if !(se > 0.0 && se.is_finite()) {
            return Err(Error::Domain(format!(
                "standard error must be positive, got {se} at n = {n}"
            )));
        }
    }
    // Sorted so that the result does not depend on input order.
    let mut points = points.to_vec();
    points.sort_by(|p, q| p.0.total_cmp(&q.0));
    if points.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::SingularFit("repeated system size".into()));
    }

    let k = points.len();
    let design = DMatrix::from_fn(k, 3, |i, j| {
        let (n, _, se) = points[i];
        n.powi(-(j as i32)) / se
    });
    // Unit column norms keep the 1/n^2 column from dominating the conditioning.
    let scale: Vec<f64> = (0..3).map(|j| design.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(k, 3, |i, j| design[(i, j)] / scale[j]);
    let rhs = DVector::from_iterator(k, points.iter().map(|&(_, mean, se)| mean / se));

    let qr = scaled.clone().qr();
    let r = qr.r();
    let rmax = (0..3).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..3).any(|j| r[(j, j)].abs() <= 1e-12 * rmax) {
        return Err(Error::SingularFit("design matrix is rank deficient".into()));
    }
    let q = qr.q();
    let ls = |b: &DVector<f64>| {
        r.solve_upper_triangular(&(q.transpose() * b))
            .ok_or_else(|| Error::SingularFit("triangular solve failed".into()))
    };
    let mut z = ls(&rhs)?;
    // One refinement step on the residual.
    z += ls(&(&rhs - &scaled * &z))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(3, 3))
        .ok_or_else(|| Error::SingularFit("triangular solve failed".into()))?;
    let cov = &r_inv * r_inv.transpose();

    let coef: Vec<f64> = (0..3).map(|j| z[j] / scale[j]).collect();
    let se: Vec<f64> = (0..3).map(|j| cov[(j, j)].sqrt() / scale[j]).collect();
    let chi2 = points
        .iter()
        .map(|&(n, mean, s)| {
            let fit = coef[0] + coef[1] / n + coef[2] / (n * n);
            ((mean - fit) / s).powi(2)
        })
        .sum();
    Ok(ExtrapolationFit {
        a0: coef[0],
        a1: coef[1],
        a2: coef[2],
        se0: se[0],
        se1: se[1],
        se2: se[2],
        chi2,
        dof: k - 3,
    })
}

pub fn extrapolate_sweep(points: &[SweepPoint]) -> Result<ExtrapolationFit> {
    let triples: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.n as f64, p.mean_alpha, p.stderr))
        .collect();
    extrapolate(&triples)
}
