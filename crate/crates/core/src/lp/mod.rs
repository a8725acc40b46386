//! Weighted l1 minimisation as a standard-form linear program.
//!
//! `min sum_i w_i |x_i|  s.t.  A x = y` becomes
//! `min w^T (x+ + x-)  s.t.  [A, -A] [x+; x-] = y,  x+, x- >= 0`, solved by the
//! revised simplex in [`simplex`]. Basic optimal solutions are vertices, so at
//! most `M` components of the recovered `x` are nonzero.

mod lu;
pub mod simplex;

use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;

pub use simplex::SimplexOptions;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows} x {cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("matrix entries must be finite".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The leading `m` rows.
    pub fn top_rows(&self, m: usize) -> DenseMatrix {
        let m = m.min(self.rows);
        DenseMatrix {
            rows: m,
            cols: self.cols,
            data: self.data[..m * self.cols].to_vec(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// `min objective^T z  s.t.  eq_matrix z = rhs, z >= 0`.
///
/// `fixed_zero` records source components that were removed before the
/// split-variable columns were built; it does not affect the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub fixed_zero: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    /// LP variables from [`lp_solve`]; the recombined `x+ - x-` (one entry per
    /// source component) from [`wl1_minimize`].
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: LpStatus,
    pub iterations: usize,
    /// Equality-constraint duals of the final basis.
    pub duals: Vec<f64>,
    /// `rhs^T duals`; matches `objective_value` at optimality.
    pub dual_objective: f64,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, eq_matrix: DenseMatrix, rhs: Vec<f64>) -> Result<Self> {
        if objective.len() != eq_matrix.cols() {
            return Err(Error::Dimension(format!(
                "objective has {} entries for {} columns",
                objective.len(),
                eq_matrix.cols()
            )));
        }
        if rhs.len() != eq_matrix.rows() {
            return Err(Error::Dimension(format!(
                "rhs has {} entries for {} rows",
                rhs.len(),
                eq_matrix.rows()
            )));
        }
        if objective.iter().chain(&rhs).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("objective and rhs must be finite".into()));
        }
        Ok(LpProblem {
            objective,
            eq_matrix,
            rhs,
            fixed_zero: Vec::new(),
        })
    }

    /// Split-variable LP for `min sum w_i |x_i|  s.t.  A x = y` with the
    /// `fixed_zero` columns removed. Columns are `[A_free, -A_free]`.
    pub fn weighted_l1(
        a: &DenseMatrix,
        y: &[f64],
        weights: &[f64],
        fixed_zero: &[usize],
    ) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if y.len() != m {
            return Err(Error::Dimension(format!(
                "y has {} entries for {m} rows",
                y.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::Dimension(format!(
                "{} weights for {n} columns",
                weights.len()
            )));
        }
        if let Some(&bad) = fixed_zero.iter().find(|&&j| j >= n) {
            return Err(Error::Dimension(format!("fixed-zero index {bad} >= {n}")));
        }
        let mut fixed = fixed_zero.to_vec();
        fixed.sort_unstable();
        fixed.dedup();
        let free = free_columns(n, &fixed);
        let f = free.len();
        let mut data = Vec::with_capacity(m * 2 * f);
        for i in 0..m {
            let row = a.row(i);
            data.extend(free.iter().map(|&j| row[j]));
            data.extend(free.iter().map(|&j| -row[j]));
        }
        let objective: Vec<f64> = free.iter().chain(&free).map(|&j| weights[j]).collect();
        let mut problem = LpProblem::new(objective, DenseMatrix::new(m, 2 * f, data)?, y.to_vec())?;
        problem.fixed_zero = fixed;
        Ok(problem)
    }

    /// Plain-text dump: `M N`, the objective row, then one row per
    /// constraint holding its `N` coefficients followed by its right-hand
    /// side. Numbers carry 17 significant digits.
    pub fn to_text(&self) -> String {
        let (m, n) = (self.eq_matrix.rows(), self.eq_matrix.cols());
        let mut out = format!("{m} {n}\n");
        push_row(&mut out, self.objective.iter());
        for i in 0..m {
            push_row(
                &mut out,
                self.eq_matrix
                    .row(i)
                    .iter()
                    .chain(std::iter::once(&self.rhs[i])),
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty LP dump".into()))?;
        let dims = parse_floats(header)?;
        let [m, n] = dims[..] else {
            return Err(Error::Parse(format!("bad header {header:?}")));
        };
        let (m, n) = (m as usize, n as usize);
        let objective = parse_floats(lines.next().unwrap_or(""))?;
        let mut data = Vec::with_capacity(m * n);
        let mut rhs = Vec::with_capacity(m);
        for i in 0..m {
            let row = parse_floats(
                lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing row {i}")))?,
            )?;
            if row.len() != n + 1 {
                return Err(Error::Parse(format!(
                    "row {i} has {} numbers, expected {}",
                    row.len(),
                    n + 1
                )));
            }
            data.extend_from_slice(&row[..n]);
            rhs.push(row[n]);
        }
        LpProblem::new(objective, DenseMatrix::new(m, n, data)?, rhs)
    }
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        })
        .collect()
}

fn free_columns(n: usize, fixed_sorted: &[usize]) -> Vec<usize> {
    (0..n)
        .filter(|j| fixed_sorted.binary_search(j).is_err())
        .collect()
}

/// Solves a standard-form problem with default simplex settings.
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution> {
    simplex::solve(problem, &SimplexOptions::default())
}

pub fn lp_solve_with(problem: &LpProblem, options: &SimplexOptions) -> Result<LpSolution> {
    simplex::solve(problem, options)
}

/// Minimises `sum_i w_i |x_i|` subject to `A x = y`, with the components in
/// `fixed_zero` held at zero. The returned `x` has one entry per column of `a`.
pub fn wl1_minimize(
    a: &DenseMatrix,
    y: &[f64],
    weights: &[f64],
    fixed_zero: &[usize],
) -> Result<LpSolution> {
    wl1_minimize_with(a, y, weights, fixed_zero, &SimplexOptions::default())
}

pub fn wl1_minimize_with(
    a: &DenseMatrix,
    y: &[f64],
    weights: &[f64],
    fixed_zero: &[usize],
    options: &SimplexOptions,
) -> Result<LpSolution> {
    let problem = LpProblem::weighted_l1(a, y, weights, fixed_zero)?;
    let free = free_columns(a.cols(), &problem.fixed_zero);
    let f = free.len();
    let sol = match crash_basis(a, y, weights, &free) {
        Some(basis) => simplex::solve_from_basis(&problem, options, &basis)?,
        None => simplex::solve(&problem, options)?,
    };
    let mut x = vec![0.0; a.cols()];
    for (k, &j) in free.iter().enumerate() {
        x[j] = sol.x[k] - sol.x[f + k];
    }
    Ok(LpSolution { x, ..sol })
}

/// A primal feasible starting basis for the split-variable LP: `M`
/// independent columns of `A` picked greedily in order of increasing weight,
/// each entering as `x+` or `x-` according to the sign of `B^-1 y`. `None`
/// when `A` restricted to `free` has rank below `M`.
fn crash_basis(a: &DenseMatrix, y: &[f64], weights: &[f64], free: &[usize]) -> Option<Vec<usize>> {
    let m = a.rows();
    if m == 0 || free.len() < m {
        return None;
    }
    let mut order: Vec<usize> = (0..free.len()).collect();
    order.sort_by(|&p, &q| weights[free[p]].total_cmp(&weights[free[q]]));

    // Greedy selection by Gram-Schmidt against the columns taken so far.
    let mut picked = Vec::with_capacity(m);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in order {
        let col: Vec<f64> = (0..m).map(|i| a.get(i, free[k])).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = col;
        for _ in 0..2 {
            for q in &ortho {
                let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= d * qi);
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn > 1e-8 * norm {
            r.iter_mut().for_each(|v| *v /= rn);
            ortho.push(r);
            picked.push(k);
            if picked.len() == m {
                break;
            }
        }
    }
    if picked.len() < m {
        return None;
    }
    let mut bmat = vec![0.0; m * m];
    for (c, &k) in picked.iter().enumerate() {
        for i in 0..m {
            bmat[i * m + c] = a.get(i, free[k]);
        }
    }
    let lu = lu::LuFactor::new(m, bmat).ok()?;
    let mut x = y.to_vec();
    lu.solve(&mut x, &mut Vec::with_capacity(m));
    Some(
        picked
            .iter()
            .zip(&x)
            .map(|(&k, &v)| if v < 0.0 { k + free.len() } else { k })
            .collect(),
    )
}
