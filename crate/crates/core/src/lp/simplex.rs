//! Two-phase revised simplex for `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! The basis is held as a dense LU factorisation plus a product-form eta file
//! that is folded back into a fresh factorisation every `refactor_every`
//! pivots. Pricing is Dantzig's rule; after a run of degenerate pivots the
//! solver switches to Bland's rule until it makes progress again.

use super::lu::{LuFactor, Singular};
use super::{LpProblem, LpSolution, LpStatus};
use crate::error::{Error, Result};

/// Reduced costs above `-OPT_TOL` count as nonnegative.
pub const OPT_TOL: f64 = 1e-9;
/// Smallest admissible pivot element in the ratio test.
pub const PIVOT_TOL: f64 = 1e-10;
/// Steps no longer than this are degenerate.
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Pivot cap; `None` means `50 (rows + cols)`.
    pub max_iterations: Option<usize>,
    /// Eta-file length that triggers refactorisation.
    pub refactor_every: usize,
    /// Degenerate-pivot streak that switches to Bland's rule; `None` means
    /// `3 rows`.
    pub bland_after: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: None,
            refactor_every: 64,
            bland_after: None,
        }
    }
}

struct Eta {
    row: usize,
    col: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Solver<'a> {
    m: usize,
    n: usize,
    /// Structural columns, column-major, rows sign-flipped so `b >= 0`.
    cols: Vec<f64>,
    b: Vec<f64>,
    sign: Vec<f64>,
    objective: &'a [f64],
    /// Basic variable per row; indices `>= n` are artificials.
    basis: Vec<usize>,
    /// Row of each variable if basic.
    position: Vec<Option<usize>>,
    x_b: Vec<f64>,
    lu: LuFactor,
    etas: Vec<Eta>,
    options: SimplexOptions,
    iterations: usize,
    max_iterations: usize,
    bland_after: usize,
    scratch: Vec<f64>,
}

/// Runs both phases on `problem`.
pub fn solve(problem: &LpProblem, options: &SimplexOptions) -> Result<LpSolution> {
    let m = problem.eq_matrix.rows();
    let n = problem.eq_matrix.cols();
    if m == 0 {
        // No constraints: zero is optimal unless some cost is negative.
        let status = if problem.objective.iter().any(|&c| c < 0.0) {
            LpStatus::Unbounded
        } else {
            LpStatus::Optimal
        };
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective_value: 0.0,
            status,
            iterations: 0,
            duals: Vec::new(),
            dual_objective: 0.0,
        });
    }
    let mut solver = Solver::new(problem, options.clone())?;
    let status = solver.run()?;
    Ok(solver.finish(status))
}

/// Like [`solve`], but starts Phase II from `basis` (one column per row) when
/// that basis is nonsingular and primal feasible. Otherwise falls back to the
/// two-phase method.
pub fn solve_from_basis(
    problem: &LpProblem,
    options: &SimplexOptions,
    basis: &[usize],
) -> Result<LpSolution> {
    let m = problem.eq_matrix.rows();
    let n = problem.eq_matrix.cols();
    if m == 0 || basis.len() != m || basis.iter().any(|&j| j >= n) {
        return solve(problem, options);
    }
    let mut solver = Solver::new(problem, options.clone())?;
    if !solver.install_basis(basis) {
        return solve(problem, options);
    }
    let status = solver.iterate(Phase::Two)?;
    Ok(solver.finish(status))
}

fn singular(_: Singular) -> Error {
    Error::SingularBasis
}

impl<'a> Solver<'a> {
    fn new(problem: &'a LpProblem, options: SimplexOptions) -> Result<Self> {
        let a = &problem.eq_matrix;
        let (m, n) = (a.rows(), a.cols());
        let sign: Vec<f64> = problem
            .rhs
            .iter()
            .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let b: Vec<f64> = problem.rhs.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let mut cols = vec![0.0; m * n];
        for i in 0..m {
            let row = a.row(i);
            for j in 0..n {
                cols[j * m + i] = row[j] * sign[i];
            }
        }
        let mut identity = vec![0.0; m * m];
        for i in 0..m {
            identity[i * m + i] = 1.0;
        }
        let lu = LuFactor::new(m, identity).map_err(singular)?;
        let mut position = vec![None; n + m];
        for i in 0..m {
            position[n + i] = Some(i);
        }
        let max_iterations = options.max_iterations.unwrap_or(50 * (m + n));
        let bland_after = options.bland_after.unwrap_or(3 * m);
        Ok(Solver {
            m,
            n,
            cols,
            x_b: b.clone(),
            b,
            sign,
            objective: &problem.objective,
            basis: (n..n + m).collect(),
            position,
            lu,
            etas: Vec::new(),
            options,
            iterations: 0,
            max_iterations,
            bland_after,
            scratch: Vec::with_capacity(m),
        })
    }

    /// Makes `basis` current if it is nonsingular with `B^-1 b >= 0` up to
    /// rounding. On failure the solver is left unusable.
    fn install_basis(&mut self, basis: &[usize]) -> bool {
        let mut seen = vec![false; self.n];
        if basis.iter().any(|&j| std::mem::replace(&mut seen[j], true)) {
            return false;
        }
        self.basis = basis.to_vec();
        if self.refactor().is_err() {
            return false;
        }
        let scale = 1.0 + self.x_b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if self.x_b.iter().any(|&v| v < -1e-9 * scale) {
            return false;
        }
        for v in &mut self.x_b {
            *v = v.max(0.0);
        }
        self.position.iter_mut().for_each(|p| *p = None);
        for (i, &j) in basis.iter().enumerate() {
            self.position[j] = Some(i);
        }
        true
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    fn cost(&self, j: usize, phase: Phase) -> f64 {
        match (phase, j < self.n) {
            (Phase::One, true) => 0.0,
            (Phase::One, false) => 1.0,
            (Phase::Two, true) => self.objective[j],
            (Phase::Two, false) => 0.0,
        }
    }

    fn ftran(&mut self, v: &mut [f64]) {
        self.lu.solve(v, &mut self.scratch);
        for eta in &self.etas {
            let pivot = v[eta.row] / eta.col[eta.row];
            if pivot != 0.0 {
                for (vi, ai) in v.iter_mut().zip(&eta.col) {
                    *vi -= ai * pivot;
                }
            }
            v[eta.row] = pivot;
        }
    }

    fn btran(&self, z: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let r = eta.row;
            let dot: f64 = z.iter().zip(&eta.col).map(|(a, b)| a * b).sum();
            let others = dot - z[r] * eta.col[r];
            z[r] = (z[r] - others) / eta.col[r];
        }
        self.lu.solve_transpose(z);
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bmat = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                for (i, v) in self.cols[j * m..(j + 1) * m].iter().enumerate() {
                    bmat[i * m + k] = *v;
                }
            } else {
                bmat[(j - self.n) * m + k] = 1.0;
            }
        }
        self.lu = LuFactor::new(m, bmat).map_err(singular)?;
        self.etas.clear();
        let mut x = self.b.clone();
        self.lu.solve(&mut x, &mut self.scratch);
        self.x_b = x;
        Ok(())
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost(j, phase)).collect();
        self.btran(&mut y);
        y
    }

    fn run(&mut self) -> Result<LpStatus> {
        match self.iterate(Phase::One)? {
            LpStatus::Optimal => {}
            other => return Ok(other),
        }
        let infeasibility: f64 = self
            .basis
            .iter()
            .zip(&self.x_b)
            .filter(|(&j, _)| j >= self.n)
            .map(|(_, &v)| v.max(0.0))
            .sum();
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(LpStatus::Infeasible);
        }
        self.drive_out_artificials()?;
        self.iterate(Phase::Two)
    }

    /// Replaces zero-level artificials by structural columns where possible.
    /// Artificials left behind sit on redundant rows.
    fn drive_out_artificials(&mut self) -> Result<()> {
        for r in 0..self.m {
            if self.basis[r] < self.n {
                continue;
            }
            let mut e = vec![0.0; self.m];
            e[r] = 1.0;
            self.btran(&mut e);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let v: f64 = e.iter().zip(self.column(j)).map(|(a, b)| a * b).sum();
                if v.abs() > PIVOT_TOL && best.is_none_or(|(_, bv)| v.abs() > bv.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let mut alpha = self.column(j).to_vec();
                self.ftran(&mut alpha);
                let step = self.x_b[r] / alpha[r];
                self.pivot(j, r, alpha, step)?;
            }
        }
        Ok(())
    }

    fn iterate(&mut self, phase: Phase) -> Result<LpStatus> {
        let mut streak = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Ok(LpStatus::IterationLimit);
            }
            let y = self.duals(phase);

            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let d = self.cost(j, phase)
                    - y.iter()
                        .zip(self.column(j))
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                if d < -OPT_TOL {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d < best) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(LpStatus::Optimal);
            };

            let mut alpha = self.column(q).to_vec();
            self.ftran(&mut alpha);

            let Some((r, step)) = self.ratio_test(&alpha, bland, phase) else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(q, r, alpha, step)?;
            self.iterations += 1;

            if step <= DEGENERATE_STEP {
                streak += 1;
                if streak >= self.bland_after {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }
        }
    }

    /// Leaving row and step length, or `None` when the entering direction is
    /// unbounded.
    fn ratio_test(&self, alpha: &[f64], bland: bool, phase: Phase) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &a) in alpha.iter().enumerate() {
            let artificial = phase == Phase::Two && self.basis[i] >= self.n;
            // Artificials left on redundant rows must stay at zero whichever
            // way the entering column pushes them.
            let ratio = if artificial && a.abs() > PIVOT_TOL {
                0.0
            } else if a > PIVOT_TOL {
                self.x_b[i].max(0.0) / a
            } else {
                continue;
            };
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a.abs() > alpha[bi].abs()
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    fn pivot(&mut self, q: usize, r: usize, alpha: Vec<f64>, step: f64) -> Result<()> {
        for (x, a) in self.x_b.iter_mut().zip(&alpha) {
            *x -= step * a;
        }
        self.x_b[r] = step;
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;
        self.etas.push(Eta { row: r, col: alpha });
        if self.etas.len() >= self.options.refactor_every {
            self.refactor()?;
        }
        Ok(())
    }

    fn finish(mut self, status: LpStatus) -> LpSolution {
        if status == LpStatus::Optimal {
            // Fresh factorisation for the reported point; a singular basis
            // here would already have failed during the solve.
            let _ = self.refactor();
        }
        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.basis.iter().zip(&self.x_b) {
            if j < self.n {
                x[j] = v;
            }
        }
        let objective_value = x.iter().zip(self.objective).map(|(a, b)| a * b).sum();
        let y = self.duals(Phase::Two);
        let dual_objective = y.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        let duals = y.iter().zip(&self.sign).map(|(a, s)| a * s).collect();
        LpSolution {
            x,
            objective_value,
            status,
            iterations: self.iterations,
            duals,
            dual_objective,
        }
    }
}
