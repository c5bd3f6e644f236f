//! Sparse cumulative shocks: the step operator `U`, an l1-penalized solver
//! for the whitened problem, and cross-validated penalty selection.
//!
//! The lasso objective used throughout is
//!
//! ```text
//! 1/2 ||r - D b||^2 + lambda/2 * sum_{j penalized} |b_j|
//! ```
//!
//! which has the same minimizer as `||r - D b||^2 + lambda * sum |b_j|`.
//! Column 0 of `D` carries the intercept and is unpenalized unless the
//! caller asks otherwise.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e = (mu, e_2, ..., e_n)`: the intercept plus the penalized jump sizes,
/// indexed in time order. There is no free `e_1`; its column carries `mu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeCoefficients {
    pub mu: f64,
    pub e_tail: Vec<f64>,
}

impl ChangeCoefficients {
    pub fn new(mu: f64, e_tail: Vec<f64>) -> Self {
        Self { mu, e_tail }
    }

    /// Intercept only, no jumps, for `n` observations.
    pub fn intercept_only(n: usize, mu: f64) -> Self {
        Self::new(mu, vec![0.0; n.saturating_sub(1)])
    }

    pub fn from_vector(v: &[f64]) -> Self {
        match v.split_first() {
            Some((&mu, tail)) => Self::new(mu, tail.to_vec()),
            None => Self::new(0.0, Vec::new()),
        }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n());
        v.push(self.mu);
        v.extend_from_slice(&self.e_tail);
        v
    }

    pub fn n(&self) -> usize {
        self.e_tail.len() + 1
    }

    pub fn l1(&self) -> f64 {
        self.e_tail.iter().map(|e| e.abs()).sum()
    }

    /// Shock part of `U e` in time order (the intercept is excluded):
    /// `delta_1 = 0`, `delta_i = e_2 + ... + e_i`.
    pub fn shock_series(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        let mut acc = 0.0;
        out.push(acc);
        for &e in &self.e_tail {
            acc += e;
            out.push(acc);
        }
        out
    }

    /// Time indices (0-based) carrying a nonzero jump.
    pub fn support(&self) -> Vec<usize> {
        self.e_tail
            .iter()
            .enumerate()
            .filter(|(_, e)| **e != 0.0)
            .map(|(j, _)| j + 1)
            .collect()
    }
}

/// Shock series mapped back to dataset order. `time_order[k]` is the dataset
/// index of the `k`-th earliest observation.
pub fn apply_u(coeffs: &ChangeCoefficients, time_order: &[usize]) -> Result<Vec<f64>> {
    if time_order.len() != coeffs.n() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.n(),
            got: time_order.len(),
        });
    }
    let series = coeffs.shock_series();
    let mut out = vec![f64::NAN; series.len()];
    for (k, &idx) in time_order.iter().enumerate() {
        if idx >= out.len() || !out[idx].is_nan() {
            return Err(Error::param("time_order", "not a permutation"));
        }
        out[idx] = series[k];
    }
    Ok(out)
}

/// Recovers jump sizes from a time-ordered shock series.
pub fn first_difference(series: &[f64]) -> Vec<f64> {
    series.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Dense lower-triangular all-ones matrix.
pub fn cumulative_design(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub kkt_tol: f64,
    /// Scale `kkt_tol` by `max(1, lambda_max / 2)`.
    pub relative: bool,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-6,
            relative: false,
            max_sweeps: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub objective: f64,
}

impl LassoFit {
    pub fn coefficients(&self) -> ChangeCoefficients {
        ChangeCoefficients::from_vector(&self.coef)
    }
}

/// A lasso problem reduced to its Gram form `G = D'D`, `c = D'r`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    penalize_first: bool,
}

const ACTIVE_PASSES: usize = 20;

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

impl LassoProblem {
    pub fn new(design: &DMatrix<f64>, response: &DVector<f64>, penalize_first: bool) -> Result<Self> {
        if design.nrows() != response.len() {
            return Err(Error::DimensionMismatch {
                expected: design.nrows(),
                got: response.len(),
            });
        }
        if design.ncols() == 0 {
            return Err(Error::param("design", "needs at least one column"));
        }
        Ok(Self {
            gram: design.tr_mul(design),
            xty: design.tr_mul(response),
            yty: response.norm_squared(),
            penalize_first,
        })
    }

    /// Problem restricted to a subset of rows.
    pub fn from_rows(
        design: &DMatrix<f64>,
        response: &DVector<f64>,
        rows: &[usize],
        penalize_first: bool,
    ) -> Result<Self> {
        let d = design.select_rows(rows);
        let r = response.select_rows(rows);
        Self::new(&d, &r, penalize_first)
    }

    pub fn ncols(&self) -> usize {
        self.xty.len()
    }

    fn penalized(&self, j: usize) -> bool {
        j > 0 || self.penalize_first
    }

    /// Penalized coefficients all zero, unpenalized intercept at its
    /// least-squares value.
    pub fn null_solution(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.ncols()];
        if !self.penalize_first && self.gram[(0, 0)] > 0.0 {
            b[0] = self.xty[0] / self.gram[(0, 0)];
        }
        b
    }

    /// Smallest `lambda` at which every penalized coefficient is zero.
    pub fn lambda_max(&self) -> f64 {
        let b = self.null_solution();
        let g = self.neg_gradient(&b);
        2.0 * (0..self.ncols())
            .filter(|&j| self.penalized(j))
            .map(|j| g[j].abs())
            .fold(0.0, f64::max)
    }

    /// `c - G b`, the negative gradient of the smooth part.
    fn neg_gradient(&self, b: &[f64]) -> Vec<f64> {
        let q = &self.gram * DVector::from_column_slice(b);
        (0..self.ncols()).map(|j| self.xty[j] - q[j]).collect()
    }

    pub fn objective(&self, b: &[f64], lambda: f64) -> f64 {
        let bv = DVector::from_column_slice(b);
        let quad = 0.5 * self.yty - self.xty.dot(&bv) + 0.5 * bv.dot(&(&self.gram * &bv));
        let pen: f64 = (0..b.len())
            .filter(|&j| self.penalized(j))
            .map(|j| b[j].abs())
            .sum();
        quad + 0.5 * lambda * pen
    }

    fn kkt_from_gradient(&self, b: &[f64], g: &[f64], lambda: f64) -> f64 {
        let half = 0.5 * lambda;
        (0..b.len())
            .map(|j| {
                if !self.penalized(j) {
                    g[j].abs()
                } else if b[j] != 0.0 {
                    (g[j] - half * b[j].signum()).abs()
                } else {
                    (g[j].abs() - half).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }

    /// Largest violation of the subgradient optimality conditions.
    pub fn kkt_residual(&self, b: &[f64], lambda: f64) -> f64 {
        let g = self.neg_gradient(b);
        self.kkt_from_gradient(b, &g, lambda)
    }

    /// Primal minus dual objective at a rescaled residual.
    pub fn duality_gap(&self, b: &[f64], lambda: f64) -> f64 {
        let bv = DVector::from_column_slice(b);
        let cb = self.xty.dot(&bv);
        let bgb = bv.dot(&(&self.gram * &bv));
        let rho2 = (self.yty - 2.0 * cb + bgb).max(0.0);
        let r_rho = self.yty - cb;
        let g = self.neg_gradient(b);
        let gmax = (0..b.len())
            .filter(|&j| self.penalized(j))
            .map(|j| g[j].abs())
            .fold(0.0, f64::max);
        let s = if gmax > 0.5 * lambda { 0.5 * lambda / gmax } else { 1.0 };
        let dual = 0.5 * self.yty - 0.5 * (self.yty - 2.0 * s * r_rho + s * s * rho2);
        self.objective(b, lambda) - dual
    }

    fn tolerance(&self, opts: &LassoOptions) -> f64 {
        if opts.relative {
            opts.kkt_tol * (0.5 * self.lambda_max()).max(1.0)
        } else {
            opts.kkt_tol
        }
    }

    pub fn solve(&self, lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
        self.solve_warm(lambda, &self.null_solution(), opts)
    }

    pub fn solve_warm(&self, lambda: f64, start: &[f64], opts: &LassoOptions) -> Result<LassoFit> {
        let (fit, converged) = self.descend(lambda, start, opts)?;
        if converged {
            Ok(fit)
        } else {
            Err(Error::LassoNotConverged {
                sweeps: fit.sweeps,
                gap: self.duality_gap(&fit.coef, lambda),
                kkt: fit.kkt_residual,
            })
        }
    }

    /// Coordinate descent with covariance updates. Returns the last iterate
    /// and whether the KKT tolerance was met.
    fn descend(&self, lambda: f64, start: &[f64], opts: &LassoOptions) -> Result<(LassoFit, bool)> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        let m = self.ncols();
        if start.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: start.len(),
            });
        }
        let tol = self.tolerance(opts);
        let half = 0.5 * lambda;
        let gram = self.gram.as_slice();
        let c = self.xty.as_slice();

        let mut b = start.to_vec();
        let mut q: Vec<f64> = (&self.gram * DVector::from_column_slice(&b)).as_slice().to_vec();

        let update = |j: usize, b: &mut [f64], q: &mut [f64]| -> f64 {
            let gjj = gram[j * m + j];
            if gjj <= 0.0 {
                return 0.0;
            }
            let z = c[j] - q[j] + gjj * b[j];
            let new = if self.penalized(j) {
                soft_threshold(z, half) / gjj
            } else {
                z / gjj
            };
            let d = new - b[j];
            if d != 0.0 {
                b[j] = new;
                let col = &gram[j * m..(j + 1) * m];
                for (qi, gi) in q.iter_mut().zip(col) {
                    *qi += d * gi;
                }
            }
            d.abs() * gjj.sqrt()
        };

        if let Some((fin, steps)) = self.active_set(lambda, start, tol, 4 * m + 20) {
            let kkt = self.kkt_residual(&fin, lambda);
            let objective = self.objective(&fin, lambda);
            return Ok((
                LassoFit {
                    coef: fin,
                    lambda,
                    sweeps: steps,
                    kkt_residual: kkt,
                    objective,
                },
                true,
            ));
        }

        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            for j in 0..m {
                update(j, &mut b, &mut q);
            }
            let g: Vec<f64> = (0..m).map(|j| c[j] - q[j]).collect();
            if self.kkt_from_gradient(&b, &g, lambda) <= tol {
                break;
            }

            if let Some((pb, pq)) = self.polish(&b, lambda) {
                let g: Vec<f64> = (0..m).map(|j| c[j] - pq[j]).collect();
                if self.kkt_from_gradient(&pb, &g, lambda) <= tol {
                    b = pb;
                    break;
                }
            }

            // Iterate on the current active set before the next full pass.
            let active: Vec<usize> = (0..m).filter(|&j| b[j] != 0.0 || !self.penalized(j)).collect();
            for _ in 0..ACTIVE_PASSES {
                sweeps += 1;
                let mut biggest: f64 = 0.0;
                for &j in &active {
                    biggest = biggest.max(update(j, &mut b, &mut q));
                }
                if biggest <= 0.1 * tol || sweeps >= opts.max_sweeps {
                    break;
                }
            }
        }
        // Refresh q from scratch so the reported residual carries no drift.
        let g = self.neg_gradient(&b);
        let final_kkt = self.kkt_from_gradient(&b, &g, lambda);
        let converged = final_kkt <= tol;
        let objective = self.objective(&b, lambda);
        Ok((
            LassoFit {
                coef: b,
                lambda,
                sweeps,
                kkt_residual: final_kkt,
                objective,
            },
            converged,
        ))
    }

    /// Feature-sign active-set search from `start`. Each step solves the
    /// sign-fixed stationarity system on the working set and line-searches
    /// over sign crossings. Returns `None` if a step cannot make progress, in
    /// which case the caller falls back to coordinate descent.
    fn active_set(&self, lambda: f64, start: &[f64], tol: f64, max_steps: usize) -> Option<(Vec<f64>, usize)> {
        let m = self.ncols();
        let half = 0.5 * lambda;
        let mut b = start.to_vec();
        let mut sign: Vec<f64> = b.iter().map(|v| if *v == 0.0 { 0.0 } else { v.signum() }).collect();
        let mut current = self.objective(&b, lambda);
        for step in 0..max_steps {
            let g = self.neg_gradient(&b);
            if self.kkt_from_gradient(&b, &g, lambda) <= tol {
                return Some((b, step));
            }
            let nonzero_ok = (0..m).all(|j| {
                if !self.penalized(j) {
                    g[j].abs() <= tol
                } else if b[j] != 0.0 {
                    (g[j] - half * sign[j]).abs() <= tol
                } else {
                    true
                }
            });
            if nonzero_ok {
                let (j, v) = (0..m)
                    .filter(|&j| self.penalized(j) && b[j] == 0.0)
                    .map(|j| (j, g[j].abs()))
                    .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                if j == usize::MAX || v <= half {
                    return None;
                }
                sign[j] = g[j].signum();
            }

            let work: Vec<usize> = (0..m).filter(|&j| !self.penalized(j) || sign[j] != 0.0).collect();
            let sub = self.gram.select_rows(&work).select_columns(&work);
            let rhs = DVector::from_iterator(
                work.len(),
                work.iter().map(|&j| self.xty[j] - if self.penalized(j) { half * sign[j] } else { 0.0 }),
            );
            let x = Cholesky::new(sub)?.solve(&rhs);

            let mut target = vec![0.0; m];
            for (k, &j) in work.iter().enumerate() {
                target[j] = x[k];
            }
            let mut best = (self.objective(&target, lambda), target.clone());
            for &j in &work {
                if !self.penalized(j) || b[j] == 0.0 || target[j].signum() == b[j].signum() {
                    continue;
                }
                let s = b[j] / (b[j] - target[j]);
                let mut p: Vec<f64> = (0..m).map(|i| b[i] + s * (target[i] - b[i])).collect();
                p[j] = 0.0;
                let f = self.objective(&p, lambda);
                if f < best.0 {
                    best = (f, p);
                }
            }
            if !(best.0 < current || best.0 <= current + 1e-14 * current.abs()) {
                return None;
            }
            current = best.0;
            b = best.1;
            for j in 0..m {
                if self.penalized(j) {
                    sign[j] = if b[j] == 0.0 { 0.0 } else { b[j].signum() };
                }
            }
        }
        None
    }

    /// Solves the stationarity equations on the current support with fixed
    /// signs. Returns the candidate and `G b` when the signs stay consistent.
    fn polish(&self, b: &[f64], lambda: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let m = self.ncols();
        let active: Vec<usize> = (0..m).filter(|&j| b[j] != 0.0 || !self.penalized(j)).collect();
        if active.is_empty() {
            return None;
        }
        let sub = self.gram.select_rows(&active).select_columns(&active);
        let rhs = DVector::from_iterator(
            active.len(),
            active.iter().map(|&j| {
                if self.penalized(j) {
                    self.xty[j] - 0.5 * lambda * b[j].signum()
                } else {
                    self.xty[j]
                }
            }),
        );
        let x = Cholesky::new(sub)?.solve(&rhs);
        let mut out = vec![0.0; m];
        for (k, &j) in active.iter().enumerate() {
            if self.penalized(j) && x[k].signum() != b[j].signum() {
                return None;
            }
            out[j] = x[k];
        }
        let q = (&self.gram * DVector::from_column_slice(&out)).as_slice().to_vec();
        Some((out, q))
    }
}

/// Minimizes `1/2 ||response - design b||^2 + lambda/2 * sum_{j penalized} |b_j|`
/// to a KKT residual of `1e-6`.
pub fn lasso_solve(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    lambda: f64,
    penalize_first: bool,
) -> Result<LassoFit> {
    LassoProblem::new(design, response, penalize_first)?.solve(lambda, &LassoOptions::default())
}

pub fn lambda_max(design: &DMatrix<f64>, response: &DVector<f64>, penalize_first: bool) -> Result<f64> {
    Ok(LassoProblem::new(design, response, penalize_first)?.lambda_max())
}

/// Cross-validation fold labels, fixed once and reused for every penalty
/// evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
    seed: u64,
}

/// Seeded balanced assignment: shuffle `0..n`, then deal round-robin.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::param("k", format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::param("k", format!("{k} folds for {n} observations")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    Ok(FoldAssignment { fold_of, k, seed })
}

impl FoldAssignment {
    /// Caller-built assignment (e.g. from a twinning split).
    pub fn from_labels(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 || fold_of.iter().any(|&f| f >= k) {
            return Err(Error::param("fold_of", "labels must lie in [0, k) with k >= 2"));
        }
        let fa = Self { fold_of, k, seed: 0 };
        if fa.sizes().contains(&0) {
            return Err(Error::param("fold_of", "every fold needs at least one member"));
        }
        Ok(fa)
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.fold_of {
            s[f] += 1;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SelectionRule {
    #[default]
    MinError,
    OneStandardError,
}

/// Held-out error along the penalty grid (descending `lambdas`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub lambdas: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub index: usize,
    pub lambda_max: f64,
    pub curve: CvCurve,
}

/// `size` log-spaced values from `lambda_max` down to `1e-4 lambda_max`.
pub fn lambda_grid(lambda_max: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lambda_max];
    }
    let span = (1e-4f64).ln();
    (0..size)
        .map(|i| lambda_max * (span * i as f64 / (size - 1) as f64).exp())
        .collect()
}

/// Below this, `lambda_max` is rounding noise around an intercept-only fit.
fn is_degenerate(problem: &LassoProblem, lambda_max: f64) -> bool {
    let col_scale = (0..problem.ncols())
        .map(|j| problem.gram[(j, j)])
        .fold(0.0, f64::max)
        .sqrt();
    lambda_max <= 1e-9 * problem.yty.sqrt() * col_scale
}

fn fold_errors(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    folds: &FoldAssignment,
    fold: usize,
    grid: &[f64],
    opts: &LassoOptions,
) -> Result<(Vec<f64>, usize)> {
    let test = folds.members(fold);
    let train = folds.complement(fold);
    let problem = LassoProblem::from_rows(design, response, &train, false)?;
    let test_x = design.select_rows(&test);
    let test_y = response.select_rows(&test);
    // The sum-of-squares loss shrinks with the training fraction; scale the
    // penalty to match so grid values mean the same thing in every fold.
    let scale = train.len() as f64 / response.len() as f64;
    let mut beta = problem.null_solution();
    let mut sse = Vec::with_capacity(grid.len());
    for &lam in grid {
        let (fit, _) = problem.descend(lam * scale, &beta, opts)?;
        beta = fit.coef;
        let pred = &test_x * DVector::from_column_slice(&beta);
        sse.push((&test_y - pred).norm_squared());
    }
    Ok((sse, test.len()))
}

/// Picks `lambda` by K-fold cross-validation on the rows of the whitened
/// system. Ties go to the larger penalty.
pub fn select_lambda_cv(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    folds: &FoldAssignment,
    grid_size: usize,
    rule: SelectionRule,
) -> Result<LambdaSelection> {
    select_lambda_cv_with(design, response, folds, grid_size, rule, &LassoOptions::default())
}

pub fn select_lambda_cv_with(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    folds: &FoldAssignment,
    grid_size: usize,
    rule: SelectionRule,
    opts: &LassoOptions,
) -> Result<LambdaSelection> {
    if grid_size < 2 {
        return Err(Error::param("grid_size", "need at least 2 grid points"));
    }
    if folds.n() != response.len() {
        return Err(Error::DimensionMismatch {
            expected: response.len(),
            got: folds.n(),
        });
    }
    let full = LassoProblem::new(design, response, false)?;
    let lam_max = full.lambda_max();
    let grid = if is_degenerate(&full, lam_max) {
        vec![0.0]
    } else {
        lambda_grid(lam_max, grid_size)
    };

    let per_fold: Vec<(Vec<f64>, usize)> = (0..folds.k())
        .into_par_iter()
        .map(|f| fold_errors(design, response, folds, f, &grid, opts))
        .collect::<Result<_>>()?;

    let n = response.len() as f64;
    let k = folds.k() as f64;
    let mut mean_error = Vec::with_capacity(grid.len());
    let mut std_error = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let pooled = per_fold.iter().map(|(s, _)| s[g]).sum::<f64>() / n;
        let mses: Vec<f64> = per_fold.iter().map(|(s, m)| s[g] / *m as f64).collect();
        let avg = mses.iter().sum::<f64>() / k;
        let var = mses.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (k - 1.0);
        mean_error.push(pooled);
        std_error.push((var / k).sqrt());
    }

    let mut best = 0;
    for g in 1..grid.len() {
        if mean_error[g] < mean_error[best] {
            best = g;
        }
    }
    let index = match rule {
        SelectionRule::MinError => best,
        SelectionRule::OneStandardError => {
            let bound = mean_error[best] + std_error[best];
            (0..=best).find(|&g| mean_error[g] <= bound).unwrap_or(best)
        }
    };
    Ok(LambdaSelection {
        lambda: grid[index],
        index,
        lambda_max: lam_max,
        curve: CvCurve {
            lambdas: grid,
            mean_error,
            std_error,
        },
    })
}

/// Solves the full-data problem at `lambda`, warm-starting along the grid
/// from `lambda_max` the same way the cross-validation path does.
pub fn solve_along_path(
    problem: &LassoProblem,
    selection: &LambdaSelection,
    opts: &LassoOptions,
) -> Result<LassoFit> {
    let mut beta = problem.null_solution();
    if selection.lambda == 0.0 && selection.curve.lambdas.len() == 1 {
        let objective = problem.objective(&beta, 0.0);
        let kkt_residual = problem.kkt_residual(&beta, 0.0);
        return Ok(LassoFit {
            coef: beta,
            lambda: 0.0,
            sweeps: 0,
            kkt_residual,
            objective,
        });
    }
    for &lam in &selection.curve.lambdas[..selection.index] {
        beta = problem.descend(lam, &beta, opts)?.0.coef;
    }
    problem.solve_warm(selection.lambda, &beta, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_problem(rows: usize, cols: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let r = DVector::from_fn(rows, |_, _| rng.sample::<f64, _>(StandardNormal));
        (d, r)
    }

    #[test]
    fn zero_tail_gives_zero_shocks() {
        let c = ChangeCoefficients::intercept_only(5, 3.0);
        assert_eq!(apply_u(&c, &[0, 1, 2, 3, 4]).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn single_jump_is_a_persistent_step() {
        // jump of 2 at time index 3 (1-based 4)
        let c = ChangeCoefficients::new(0.0, vec![0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(c.shock_series(), vec![0.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn opposite_pair_is_a_pulse() {
        let c = ChangeCoefficients::new(0.0, vec![0.0, 1.5, -1.5, 0.0]);
        assert_eq!(c.shock_series(), vec![0.0, 0.0, 1.5, 0.0, 0.0]);
    }

    #[test]
    fn apply_u_maps_back_to_dataset_order() {
        let c = ChangeCoefficients::new(0.0, vec![1.0, 0.0]);
        // dataset row 2 is earliest, then row 0, then row 1
        let d = apply_u(&c, &[2, 0, 1]).unwrap();
        assert_eq!(d, vec![1.0, 1.0, 0.0]);
        assert!(apply_u(&c, &[0, 0, 1]).is_err());
    }

    #[test]
    fn lambda_max_orthonormal_no_intercept() {
        let d = DMatrix::identity(4, 4);
        let r = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!((lambda_max(&d, &r, true).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_max_zero_when_response_is_intercept() {
        let d = cumulative_design(5);
        let r = DVector::from_element(5, 2.5);
        assert!(lambda_max(&d, &r, false).unwrap().abs() < 1e-12);
    }

    #[test]
    fn above_lambda_max_gives_gls_intercept() {
        let (d, r) = random_problem(12, 8, 3);
        let p = LassoProblem::new(&d, &r, false).unwrap();
        let lm = p.lambda_max();
        let fit = p.solve(lm * 1.0001, &LassoOptions::default()).unwrap();
        assert!(fit.coef[1..].iter().all(|&b| b == 0.0));
        let col = d.column(0);
        let want = col.dot(&r) / col.norm_squared();
        assert!((fit.coef[0] - want).abs() < 1e-10);
        let below = p.solve(lm * 0.99, &LassoOptions::default()).unwrap();
        assert!(below.coef[1..].iter().any(|&b| b != 0.0));
    }

    #[test]
    fn zero_penalty_matches_normal_equations() {
        let (d, r) = random_problem(6, 6, 11);
        let d = d + DMatrix::identity(6, 6) * 3.0;
        let fit = lasso_solve(&d, &r, 0.0, false).unwrap();
        let ls = d.clone().lu().solve(&r).unwrap();
        for j in 0..6 {
            assert!((fit.coef[j] - ls[j]).abs() < 1e-6, "{j}");
        }
    }

    #[test]
    fn folds_leave_one_out() {
        let f = make_folds(10, 10, 4).unwrap();
        assert_eq!(f.sizes(), vec![1; 10]);
    }

    #[test]
    fn folds_balanced_and_deterministic() {
        let mut s = make_folds(7, 3, 0).unwrap().sizes();
        s.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(s, vec![3, 2, 2]);
        assert_eq!(make_folds(100, 10, 1).unwrap(), make_folds(100, 10, 1).unwrap());
        assert_ne!(make_folds(100, 10, 1).unwrap(), make_folds(100, 10, 2).unwrap());
    }

    #[test]
    fn folds_reject_bad_k() {
        assert!(make_folds(5, 6, 0).is_err());
        assert!(make_folds(5, 1, 0).is_err());
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[4] - 2e-4).abs() < 1e-15);
        assert!((g[2] - 2e-2).abs() < 1e-15);
    }

    #[test]
    fn two_point_grid_picks_better_error() {
        let (d, r) = random_problem(20, 20, 5);
        let folds = make_folds(20, 4, 9).unwrap();
        let sel = select_lambda_cv(&d, &r, &folds, 2, SelectionRule::MinError).unwrap();
        let e = &sel.curve.mean_error;
        let want = if e[1] < e[0] { 1 } else { 0 };
        assert_eq!(sel.index, want);
        assert_eq!(sel.curve.lambdas.len(), 2);
    }

    #[test]
    fn one_se_rule_never_picks_smaller_lambda() {
        let (d, r) = random_problem(30, 12, 8);
        let folds = make_folds(30, 5, 2).unwrap();
        let a = select_lambda_cv(&d, &r, &folds, 20, SelectionRule::MinError).unwrap();
        let b = select_lambda_cv(&d, &r, &folds, 20, SelectionRule::OneStandardError).unwrap();
        assert!(b.lambda >= a.lambda);
    }

    #[test]
    fn nonconvergence_reports_gap() {
        let (d, r) = random_problem(10, 10, 1);
        let p = LassoProblem::new(&d, &r, false).unwrap();
        let opts = LassoOptions {
            max_sweeps: 1,
            kkt_tol: 1e-14,
            relative: false,
        };
        match p.solve(1e-3, &opts) {
            Err(Error::LassoNotConverged { gap, .. }) => assert!(gap >= 0.0),
            Ok(fit) => assert!(fit.kkt_residual <= 1e-14),
            Err(e) => panic!("{e}"),
        }
    }

    proptest! {
        #[test]
        fn difference_inverts_cumsum(tail in proptest::collection::vec(-3.0f64..3.0, 1..40)) {
            let c = ChangeCoefficients::new(0.7, tail.clone());
            let back = first_difference(&c.shock_series());
            for (a, b) in back.iter().zip(&tail) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * tail.len() as f64);
            }
        }

        #[test]
        fn converged_solutions_satisfy_kkt(seed in 0u64..500, frac in 0.01f64..0.9) {
            let (d, r) = random_problem(15, 10, seed);
            let p = LassoProblem::new(&d, &r, false).unwrap();
            let lam = frac * p.lambda_max();
            let fit = p.solve(lam, &LassoOptions::default()).unwrap();
            prop_assert!(p.kkt_residual(&fit.coef, lam) <= 1e-6);
        }
    }
}
