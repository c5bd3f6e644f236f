//! Empirical-Bayes estimation of the joint smooth-plus-shock model.
//!
//! One outer iteration:
//!
//! 1. factorize `R(theta) + eta I`, whiten the response and the step design;
//! 2. pick `lambda` by cross-validation on fixed folds and solve the lasso
//!    for `(mu, e_2..e_n)`;
//! 3. update `tau2 = (quad + lambda * |e|_1) / c` where `c = 3n` by default;
//! 4. minimize `c log tau2 + log |R + eta I|` over `(log theta, log eta)`
//!    with the shocks held fixed.
//!
//! The loop stops once `theta`, `eta` (on the log scale) and the shock
//! series all move less than `tol`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{factorize, GpFactorization, GpPredictor};
use crate::kernel::{corr_matrix, KernelSpec};
use crate::optim::{halton_points, nelder_mead, NelderMeadOptions};
use crate::sparse::{
    cumulative_design, make_folds, select_lambda_cv_with, solve_along_path, ChangeCoefficients,
    CvCurve, FoldAssignment, LambdaSelection, LassoOptions, LassoProblem, SelectionRule,
};

/// Affine maps from raw units onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub x_bounds: Vec<(f64, f64)>,
    pub t_bounds: (f64, f64),
}

fn to_unit(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (v - lo) / (hi - lo)
}

fn from_unit(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + u * (hi - lo)
}

/// Min-max bounds; a constant column is centred in a unit-width window.
fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

impl Scaling {
    pub fn x_to_unit(&self, k: usize, v: f64) -> f64 {
        to_unit(v, self.x_bounds[k])
    }

    pub fn x_from_unit(&self, k: usize, u: f64) -> f64 {
        from_unit(u, self.x_bounds[k])
    }

    pub fn t_to_unit(&self, v: f64) -> f64 {
        to_unit(v, self.t_bounds)
    }

    pub fn t_from_unit(&self, u: f64) -> f64 {
        from_unit(u, self.t_bounds)
    }
}

/// Inputs scaled to `[0,1]^p`, times scaled to `[0,1]`, responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    t: Vec<f64>,
    y: Vec<f64>,
    time_order: Vec<usize>,
    scaling: Scaling,
}

impl Dataset {
    /// Min-max scales every input column and the times.
    pub fn new(x_rows: Vec<Vec<f64>>, t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let p = x_rows.first().map_or(0, Vec::len);
        let x_bounds = (0..p).map(|k| min_max(x_rows.iter().map(|r| r[k]))).collect();
        Self::with_x_bounds(x_rows, t, y, x_bounds)
    }

    /// Uses caller-supplied input ranges (times are still min-max scaled).
    pub fn with_x_bounds(
        x_rows: Vec<Vec<f64>>,
        t: Vec<f64>,
        y: Vec<f64>,
        x_bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no observations".into()));
        }
        if x_rows.len() != n || t.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} input rows, {} times and {} responses",
                x_rows.len(),
                t.len(),
                n
            )));
        }
        let p = x_bounds.len();
        for (i, row) in x_rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} inputs, expected {p}",
                    row.len()
                )));
            }
        }
        let finite = |v: &f64| v.is_finite();
        if !x_rows.iter().flatten().all(finite) || !t.iter().all(finite) || !y.iter().all(finite) {
            return Err(Error::InvalidDataset("non-finite value".into()));
        }
        for &(lo, hi) in &x_bounds {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidDataset(format!("bad input range [{lo}, {hi}]")));
            }
        }
        let scaling = Scaling {
            x_bounds,
            t_bounds: min_max(t.iter().copied()),
        };
        let mut x = DMatrix::zeros(n, p);
        for (i, row) in x_rows.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                let u = scaling.x_to_unit(k, v);
                if !(0.0..=1.0).contains(&u) {
                    return Err(Error::OutOfUnitRange {
                        row: i,
                        column: k,
                        value: u,
                    });
                }
                x[(i, k)] = u;
            }
        }
        let t_unit: Vec<f64> = t.iter().map(|&v| scaling.t_to_unit(v)).collect();
        let mut time_order: Vec<usize> = (0..n).collect();
        time_order.sort_by(|&a, &b| t_unit[a].total_cmp(&t_unit[b]));
        if let Some(w) = time_order.windows(2).find(|w| t_unit[w[0]] >= t_unit[w[1]]) {
            return Err(Error::InvalidDataset(format!(
                "rows {} and {} share the same time",
                w[0], w[1]
            )));
        }
        Ok(Self {
            x,
            t: t_unit,
            y,
            time_order,
            scaling,
        })
    }

    /// Times taken from run order: `t_i = (i - 1) / (n - 1)`.
    pub fn from_run_order(x_rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        let t = (1..=y.len()).map(|i| i as f64).collect();
        Self::new(x_rows, t, y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `n x p` scaled inputs.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn time_order(&self) -> &[usize] {
        &self.time_order
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// `n x (p + 1)` matrix of `(x, t)` rows.
    pub fn design(&self) -> DMatrix<f64> {
        let n = self.n();
        let p = self.p();
        DMatrix::from_fn(n, p + 1, |i, k| if k < p { self.x[(i, k)] } else { self.t[i] })
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.x.row(i).iter().copied().collect();
        v.push(self.t[i]);
        v
    }

    /// Same data with rows stored in time order.
    pub fn sorted_by_time(&self) -> Dataset {
        let order = &self.time_order;
        Dataset {
            x: self.x.select_rows(order),
            t: order.iter().map(|&i| self.t[i]).collect(),
            y: order.iter().map(|&i| self.y[i]).collect(),
            time_order: (0..self.n()).collect(),
            scaling: self.scaling.clone(),
        }
    }

    /// Inputs of row `i` in raw units.
    pub fn raw_x(&self, i: usize) -> Vec<f64> {
        (0..self.p())
            .map(|k| self.scaling.x_from_unit(k, self.x[(i, k)]))
            .collect()
    }

    pub fn raw_t(&self, i: usize) -> f64 {
        self.scaling.t_from_unit(self.t[i])
    }
}

/// `phi = (mu, tau2, nu, sigma2, theta)` together with `eta = sigma2 / tau2`
/// and `lambda = 2 sqrt(2) tau2 / nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub mu: f64,
    pub tau2: f64,
    /// Infinite when `lambda == 0`; serialized as `null` in that case.
    #[serde(with = "maybe_infinite")]
    pub nu: f64,
    pub sigma2: f64,
    pub theta: KernelSpec,
    pub eta: f64,
    pub lambda: f64,
}

mod maybe_infinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Hyperparameters {
    pub fn from_estimates(mu: f64, tau2: f64, theta: KernelSpec, eta: f64, lambda: f64) -> Self {
        let nu = if lambda > 0.0 {
            2.0 * SQRT_2 * tau2 / lambda
        } else {
            f64::INFINITY
        };
        Self {
            mu,
            tau2,
            nu,
            sigma2: eta * tau2,
            theta,
            eta,
            lambda,
        }
    }
}

/// The multiplier `c` in `tau2 = (...) / c` and `c log tau2 + log |R + eta I|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LikelihoodConstant {
    #[default]
    ThreeN,
    N,
}

impl LikelihoodConstant {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            LikelihoodConstant::ThreeN => 3.0 * n as f64,
            LikelihoodConstant::N => n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub tol: f64,
    pub max_outer: usize,
    pub k_folds: usize,
    pub lambda_grid_size: usize,
    pub seed: u64,
    pub theta_bounds: (f64, f64),
    pub eta_bounds: (f64, f64),
    pub optimizer_restarts: usize,
    pub one_se_rule: bool,
    pub likelihood_constant: LikelihoodConstant,
    /// `false` fits the smooth component alone (no shock term).
    pub include_sudden: bool,
    pub optimizer_max_evals: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_outer: 50,
            k_folds: 10,
            lambda_grid_size: 100,
            seed: 0,
            theta_bounds: (1e-2, 1e4),
            eta_bounds: (1e-8, 10.0),
            optimizer_restarts: 3,
            one_se_rule: false,
            likelihood_constant: LikelihoodConstant::ThreeN,
            include_sudden: true,
            optimizer_max_evals: 300,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi;
        if !ordered(self.theta_bounds) {
            return Err(Error::param("theta_bounds", "need 0 < lo < hi"));
        }
        if !ordered(self.eta_bounds) {
            return Err(Error::param("eta_bounds", "need 0 < lo < hi"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.max_outer == 0 || self.optimizer_max_evals == 0 {
            return Err(Error::param("max_outer", "counts must be positive"));
        }
        if self.k_folds < 2 {
            return Err(Error::param("k_folds", "need at least 2 folds"));
        }
        if self.lambda_grid_size < 2 {
            return Err(Error::param("lambda_grid_size", "need at least 2 grid points"));
        }
        Ok(())
    }

    fn selection_rule(&self) -> SelectionRule {
        if self.one_se_rule {
            SelectionRule::OneStandardError
        } else {
            SelectionRule::MinError
        }
    }
}

const TAU2_FLOOR: f64 = 1e-12;

/// `(quad + lambda * l1) / (3n)`, floored at `1e-12`.
pub fn tau2_update(quad: f64, lambda: f64, l1: f64, n: usize) -> f64 {
    tau2_update_with(quad, lambda, l1, n, LikelihoodConstant::ThreeN)
}

pub fn tau2_update_with(quad: f64, lambda: f64, l1: f64, n: usize, c: LikelihoodConstant) -> f64 {
    ((quad + lambda * l1) / c.factor(n)).max(TAU2_FLOOR)
}

fn residual(y: &[f64], coeffs: &ChangeCoefficients, time_order: &[usize]) -> Result<DVector<f64>> {
    let delta = crate::sparse::apply_u(coeffs, time_order)?;
    Ok(DVector::from_iterator(
        y.len(),
        y.iter().zip(&delta).map(|(yi, di)| yi - coeffs.mu - di),
    ))
}

/// Profile objective `3n log tau2 + log |R + eta I|` at fixed shocks and
/// penalty.
pub fn profile_objective(
    theta: &KernelSpec,
    eta: f64,
    dataset: &Dataset,
    coeffs: &ChangeCoefficients,
    lambda: f64,
) -> Result<f64> {
    profile_objective_with(theta, eta, dataset, coeffs, lambda, LikelihoodConstant::ThreeN)
}

pub fn profile_objective_with(
    theta: &KernelSpec,
    eta: f64,
    dataset: &Dataset,
    coeffs: &ChangeCoefficients,
    lambda: f64,
    c: LikelihoodConstant,
) -> Result<f64> {
    let res = residual(dataset.y(), coeffs, dataset.time_order())?;
    let design = dataset.design();
    Ok(Profile {
        design: &design,
        residual: &res,
        penalty: lambda * coeffs.l1(),
        constant: c,
    }
    .value(theta, eta)?
    .0)
}

struct Profile<'a> {
    design: &'a DMatrix<f64>,
    residual: &'a DVector<f64>,
    penalty: f64,
    constant: LikelihoodConstant,
}

impl Profile<'_> {
    fn value(&self, theta: &KernelSpec, eta: f64) -> Result<(f64, f64)> {
        let r = corr_matrix(self.design, theta)?;
        let fact = factorize(&r, eta)?;
        let n = self.residual.len();
        let quad = fact.quad_form(self.residual);
        let c = self.constant;
        let tau2 = tau2_update_with(quad, 1.0, self.penalty, n, c);
        Ok((c.factor(n) * tau2.ln() + fact.log_det(), tau2))
    }

    fn at_log(&self, z: &[f64]) -> f64 {
        let (theta_log, eta_log) = z.split_at(z.len() - 1);
        let theta: Vec<f64> = theta_log.iter().map(|v| v.exp()).collect();
        match KernelSpec::from_slice(&theta) {
            Ok(k) => self.value(&k, eta_log[0].exp()).map_or(f64::INFINITY, |v| v.0),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Everything the fit estimated, plus the predictor built from it.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub dataset: Dataset,
    /// Time-sorted copy of `dataset`; the predictor is built on it.
    pub working: Dataset,
    pub hyper: Hyperparameters,
    pub coeffs: ChangeCoefficients,
    /// `U e_hat` without the intercept, in time order.
    pub delta: Vec<f64>,
    pub predictor: GpPredictor,
    pub selection: LambdaSelection,
    /// Profile objective at each outer iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub likelihood_constant: LikelihoodConstant,
}

impl FitResult {
    /// Rebuilds the factorization, `tau2` and predictor from the estimated
    /// pieces. `fit` finishes through this, so a stored estimate reproduces
    /// the same result bit for bit.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        dataset: Dataset,
        theta: KernelSpec,
        eta: f64,
        coeffs: ChangeCoefficients,
        selection: LambdaSelection,
        trace: Vec<f64>,
        iterations: usize,
        converged: bool,
        likelihood_constant: LikelihoodConstant,
    ) -> Result<Self> {
        let working = dataset.sorted_by_time();
        let n = working.n();
        if coeffs.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: coeffs.n(),
            });
        }
        let design = working.design();
        let fact = factorize(&corr_matrix(&design, &theta)?, eta)?;
        let res = residual(working.y(), &coeffs, working.time_order())?;
        let quad = fact.quad_form(&res);
        let lambda = selection.lambda;
        let tau2 = tau2_update_with(quad, lambda, coeffs.l1(), n, likelihood_constant);
        let hyper = Hyperparameters::from_estimates(coeffs.mu, tau2, theta.clone(), eta, lambda);
        let predictor = GpPredictor::new(fact, design, theta, &res, coeffs.mu, tau2)?;
        Ok(Self {
            dataset,
            working,
            hyper,
            delta: coeffs.shock_series(),
            coeffs,
            predictor,
            selection,
            trace,
            iterations,
            converged,
            likelihood_constant,
        })
    }

    pub fn cv_curve(&self) -> &CvCurve {
        &self.selection.curve
    }

    /// Profile objective at the reported estimate.
    pub fn objective(&self) -> f64 {
        let n = self.working.n();
        self.likelihood_constant.factor(n) * self.hyper.tau2.ln()
            + self.predictor.factorization().log_det()
    }
}

#[derive(Clone)]
struct Iterate {
    theta: KernelSpec,
    eta: f64,
    coeffs: ChangeCoefficients,
    selection: LambdaSelection,
}

fn log_params(theta: &KernelSpec, eta: f64) -> Vec<f64> {
    let mut z: Vec<f64> = theta.to_vec().iter().map(|v| v.ln()).collect();
    z.push(eta.ln());
    z
}

fn intercept_selection() -> LambdaSelection {
    LambdaSelection {
        lambda: 0.0,
        index: 0,
        lambda_max: 0.0,
        curve: CvCurve {
            lambdas: vec![0.0],
            mean_error: vec![0.0],
            std_error: vec![0.0],
        },
    }
}

/// Generalized least-squares intercept `1' A^{-1} y / 1' A^{-1} 1`.
fn gls_intercept(fact: &GpFactorization, y: &DVector<f64>) -> f64 {
    let ones = DVector::from_element(y.len(), 1.0);
    let w1 = fact.whiten_vec(&ones);
    let wy = fact.whiten_vec(y);
    w1.dot(&wy) / w1.norm_squared()
}

/// Runs the outer loop. A run that hits `max_outer` returns its best iterate
/// with `converged == false`.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let n = dataset.n();
    if n < 10 {
        return Err(Error::InvalidDataset(format!("need at least 10 observations, got {n}")));
    }
    if config.k_folds > n {
        return Err(Error::param("k_folds", format!("{} folds for {n} observations", config.k_folds)));
    }
    let working = dataset.sorted_by_time();
    let design = working.design();
    let y = DVector::from_column_slice(working.y());
    let steps = cumulative_design(n);
    let folds: FoldAssignment = make_folds(n, config.k_folds, config.seed)?;
    let c = config.likelihood_constant;
    let lasso_opts = LassoOptions {
        relative: true,
        ..LassoOptions::default()
    };

    let dim = working.p() + 1;
    let mut bounds: Vec<(f64, f64)> = vec![(config.theta_bounds.0.ln(), config.theta_bounds.1.ln()); dim];
    bounds.push((config.eta_bounds.0.ln(), config.eta_bounds.1.ln()));
    let nm = NelderMeadOptions {
        max_evals: config.optimizer_max_evals,
        ..NelderMeadOptions::default()
    };

    let mut theta = KernelSpec::uniform(working.p(), 1.0)?;
    let mut eta = 0.01f64.clamp(config.eta_bounds.0, config.eta_bounds.1);
    let mut prev_delta: Vec<f64> = vec![0.0; n];
    let mut trace = Vec::new();
    let mut last: Option<Iterate> = None;
    let mut converged = false;

    for iter in 0..config.max_outer {
        let fact = factorize(&corr_matrix(&design, &theta)?, eta)?;
        let (coeffs, selection) = if config.include_sudden {
            let d = fact.whiten(&steps);
            let r = fact.whiten_vec(&y);
            let selection = select_lambda_cv_with(&d, &r, &folds, config.lambda_grid_size, config.selection_rule(), &lasso_opts)?;
            let problem = LassoProblem::new(&d, &r, false)?;
            let lasso = match solve_along_path(&problem, &selection, &lasso_opts) {
                Ok(fit) => fit.coef,
                Err(Error::LassoNotConverged { .. }) => {
                    // keep the last iterate; the outer loop tolerates it
                    let mut beta = problem.null_solution();
                    for &lam in &selection.curve.lambdas[..=selection.index] {
                        let loose = LassoOptions { kkt_tol: 1e-3, ..lasso_opts };
                        beta = problem.solve_warm(lam, &beta, &loose).map(|f| f.coef).unwrap_or(beta);
                    }
                    beta
                }
                Err(e) => return Err(e),
            };
            (ChangeCoefficients::from_vector(&lasso), selection)
        } else {
            (ChangeCoefficients::intercept_only(n, gls_intercept(&fact, &y)), intercept_selection())
        };

        let res = residual(working.y(), &coeffs, working.time_order())?;
        let lambda = selection.lambda;
        let tau2 = tau2_update_with(fact.quad_form(&res), lambda, coeffs.l1(), n, c);
        let objective = c.factor(n) * tau2.ln() + fact.log_det();
        trace.push(objective);

        let delta = coeffs.shock_series();
        let delta_scale = 1.0 + prev_delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let delta_change = delta
            .iter()
            .zip(&prev_delta)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / delta_scale;

        last = Some(Iterate {
            theta: theta.clone(),
            eta,
            coeffs: coeffs.clone(),
            selection,
        });

        let profile = Profile {
            design: &design,
            residual: &res,
            penalty: lambda * coeffs.l1(),
            constant: c,
        };
        let current = log_params(&theta, eta);
        let mut starts = vec![current.clone()];
        if iter == 0 {
            starts.extend(halton_points(config.optimizer_restarts, &bounds));
        }
        let best = starts
            .par_iter()
            .map(|s| nelder_mead(|z| profile.at_log(z), s, &bounds, &nm))
            .collect::<Vec<_>>()
            .into_iter()
            .reduce(|a, b| if b.value < a.value { b } else { a })
            .expect("at least one start");
        // Only move when the search actually improved on the current point.
        let next = if best.value < profile.at_log(&current) { best.x } else { current.clone() };

        let param_change = next
            .iter()
            .zip(&current)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let (theta_log, eta_log) = next.split_at(dim);
        theta = KernelSpec::from_slice(&theta_log.iter().map(|v| v.exp()).collect::<Vec<_>>())?;
        eta = eta_log[0].exp();
        prev_delta = delta;

        if param_change.max(delta_change) < config.tol {
            converged = true;
            break;
        }
    }

    // Objective values are not comparable across iterates (each has its own
    // cross-validated penalty), so a run that stops at max_outer reports its
    // final state.
    let chosen = last.expect("max_outer >= 1");
    let iterations = trace.len();
    FitResult::assemble(
        dataset.clone(),
        chosen.theta,
        chosen.eta,
        chosen.coeffs,
        chosen.selection,
        trace,
        iterations,
        converged,
        c,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau2_examples() {
        assert_eq!(tau2_update(30.0, 0.0, 5.0, 10), 1.0);
        assert_eq!(tau2_update(0.0, 2.0, 3.0, 1), 2.0);
        assert_eq!(tau2_update(0.0, 0.0, 0.0, 4), 1e-12);
        assert_eq!(tau2_update_with(10.0, 0.0, 0.0, 10, LikelihoodConstant::N), 1.0);
    }

    #[test]
    fn hyperparameter_identities() {
        let h = Hyperparameters::from_estimates(0.3, 0.8, KernelSpec::uniform(1, 2.0).unwrap(), 0.05, 0.4);
        assert!((h.lambda * h.nu - 2.0 * SQRT_2 * h.tau2).abs() < 1e-10);
        assert!((h.eta * h.tau2 - h.sigma2).abs() < 1e-10);
        let z = Hyperparameters::from_estimates(0.0, 1.0, KernelSpec::uniform(0, 1.0).unwrap(), 0.1, 0.0);
        assert!(z.nu.is_infinite());
    }

    #[test]
    fn dataset_scaling_and_order() {
        let d = Dataset::new(
            vec![vec![10.0], vec![30.0], vec![20.0]],
            vec![5.0, 1.0, 3.0],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        assert_eq!(d.time_order(), &[1, 2, 0]);
        assert_eq!(d.t(), &[1.0, 0.0, 0.5]);
        assert_eq!(d.x()[(2, 0)], 0.5);
        assert_eq!(d.raw_t(0), 5.0);
        assert_eq!(d.raw_x(1), vec![30.0]);
        let s = d.sorted_by_time();
        assert_eq!(s.y(), &[2.0, 3.0, 1.0]);
        assert_eq!(s.time_order(), &[0, 1, 2]);
    }

    #[test]
    fn dataset_rejects_duplicate_times() {
        let e = Dataset::new(vec![vec![0.0], vec![1.0]], vec![2.0, 2.0], vec![0.0, 0.0]);
        assert!(matches!(e, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn dataset_rejects_out_of_bounds_inputs() {
        let e = Dataset::with_x_bounds(vec![vec![2.0]], vec![0.0], vec![1.0], vec![(0.0, 1.0)]);
        assert!(matches!(e, Err(Error::OutOfUnitRange { .. })));
    }

    #[test]
    fn run_order_times() {
        let d = Dataset::from_run_order(vec![vec![]; 5], vec![0.0; 5]).unwrap();
        assert_eq!(d.t(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(d.p(), 0);
    }

    #[test]
    fn scalar_profile_objective() {
        let d = Dataset::new(vec![vec![0.5]], vec![0.0], vec![2.0]).unwrap();
        let coeffs = ChangeCoefficients::intercept_only(1, 0.5);
        let k = KernelSpec::uniform(1, 1.0).unwrap();
        let eta = 0.2;
        let got = profile_objective(&k, eta, &d, &coeffs, 0.0).unwrap();
        // quad = 1.5^2 / (1 + eta + jitter); jitter = 1e-10
        let a = 1.0 + eta + 1e-10;
        let want = 3.0 * ((1.5f64 * 1.5 / a) / 3.0).ln() + a.ln();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert_eq!(got.to_bits(), profile_objective(&k, eta, &d, &coeffs, 0.0).unwrap().to_bits());
    }

    #[test]
    fn fit_rejects_small_n() {
        let d = Dataset::from_run_order(vec![vec![0.1]; 5], vec![1.0; 5]).unwrap();
        assert!(fit(&d, &FitConfig::default()).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = FitConfig {
            theta_bounds: (1.0, 0.5),
            ..FitConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(FitConfig::default().validate().is_ok());
    }
}
