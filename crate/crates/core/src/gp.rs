//! Factorization of `R + eta I`, whitening, and the posterior predictive
//! mean and variance of the smooth component.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec};

const JITTER_START_PER_ROW: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Cholesky factor of `R + (eta + jitter) I`.
#[derive(Debug, Clone)]
pub struct GpFactorization {
    chol: Cholesky<f64, Dyn>,
    eta: f64,
    jitter: f64,
    log_det: f64,
}

/// Jitter levels tried in order: `1e-10 n`, then x10, capped by a final
/// attempt at `1e-6`.
fn jitter_schedule(n: usize) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut j = (JITTER_START_PER_ROW * n as f64).min(JITTER_MAX);
    while j <= JITTER_MAX * (1.0 + 1e-12) {
        levels.push(j);
        j *= 10.0;
    }
    if levels.last().is_some_and(|&l| l < JITTER_MAX * (1.0 - 1e-12)) {
        levels.push(JITTER_MAX);
    }
    levels
}

/// Factorizes `R + eta I`, adding the smallest diagonal jitter from the
/// escalation schedule that lets Cholesky succeed.
pub fn factorize(r: &DMatrix<f64>, eta: f64) -> Result<GpFactorization> {
    if !r.is_square() || r.nrows() == 0 {
        return Err(Error::param("R", "must be a non-empty square matrix"));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::param("eta", format!("must be finite and >= 0, got {eta}")));
    }
    let n = r.nrows();
    let mut last = 0.0;
    for jitter in jitter_schedule(n) {
        last = jitter;
        let mut a = r.clone();
        for i in 0..n {
            a[(i, i)] += eta + jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            let l = chol.l_dirty();
            let log_det = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
            if log_det.is_finite() {
                return Ok(GpFactorization {
                    chol,
                    eta,
                    jitter,
                    log_det,
                });
            }
        }
    }
    Err(Error::SingularMatrix { eta, jitter: last })
}

impl GpFactorization {
    pub fn n(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log |R + eta I|` (jitter included).
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Lower-triangular factor `L`.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `L^{-1} m` by forward substitution.
    pub fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.nrows(), self.n(), "whiten: row count mismatch");
        let mut out = m.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn whiten_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        assert_eq!(v.len(), self.n(), "whiten: length mismatch");
        let mut out = v.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    /// `(R + eta I)^{-1} v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// `v' (R + eta I)^{-1} v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        self.whiten_vec(v).norm_squared()
    }
}

/// Plug-in posterior of the smooth component given the shock estimate.
#[derive(Debug, Clone)]
pub struct GpPredictor {
    factorization: GpFactorization,
    train_design: DMatrix<f64>,
    kernel: KernelSpec,
    alpha: DVector<f64>,
    mu_hat: f64,
    tau2_hat: f64,
}

impl GpPredictor {
    /// `residual` is `y - U e_hat` (the intercept is part of `U e_hat`).
    pub fn new(
        factorization: GpFactorization,
        train_design: DMatrix<f64>,
        kernel: KernelSpec,
        residual: &DVector<f64>,
        mu_hat: f64,
        tau2_hat: f64,
    ) -> Result<Self> {
        let n = factorization.n();
        if train_design.nrows() != n || residual.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if train_design.nrows() != n {
                    train_design.nrows()
                } else {
                    residual.len()
                },
            });
        }
        if train_design.ncols() != kernel.input_dim() + 1 {
            return Err(Error::DimensionMismatch {
                expected: kernel.input_dim() + 1,
                got: train_design.ncols(),
            });
        }
        let alpha = factorization.solve(residual);
        Ok(Self {
            factorization,
            train_design,
            kernel,
            alpha,
            mu_hat,
            tau2_hat,
        })
    }

    pub fn factorization(&self) -> &GpFactorization {
        &self.factorization
    }

    pub fn train_design(&self) -> &DMatrix<f64> {
        &self.train_design
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// `(R + eta I)^{-1} (y - U e_hat)`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn tau2_hat(&self) -> f64 {
        self.tau2_hat
    }

    pub fn corr_vector(&self, query: &[f64]) -> Result<DVector<f64>> {
        kernel::corr_vector(&self.train_design, query, &self.kernel)
    }

    pub fn predict_mean(&self, query: &[f64]) -> Result<f64> {
        Ok(self.mu_hat + self.corr_vector(query)?.dot(&self.alpha))
    }

    /// `tau2 (1 - r' (R + eta I)^{-1} r)`, clamped to `[0, tau2]`.
    pub fn predict_var(&self, query: &[f64]) -> Result<f64> {
        let r = self.corr_vector(query)?;
        let explained = self.factorization.quad_form(&r);
        let v = self.tau2_hat * (1.0 - explained);
        Ok(v.clamp(0.0, self.tau2_hat))
    }
}
