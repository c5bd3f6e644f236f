//! Product squared-exponential correlation over `(x, t)`.
//!
//! Points are laid out as `p` input coordinates followed by the time
//! coordinate. The correlation between two points is
//! `exp(-sum_k theta_x[k] (a_k - b_k)^2) * exp(-theta_t (a_t - b_t)^2)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::gaussian_box_integral;

/// Inverse squared lengthscales for the input dimensions and for time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    theta_x: Vec<f64>,
    theta_t: f64,
}

fn check_theta(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn new(theta_x: Vec<f64>, theta_t: f64) -> Result<Self> {
        for &v in &theta_x {
            check_theta("theta_x", v)?;
        }
        check_theta("theta_t", theta_t)?;
        Ok(Self { theta_x, theta_t })
    }

    /// All parameters set to `value`.
    pub fn uniform(p: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; p], value)
    }

    pub fn theta_x(&self) -> &[f64] {
        &self.theta_x
    }

    pub fn theta_t(&self) -> f64 {
        self.theta_t
    }

    /// Number of known inputs `p` (points carry `p + 1` coordinates).
    pub fn input_dim(&self) -> usize {
        self.theta_x.len()
    }

    /// `theta_x` followed by `theta_t`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.theta_x.clone();
        v.push(self.theta_t);
        v
    }

    pub fn from_slice(all: &[f64]) -> Result<Self> {
        match all.split_last() {
            Some((&t, x)) => Self::new(x.to_vec(), t),
            None => Err(Error::param("theta", "needs at least the time component")),
        }
    }

    fn weight(&self, k: usize) -> f64 {
        if k < self.theta_x.len() {
            self.theta_x[k]
        } else {
            self.theta_t
        }
    }

    /// Correlation restricted to the input coordinates.
    pub fn corr_x(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = self
            .theta_x
            .iter()
            .zip(a.iter().zip(b))
            .map(|(th, (u, v))| th * (u - v) * (u - v))
            .sum();
        (-s).exp()
    }

    /// Correlation along time only.
    pub fn corr_t(&self, a: f64, b: f64) -> f64 {
        (-self.theta_t * (a - b) * (a - b)).exp()
    }
}

/// Correlation between two `(p + 1)`-dimensional points.
pub fn corr(a: &[f64], b: &[f64], spec: &KernelSpec) -> Result<f64> {
    let dim = spec.input_dim() + 1;
    for len in [a.len(), b.len()] {
        if len != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: len,
            });
        }
    }
    Ok(corr_unchecked(a, b, spec))
}

pub(crate) fn corr_unchecked(a: &[f64], b: &[f64], spec: &KernelSpec) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(k, (u, v))| spec.weight(k) * (u - v) * (u - v))
        .sum();
    (-s).exp()
}

fn row(points: &DMatrix<f64>, i: usize) -> Vec<f64> {
    points.row(i).iter().copied().collect()
}

fn check_design(points: &DMatrix<f64>, spec: &KernelSpec) -> Result<()> {
    let dim = spec.input_dim() + 1;
    if points.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: points.ncols(),
        });
    }
    if points.nrows() == 0 {
        return Err(Error::param("points", "design must have at least one row"));
    }
    Ok(())
}

/// `n x n` correlation matrix of the rows of `points` (an `n x (p + 1)` design).
pub fn corr_matrix(points: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    check_design(points, spec)?;
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| row(points, i)).collect();
    let mut r = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = corr_unchecked(&rows[i], &rows[j], spec);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    Ok(r)
}

/// Correlations between `query` and every row of `points`.
pub fn corr_vector(points: &DMatrix<f64>, query: &[f64], spec: &KernelSpec) -> Result<DVector<f64>> {
    check_design(points, spec)?;
    if query.len() != points.ncols() {
        return Err(Error::DimensionMismatch {
            expected: points.ncols(),
            got: query.len(),
        });
    }
    Ok(DVector::from_iterator(
        points.nrows(),
        (0..points.nrows()).map(|i| corr_unchecked(&row(points, i), query, spec)),
    ))
}

/// `(d_x)_i = int_{[0,1]^p} R_x(x - x_i) dx`, in closed form through the
/// normal CDF. `x` is the `n x p` input block, already scaled to the unit box.
pub fn dx_weights(x: &DMatrix<f64>, theta_x: &[f64]) -> Result<DVector<f64>> {
    if x.ncols() != theta_x.len() {
        return Err(Error::DimensionMismatch {
            expected: theta_x.len(),
            got: x.ncols(),
        });
    }
    for &th in theta_x {
        check_theta("theta_x", th)?;
    }
    for (column, col) in x.column_iter().enumerate() {
        for (row, &value) in col.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitRange { row, column, value });
            }
        }
    }
    Ok(DVector::from_iterator(
        x.nrows(),
        (0..x.nrows()).map(|i| {
            theta_x
                .iter()
                .enumerate()
                .map(|(k, &th)| gaussian_box_integral(x[(i, k)], th))
                .product()
        }),
    ))
}
