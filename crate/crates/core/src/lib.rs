//! Gaussian-process modelling of experiment data with a sparse cumulative
//! shock term.
//!
//! Observation time is treated as one more input of the process so that slow
//! drift ("gradual" effects) is absorbed by the smooth part of the model,
//! while abrupt level changes ("sudden" effects) are captured by a lasso-
//! penalized step series `delta = U e`. Both are estimated jointly by an
//! empirical-Bayes outer loop (see [`estimator::fit`]).
//!
//! Module map:
//!
//! - [`kernel`]: product squared-exponential correlation and its analytic
//!   integral over the unit box.
//! - [`gp`]: factorization of `R + eta I`, whitening, posterior mean/variance.
//! - [`sparse`]: the cumulative-sum operator, lasso coordinate descent and
//!   cross-validated penalty selection.
//! - [`estimator`]: datasets, hyperparameters and the outer fitting loop.
//! - [`effects`]: gradual curve, sudden series and prediction slices.
//! - [`simgen`]: seeded synthetic studies and the benchmark harness.

pub mod effects;
pub mod error;
pub mod estimator;
pub mod gp;
pub mod kernel;
pub mod normal;
pub mod optim;
pub mod simgen;
pub mod sparse;
pub mod stats;

pub use effects::{ChangePoint, EffectCurves, PredictionPoint};
pub use error::{Error, Result};
pub use estimator::{
    Dataset, FitConfig, FitResult, Hyperparameters, LikelihoodConstant, Scaling,
};
pub use gp::{GpFactorization, GpPredictor};
pub use kernel::KernelSpec;
pub use sparse::{ChangeCoefficients, CvCurve, FoldAssignment, LambdaSelection};
