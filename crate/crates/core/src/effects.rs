//! Post-fit views: gradual curve over time, the sudden-change series, and
//! prediction slices.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::kernel::dx_weights;
use crate::normal::gaussian_box_integral;

/// A nonzero lasso jump. `index` is the 1-based position in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub index: usize,
    pub time: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    /// Inputs in scaled units.
    pub x: Vec<f64>,
    pub t: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCurves {
    pub t_grid: Vec<f64>,
    pub gradual: Vec<f64>,
    pub sudden_times: Vec<f64>,
    pub change_points: Vec<ChangePoint>,
    pub prediction_grid: Option<Vec<PredictionPoint>>,
}

pub const DEFAULT_GRID: usize = 200;

/// `m` equispaced points on `[0, 1]`.
pub fn unit_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} is outside [0, 1]")))
    }
}

/// `g(t) = mu + (r_t(t) .* d_x)' alpha`: the fitted surface with the known
/// inputs integrated out uniformly over the unit box.
pub fn gradual_effect(fit: &FitResult, t_grid: &[f64]) -> Result<Vec<f64>> {
    let pred = &fit.predictor;
    let kernel = pred.kernel();
    let working = &fit.working;
    let dx = dx_weights(working.x(), kernel.theta_x())?;
    let weighted: DVector<f64> = dx.component_mul(pred.alpha());
    t_grid
        .iter()
        .map(|&t| {
            check_unit("t_grid", t)?;
            let s: f64 = working
                .t()
                .iter()
                .zip(weighted.iter())
                .map(|(&ti, w)| kernel.corr_t(t, ti) * w)
                .sum();
            Ok(pred.mu_hat() + s)
        })
        .collect()
}

/// Time-ordered shock series and the nonzero jumps behind it.
pub fn sudden_series(fit: &FitResult) -> (Vec<f64>, Vec<ChangePoint>) {
    sudden_series_filtered(fit, 0.0)
}

/// As [`sudden_series`], keeping only jumps with `|e| > min_abs`. With
/// `min_abs = 0` every exact lasso nonzero is reported.
pub fn sudden_series_filtered(fit: &FitResult, min_abs: f64) -> (Vec<f64>, Vec<ChangePoint>) {
    let working = &fit.working;
    let points = fit
        .coeffs
        .e_tail
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() > min_abs)
        .map(|(j, &jump)| ChangePoint {
            index: j + 2,
            time: working.raw_t(j + 1),
            jump,
        })
        .collect();
    (fit.delta.clone(), points)
}

/// Posterior mean and sd of the smooth component on a slice at fixed time.
/// `x_grid` rows are scaled inputs; `t_fixed` is scaled time.
pub fn prediction_curve(fit: &FitResult, x_grid: &[Vec<f64>], t_fixed: f64) -> Result<Vec<PredictionPoint>> {
    let pred = &fit.predictor;
    x_grid
        .iter()
        .map(|x| {
            let mut q = x.clone();
            q.push(t_fixed);
            Ok(PredictionPoint {
                x: x.clone(),
                t: t_fixed,
                mean: pred.predict_mean(&q)?,
                sd: pred.predict_var(&q)?.sqrt(),
            })
        })
        .collect()
}

/// Predicted response at the time of observation `index` (1-based, time
/// order): the smooth mean at that time plus the fitted shock level.
pub fn response_curve(fit: &FitResult, x_grid: &[Vec<f64>], index: usize) -> Result<Vec<f64>> {
    let working = &fit.working;
    if index == 0 || index > working.n() {
        return Err(Error::param("index", format!("{index} outside [1, {}]", working.n())));
    }
    let t = working.t()[index - 1];
    let level = fit.delta[index - 1];
    Ok(prediction_curve(fit, x_grid, t)?
        .into_iter()
        .map(|p| p.mean + level)
        .collect())
}

/// Predicted mean with time integrated out over `[0, 1]`, the same
/// convention `gradual_effect` applies to the inputs.
pub fn marginal_prediction(fit: &FitResult, x_grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    let pred = &fit.predictor;
    let kernel = pred.kernel();
    let working = &fit.working;
    let dt: Vec<f64> = working
        .t()
        .iter()
        .map(|&ti| gaussian_box_integral(ti, kernel.theta_t()))
        .collect();
    let rows: Vec<Vec<f64>> = (0..working.n())
        .map(|i| working.x().row(i).iter().copied().collect())
        .collect();
    x_grid
        .iter()
        .map(|x| {
            if x.len() != kernel.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: kernel.input_dim(),
                    got: x.len(),
                });
            }
            let s: f64 = rows
                .iter()
                .zip(&dt)
                .zip(pred.alpha().iter())
                .map(|((xi, d), a)| kernel.corr_x(x, xi) * d * a)
                .sum();
            Ok(pred.mu_hat() + s)
        })
        .collect()
}

/// Gradual curve on `m` grid points plus the sudden series.
pub fn extract(fit: &FitResult, m: usize) -> Result<EffectCurves> {
    let t_grid = unit_grid(m);
    let gradual = gradual_effect(fit, &t_grid)?;
    let (sudden_times, change_points) = sudden_series(fit);
    Ok(EffectCurves {
        t_grid,
        gradual,
        sudden_times,
        change_points,
        prediction_grid: None,
    })
}

/// Neighbouring jumps merged into one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeEvent {
    /// 1-based time index of the largest member.
    pub index: usize,
    pub net_jump: f64,
    pub members: Vec<usize>,
}

/// Merges jumps whose indices are at most `gap` apart and sums them.
pub fn cluster_changes(points: &[ChangePoint], gap: usize) -> Vec<ChangeEvent> {
    let mut events: Vec<ChangeEvent> = Vec::new();
    let mut biggest: Vec<f64> = Vec::new();
    for cp in points {
        match events.last_mut() {
            Some(ev) if cp.index - ev.members.last().copied().unwrap_or(0) <= gap => {
                ev.net_jump += cp.jump;
                ev.members.push(cp.index);
                let b = biggest.last_mut().expect("paired with events");
                if cp.jump.abs() > *b {
                    *b = cp.jump.abs();
                    ev.index = cp.index;
                }
            }
            _ => {
                events.push(ChangeEvent {
                    index: cp.index,
                    net_jump: cp.jump,
                    members: vec![cp.index],
                });
                biggest.push(cp.jump.abs());
            }
        }
    }
    events
}

/// Jumps at least `rel` times the largest jump, with survivors closer than
/// `gap` indices merged into one event.
pub fn dominant_changes(points: &[ChangePoint], gap: usize, rel: f64) -> Vec<ChangeEvent> {
    let top = points.iter().map(|p| p.jump.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    let big: Vec<ChangePoint> = points.iter().filter(|p| p.jump.abs() >= rel * top).cloned().collect();
    cluster_changes(&big, gap)
}
