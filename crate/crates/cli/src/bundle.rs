//! The result bundle: `fit.json` plus the effect tables derived from it.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use lurk_core::effects::{gradual_effect, prediction_curve, sudden_series, unit_grid, ChangePoint};
use lurk_core::estimator::LikelihoodConstant;
use lurk_core::{ChangeCoefficients, Dataset, FitConfig, FitResult, Hyperparameters, LambdaSelection};
use serde::{Deserialize, Serialize};

use crate::data::RawData;

pub const FORMAT: &str = "lurk-fit/1";

/// Grid settings for the effect tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSettings {
    pub grid_size: usize,
    /// Scaled time of the prediction slice.
    pub predict_t: f64,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            grid_size: lurk_core::effects::DEFAULT_GRID,
            predict_t: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredData {
    pub input_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub x_bounds: Vec<(f64, f64)>,
}

/// Everything needed to rebuild the fitted model without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBundle {
    pub format: String,
    pub data: StoredData,
    pub config: FitConfig,
    pub outputs: OutputSettings,
    pub hyperparameters: Hyperparameters,
    pub coefficients: ChangeCoefficients,
    pub change_points: Vec<ChangePoint>,
    pub selection: LambdaSelection,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub likelihood_constant: LikelihoodConstant,
}

impl FitBundle {
    pub fn new(raw: &RawData, config: &FitConfig, outputs: OutputSettings, fit: &FitResult) -> Self {
        let (_, change_points) = sudden_series(fit);
        Self {
            format: FORMAT.into(),
            data: StoredData {
                input_names: raw.input_names.clone(),
                x: raw.x.clone(),
                t: raw.t.clone(),
                y: raw.y.clone(),
                x_bounds: fit.dataset.scaling().x_bounds.clone(),
            },
            config: config.clone(),
            outputs,
            hyperparameters: fit.hyper.clone(),
            coefficients: fit.coeffs.clone(),
            change_points,
            selection: fit.selection.clone(),
            trace: fit.trace.clone(),
            iterations: fit.iterations,
            converged: fit.converged,
            likelihood_constant: fit.likelihood_constant,
        }
    }

    /// Rebuilds the fit from the stored estimates.
    pub fn restore(&self) -> anyhow::Result<FitResult> {
        if self.format != FORMAT {
            bail!("unsupported bundle format '{}'", self.format);
        }
        let d = &self.data;
        let dataset = Dataset::with_x_bounds(d.x.clone(), d.t.clone(), d.y.clone(), d.x_bounds.clone())?;
        let h = &self.hyperparameters;
        Ok(FitResult::assemble(
            dataset,
            h.theta.clone(),
            h.eta,
            self.coefficients.clone(),
            self.selection.clone(),
            self.trace.clone(),
            self.iterations,
            self.converged,
            self.likelihood_constant,
        )?)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Writes `sudden.csv`, `gradual.csv` and `prediction.csv` into `dir`.
/// Times are in raw units; `prediction.csv` varies the first input across
/// its range with any others held at mid-range.
pub fn write_effects(fit: &FitResult, outputs: &OutputSettings, names: &[String], dir: &Path) -> anyhow::Result<()> {
    let working = &fit.working;
    let scaling = working.scaling();

    let mut w = csv::Writer::from_path(dir.join("sudden.csv"))?;
    w.write_record(["time", "delta", "jump"])?;
    let jumps: Vec<f64> = fit.coeffs.to_vector().iter().copied().skip(1).collect();
    for i in 0..working.n() {
        let jump = if i == 0 { 0.0 } else { jumps[i - 1] };
        w.write_record([
            working.raw_t(i).to_string(),
            fit.delta[i].to_string(),
            jump.to_string(),
        ])?;
    }
    w.flush()?;

    let grid = unit_grid(outputs.grid_size);
    let g = gradual_effect(fit, &grid)?;
    let mut w = csv::Writer::from_path(dir.join("gradual.csv"))?;
    w.write_record(["t", "g"])?;
    for (u, v) in grid.iter().zip(&g) {
        w.write_record([scaling.t_from_unit(*u).to_string(), v.to_string()])?;
    }
    w.flush()?;

    let p = working.p();
    let mut w = csv::Writer::from_path(dir.join("prediction.csv"))?;
    let mut header: Vec<String> = names.to_vec();
    header.extend(["mean".to_string(), "sd".to_string()]);
    w.write_record(&header)?;
    if p > 0 {
        let xs: Vec<Vec<f64>> = grid
            .iter()
            .map(|&u| (0..p).map(|k| if k == 0 { u } else { 0.5 }).collect())
            .collect();
        for point in prediction_curve(fit, &xs, outputs.predict_t)? {
            let mut rec: Vec<String> = (0..p).map(|k| scaling.x_from_unit(k, point.x[k]).to_string()).collect();
            rec.push(point.mean.to_string());
            rec.push(point.sd.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
