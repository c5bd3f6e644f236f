//! Seeded synthetic studies: a one-dimensional test function with a linear
//! drift and persistent shocks, and a shot campaign with a hidden energy
//! degradation that is reset by a tune-up. Also the benchmark harness that
//! fits them repeatedly and scores the fitted effects against the truth.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effects::{self, unit_grid};
use crate::error::{Error, Result};
use crate::estimator::{fit, Dataset, FitConfig, FitResult};
use crate::stats::{centered_mse, median, mse, spearman};

/// `sin(30 (x - 0.9)^4) cos(2 (x - 0.9)) + (x - 0.9) / 2`.
pub fn xiong_f(x: f64) -> f64 {
    let d = x - 0.9;
    (30.0 * d.powi(4)).sin() * (2.0 * d).cos() + d / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    pub levels: usize,
    pub replicates: usize,
    pub randomize: bool,
    pub noise_sd: f64,
    pub shock_magnitude: f64,
    /// 1-based time indices receiving a jump of `±shock_magnitude`.
    pub shock_indices: Vec<usize>,
    pub trend_slope: f64,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            levels: 50,
            replicates: 2,
            randomize: true,
            noise_sd: 0.01,
            shock_magnitude: 0.5,
            shock_indices: vec![10, 30, 50, 70, 90],
            trend_slope: 2.0,
            seed: 0,
        }
    }
}

impl ToySpec {
    pub fn n(&self) -> usize {
        self.levels * self.replicates
    }

    /// Default shock positions moved to the same fractions of the run for
    /// a run of `n` observations (identity at `n = 100`).
    pub fn scaled_shock_indices(n: usize) -> Vec<usize> {
        [10usize, 30, 50, 70, 90]
            .iter()
            .map(|&k| ((k - 1) as f64 / 99.0 * (n - 1) as f64).round() as usize + 1)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.replicates == 0 {
            return Err(Error::param("levels", "levels and replicates must be positive"));
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::param("levels", "need at least two observations"));
        }
        if let Some(&k) = self.shock_indices.iter().find(|&&k| k < 2 || k > n) {
            return Err(Error::param("shock_indices", format!("{k} outside [2, {n}]")));
        }
        if self.noise_sd.is_nan() || self.noise_sd < 0.0 {
            return Err(Error::param("noise_sd", "must be >= 0"));
        }
        Ok(())
    }
}

/// What the generator injected, for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: String,
    /// Jump sizes in time order; entry 0 is always zero.
    pub jumps: Vec<f64>,
    /// Cumulative shock series in time order.
    pub delta: Vec<f64>,
    /// Linear drift slope over scaled time (0 when there is none).
    pub trend_slope: f64,
    /// True response curve on `x_grid` (scaled inputs, p = 1).
    pub x_grid: Vec<f64>,
    pub f_grid: Vec<f64>,
    /// 1-based time indices with an injected jump.
    pub shock_indices: Vec<usize>,
    /// 1-based shot indices that immediately follow a tune-up.
    pub tune_up_shots: Vec<usize>,
}

fn cumulative(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, &e| {
            *acc += e;
            Some(*acc)
        })
        .collect()
}

pub fn gen_toy(spec: &ToySpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut x: Vec<f64> = (1..=spec.levels)
        .flat_map(|i| std::iter::repeat_n((i as f64 - 0.5) / spec.levels as f64, spec.replicates))
        .collect();
    if spec.randomize {
        x.shuffle(&mut rng);
    }

    let mut jumps = vec![0.0; n];
    for &k in &spec.shock_indices {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        jumps[k - 1] = sign * spec.shock_magnitude;
    }
    let delta = cumulative(&jumps);
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::param("noise_sd", e.to_string()))?;

    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| xiong_f(x[i]) + spec.trend_slope * (t[i] - 0.5) + delta[i] + noise.sample(&mut rng))
        .collect();

    let dataset = Dataset::with_x_bounds(x.iter().map(|&v| vec![v]).collect(), t, y, vec![(0.0, 1.0)])?;
    let x_grid = unit_grid(effects::DEFAULT_GRID);
    let f_grid = x_grid.iter().map(|&v| xiong_f(v)).collect();
    let truth = GroundTruth {
        kind: "toy".into(),
        jumps,
        delta,
        trend_slope: spec.trend_slope,
        x_grid,
        f_grid,
        shock_indices: spec.shock_indices.clone(),
        tune_up_shots: Vec::new(),
    };
    Ok((dataset, truth))
}

/// Energy-to-yield map for the degradation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum YieldCurve {
    /// Synthetic stand-in: `log10 Y = a + b (1 - exp(-c E / 2500))`.
    Saturating { a: f64, b: f64, c: f64 },
    /// `(energy, yield)` pairs sorted by energy, interpolated linearly and
    /// held constant past either end.
    Tabulated(Vec<(f64, f64)>),
}

impl Default for YieldCurve {
    fn default() -> Self {
        YieldCurve::Saturating { a: 12.0, b: 2.5, c: 2.0 }
    }
}

impl YieldCurve {
    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param("yield table", "need at least two rows"));
        }
        if points.iter().any(|(e, y)| !e.is_finite() || !y.is_finite() || *y <= 0.0) {
            return Err(Error::param("yield table", "energies must be finite and yields positive"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::param("yield table", "duplicate energy"));
        }
        Ok(YieldCurve::Tabulated(points))
    }

    pub fn eval(&self, energy: f64) -> f64 {
        match self {
            YieldCurve::Saturating { a, b, c } => {
                10f64.powf(a + b * (1.0 - (-c * energy / 2500.0).exp()))
            }
            YieldCurve::Tabulated(pts) => {
                let first = pts[0];
                let last = pts[pts.len() - 1];
                if energy <= first.0 {
                    return first.1;
                }
                if energy >= last.0 {
                    return last.1;
                }
                let k = pts.partition_point(|p| p.0 <= energy);
                let (e0, y0) = pts[k - 1];
                let (e1, y1) = pts[k];
                y0 + (y1 - y0) * (energy - e0) / (e1 - e0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    /// Shots between tune-ups.
    pub shots_per_tuneup: usize,
    pub levels: usize,
    pub replicates: usize,
    pub energy_range: (f64, f64),
    pub yield_curve: YieldCurve,
    /// Report `log10(yield)` rather than the raw yield.
    pub log_response: bool,
    /// `false` forces the degradation factor to 1.
    pub degrade: bool,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            shots_per_tuneup: 50,
            levels: 50,
            replicates: 2,
            energy_range: (100.0, 2500.0),
            yield_curve: YieldCurve::default(),
            log_response: true,
            degrade: true,
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

/// `1 - 0.5 (s / S)^2` for `s` shots since the last tune-up.
pub fn degradation_factor(s: usize, shots_per_tuneup: usize) -> Result<f64> {
    if s >= shots_per_tuneup {
        return Err(Error::param(
            "s",
            format!("{s} shots since tune-up, but a tune-up happens every {shots_per_tuneup}"),
        ));
    }
    let r = s as f64 / shots_per_tuneup as f64;
    Ok(1.0 - 0.5 * r * r)
}

pub fn gen_degradation_study(spec: &DegradationSpec) -> Result<(Dataset, GroundTruth)> {
    if spec.levels < 2 || spec.replicates == 0 || spec.shots_per_tuneup == 0 {
        return Err(Error::param("levels", "need >= 2 levels, >= 1 replicate, S >= 1"));
    }
    let (lo, hi) = spec.energy_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::param("energy_range", "need 0 < lo < hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let step = (hi - lo) / (spec.levels - 1) as f64;
    let mut energies: Vec<f64> = (0..spec.levels)
        .flat_map(|j| std::iter::repeat_n(lo + j as f64 * step, spec.replicates))
        .collect();
    energies.shuffle(&mut rng);
    let n = energies.len();
    let noise = Normal::new(0.0, spec.noise_sd).map_err(|e| Error::param("noise_sd", e.to_string()))?;
    let respond = |e: f64| {
        let y = spec.yield_curve.eval(e);
        if spec.log_response {
            y.log10()
        } else {
            y
        }
    };

    let mut y = Vec::with_capacity(n);
    for (i, &e) in energies.iter().enumerate() {
        let s = i % spec.shots_per_tuneup;
        let factor = if spec.degrade {
            degradation_factor(s, spec.shots_per_tuneup)?
        } else {
            1.0
        };
        y.push(respond(factor * e) + noise.sample(&mut rng));
    }

    let x_rows = energies.iter().map(|&e| vec![e]).collect();
    let t = (1..=n).map(|i| i as f64).collect();
    let dataset = Dataset::with_x_bounds(x_rows, t, y, vec![(lo, hi)])?;
    let x_grid = unit_grid(effects::DEFAULT_GRID);
    let f_grid = x_grid.iter().map(|&u| respond(lo + u * (hi - lo))).collect();
    let tune_up_shots: Vec<usize> = (1..)
        .map(|k| k * spec.shots_per_tuneup + 1)
        .take_while(|&s| s <= n)
        .collect();
    let truth = GroundTruth {
        kind: "degradation".into(),
        jumps: vec![0.0; n],
        delta: vec![0.0; n],
        trend_slope: 0.0,
        x_grid,
        f_grid,
        shock_indices: Vec::new(),
        tune_up_shots,
    };
    Ok((dataset, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Replication,
    Randomization,
    Degradation,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replication" => Ok(Suite::Replication),
            "randomization" => Ok(Suite::Randomization),
            "degradation" => Ok(Suite::Degradation),
            other => Err(Error::param("suite", format!("unknown suite `{other}`"))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Suite::Replication => "replication",
            Suite::Randomization => "randomization",
            Suite::Degradation => "degradation",
        })
    }
}

/// Scores of one fit against its ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub sudden: f64,
    pub gradual: Option<f64>,
    pub prediction: f64,
    /// Degradation only: squared error of the predicted response right
    /// after a reset against the undegraded curve.
    pub reset_prediction: Option<f64>,
}

/// Sudden: shock series over the observation times. Gradual: mean-centred
/// curve against the drift on a 200-point time grid. Prediction: the
/// time-marginalized mean against the true curve on its 200-point grid.
/// Reset prediction (degradation only): see [`reset_prediction`].
pub fn score_fit(fit: &FitResult, truth: &GroundTruth) -> Result<Scores> {
    let sudden = mse(&fit.delta, &truth.delta);
    let gradual = if truth.kind == "toy" {
        let grid = unit_grid(effects::DEFAULT_GRID);
        let g = effects::gradual_effect(fit, &grid)?;
        let trend: Vec<f64> = grid.iter().map(|&t| truth.trend_slope * (t - 0.5)).collect();
        Some(centered_mse(&g, &trend))
    } else {
        None
    };
    let xs: Vec<Vec<f64>> = truth.x_grid.iter().map(|&x| vec![x]).collect();
    let pred = effects::marginal_prediction(fit, &xs)?;
    let reset = if truth.kind == "degradation" {
        Some(mse(&reset_prediction(fit, truth)?, &truth.f_grid))
    } else {
        None
    };
    Ok(Scores {
        sudden,
        gradual,
        prediction: mse(&pred, &truth.f_grid),
        reset_prediction: reset,
    })
}

/// Predicted response on the truth grid for a freshly reset machine: the
/// response curve at shot 1 and at every post-tune-up shot, averaged. This
/// is the state the undegraded curve describes.
pub fn reset_prediction(fit: &FitResult, truth: &GroundTruth) -> Result<Vec<f64>> {
    let xs: Vec<Vec<f64>> = truth.x_grid.iter().map(|&x| vec![x]).collect();
    let shots: Vec<usize> = std::iter::once(1).chain(truth.tune_up_shots.iter().copied()).collect();
    let mut acc = vec![0.0; xs.len()];
    for &shot in &shots {
        for (a, v) in acc.iter_mut().zip(effects::response_curve(fit, &xs, shot)?) {
            *a += v;
        }
    }
    Ok(acc.into_iter().map(|a| a / shots.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub suite: Suite,
    pub config: String,
    pub repeat: usize,
    pub seed: u64,
    pub sudden_mse: Option<f64>,
    pub gradual_mse: Option<f64>,
    pub prediction_mse: Option<f64>,
    /// Toy suites only: exactly one dominant change per injected shock,
    /// each within two indices and with the right sign.
    pub shocks_recovered: Option<bool>,
    /// Toy suites only: Spearman correlation of the gradual curve with time.
    pub gradual_spearman: Option<f64>,
    /// Degradation suite only: a dominant change within two shots of a
    /// tune-up.
    pub tune_up_detected: Option<bool>,
    /// Degradation suite only: reset-prediction RMSE of the fit and of a
    /// fit without the sudden-change term.
    pub reset_rmse: Option<f64>,
    pub baseline_reset_rmse: Option<f64>,
    pub converged: Option<bool>,
    /// Wall time of the main fit.
    pub fit_seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub median_sudden: Option<f64>,
    pub median_gradual: Option<f64>,
    pub median_prediction: Option<f64>,
    pub detection_rate: Option<f64>,
    /// Share of repeats where the fit's reset prediction beats the baseline.
    pub baseline_win_rate: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    pub summary: Vec<SummaryRow>,
}

impl BenchmarkTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn summary_for(&self, config: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.config == config)
    }
}

/// Per-repeat seed; shared by every configuration of that repeat so the
/// comparisons are paired.
pub fn repeat_seed(base: u64, repeat: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(repeat as u64)
}

/// Generator configurations of a suite, with their labels.
pub fn suite_configs(suite: Suite) -> Vec<(String, Generator)> {
    let toy = |replicates: usize, randomize: bool| {
        let n = 50 * replicates;
        Generator::Toy(ToySpec {
            replicates,
            randomize,
            shock_indices: ToySpec::scaled_shock_indices(n),
            ..ToySpec::default()
        })
    };
    match suite {
        Suite::Replication => vec![
            ("replicates=1".into(), toy(1, true)),
            ("replicates=2".into(), toy(2, true)),
            ("replicates=5".into(), toy(5, true)),
        ],
        Suite::Randomization => vec![
            ("sorted".into(), toy(2, false)),
            ("randomized".into(), toy(2, true)),
        ],
        Suite::Degradation => vec![("degradation".into(), Generator::Degradation(DegradationSpec::default()))],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Toy(ToySpec),
    Degradation(DegradationSpec),
}

impl Generator {
    pub fn generate(&self, seed: u64) -> Result<(Dataset, GroundTruth)> {
        match self {
            Generator::Toy(s) => gen_toy(&ToySpec { seed, ..s.clone() }),
            Generator::Degradation(s) => gen_degradation_study(&DegradationSpec { seed, ..s.clone() }),
        }
    }
}

/// Dominant-change rule shared by the scorers: a jump counts when it is at
/// least half the largest jump, and counted jumps within 2 indices merge.
pub const EVENT_GAP: usize = 2;
pub const EVENT_REL: f64 = 0.5;

/// Whether a dominant change lies within `tolerance` indices of `target`.
pub fn detects_change_near(fit: &FitResult, target: usize, tolerance: usize) -> bool {
    let (_, points) = effects::sudden_series(fit);
    effects::dominant_changes(&points, EVENT_GAP, EVENT_REL)
        .iter()
        .any(|e| e.members.iter().any(|&m| m.abs_diff(target) <= tolerance))
}

/// Exactly one dominant change per injected shock, each within two indices
/// of it and with the injected sign.
pub fn recovers_shocks(fit: &FitResult, truth: &GroundTruth) -> bool {
    let (_, points) = effects::sudden_series(fit);
    let events = effects::dominant_changes(&points, EVENT_GAP, EVENT_REL);
    events.len() == truth.shock_indices.len()
        && truth.shock_indices.iter().all(|&k| {
            let sign = truth.jumps[k - 1].signum();
            events
                .iter()
                .any(|e| e.index.abs_diff(k) <= 2 && e.net_jump.signum() == sign)
        })
}

fn run_cell(suite: Suite, label: &str, gen: &Generator, repeat: usize, seed: u64, cfg: &FitConfig) -> BenchmarkRow {
    let mut row = BenchmarkRow {
        suite,
        config: label.to_string(),
        repeat,
        seed,
        sudden_mse: None,
        gradual_mse: None,
        prediction_mse: None,
        shocks_recovered: None,
        gradual_spearman: None,
        tune_up_detected: None,
        reset_rmse: None,
        baseline_reset_rmse: None,
        converged: None,
        fit_seconds: None,
        error: None,
    };
    let outcome = gen.generate(seed).and_then(|(data, truth)| {
        let cfg = FitConfig { seed, ..cfg.clone() };
        let started = Instant::now();
        let fitted = fit(&data, &cfg)?;
        let seconds = started.elapsed().as_secs_f64();
        let scores = score_fit(&fitted, &truth)?;
        let baseline = if suite == Suite::Degradation {
            let base = fit(&data, &FitConfig { include_sudden: false, ..cfg })?;
            score_fit(&base, &truth)?.reset_prediction
        } else {
            None
        };
        Ok((fitted, truth, scores, baseline, seconds))
    });
    match outcome {
        Ok((fitted, truth, scores, baseline, seconds)) => {
            row.converged = Some(fitted.converged);
            row.fit_seconds = Some(seconds);
            row.prediction_mse = Some(scores.prediction);
            if suite == Suite::Degradation {
                row.tune_up_detected = Some(
                    truth
                        .tune_up_shots
                        .iter()
                        .all(|&s| detects_change_near(&fitted, s, 2)),
                );
                row.reset_rmse = scores.reset_prediction.map(f64::sqrt);
                row.baseline_reset_rmse = baseline.map(f64::sqrt);
            } else {
                row.sudden_mse = Some(scores.sudden);
                row.gradual_mse = scores.gradual;
                row.shocks_recovered = Some(recovers_shocks(&fitted, &truth));
                let grid = unit_grid(effects::DEFAULT_GRID);
                row.gradual_spearman = effects::gradual_effect(&fitted, &grid).ok().map(|g| spearman(&g, &grid));
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Generates, fits and scores every configuration of `suite` `repeats`
/// times. Failed cells are recorded, not fatal.
pub fn benchmark(suite: Suite, repeats: usize, seed: u64, cfg: &FitConfig) -> Result<BenchmarkTable> {
    if repeats == 0 {
        return Err(Error::param("repeats", "must be positive"));
    }
    let configs = suite_configs(suite);
    let cells: Vec<(usize, usize)> = (0..repeats)
        .flat_map(|r| (0..configs.len()).map(move |c| (r, c)))
        .collect();
    let mut rows: Vec<BenchmarkRow> = cells
        .par_iter()
        .map(|&(r, c)| {
            let (label, gen) = &configs[c];
            run_cell(suite, label, gen, r, repeat_seed(seed, r), cfg)
        })
        .collect();
    rows.sort_by(|a, b| (a.repeat, &a.config).cmp(&(b.repeat, &b.config)));

    let summary = configs
        .iter()
        .map(|(label, _)| {
            let mine: Vec<&BenchmarkRow> = rows.iter().filter(|r| &r.config == label).collect();
            let col = |f: fn(&BenchmarkRow) -> Option<f64>| {
                median(&mine.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
            };
            let rate = |v: Vec<bool>| (!v.is_empty()).then(|| v.iter().filter(|&&d| d).count() as f64 / v.len() as f64);
            let detections: Vec<bool> = mine.iter().filter_map(|r| r.tune_up_detected).collect();
            let wins: Vec<bool> = mine
                .iter()
                .filter_map(|r| Some(r.reset_rmse? < r.baseline_reset_rmse?))
                .collect();
            SummaryRow {
                config: label.clone(),
                median_sudden: col(|r| r.sudden_mse),
                median_gradual: col(|r| r.gradual_mse),
                median_prediction: col(|r| r.prediction_mse),
                detection_rate: rate(detections),
                baseline_win_rate: rate(wins),
                failures: mine.iter().filter(|r| r.error.is_some()).count(),
            }
        })
        .collect();
    Ok(BenchmarkTable { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xiong_values() {
        assert_eq!(xiong_f(0.9), 0.0);
        let want = (30.0 * 0.1f64.powi(4)).sin() * 0.2f64.cos() + 0.05;
        assert!((xiong_f(1.0) - want).abs() < 1e-15);
    }

    #[test]
    fn toy_replication_layout() {
        let (d, _) = gen_toy(&ToySpec { seed: 3, ..ToySpec::default() }).unwrap();
        assert_eq!(d.n(), 100);
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..d.n() {
            *counts.entry((d.x()[(i, 0)] * 1e6).round() as i64).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 50);
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn toy_without_noise_shocks_or_trend_is_f() {
        let spec = ToySpec {
            noise_sd: 0.0,
            shock_indices: vec![],
            trend_slope: 0.0,
            ..ToySpec::default()
        };
        let (d, truth) = gen_toy(&spec).unwrap();
        for i in 0..d.n() {
            assert_eq!(d.y()[i], xiong_f(d.x()[(i, 0)]));
        }
        assert!(truth.delta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn toy_is_deterministic() {
        let s = ToySpec { seed: 42, ..ToySpec::default() };
        assert_eq!(gen_toy(&s).unwrap(), gen_toy(&s).unwrap());
        let other = ToySpec { seed: 43, ..ToySpec::default() };
        assert_ne!(gen_toy(&s).unwrap().0, gen_toy(&other).unwrap().0);
    }

    #[test]
    fn toy_sorted_is_ascending() {
        let (d, _) = gen_toy(&ToySpec { randomize: false, ..ToySpec::default() }).unwrap();
        let x: Vec<f64> = d.x().column(0).iter().copied().collect();
        assert!(x.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn toy_truth_shocks() {
        let (_, truth) = gen_toy(&ToySpec { seed: 9, ..ToySpec::default() }).unwrap();
        for (i, &e) in truth.jumps.iter().enumerate() {
            if [10, 30, 50, 70, 90].contains(&(i + 1)) {
                assert_eq!(e.abs(), 0.5);
            } else {
                assert_eq!(e, 0.0);
            }
        }
    }

    #[test]
    fn toy_rejects_bad_shock_index() {
        let s = ToySpec {
            replicates: 1,
            ..ToySpec::default()
        };
        assert!(gen_toy(&s).is_err());
    }

    #[test]
    fn scaled_shock_positions() {
        assert_eq!(ToySpec::scaled_shock_indices(100), vec![10, 30, 50, 70, 90]);
        assert_eq!(ToySpec::scaled_shock_indices(50), vec![5, 15, 25, 35, 45]);
    }

    #[test]
    fn degradation_factor_values() {
        assert_eq!(degradation_factor(0, 50).unwrap(), 1.0);
        assert_eq!(degradation_factor(25, 50).unwrap(), 0.875);
        assert!((degradation_factor(49, 50).unwrap() - 0.5198).abs() < 1e-12);
        assert!(degradation_factor(50, 50).is_err());
    }

    #[test]
    fn degradation_disabled_depends_on_energy_only() {
        let spec = DegradationSpec {
            degrade: false,
            seed: 5,
            ..DegradationSpec::default()
        };
        let (d, _) = gen_degradation_study(&spec).unwrap();
        assert_eq!(d.n(), 100);
        for i in 0..d.n() {
            for j in 0..d.n() {
                if d.x()[(i, 0)] == d.x()[(j, 0)] {
                    assert_eq!(d.y()[i], d.y()[j]);
                }
            }
        }
    }

    #[test]
    fn first_shot_after_tune_up_is_undegraded() {
        let spec = DegradationSpec { seed: 2, ..DegradationSpec::default() };
        let (d, truth) = gen_degradation_study(&spec).unwrap();
        assert_eq!(truth.tune_up_shots, vec![51]);
        let curve = &spec.yield_curve;
        for shot in [1usize, 51] {
            let e = d.raw_x(shot - 1)[0];
            assert!((d.y()[shot - 1] - curve.eval(e).log10()).abs() < 1e-12);
        }
        let e = d.raw_x(49)[0];
        let want = curve.eval(e * degradation_factor(49, 50).unwrap()).log10();
        assert!((d.y()[49] - want).abs() < 1e-12);
    }

    #[test]
    fn degradation_is_deterministic() {
        let s = DegradationSpec { seed: 7, ..DegradationSpec::default() };
        assert_eq!(gen_degradation_study(&s).unwrap(), gen_degradation_study(&s).unwrap());
    }

    #[test]
    fn tabulated_curve_interpolates() {
        let c = YieldCurve::tabulated(vec![(200.0, 3.0), (100.0, 1.0)]).unwrap();
        assert_eq!(c.eval(150.0), 2.0);
        assert_eq!(c.eval(50.0), 1.0);
        assert_eq!(c.eval(300.0), 3.0);
        assert!(YieldCurve::tabulated(vec![(1.0, 1.0)]).is_err());
    }

    #[test]
    fn suite_parse_round_trip() {
        for s in [Suite::Replication, Suite::Randomization, Suite::Degradation] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }
}
