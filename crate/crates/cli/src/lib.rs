//! Command-line front end: simulate datasets, fit them, re-derive effect
//! tables from a saved fit, and run the benchmark suites.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 fit did not converge
//! (outputs are still written), 3 benchmark finished with failed cells.

pub mod bundle;
pub mod config;
pub mod data;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lurk_core::simgen::{self, DegradationSpec, Suite, ToySpec, YieldCurve};
use lurk_core::FitConfig;
use serde::Serialize;

use crate::bundle::{FitBundle, OutputSettings};
use crate::data::RawData;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_BENCH_FAILURES: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lurk", version, about = "Gaussian-process fits with sudden and gradual change terms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimSuite {
    Toy,
    Degradation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchSuite {
    Replication,
    Randomization,
    Degradation,
}

impl From<BenchSuite> for Suite {
    fn from(s: BenchSuite) -> Self {
        match s {
            BenchSuite::Replication => Suite::Replication,
            BenchSuite::Randomization => Suite::Randomization,
            BenchSuite::Degradation => Suite::Degradation,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded dataset (data.csv) and its ground truth (truth.json).
    Simulate {
        #[arg(long, value_enum)]
        suite: SimSuite,
        /// Replicates per input level [default: 2].
        #[arg(long)]
        replicates: Option<usize>,
        /// Shuffle the run order of the toy design [default: true].
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        randomize: Option<bool>,
        /// Two-column energy,yield CSV replacing the synthetic yield curve.
        #[arg(long)]
        yield_table: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a data file and write fit.json plus effect tables.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// key = value file; see the README for keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Points in the gradual and prediction grids.
        #[arg(long, default_value_t = lurk_core::effects::DEFAULT_GRID)]
        grid: usize,
        /// Scaled time in [0, 1] of the prediction slice.
        #[arg(long, default_value_t = 0.5)]
        predict_t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive the effect tables from a saved fit.json.
    Effects {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite and write mse.csv and summary.csv.
    Benchmark {
        #[arg(long, value_enum)]
        suite: BenchSuite,
        #[arg(long, default_value_t = 30)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to `out` and `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<i32> {
    match command {
        Command::Simulate {
            suite,
            replicates,
            randomize,
            yield_table,
            seed,
            out: dir,
        } => cmd_simulate(suite, replicates, randomize, yield_table.as_deref(), seed, &dir, out),
        Command::Fit {
            data,
            config,
            seed,
            grid,
            predict_t,
            out: dir,
        } => {
            let outputs = OutputSettings {
                grid_size: grid,
                predict_t,
            };
            cmd_fit(&data, config.as_deref(), seed, outputs, &dir, out)
        }
        Command::Effects { fit, out: dir } => cmd_effects(&fit, &dir),
        Command::Benchmark {
            suite,
            repeats,
            seed,
            config,
            out: dir,
        } => cmd_benchmark(suite.into(), repeats, seed, config.as_deref(), &dir, out),
    }
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn load_config(path: Option<&Path>) -> anyhow::Result<FitConfig> {
    match path {
        None => Ok(FitConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            config::parse(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn read_yield_table(path: &Path) -> anyhow::Result<YieldCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> anyhow::Result<f64> {
            let text = rec.get(k).unwrap_or("");
            text.parse()
                .with_context(|| format!("{}: row {}, column {}: '{text}'", path.display(), i + 1, k + 1))
        };
        if rec.len() != 2 {
            bail!("{}: row {}: expected 2 cells, found {}", path.display(), i + 1, rec.len());
        }
        points.push((num(0)?, num(1)?));
    }
    Ok(YieldCurve::tabulated(points)?)
}

#[derive(Serialize)]
#[serde(tag = "suite", rename_all = "lowercase")]
enum SimSpec {
    Toy(ToySpec),
    Degradation(DegradationSpec),
}

#[derive(Serialize)]
struct TruthFile<'a> {
    spec: SimSpec,
    truth: &'a simgen::GroundTruth,
}

pub fn cmd_simulate(
    suite: SimSuite,
    replicates: Option<usize>,
    randomize: Option<bool>,
    yield_table: Option<&Path>,
    seed: u64,
    dir: &Path,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    if replicates == Some(0) {
        bail!("--replicates must be at least 1");
    }
    let (dataset, truth, spec) = match suite {
        SimSuite::Toy => {
            if yield_table.is_some() {
                bail!("--yield-table only applies to --suite degradation");
            }
            let replicates = replicates.unwrap_or(2);
            let spec = ToySpec {
                replicates,
                randomize: randomize.unwrap_or(true),
                shock_indices: ToySpec::scaled_shock_indices(50 * replicates),
                seed,
                ..ToySpec::default()
            };
            let (d, t) = simgen::gen_toy(&spec)?;
            (d, t, SimSpec::Toy(spec))
        }
        SimSuite::Degradation => {
            if randomize == Some(false) {
                bail!("the degradation study is always run in shuffled order; drop --randomize false");
            }
            let mut spec = DegradationSpec {
                replicates: replicates.unwrap_or(2),
                seed,
                ..DegradationSpec::default()
            };
            if let Some(p) = yield_table {
                spec.yield_curve = read_yield_table(p)?;
            }
            let (d, t) = simgen::gen_degradation_study(&spec)?;
            (d, t, SimSpec::Degradation(spec))
        }
    };
    ensure_dir(dir)?;
    let raw = RawData::from_dataset(&dataset);
    data::write_csv(&dir.join("data.csv"), &raw).context("writing data.csv")?;
    let text = serde_json::to_string_pretty(&TruthFile { spec, truth: &truth })?;
    fs::write(dir.join("truth.json"), text + "\n").context("writing truth.json")?;
    writeln!(out, "wrote {} rows to {}", raw.n(), dir.join("data.csv").display())?;
    Ok(EXIT_OK)
}

pub fn cmd_fit(
    data_path: &Path,
    config_path: Option<&Path>,
    seed: Option<u64>,
    outputs: OutputSettings,
    dir: &Path,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    if outputs.grid_size < 2 {
        bail!("--grid must be at least 2");
    }
    if !(0.0..=1.0).contains(&outputs.predict_t) {
        bail!("--predict-t must lie in [0, 1]");
    }
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let raw = data::read_csv(data_path).with_context(|| format!("reading {}", data_path.display()))?;
    let dataset = raw.to_dataset()?;
    let fit = lurk_core::estimator::fit(&dataset, &cfg)?;
    ensure_dir(dir)?;
    let bundle = FitBundle::new(&raw, &cfg, outputs, &fit);
    bundle.save(&dir.join("fit.json"))?;
    bundle::write_effects(&fit, &bundle.outputs, &raw.input_names, dir)?;

    let h = &fit.hyper;
    writeln!(
        out,
        "{} after {} outer iterations: mu = {}, tau2 = {}, eta = {}, lambda = {}, theta = {:?}",
        if fit.converged { "converged" } else { "NOT converged" },
        fit.iterations,
        h.mu,
        h.tau2,
        h.eta,
        h.lambda,
        h.theta.to_vec()
    )?;
    writeln!(out, "{} nonzero jumps", bundle.change_points.len())?;
    Ok(if fit.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_effects(fit_path: &Path, dir: &Path) -> anyhow::Result<i32> {
    let bundle = FitBundle::load(fit_path)?;
    let fit = bundle.restore()?;
    ensure_dir(dir)?;
    bundle::write_effects(&fit, &bundle.outputs, &bundle.data.input_names, dir)?;
    Ok(EXIT_OK)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4e}"))
}

pub fn cmd_benchmark(
    suite: Suite,
    repeats: usize,
    seed: u64,
    config_path: Option<&Path>,
    dir: &Path,
    out: &mut dyn Write,
) -> anyhow::Result<i32> {
    if repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let cfg = load_config(config_path)?;
    let table = simgen::benchmark(suite, repeats, seed, &cfg)?;
    ensure_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("mse.csv"))?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    for row in &table.summary {
        w.serialize(row)?;
    }
    w.flush()?;

    writeln!(out, "{suite}: {repeats} repeats, seed {seed}")?;
    for s in &table.summary {
        write!(
            out,
            "{:<14} median sudden {}  gradual {}  prediction {}",
            s.config,
            fmt_opt(s.median_sudden),
            fmt_opt(s.median_gradual),
            fmt_opt(s.median_prediction)
        )?;
        if let Some(r) = s.detection_rate {
            write!(out, "  tune-up detected {:.0}%", 100.0 * r)?;
        }
        if let Some(r) = s.baseline_win_rate {
            write!(out, "  beats baseline {:.0}%", 100.0 * r)?;
        }
        if s.failures > 0 {
            write!(out, "  failed cells {}", s.failures)?;
        }
        writeln!(out)?;
    }
    Ok(if table.failures() > 0 { EXIT_BENCH_FAILURES } else { EXIT_OK })
}
