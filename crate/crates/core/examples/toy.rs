//! Fits one seeded toy dataset and prints what the fit found.
//!
//! cargo run --release -p lurk-core --example toy -- [seed] [replicates] [sorted]

use std::time::Instant;

use lurk_core::effects::{dominant_changes, gradual_effect, sudden_series, unit_grid};
use lurk_core::simgen::{gen_toy, score_fit, ToySpec, EVENT_GAP, EVENT_REL};
use lurk_core::stats::spearman;
use lurk_core::FitConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let replicates: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let randomize = args.get(3).is_none_or(|s| s != "sorted");
    let spec = ToySpec {
        seed,
        replicates,
        randomize,
        shock_indices: ToySpec::scaled_shock_indices(50 * replicates),
        ..ToySpec::default()
    };
    let (data, truth) = gen_toy(&spec).expect("generate");
    let start = Instant::now();
    let fit = lurk_core::estimator::fit(&data, &FitConfig { seed, ..FitConfig::default() }).expect("fit");
    println!("fit in {:.2?}, {} outer iterations, converged = {}", start.elapsed(), fit.iterations, fit.converged);
    let h = &fit.hyper;
    println!(
        "mu = {:.4}, tau2 = {:.4e}, eta = {:.3e}, lambda = {:.4e}, theta = {:?}",
        h.mu, h.tau2, h.eta, h.lambda, h.theta.to_vec()
    );
    println!("trace: {:?}", fit.trace.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    let truth_jumps: Vec<(usize, f64)> = truth
        .jumps
        .iter()
        .enumerate()
        .filter(|(_, e)| **e != 0.0)
        .map(|(i, e)| (i + 1, *e))
        .collect();
    println!("true jumps: {truth_jumps:?}");
    let (_, points) = sudden_series(&fit);
    println!(
        "lasso jumps ({}): {:?}",
        points.len(),
        points.iter().map(|p| (p.index, (p.jump * 1000.0).round() / 1000.0)).collect::<Vec<_>>()
    );
    let dom = dominant_changes(&points, EVENT_GAP, EVENT_REL);
    println!(
        "dominant: {:?}",
        dom.iter().map(|e| (e.index, (e.net_jump * 1000.0).round() / 1000.0)).collect::<Vec<_>>()
    );
    let grid = unit_grid(200);
    let g = gradual_effect(&fit, &grid).unwrap();
    println!("gradual spearman = {:.3}, g(0) = {:.3}, g(1) = {:.3}", spearman(&g, &grid), g[0], g[199]);
    println!("scores: {:?}", score_fit(&fit, &truth).unwrap());
}
