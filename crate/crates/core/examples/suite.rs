//! Runs one benchmark suite and prints per-configuration summaries.
//!
//! cargo run --release -p lurk-core --example suite -- <suite> [repeats] [seed]

use lurk_core::simgen::{benchmark, Suite};
use lurk_core::FitConfig;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let suite: Suite = args.get(1).map(|s| s.parse().expect("suite")).unwrap_or(Suite::Replication);
    let repeats: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let table = benchmark(suite, repeats, seed, &FitConfig::default()).expect("benchmark");
    for s in &table.summary {
        let mine: Vec<_> = table.rows.iter().filter(|r| r.config == s.config).collect();
        let share = |f: &dyn Fn(&&lurk_core::simgen::BenchmarkRow) -> Option<bool>| {
            let v: Vec<bool> = mine.iter().filter_map(f).collect();
            v.iter().filter(|&&b| b).count() as f64 / v.len().max(1) as f64
        };
        println!(
            "{:<14} sudden {:?} gradual {:?} prediction {:?} | recovered {:.2} rho>=.9 {:.2} converged {:.2} detect {:?} wins {:?} failures {}",
            s.config,
            s.median_sudden,
            s.median_gradual,
            s.median_prediction,
            share(&|r| r.shocks_recovered),
            share(&|r| r.gradual_spearman.map(|v| v >= 0.9)),
            share(&|r| r.converged),
            s.detection_rate,
            s.baseline_win_rate,
            s.failures
        );
    }
}
