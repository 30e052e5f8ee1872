//! Smoothed tail experiments around a fixed center system.
//!
//! Run with `cargo run --release --example smoothed_analysis`.

use std::time::Instant;

use polycond::config::degenerate_center;
use polycond::experiments::{run_smoothed_tail_experiment, MVariant, TailConfig};
use polycond::random::{RandomModel, SmoothingMode};
use polycond::subspace::SystemSubspace;

fn main() -> polycond::Result<()> {
    let e = SystemSubspace::full(3, &[2, 2])?;
    let q = degenerate_center(3, &[2, 2])?;
    let cfg = TailConfig { trials: 300, t_grid: vec![4.0, 25.0], seed: 3, ..Default::default() };
    for mode in [SmoothingMode::Additive, SmoothingMode::DeltaScaled { delta: 0.1 }, SmoothingMode::DeltaScaled { delta: 0.5 }] {
        let started = Instant::now();
        let r = run_smoothed_tail_experiment(&e, &q, &RandomModel::gaussian(), mode, MVariant::Statement, &cfg)?;
        let report = r.report("smoothed-tail", vec![("mode".into(), format!("{mode:?}"))], cfg.seed, started);
        print!("{}", report.summary_text());
    }
    Ok(())
}
