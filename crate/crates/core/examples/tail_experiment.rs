//! Average-case tail experiment with certified condition numbers.
//!
//! Run with `cargo run --release --example tail_experiment`.

use std::time::Instant;

use polycond::experiments::{run_tail_experiment, TailConfig};
use polycond::random::RandomModel;
use polycond::subspace::SystemSubspace;

fn main() -> polycond::Result<()> {
    let e = SystemSubspace::full(3, &[2, 2])?;
    let cfg = TailConfig { trials: 500, seed: 1, ..Default::default() };
    let started = Instant::now();
    let r = run_tail_experiment(&e, &RandomModel::gaussian(), &cfg)?;
    let report = r.report("tail", vec![("trials".into(), "500".into())], cfg.seed, started);
    print!("{}", report.summary_text());
    Ok(())
}
