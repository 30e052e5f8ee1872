//! Dispersion of random subspaces drawn from the Grassmannian.
//!
//! Run with `cargo run --release --example grassmann`.

use polycond::experiments::{run_grassmann_dispersion, GrassmannConfig};

fn main() -> polycond::Result<()> {
    let cfg = GrassmannConfig { m_grid: vec![6, 10, 14, 15], samples: 20, ..Default::default() };
    println!("m   finite  min      median   max      bound(C=1,t=1)");
    for r in run_grassmann_dispersion(3, 4, &cfg)? {
        println!(
            "{:<3} {:<7} {:<8.4} {:<8.4} {:<8.4} {}",
            r.m,
            r.finite,
            r.min,
            r.median,
            r.max,
            r.bound.map_or("vacuous".to_string(), |b| format!("{b:.4}"))
        );
    }
    Ok(())
}
