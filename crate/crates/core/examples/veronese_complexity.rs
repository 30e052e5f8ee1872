//! Gaussian complexity of the Veronese image of the sphere.
//!
//! Run with `cargo run --release --example veronese_complexity`.

use polycond::experiments::{chi_mean, estimate_veronese_complexity};

fn main() -> polycond::Result<()> {
    for n in [2, 3] {
        let e = estimate_veronese_complexity(n, 1, 2000, 9, 0.01)?;
        println!("n={n} d=1: {:.4} [{:.4}, {:.4}] vs chi mean {:.4}", e.mean, e.ci_lo, e.ci_hi, chi_mean(n));
    }
    for (n, d) in [(2, 2), (2, 4), (3, 2), (3, 4)] {
        let e = estimate_veronese_complexity(n, d, 500, 9, 0.5 / (d * d) as f64)?;
        println!("n={n} d={d}: {:.4}, ratio to sqrt(n) log(ed) = {:.4}", e.mean, e.ratio);
    }
    Ok(())
}
