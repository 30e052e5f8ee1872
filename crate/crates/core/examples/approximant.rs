//! Well-conditioned approximants of an ill-posed system.
//!
//! Run with `cargo run --release --example approximant`.

use polycond::condition::{global_l_with, ConditionOptions};
use polycond::config::degenerate_center;
use polycond::experiments::{find_wellconditioned, ApproximantConfig};
use polycond::subspace::SystemSubspace;

fn main() -> polycond::Result<()> {
    let e = SystemSubspace::full(3, &[2, 2])?;
    let q = degenerate_center(3, &[2, 2])?;
    let before = global_l_with(&q, &ConditionOptions::default())?;
    println!("center kappa_hi = {:?}", before.kappa_hi);

    let cfg = ApproximantConfig { epsilon: 0.5, attempts: 40, ..Default::default() };
    let r = find_wellconditioned(&q, &e, &cfg)?;
    println!("distance bound {:.4}, kappa bound {:.4e}", r.distance_bound, r.kappa_bound);
    println!("distance rate {:.3}, joint rate {:.3}", r.distance_rate, r.joint_rate);
    match (r.found, &r.candidate) {
        (Some(i), Some(p)) => {
            let a = &r.attempts[i];
            println!("attempt {i}: ||P - Q||_W = {:.4}, kappa in [{:.3}, {:?}]", a.distance, a.kappa_lo, a.kappa_hi);
            println!("{}", polycond::io::write_system(p));
        }
        _ => println!("no attempt met both bounds; best kappa_hi {:?}", r.best_kappa_hi),
    }
    Ok(())
}
