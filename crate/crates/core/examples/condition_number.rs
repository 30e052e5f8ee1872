//! Certified condition numbers of polynomial systems.
//!
//! Run with `cargo run --release --example condition_number`.

use polycond::condition::{global_l_with, local_l, ConditionOptions};
use polycond::io::parse_system;
use polycond::random::{sample_system, RandomModel, SeedPlan};
use polycond::subspace::SystemSubspace;

fn main() -> polycond::Result<()> {
    // a linear form has condition number 1
    let p = parse_system("n=2 degrees=1\n1 0 : 1\n")?;
    let r = global_l_with(&p, &ConditionOptions::default())?;
    println!("kappa(x1) in [{}, {:?}]", r.kappa_lo, r.kappa_hi);

    // singular zero at e3
    let s = parse_system("n=3 degrees=2,2\n2 0 0 : 1\n0 2 0 : -1\n---\n1 0 1 : 1\n0 1 1 : 0.5\n")?;
    let r = global_l_with(&s, &ConditionOptions::default())?;
    println!("singular system: L_hi = {:e}, kappa_hi = {:?}", r.l_hi, r.kappa_hi);

    let e = SystemSubspace::full(3, &[2, 2])?;
    let plan = SeedPlan::new(11);
    for i in 0..3 {
        let p = sample_system(&e, &RandomModel::gaussian(), &mut plan.rng(i))?;
        let r = global_l_with(&p, &ConditionOptions { rel_tol: 1e-3, ..Default::default() })?;
        let loc = local_l(&p, &r.argmin)?;
        println!(
            "random system {i}: kappa in [{:.4}, {:.4}], {} evaluations, L at argmin {:.6}",
            r.kappa_lo,
            r.kappa_hi.unwrap_or(f64::INFINITY),
            r.evals,
            loc.l_value
        );
    }
    Ok(())
}
