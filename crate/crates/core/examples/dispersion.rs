//! Dispersion constants of named subspaces.
//!
//! Run with `cargo run --release --example dispersion`.

use polycond::subspace::{dispersion, make_named_space, NamedSpace};

fn main() -> polycond::Result<()> {
    let cases = [
        (NamedSpace::Full, 3, 3),
        (NamedSpace::PowerMonomials, 2, 3),
        (NamedSpace::PowerMonomials, 3, 3),
        (NamedSpace::SosFamily, 3, 4),
        (NamedSpace::Degenerate { u: vec![], v: vec![] }, 2, 3),
    ];
    for (kind, n, d) in cases {
        let f = make_named_space(&kind, n, d)?;
        let r = dispersion(&f, 0.2, 200)?;
        let hi = r.sigma_hi.map_or("inf".to_string(), |s| format!("{s:.5}"));
        println!(
            "{kind:?} n={n} d={d} dim={}: sigma in [{:.5}, {hi}], degenerate={}",
            f.dim(),
            r.sigma_lo,
            r.degenerate
        );
    }
    println!("power monomials: sigma = n^((d-1)/2)");
    Ok(())
}
