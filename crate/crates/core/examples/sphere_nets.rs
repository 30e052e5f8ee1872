//! Covering nets of the unit sphere and certified sup norms.
//!
//! Run with `cargo run --release --example sphere_nets`.

use polycond::io::NetCache;
use polycond::poly::HomogeneousPolynomial;
use polycond::sphere::{build_antipodal_net, build_net, sup_norm_bound_polys, verify_covering, NetSymmetry};

fn main() -> polycond::Result<()> {
    for (n, delta) in [(2, 0.1), (3, 0.2), (3, 0.05), (4, 0.3)] {
        let net = build_net(n, delta, 0)?;
        println!(
            "n={n} delta={delta}: {} points, achieved radius {:.4}, lemma bound {:.0}, sampled radius {:.4}",
            net.len(),
            net.delta_achieved(),
            net.size_bound(),
            verify_covering(&net, 20_000, 1)
        );
    }

    // sup |x1^2 - x2 x3| over the sphere is 1, attained at e1
    let p = HomogeneousPolynomial::from_terms(3, 2, &[(vec![2, 0, 0], 1.0), (vec![0, 1, 1], -1.0)])?;
    let net = build_antipodal_net(3, 0.02, 0)?;
    let b = sup_norm_bound_polys(&[p], &net)?;
    println!("sup-norm bracket [{:.6}, {:.6}] from {} points", b.lo, b.hi, net.len());

    let dir = std::env::temp_dir().join("polycond-example-nets");
    let cache = NetCache::new(&dir)?;
    let cached = cache.get_or_build(3, 0.05, 0, NetSymmetry::Antipodal)?;
    println!("cached net at {} ({} points)", cache.path_for(3, 0.05, 0, NetSymmetry::Antipodal).display(), cached.len());
    Ok(())
}
