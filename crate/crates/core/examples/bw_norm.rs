//! Bombieri-Weyl inner products, evaluation and the reproducing property.
//!
//! Run with `cargo run --example bw_norm`.

use polycond::poly::{bw_inner, HomogeneousPolynomial};
use polycond::subspace::veronese_vector;

fn main() -> polycond::Result<()> {
    // f = x1^2 + 3 x1 x2 - x2^2
    let f = HomogeneousPolynomial::from_terms(2, 2, &[(vec![2, 0], 1.0), (vec![1, 1], 3.0), (vec![0, 2], -1.0)])?;
    println!("||f||_W = {:.6}", f.bw_norm());

    let x1x2 = HomogeneousPolynomial::from_terms(2, 2, &[(vec![1, 1], 1.0)])?;
    println!("<x1 x2, x1 x2>_W = {} (the weight of x1 x2 is 1/binom(2,1))", bw_inner(&x1x2, &x1x2)?);

    let v = [0.6, 0.8];
    let qv = veronese_vector(2, 2, &v)?;
    println!("f(v) = {:.12}", f.evaluate(&v)?);
    println!("<f, q_v>_W = {:.12}", bw_inner(&f, &qv)?);
    println!("||q_v||_W = {:.12}", qv.bw_norm());

    let grad = f.gradient(&v)?;
    let euler: f64 = grad.iter().zip(&v).map(|(g, x)| g * x).sum();
    println!("x . grad f(x) = {euler:.12} = 2 f(x)");
    Ok(())
}
