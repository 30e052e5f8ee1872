use polycond::io::{parse_system, write_system};
use polycond::poly::{bw_inner, bw_norm_system, monomial_basis, multinomial, HomogeneousPolynomial, PolynomialSystem};
use polycond::random::random_orthogonal;
use polycond::subspace::veronese_vector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn mono(n: usize, d: u32, alpha: &[u32], c: f64) -> HomogeneousPolynomial {
    HomogeneousPolynomial::from_terms(n, d, &[(alpha.to_vec(), c)]).unwrap()
}

fn poly_strategy() -> impl Strategy<Value = HomogeneousPolynomial> {
    (2usize..=4, 1u32..=5).prop_flat_map(|(n, d)| {
        let len = monomial_basis(n, d).unwrap().len();
        prop::collection::vec(-3.0f64..3.0, len)
            .prop_map(move |c| HomogeneousPolynomial::new(n, d, c).unwrap())
    })
}

fn unit(v: &[f64]) -> Vec<f64> {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / r).collect()
}

fn unit_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
        .prop_map(|v| unit(&v))
}

#[test]
fn multinomial_examples() {
    assert_eq!(multinomial(2, &[1, 1]).unwrap(), 2);
    assert_eq!(multinomial(3, &[3, 0]).unwrap(), 1);
    assert_eq!(multinomial(4, &[2, 1, 1]).unwrap(), 12);
    assert!(multinomial(4, &[2, 1]).is_err());
}

#[test]
fn multinomials_sum_to_n_pow_d() {
    for (n, d) in [(2usize, 5u32), (3, 4), (4, 6), (5, 8)] {
        let b = monomial_basis(n, d).unwrap();
        let s: u128 = b.exponents().map(|a| multinomial(d, a).unwrap()).sum();
        assert_eq!(s, (n as u128).pow(d));
    }
}

#[test]
fn bw_inner_examples() {
    let x1sq = mono(2, 2, &[2, 0], 1.0);
    let x1x2 = mono(2, 2, &[1, 1], 1.0);
    let x2sq = mono(2, 2, &[0, 2], 1.0);
    assert_eq!(bw_inner(&x1sq, &x1sq).unwrap(), 1.0);
    assert_eq!(bw_inner(&x1x2, &x1x2).unwrap(), 0.5);
    assert_eq!(bw_inner(&x1sq, &x2sq).unwrap(), 0.0);
    assert!(bw_inner(&x1sq, &mono(2, 3, &[3, 0], 1.0)).is_err());
}

#[test]
fn bw_norm_system_examples() {
    let p = PolynomialSystem::new(vec![mono(2, 2, &[2, 0], 1.0)]).unwrap();
    assert_eq!(bw_norm_system(&p), 1.0);
    let p = PolynomialSystem::new(vec![mono(2, 2, &[1, 1], 1.0)]).unwrap();
    assert!((bw_norm_system(&p) - 0.5f64.sqrt()).abs() < 1e-15);
    let p = PolynomialSystem::new(vec![mono(3, 2, &[2, 0, 0], 1.0), mono(3, 2, &[1, 1, 0], 1.0)]).unwrap();
    assert!((bw_norm_system(&p) - 1.5f64.sqrt()).abs() < 1e-15);
    let z = PolynomialSystem::new(vec![HomogeneousPolynomial::zero(2, 3).unwrap()]).unwrap();
    assert_eq!(bw_norm_system(&z), 0.0);
}

#[test]
fn evaluate_examples() {
    let p = HomogeneousPolynomial::from_terms(2, 2, &[(vec![2, 0], 1.0), (vec![0, 2], 1.0)]).unwrap();
    let s = PolynomialSystem::new(vec![p]).unwrap();
    assert_eq!(s.evaluate(&[1.0, 0.0]).unwrap(), vec![1.0]);
    assert_eq!(s.evaluate(&[0.0, 0.0]).unwrap(), vec![0.0]);
    let s = PolynomialSystem::new(vec![mono(2, 2, &[1, 1], 1.0)]).unwrap();
    assert_eq!(s.evaluate(&[3.0, 2.0]).unwrap(), vec![6.0]);
    assert!(s.evaluate(&[1.0]).is_err());
}

#[test]
fn jacobian_examples() {
    let s = PolynomialSystem::new(vec![mono(2, 2, &[1, 1], 1.0)]).unwrap();
    let j = s.jacobian(&[0.7, -1.3]).unwrap();
    assert_eq!((j[(0, 0)], j[(0, 1)]), (-1.3, 0.7));
    let s = PolynomialSystem::new(vec![mono(2, 2, &[2, 0], 1.0)]).unwrap();
    let j = s.jacobian(&[1.0, 0.0]).unwrap();
    assert_eq!((j[(0, 0)], j[(0, 1)]), (2.0, 0.0));
    // x1^3 + x1 x2^2 at (1, 2): p = 5, J x = 3 p
    let p = HomogeneousPolynomial::from_terms(2, 3, &[(vec![3, 0], 1.0), (vec![1, 2], 1.0)]).unwrap();
    let s = PolynomialSystem::new(vec![p]).unwrap();
    let j = s.jacobian(&[1.0, 2.0]).unwrap();
    assert!((j[(0, 0)] + 2.0 * j[(0, 1)] - 15.0).abs() < 1e-12);
}

#[test]
fn system_rejects_bad_shapes() {
    assert!(PolynomialSystem::new(vec![]).is_err());
    assert!(PolynomialSystem::new(vec![mono(3, 2, &[2, 0, 0], 1.0)]).is_err());
    assert!(PolynomialSystem::new(vec![mono(3, 2, &[2, 0, 0], 1.0), mono(2, 2, &[2, 0], 1.0)]).is_err());
}

#[test]
fn monomial_order_is_reverse_lexicographic_and_stable() {
    let b = monomial_basis(3, 2).unwrap();
    let order: Vec<Vec<u32>> = b.exponents().map(|a| a.to_vec()).collect();
    assert_eq!(order[0], vec![2, 0, 0]);
    assert_eq!(order[order.len() - 1], vec![0, 0, 2]);
    assert_eq!(order, monomial_basis(3, 2).unwrap().exponents().map(|a| a.to_vec()).collect::<Vec<_>>());
    assert!(b.exponents().all(|a| a.iter().sum::<u32>() == 2));
}

#[test]
fn weighted_monomials_are_orthonormal() {
    for (n, d) in [(2usize, 4u32), (3, 3), (4, 2)] {
        let b = monomial_basis(n, d).unwrap();
        let polys: Vec<_> = b
            .exponents()
            .map(|a| mono(n, d, a, (multinomial(d, a).unwrap() as f64).sqrt()))
            .collect();
        for (i, p) in polys.iter().enumerate() {
            for (j, q) in polys.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((bw_inner(p, q).unwrap() - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn system_io_roundtrip() {
    let p = HomogeneousPolynomial::from_terms(3, 2, &[(vec![2, 0, 0], 1.5), (vec![0, 1, 1], -0.1)]).unwrap();
    let q = HomogeneousPolynomial::from_terms(3, 3, &[(vec![1, 1, 1], 1.0 / 3.0)]).unwrap();
    let s = PolynomialSystem::new(vec![p, q]).unwrap();
    assert_eq!(parse_system(&write_system(&s)).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reproducing_property(f in poly_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let v = polycond::sphere::random_unit(&mut rng, f.n());
        let qv = veronese_vector(f.n(), f.degree(), &v).unwrap();
        prop_assert!((qv.bw_norm() - 1.0).abs() < 1e-12);
        let scale = f.bw_norm().max(1.0);
        prop_assert!((bw_inner(&f, &qv).unwrap() - f.evaluate(&v).unwrap()).abs() < 1e-10 * scale);
    }

    #[test]
    fn bw_norm_is_orthogonally_invariant(f in poly_strategy(), seed in any::<u64>()) {
        prop_assume!(f.n() <= 3);
        let r = random_orthogonal(f.n(), &mut ChaCha20Rng::seed_from_u64(seed));
        let g = f.compose_linear(&r).unwrap();
        prop_assert!((g.bw_norm() - f.bw_norm()).abs() <= 1e-9 * f.bw_norm().max(1e-300));
    }

    #[test]
    fn euler_identity_and_homogeneity(
        f in poly_strategy(),
        x in prop::collection::vec(-2.0f64..2.0, 4),
        lambda in -3.0f64..3.0,
    ) {
        let n = f.n();
        let x = &x[..n];
        let g = f.gradient(x).unwrap();
        let gx: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        let fx = f.evaluate(x).unwrap();
        let d = f.degree() as f64;
        let scale = g.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1.0);
        prop_assert!((gx - d * fx).abs() <= 1e-10 * scale);
        let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        let want = lambda.powi(f.degree() as i32) * fx;
        prop_assert!((f.evaluate(&lx).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0) * 3f64.powi(f.degree() as i32));
    }

    #[test]
    fn veronese_unit_norm(v in unit_strategy(3), d in 1u32..=6) {
        let qv = veronese_vector(3, d, &v).unwrap();
        prop_assert!((qv.bw_norm() - 1.0).abs() < 1e-12);
        prop_assert!((qv.evaluate(&v).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn veronese_examples() {
    let q = veronese_vector(2, 1, &[1.0, 0.0]).unwrap();
    assert_eq!(q, mono(2, 1, &[1, 0], 1.0));
    let h = 0.5f64.sqrt();
    let q = veronese_vector(2, 2, &[h, h]).unwrap();
    assert!((q.evaluate(&[h, h]).unwrap() - 1.0).abs() < 1e-15);
    assert!(veronese_vector(2, 2, &[1.0, 1.0]).is_err());
}
