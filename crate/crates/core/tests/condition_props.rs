use polycond::condition::{global_l_with, local_l, ConditionOptions};
use polycond::poly::{HomogeneousPolynomial, PolynomialSystem};
use polycond::random::{random_orthogonal, sample_system};
use polycond::subspace::{make_named_space, NamedSpace, SystemSubspace};
use polycond::{global_kappa, RandomModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn random_system(n: usize, degrees: &[u32], seed: u64) -> PolynomialSystem {
    let e = SystemSubspace::full(n, degrees).unwrap();
    sample_system(&e, &RandomModel::gaussian(), &mut ChaCha20Rng::seed_from_u64(seed)).unwrap()
}

fn tight(delta: f64) -> ConditionOptions {
    ConditionOptions { delta: Some(delta), rel_tol: 1e-6, abs_tol: 1e-14, ..Default::default() }
}

fn circle_oracle(p: &PolynomialSystem, points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / points as f64;
            local_l(p, &[t.cos(), t.sin()]).unwrap().l_value
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn linear_form_examples() {
    let x1 = HomogeneousPolynomial::from_terms(2, 1, &[(vec![1, 0], 1.0)]).unwrap();
    let p = PolynomialSystem::new(vec![x1]).unwrap();
    let v = local_l(&p, &[0.0, 1.0]).unwrap();
    assert_eq!((v.residual, v.sigma_min, v.l_value, v.kappa), (0.0, 1.0, 1.0, Some(1.0)));
    let r = global_kappa(&p, 0.3, 50).unwrap();
    assert!((r.l_hi - 1.0).abs() < 1e-12 && r.l_lo <= 1.0 && r.l_lo >= 1.0 - 1e-3);
    assert!((r.kappa_lo - 1.0).abs() < 1e-12 && r.kappa_hi.unwrap() >= 1.0);
    let r = global_l_with(&p, &tight(0.3)).unwrap();
    assert!((r.kappa_hi.unwrap() - 1.0).abs() < 1e-5);
}

#[test]
fn local_value_parts_are_consistent() {
    let p = random_system(3, &[2, 3], 1);
    for x in [[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [-0.48, 0.6, 0.64]] {
        let v = local_l(&p, &x).unwrap();
        assert!((v.l_value - v.sigma_min.hypot(v.residual)).abs() < 1e-12);
        assert!((v.kappa.unwrap() - p.bw_norm() / v.l_value).abs() < 1e-12 * v.kappa.unwrap());
    }
    assert!(local_l(&p, &[1.0, 1.0, 0.0]).is_err());
}

#[test]
fn x1x2_matches_grid_oracle() {
    let p = PolynomialSystem::new(vec![HomogeneousPolynomial::from_terms(2, 2, &[(vec![1, 1], 1.0)]).unwrap()]).unwrap();
    let r = global_l_with(&p, &tight(1.0 / 12.0)).unwrap();
    let oracle = circle_oracle(&p, 100_000);
    assert!(r.l_lo <= oracle + 1e-12 && oracle <= r.l_hi + 1e-12);
    assert!((r.l_hi - oracle).abs() <= 1e-4 * oracle);
}

#[test]
fn brute_force_equivalence_on_the_circle() {
    for seed in 0..50u64 {
        let d = 1 + (seed % 4) as u32;
        let p = random_system(2, &[d], seed);
        let r = global_l_with(&p, &tight(1.0 / (3.0 * (d * d) as f64))).unwrap();
        let oracle = circle_oracle(&p, 100_000);
        // the grid itself is only accurate to the Lipschitz constant times half its spacing
        let grid_err = r.lipschitz.lipschitz * std::f64::consts::PI / 100_000.0;
        assert!(r.l_lo <= oracle * (1.0 + 1e-12), "seed {seed}: {} > {oracle}", r.l_lo);
        let close = (r.l_hi - oracle).abs() <= 1e-4 * oracle;
        assert!(close || (r.l_hi < oracle && oracle - r.l_hi <= grid_err), "seed {seed}: {} vs {oracle}", r.l_hi);
    }
}

#[test]
fn degenerate_space_gives_infinite_condition() {
    let f = make_named_space(&NamedSpace::Degenerate { u: vec![1.0, 0.0], v: vec![0.0, 1.0] }, 2, 3).unwrap();
    let e = SystemSubspace::new(vec![f]).unwrap();
    for seed in 0..5 {
        let p = sample_system(&e, &RandomModel::gaussian(), &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let v = local_l(&p, &[1.0, 0.0]).unwrap();
        assert!(v.l_value <= 1e-10 * p.bw_norm());
        let opts = ConditionOptions { hints: vec![vec![1.0, 0.0]], ..Default::default() };
        let r = global_l_with(&p, &opts).unwrap();
        assert!(r.l_hi <= 1e-8 * p.bw_norm());
        assert_eq!(r.kappa_hi, None);
    }
}

#[test]
fn zero_system_is_rejected() {
    let z = PolynomialSystem::new(vec![HomogeneousPolynomial::zero(2, 2).unwrap()]).unwrap();
    assert!(global_kappa(&z, 0.05, 10).is_err());
}

#[test]
fn coarse_user_net_is_rejected() {
    let p = random_system(2, &[3], 0);
    assert!(global_kappa(&p, 0.1, 10).is_err());
}

#[test]
fn scaling_by_two_keeps_kappa() {
    let p = random_system(3, &[2, 2], 3);
    let a = global_kappa(&p, 1.0 / 12.0, 50).unwrap();
    let b = global_kappa(&p.scaled(2.0), 1.0 / 12.0, 50).unwrap();
    assert!((a.kappa_lo - b.kappa_lo).abs() <= 1e-12 * a.kappa_lo);
    assert!((a.kappa_hi.unwrap() - b.kappa_hi.unwrap()).abs() <= 1e-12 * a.kappa_hi.unwrap());
}

#[test]
fn large_nets_fall_back_to_a_coarser_root() {
    // the requested radius would need more than the net point budget
    let p = random_system(4, &[4, 4, 4], 3);
    let opts = ConditionOptions { rel_tol: 0.5, max_evals: 4_000_000, ..Default::default() };
    let r = global_l_with(&p, &opts).unwrap();
    assert!(r.net_size <= 100_000);
    assert!(r.l_lo <= r.l_hi && r.kappa_hi.unwrap_or(f64::INFINITY) >= 1.0 - 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kappa_is_at_least_one(seed in any::<u64>(), n in 2usize..=3, d in 1u32..=3) {
        let p = random_system(n, &vec![d; n - 1], seed);
        let r = global_kappa(&p, 1.0 / (3.0 * (d * d) as f64), 50).unwrap();
        prop_assert!(r.kappa_hi.unwrap_or(f64::INFINITY) >= 1.0 - 1e-9);
        prop_assert!(r.l_lo <= r.l_hi && r.kappa_lo <= r.kappa_hi.unwrap_or(f64::INFINITY));
    }

    #[test]
    fn local_values_are_homogeneous(seed in any::<u64>(), lambda in prop::sample::select(vec![1e-3, -0.5, 1.0, 7.0, 1e3])) {
        let p = random_system(3, &[2, 3], seed);
        let x = polycond::sphere::random_unit(&mut ChaCha20Rng::seed_from_u64(seed ^ 1), 3);
        let a = local_l(&p, &x).unwrap();
        let b = local_l(&p.scaled(lambda), &x).unwrap();
        prop_assert!((b.l_value - lambda.abs() * a.l_value).abs() <= 1e-12 * lambda.abs() * a.l_value.max(1e-300) * 10.0);
        prop_assert!((b.kappa.unwrap() - a.kappa.unwrap()).abs() <= 1e-12 * a.kappa.unwrap() * 10.0);
    }

    #[test]
    fn kappa_brackets_meet_under_scaling(seed in any::<u64>(), lambda in prop::sample::select(vec![1e-3, 1.0, 1e3])) {
        let p = random_system(2, &[3], seed);
        let a = global_kappa(&p, 1.0 / 27.0, 50).unwrap();
        let b = global_kappa(&p.scaled(lambda), 1.0 / 27.0, 50).unwrap();
        prop_assert!(a.kappa_lo <= b.kappa_hi.unwrap() * (1.0 + 1e-12) && b.kappa_lo <= a.kappa_hi.unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn orthogonal_equivariance(seed in any::<u64>()) {
        let p = random_system(3, &[2, 2], seed);
        let r = random_orthogonal(3, &mut ChaCha20Rng::seed_from_u64(seed ^ 2));
        let pr = polycond::PolynomialSystem::new(
            p.polys().iter().map(|q| q.compose_linear(&r).unwrap()).collect(),
        ).unwrap();
        let opts = tight(1.0 / 12.0);
        let a = global_l_with(&p, &opts).unwrap();
        let b = global_l_with(&pr, &opts).unwrap();
        let width = (a.l_hi - a.l_lo).max(b.l_hi - b.l_lo);
        prop_assert!((a.l_hi - b.l_hi).abs() <= 2.0 * width + 1e-12);
        prop_assert!((a.l_lo - b.l_lo).abs() <= 2.0 * width + 1e-12);
    }
}
