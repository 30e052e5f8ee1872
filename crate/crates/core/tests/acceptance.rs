use std::time::{Duration, Instant};

use polycond::condition::{global_l_with, local_l, ConditionOptions};
use polycond::experiments::{
    chi_mean, estimate_veronese_complexity, find_wellconditioned, run_grassmann_dispersion,
    run_smoothed_tail_experiment, run_tail_experiment, wilson_interval, ApproximantConfig, GrassmannConfig,
    MVariant, TailConfig, TailResult, Verdict, Z95,
};
use polycond::poly::{bw_inner, monomial_basis, HomogeneousPolynomial, PolynomialSystem};
use polycond::random::{random_orthogonal, sample_system};
use polycond::sphere::random_unit;
use polycond::subspace::{dispersion_with, make_named_space, veronese_vector, DispersionOptions, NamedSpace};
use polycond::{global_kappa, RandomModel, SeedPlan, SmoothingMode, SystemSubspace};
use rand::Rng;

type Outcome = (bool, String);

fn tight(delta: f64) -> ConditionOptions {
    ConditionOptions { delta: Some(delta), rel_tol: 1e-6, abs_tol: 1e-14, ..Default::default() }
}

fn random_system(e: &SystemSubspace, plan: &SeedPlan, i: u64) -> PolynomialSystem {
    sample_system(e, &RandomModel::gaussian(), &mut plan.rng(i)).unwrap()
}

fn bw_core() -> Outcome {
    let mut worst: f64 = 0.0;
    let plan = SeedPlan::new(1);
    for n in 2..=4usize {
        for d in 1..=5u32 {
            let basis = monomial_basis(n, d).unwrap();
            let len = basis.len();
            let unit_mono = |i: usize| {
                let mut c = vec![0.0; len];
                c[i] = basis.weight(i).sqrt();
                HomogeneousPolynomial::new(n, d, c).unwrap()
            };
            for i in 0..len {
                for j in 0..len {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((bw_inner(&unit_mono(i), &unit_mono(j)).unwrap() - want).abs());
                }
            }
            for s in 0..100u64 {
                let mut rng = plan.rng(((n as u64) << 40) | ((d as u64) << 32) | s);
                let f = HomogeneousPolynomial::new(n, d, (0..len).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
                let v = random_unit(&mut rng, n);
                let q = veronese_vector(n, d, &v).unwrap();
                worst = worst.max((q.bw_norm() - 1.0).abs());
                worst = worst.max((bw_inner(&f, &q).unwrap() - f.evaluate(&v).unwrap()).abs());
            }
        }
    }
    (worst <= 1e-10, format!("max deviation {worst:.2e}"))
}

fn dispersion_oracles() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let sos = make_named_space(&NamedSpace::SosFamily, 2, 4).unwrap();
    let t = Instant::now();
    let opts = DispersionOptions { delta: 0.05, rel_tol: 1e-5, abs_tol: 1e-14, ..Default::default() };
    let r = dispersion_with(&sos, &opts).unwrap();
    let width = r.sigma_hi.unwrap_or(f64::INFINITY) - r.sigma_lo;
    let pass = r.sigma_lo <= 1.0 + 1e-12 && r.sigma_hi.is_some_and(|h| h >= 1.0 - 1e-12) && width <= 1e-4;
    ok &= pass && t.elapsed() < Duration::from_secs(60);
    parts.push(format!("sos n=2 d=4 width {width:.1e} ({:.1}s)", t.elapsed().as_secs_f64()));
    for (n, d) in [(2usize, 3u32), (3, 3), (4, 5)] {
        let t = Instant::now();
        let f = make_named_space(&NamedSpace::PowerMonomials, n, d).unwrap();
        let r = dispersion_with(&f, &DispersionOptions { rel_tol: 1e-3, ..Default::default() }).unwrap();
        let want = (n as f64).powf((d as f64 - 1.0) / 2.0);
        let hi = r.sigma_hi.unwrap_or(f64::INFINITY);
        let pass = r.sigma_lo <= want * 1.005 && hi >= want * 0.995 && (hi / want - 1.0).abs() <= 0.005;
        ok &= pass && t.elapsed() < Duration::from_secs(60);
        parts.push(format!(
            "power ({n},{d}) [{:.5}, {hi:.5}] vs {want:.5} ({:.1}s)",
            r.sigma_lo,
            t.elapsed().as_secs_f64()
        ));
    }
    (ok, parts.join("; "))
}

fn circle_oracle(p: &PolynomialSystem, points: usize) -> f64 {
    (0..points)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / points as f64;
            local_l(p, &[t.cos(), t.sin()]).unwrap().l_value
        })
        .fold(f64::INFINITY, f64::min)
}

fn condition_oracle() -> Outcome {
    let plan = SeedPlan::new(3);
    let mut bad = Vec::new();
    let mut worst_rel: f64 = 0.0;
    for s in 0..50u64 {
        let d = 1 + (s % 4) as u32;
        let e = SystemSubspace::full(2, &[d]).unwrap();
        let p = random_system(&e, &plan, s);
        let r = global_l_with(&p, &tight(1.0 / (3.0 * (d * d) as f64))).unwrap();
        let grid = circle_oracle(&p, 100_000);
        // the grid minimum overshoots the true minimum by at most the Lipschitz constant times half a step
        let grid_err = r.lipschitz.lipschitz * std::f64::consts::PI / 100_000.0;
        let rel = (r.l_hi - grid).abs() / grid;
        worst_rel = worst_rel.max(rel);
        let inside = r.l_lo <= grid * (1.0 + 1e-12) && grid <= r.l_hi + grid_err;
        let kappa_ok = r.kappa_hi.unwrap_or(f64::INFINITY) >= 1.0 - 1e-12;
        if !(inside && rel <= 1e-4 && kappa_ok) {
            bad.push(s);
        }
    }
    let x1 = HomogeneousPolynomial::from_terms(2, 1, &[(vec![1, 0], 1.0)]).unwrap();
    let r = global_kappa(&PolynomialSystem::new(vec![x1]).unwrap(), 0.3, 50).unwrap();
    let linear = r.kappa_lo <= 1.0 + 1e-12 && r.kappa_hi.is_some_and(|h| h >= 1.0 - 1e-12);
    let ok = bad.is_empty() && linear;
    (ok, format!("worst |L_hi - grid|/grid {worst_rel:.1e}; failing seeds {bad:?}; kappa(x1) in [{}, {:?}]", r.kappa_lo, r.kappa_hi))
}

fn degenerate_detection() -> Outcome {
    let plan = SeedPlan::new(4);
    let mut bad = Vec::new();
    for s in 0..20u64 {
        let mut rng = plan.rng(s);
        let q = random_orthogonal(2, &mut rng);
        let u = vec![q[(0, 0)], q[(1, 0)]];
        let v = vec![q[(0, 1)], q[(1, 1)]];
        let f = make_named_space(&NamedSpace::Degenerate { u, v }, 2, 3).unwrap();
        let e = SystemSubspace::new(vec![f]).unwrap();
        let p = sample_system(&e, &RandomModel::gaussian(), &mut rng).unwrap();
        let r = global_l_with(&p, &ConditionOptions::default()).unwrap();
        if !(r.l_hi <= 1e-8 * p.bw_norm() && r.kappa_hi.is_none()) {
            bad.push((s, r.l_hi / p.bw_norm()));
        }
    }
    (bad.is_empty(), format!("20 systems, failures {bad:?}"))
}

fn invariances() -> Outcome {
    let plan = SeedPlan::new(5);
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let mut bad = Vec::new();
    for s in 0..20u64 {
        let p = random_system(&e, &plan, s);
        let opts = tight(1.0 / 12.0);
        let a = global_l_with(&p, &opts).unwrap();
        let (alo, ahi) = (a.kappa_lo, a.kappa_hi.unwrap());
        for lambda in [1e-3, 1.0, 1e3] {
            let b = global_l_with(&p.scaled(lambda), &opts).unwrap();
            let (blo, bhi) = (b.kappa_lo, b.kappa_hi.unwrap());
            if !(alo <= bhi * (1.0 + 1e-12) && blo <= ahi * (1.0 + 1e-12)) {
                bad.push(format!("seed {s} lambda {lambda}"));
            }
        }
        let r = random_orthogonal(3, &mut plan.child(1).rng(s));
        let pr = p.compose_linear(&r).unwrap();
        let b = global_l_with(&pr, &opts).unwrap();
        let width = (a.l_hi - a.l_lo).max(b.l_hi - b.l_lo);
        if (a.l_hi - b.l_hi).abs() > 2.0 * width + 1e-12 || (a.l_lo - b.l_lo).abs() > 2.0 * width + 1e-12 {
            bad.push(format!("seed {s} rotation"));
        }
    }
    (bad.is_empty(), format!("20 cases, failures {bad:?}"))
}

fn norm_tail() -> Outcome {
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let plan = SeedPlan::new(6);
    let norms: Vec<f64> = (0..2000).map(|i| random_system(&e, &plan, i).bw_norm()).collect();
    let dim = e.dim() as f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for t in [1.1, 1.3] {
        let k = norms.iter().filter(|x| **x >= t * dim.sqrt()).count();
        let (lo, _) = wilson_interval(k, norms.len(), Z95);
        let bound = (1.0 - t * t * dim / 2.0).exp();
        ok &= lo <= bound;
        parts.push(format!("t={t}: p_hat {:.4}, ci_lo {lo:.4} vs bound {bound:.2e}", k as f64 / 2000.0));
    }
    (ok, parts.join("; "))
}

fn tail_verdicts(r: &TailResult, ts: &[f64]) -> bool {
    r.rows.iter().filter(|row| ts.contains(&row.t)).all(|row| row.verdict == Verdict::Pass) && !r.inconclusive
}

fn main_tail(cache: &mut Option<TailResult>) -> Outcome {
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let r = run_tail_experiment(&e, &RandomModel::gaussian(), &TailConfig::default()).unwrap();
    let ok = tail_verdicts(&r, &[4.0, 25.0, 100.0]) && r.expectation.verdict == Verdict::Pass;
    let msg = format!(
        "M {:.4e}; exceed {:?}; ambiguous {:.1}%; E log kappa <= {:.3} vs {:.3}",
        r.m,
        r.rows.iter().map(|x| x.exceed_count).collect::<Vec<_>>(),
        100.0 * r.ambiguous_fraction,
        r.expectation.mean_log_kappa_hi.unwrap_or(f64::INFINITY),
        r.expectation.bound
    );
    *cache = Some(r);
    (ok, msg)
}

fn smoothed_tail(plain: &Option<TailResult>) -> Outcome {
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let g = RandomModel::gaussian();
    let q = random_system(&e, &SeedPlan::new(8), 0);
    let cfg = TailConfig { t_grid: vec![4.0, 25.0], ..Default::default() };
    let mut ok = true;
    let mut parts = Vec::new();
    let modes = [
        SmoothingMode::Additive,
        SmoothingMode::DeltaScaled { delta: 0.1 },
        SmoothingMode::DeltaScaled { delta: 0.5 },
    ];
    for mode in modes {
        let r = run_smoothed_tail_experiment(&e, &q, &g, mode, MVariant::Statement, &cfg).unwrap();
        let pass = tail_verdicts(&r, &cfg.t_grid);
        ok &= pass;
        parts.push(format!("{mode:?}: exceed {:?} ambiguous {:.1}%", r.rows.iter().map(|x| x.exceed_count).collect::<Vec<_>>(), 100.0 * r.ambiguous_fraction));
    }
    let zero = PolynomialSystem::new(vec![HomogeneousPolynomial::zero(3, 2).unwrap(); 2]).unwrap();
    let z = run_smoothed_tail_experiment(&e, &zero, &g, SmoothingMode::Additive, MVariant::Statement, &TailConfig::default()).unwrap();
    let consistent = plain.as_ref().is_some_and(|p| {
        p.m == z.m
            && p.rows.iter().zip(&z.rows).all(|(a, b)| (a.exceed_count, a.ambiguous_count) == (b.exceed_count, b.ambiguous_count))
            && p.trials.iter().zip(&z.trials).all(|(a, b)| a.kappa_lo == b.kappa_lo && a.kappa_hi == b.kappa_hi)
    });
    ok &= consistent;
    parts.push(format!("Q=0 matches plain run: {consistent}"));
    (ok, parts.join("; "))
}

fn approximant() -> Outcome {
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let q = random_system(&e, &SeedPlan::new(9), 0);
    let cfg = ApproximantConfig { epsilon: 0.5, attempts: 100, seed: 9, ..Default::default() };
    let r = find_wellconditioned(&q, &e, &cfg).unwrap();
    let target = 1.0 - (1.0 - e.dim() as f64).exp();
    let k = r.attempts.iter().filter(|a| a.distance_ok).count();
    let (_, hi) = wilson_interval(k, r.attempts.len(), Z95);
    let dist_ok = hi >= target;
    let joint_ok = r.joint_rate >= 0.4;
    (
        dist_ok && joint_ok,
        format!(
            "distance rate {:.2} (ci_hi {hi:.3}) vs {target:.6}; joint rate {:.2} vs 0.4; kappa bound {:.3e}",
            r.distance_rate, r.joint_rate, r.kappa_bound
        ),
    )
}

fn appendix() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2usize, 3] {
        let r = estimate_veronese_complexity(n, 1, 2000, 10, 0.01).unwrap();
        let want = chi_mean(n);
        let rel = (r.mean / want - 1.0).abs();
        ok &= rel <= 0.03;
        parts.push(format!("gamma(B_1) n={n}: {:.4} vs {want:.4}", r.mean));
    }
    let full = monomial_basis(3, 4).unwrap().len();
    let cfg = GrassmannConfig { m_grid: vec![6, 10, 14, full], samples: 50, seed: 10, ..Default::default() };
    let rows = run_grassmann_dispersion(3, 4, &cfg).unwrap();
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let top = rows.last().unwrap();
    let iso = (top.min - 1.0).abs() < 1e-9 && (top.max - 1.0).abs() < 1e-9;
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    ok &= iso && monotone;
    parts.push(format!("median sigma over m=6,10,14,{full}: {medians:.4?}"));
    (ok, parts.join("; "))
}

fn reproducibility() -> Outcome {
    let t0 = Instant::now();
    let e = SystemSubspace::full(3, &[2, 2]).unwrap();
    let g = RandomModel::gaussian();
    let q = random_system(&e, &SeedPlan::new(11), 0);
    let tail_cfg = TailConfig { trials: 200, seed: 11, ..Default::default() };
    let runs: Vec<Box<dyn Fn() -> String>> = vec![
        Box::new(|| run_tail_experiment(&e, &g, &tail_cfg).unwrap().report("tail", vec![], 11, t0).to_csv()),
        Box::new(|| {
            run_smoothed_tail_experiment(&e, &q, &g, SmoothingMode::DeltaScaled { delta: 0.5 }, MVariant::Remark, &tail_cfg)
                .unwrap()
                .report("smoothed-tail", vec![], 11, t0)
                .to_csv()
        }),
        Box::new(|| {
            let cfg = ApproximantConfig { attempts: 20, seed: 11, ..Default::default() };
            find_wellconditioned(&q, &e, &cfg).unwrap().report(vec![], 11, t0).to_csv()
        }),
        Box::new(|| {
            let cfg = GrassmannConfig { samples: 10, seed: 11, ..Default::default() };
            format!("{:?}", run_grassmann_dispersion(3, 4, &cfg).unwrap())
        }),
        Box::new(|| format!("{:?}", estimate_veronese_complexity(3, 2, 200, 11, 0.1).unwrap())),
    ];
    let mismatches: Vec<usize> = runs.iter().enumerate().filter(|(_, f)| f() != f()).map(|(i, _)| i).collect();
    (mismatches.is_empty(), format!("{} experiments rerun, mismatches {mismatches:?}", runs.len()))
}

fn main() {
    let mut plain = None;
    let criteria: Vec<(&str, u64, Box<dyn FnMut() -> Outcome>)> = vec![
        ("bw core", 5, Box::new(bw_core)),
        ("dispersion oracles", 240, Box::new(dispersion_oracles)),
        ("condition oracle n=2", 120, Box::new(condition_oracle)),
        ("degenerate detection", 30, Box::new(degenerate_detection)),
        ("invariances", 120, Box::new(invariances)),
        ("norm tail", 60, Box::new(norm_tail)),
        ("main tail", 600, Box::new(|| main_tail(&mut plain))),
    ];
    let run = |id: usize, name: &str, limit: u64, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let (ok, detail) = f();
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs <= limit as f64;
        let verdict = if ok && in_time { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {id:>2} {name}: {detail} [{secs:.1}s, limit {limit}s]");
    };
    for (i, (name, limit, mut f)) in criteria.into_iter().enumerate() {
        run(i + 1, name, limit, &mut *f);
    }
    run(8, "smoothed tail", 600, &mut || smoothed_tail(&plain));
    run(9, "approximant search", 600, &mut approximant);
    run(10, "appendix estimates", 600, &mut appendix);
    run(11, "reproducibility", 600, &mut reproducibility);
}
