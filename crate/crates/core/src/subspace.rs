//! Linear subspaces of homogeneous polynomials and their dispersion.
//!
//! A subspace `F` of degree-`d` forms is stored by an orthonormal basis, in
//! Bombieri-Weyl orthonormal coordinates. The reproducing polynomial
//! `q_v(x) = (v . x)^d` satisfies `<f, q_v> = f(v)`, and
//! `s_F(v) = ||P_F q_v||` is the Euclidean norm of the basis evaluated at `v`.
//! The dispersion is `sigma(F) = max s_F / min s_F`.
//!
//! Both extrema are certified by [`minimize_on_sphere`] using the modulus
//! `|s(v) - s(w)| <= ||q_v - q_w|| = sqrt(2 - 2 (v . w)^d)` together with the
//! Kellogg bound `d * max s * |v - w|`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use std::sync::Arc;

use crate::poly::{monomial_basis, HomogeneousPolynomial, MonomialBasis, PolynomialSystem};
use crate::sphere::{
    maximize_on_sphere, shared_net, NetSymmetry, minimize_on_sphere, MinimizeOptions, SphereObjective,
};

/// Relative residual below which a generator counts as linearly dependent.
pub const RANK_TOL: f64 = 1e-9;

/// `s_min <= DEGENERATE_TOL * s_max` marks a subspace as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// A subspace of degree-`d` forms in `n` variables with an orthonormal basis.
#[derive(Clone, Debug)]
pub struct PolySubspace {
    n: usize,
    d: u32,
    m: usize,
    len: usize,
    coords: Vec<f64>,
    basis: Arc<MonomialBasis>,
}

impl PartialEq for PolySubspace {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.d == other.d && self.m == other.m && self.coords == other.coords
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalizes `generators` with twice-iterated modified Gram-Schmidt.
///
/// Generators whose residual after projection falls below `RANK_TOL` times their
/// norm are dropped; fails only if nothing remains.
pub fn orthonormalize(generators: &[HomogeneousPolynomial]) -> Result<PolySubspace> {
    let Some(first) = generators.first() else {
        return invalid("at least one generator is required");
    };
    let (n, d) = (first.n(), first.degree());
    if generators.iter().any(|g| g.n() != n || g.degree() != d) {
        return invalid("generators must share the number of variables and degree");
    }
    let rows: Vec<Vec<f64>> = generators.iter().map(|g| g.orthonormal_coords()).collect();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for g in rows {
        if let Some(v) = orthogonalize_against(&out, g) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return invalid("all generators are zero");
    }
    PolySubspace::from_orthonormal_rows(n, d, out)
}

/// Removes the components along `basis` (orthonormal) and normalizes; `None` on rank loss.
fn orthogonalize_against(basis: &[Vec<f64>], mut g: Vec<f64>) -> Option<Vec<f64>> {
    let norm0 = dot(&g, &g).sqrt();
    if norm0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(&g, b);
            g.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let r = dot(&g, &g).sqrt();
    if r < RANK_TOL * norm0 {
        return None;
    }
    g.iter_mut().for_each(|x| *x /= r);
    Some(g)
}

impl PolySubspace {
    /// Builds a subspace from rows that are already orthonormal coordinate vectors.
    pub fn from_orthonormal_rows(n: usize, d: u32, rows: Vec<Vec<f64>>) -> Result<Self> {
        let basis = monomial_basis(n, d)?;
        let len = basis.len();
        if rows.is_empty() {
            return invalid("a subspace needs at least one basis vector");
        }
        if rows.iter().any(|r| r.len() != len) {
            return invalid("basis row has the wrong length");
        }
        let m = rows.len();
        Ok(Self { n, d, m, len, coords: rows.concat(), basis })
    }

    /// The whole space of degree-`d` forms.
    pub fn full(n: usize, d: u32) -> Result<Self> {
        let len = monomial_basis(n, d)?.len();
        let rows = (0..len)
            .map(|i| {
                let mut r = vec![0.0; len];
                r[i] = 1.0;
                r
            })
            .collect();
        Self::from_orthonormal_rows(n, d, rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    /// Dimension `m` of the subspace.
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Dimension of the ambient space of degree-`d` forms.
    pub fn ambient_dim(&self) -> usize {
        self.len
    }

    pub fn is_full(&self) -> bool {
        self.m == self.len
    }

    /// Orthonormal coordinates of the `j`-th basis polynomial.
    pub fn basis_coords(&self, j: usize) -> &[f64] {
        &self.coords[j * self.len..(j + 1) * self.len]
    }

    /// The orthonormal basis as polynomials.
    pub fn basis(&self) -> Vec<HomogeneousPolynomial> {
        (0..self.m)
            .map(|j| {
                HomogeneousPolynomial::from_orthonormal_coords(self.n, self.d, self.basis_coords(j))
                    .expect("basis row has basis length")
            })
            .collect()
    }

    /// Polynomial with coordinates `c` with respect to the orthonormal basis.
    pub fn combine(&self, c: &[f64]) -> Result<HomogeneousPolynomial> {
        if c.len() != self.m {
            return invalid("coefficient vector length differs from the subspace dimension");
        }
        let mut out = vec![0.0; self.len];
        for (j, cj) in c.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis_coords(j)) {
                *o += cj * b;
            }
        }
        HomogeneousPolynomial::from_orthonormal_coords(self.n, self.d, &out)
    }

    /// Orthogonal projection of `p` onto the subspace.
    pub fn project(&self, p: &HomogeneousPolynomial) -> Result<HomogeneousPolynomial> {
        self.check_space(p)?;
        let b = p.orthonormal_coords();
        let c: Vec<f64> = (0..self.m).map(|j| dot(&b, self.basis_coords(j))).collect();
        self.combine(&c)
    }

    /// Distance from `p` to the subspace.
    pub fn distance(&self, p: &HomogeneousPolynomial) -> Result<f64> {
        let q = self.project(p)?;
        Ok(p.add_scaled(&q, -1.0)?.bw_norm())
    }

    fn check_space(&self, p: &HomogeneousPolynomial) -> Result<()> {
        if p.n() != self.n || p.degree() != self.d {
            return invalid("polynomial does not live in the ambient space of the subspace");
        }
        Ok(())
    }

    /// `s_F(v) = ||P_F q_v||`, for a unit vector `v`.
    pub fn sigma_at(&self, v: &[f64], powers: &mut Vec<f64>, phi: &mut Vec<f64>) -> f64 {
        phi.resize(self.len, 0.0);
        self.basis.veronese_into(v, powers, phi);
        let mut s = 0.0;
        for j in 0..self.m {
            let c = dot(self.basis_coords(j), phi);
            s += c * c;
        }
        s.sqrt()
    }
}

/// The reproducing polynomial `q_v = (v . x)^d` with coefficients `binom(d, alpha) v^alpha`;
/// fails unless `|v| = 1` within `1e-12`.
pub fn veronese_vector(n: usize, d: u32, v: &[f64]) -> Result<HomogeneousPolynomial> {
    if v.len() != n {
        return invalid("vector has the wrong dimension");
    }
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return invalid(format!("vector must be a unit vector, has norm {norm}"));
    }
    let basis = monomial_basis(n, d)?;
    let coeffs = basis
        .exponents()
        .enumerate()
        .map(|(i, alpha)| {
            basis.weight(i) * alpha.iter().zip(v).map(|(&a, x)| x.powi(a as i32)).product::<f64>()
        })
        .collect();
    HomogeneousPolynomial::new(n, d, coeffs)
}

/// `||P_F q_v||` for a vector `v`; fails unless `|v| = 1` within `1e-9`.
pub fn sigma_point(f: &PolySubspace, v: &[f64]) -> Result<f64> {
    if v.len() != f.n() {
        return invalid("vector has the wrong dimension");
    }
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return invalid(format!("vector must be a unit vector, has norm {norm}"));
    }
    Ok(f.sigma_at(v, &mut Vec::new(), &mut Vec::new()))
}

/// `sqrt(2 (1 - (1 - rho^2/2)^d))`, the largest `||q_v - q_w||` at chord distance `rho`.
pub fn reproducing_modulus(d: u32, rho: f64) -> f64 {
    if rho >= std::f64::consts::SQRT_2 {
        return std::f64::consts::SQRT_2;
    }
    let x = rho * rho / 2.0;
    (2.0 * -f64::exp_m1(d as f64 * f64::ln_1p(-x))).sqrt()
}

struct SigmaObjective<'a> {
    f: &'a PolySubspace,
    kellogg: f64,
}

impl SigmaObjective<'_> {
    /// Bounds on `s_F` over a cap of chord radius `rho` around `x`.
    ///
    /// With `a = P_F q_x` and `t = y - x`, `P_F q_y = a + P_F Dq_x[t] + P_F R` where
    /// `||Dq_x[t]|| <= d |t|` and `||R|| <= d (d - 1) |t|^2 / 2`, because the BW norm of a
    /// product of linear forms is at most the product of their lengths. The cross term
    /// `<a, Dq_x[t]> = grad a(x) . t` has radial part `-d s^2 |t|^2 / 2` by Euler's identity.
    fn taylor_bounds(&self, x: &[f64], rho: f64) -> (f64, f64, f64) {
        let f = self.f;
        SCRATCH.with(|s| {
            let (pw, phi) = &mut *s.borrow_mut();
            phi.resize(f.len, 0.0);
            f.basis.veronese_into(x, pw, phi);
            let mut w = vec![0.0; f.len];
            let mut g = 0.0;
            for j in 0..f.m {
                let row = f.basis_coords(j);
                let c = dot(row, phi);
                g += c * c;
                for (wi, r) in w.iter_mut().zip(row) {
                    *wi += c * r;
                }
            }
            let mut grad = vec![0.0; f.n];
            f.basis.veronese_grad_dot(pw, &w, &mut grad);
            let radial = dot(&grad, x);
            let tang = grad.iter().zip(x).map(|(gk, xk)| (gk - radial * xk).powi(2)).sum::<f64>().sqrt();
            let d = f.d as f64;
            let rem = d * (d - 1.0) * rho * rho / 2.0;
            let lo = (g - 2.0 * tang * rho - d * g * rho * rho).max(0.0).sqrt() - rem;
            let hi = (g + 2.0 * tang * rho + d * d * rho * rho).sqrt() + rem;
            (g.sqrt(), lo, hi)
        })
    }
}

impl SphereObjective for SigmaObjective<'_> {
    fn dim(&self) -> usize {
        self.f.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        SCRATCH.with(|s| {
            let (pw, phi) = &mut *s.borrow_mut();
            self.f.sigma_at(x, pw, phi)
        })
    }
    fn modulus(&self, rho: f64) -> f64 {
        if self.f.is_full() {
            return 0.0;
        }
        reproducing_modulus(self.f.degree(), rho).min(self.kellogg * rho).min(1.0)
    }
    fn cell_bounds(&self, x: &[f64], rho: f64) -> (f64, f64, f64) {
        if self.f.is_full() {
            return (1.0, 1.0, 1.0);
        }
        let (v, lo, hi) = self.taylor_bounds(x, rho);
        let m = self.modulus(rho);
        (v, (v - m).max(lo), (v + m).min(hi))
    }
    fn is_even(&self) -> bool {
        true
    }
    fn is_nonnegative(&self) -> bool {
        true
    }
}

thread_local! {
    static SCRATCH: std::cell::RefCell<(Vec<f64>, Vec<f64>)> = const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
}

/// Controls for [`dispersion_with`].
#[derive(Clone, Debug)]
pub struct DispersionOptions {
    /// Chord radius of the initial net.
    pub delta: f64,
    pub refine_iters: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Extra descent starts for the minimum of `s_F`.
    pub hints: Vec<Vec<f64>>,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self {
            delta: 0.2,
            refine_iters: 200,
            rel_tol: 1e-3,
            abs_tol: 1e-12,
            max_evals: 2_000_000,
            seed: 0,
            hints: Vec::new(),
        }
    }
}

/// Certified dispersion of one subspace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispersionReport {
    /// `sigma_max_lo / sigma_min_hi`, also the point estimate.
    pub sigma_lo: f64,
    /// `sigma_max_hi / sigma_min_lo`; `None` means unbounded.
    pub sigma_hi: Option<f64>,
    pub sigma_min_lo: f64,
    pub sigma_min_hi: f64,
    pub sigma_max_lo: f64,
    pub sigma_max_hi: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub delta: f64,
    pub evals: usize,
    pub degenerate: bool,
    pub converged: bool,
}

/// Certified dispersion with default tolerances.
pub fn dispersion(f: &PolySubspace, delta: f64, refine_iters: usize) -> Result<DispersionReport> {
    dispersion_with(f, &DispersionOptions { delta, refine_iters, ..Default::default() })
}

pub fn dispersion_with(f: &PolySubspace, opts: &DispersionOptions) -> Result<DispersionReport> {
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return invalid("net radius must lie in (0, 1)");
    }
    let net = shared_net(f.n(), opts.delta, NetSymmetry::Antipodal)?;
    if f.is_full() {
        // s_F(v) = ||q_v|| = 1 identically
        let mut e1 = vec![0.0; f.n()];
        e1[0] = 1.0;
        return Ok(DispersionReport {
            sigma_lo: 1.0,
            sigma_hi: Some(1.0),
            sigma_min_lo: 1.0,
            sigma_min_hi: 1.0,
            sigma_max_lo: 1.0,
            sigma_max_hi: 1.0,
            argmin: e1.clone(),
            argmax: e1,
            delta: net.delta_achieved(),
            evals: 0,
            degenerate: false,
            converged: true,
        });
    }
    let mopts = MinimizeOptions {
        refine_iters: opts.refine_iters,
        seed: opts.seed,
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_evals: opts.max_evals,
        hints: opts.hints.clone(),
        ..Default::default()
    };
    let d = f.degree() as f64;
    let max = maximize_on_sphere(&SigmaObjective { f, kellogg: d }, &net, &MinimizeOptions { hints: vec![], ..mopts.clone() })?;
    let sigma_max_lo = max.value_lo;
    let sigma_max_hi = max.value_hi.min(1.0);
    let min = minimize_on_sphere(&SigmaObjective { f, kellogg: d * sigma_max_hi }, &net, &mopts)?;
    let (sigma_min_lo, sigma_min_hi) = (min.value_lo, min.value_hi);
    let degenerate = sigma_min_hi <= DEGENERATE_TOL * sigma_max_lo;
    let sigma_hi = (sigma_min_lo > 0.0 && !degenerate).then(|| sigma_max_hi / sigma_min_lo);
    let sigma_lo = if sigma_min_hi > 0.0 { sigma_max_lo / sigma_min_hi } else { f64::INFINITY };
    Ok(DispersionReport {
        sigma_lo,
        sigma_hi,
        sigma_min_lo,
        sigma_min_hi,
        sigma_max_lo,
        sigma_max_hi,
        argmin: min.argmin,
        argmax: max.argmin,
        delta: net.delta_achieved(),
        evals: min.evals + max.evals,
        degenerate,
        converged: min.converged && max.converged,
    })
}

/// The product `F_1 x ... x F_{n-1}` of one subspace per equation.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSubspace {
    factors: Vec<PolySubspace>,
}

impl SystemSubspace {
    pub fn new(factors: Vec<PolySubspace>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return invalid("a system subspace needs at least one factor");
        };
        let n = first.n();
        if factors.iter().any(|f| f.n() != n) {
            return invalid("all factors must share the number of variables");
        }
        if factors.len() != n - 1 {
            return invalid(format!("a system subspace in {n} variables needs {} factors", n - 1));
        }
        Ok(Self { factors })
    }

    /// Full spaces of the given degrees.
    pub fn full(n: usize, degrees: &[u32]) -> Result<Self> {
        Self::new(degrees.iter().map(|&d| PolySubspace::full(n, d)).collect::<Result<_>>()?)
    }

    /// The same subspace repeated for each of the `n - 1` equations.
    pub fn repeated(f: PolySubspace) -> Result<Self> {
        let k = f.n() - 1;
        Self::new(vec![f; k])
    }

    pub fn n(&self) -> usize {
        self.factors[0].n()
    }

    pub fn factors(&self) -> &[PolySubspace] {
        &self.factors
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.factors.iter().map(|f| f.degree()).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.factors.iter().map(|f| f.degree()).max().unwrap_or(0)
    }

    /// `dim E = sum_i dim F_i`.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    /// Requires every `q_i` to lie in `F_i` up to `1e-9 ||Q||_W`.
    pub fn check_contains(&self, q: &PolynomialSystem) -> Result<()> {
        if q.n() != self.n() || q.degrees() != self.degrees() {
            return invalid("system does not match the shape of E");
        }
        let mut res2 = 0.0f64;
        for (f, p) in self.factors.iter().zip(q.polys()) {
            res2 += f.distance(p)?.powi(2);
        }
        if res2.sqrt() > 1e-9 * q.bw_norm() {
            return invalid(format!("system is at distance {} from E", res2.sqrt()));
        }
        Ok(())
    }
}

/// Dispersion of a product subspace: the largest factor dispersion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDispersion {
    pub sigma_lo: f64,
    pub sigma_hi: Option<f64>,
    /// Largest `sigma_max` upper bound over the factors.
    pub sigma_max_hi: f64,
    /// Smallest `sigma_max` lower bound over the factors.
    pub sigma_max_lo: f64,
    pub degenerate: bool,
    pub factors: Vec<DispersionReport>,
}

pub fn dispersion_system(e: &SystemSubspace, delta: f64, refine_iters: usize) -> Result<SystemDispersion> {
    dispersion_system_with(e, &DispersionOptions { delta, refine_iters, ..Default::default() })
}

pub fn dispersion_system_with(e: &SystemSubspace, opts: &DispersionOptions) -> Result<SystemDispersion> {
    let mut factors: Vec<DispersionReport> = Vec::with_capacity(e.factors().len());
    for (i, f) in e.factors().iter().enumerate() {
        let repeat = e.factors()[..i].iter().position(|g| g == f);
        let r = match repeat {
            Some(j) => factors[j].clone(),
            None => dispersion_with(f, opts)?,
        };
        factors.push(r);
    }
    let sigma_lo = factors.iter().map(|r| r.sigma_lo).fold(0.0, f64::max);
    let sigma_hi = factors.iter().try_fold(0.0f64, |acc, r| r.sigma_hi.map(|h| acc.max(h)));
    Ok(SystemDispersion {
        sigma_lo,
        sigma_hi,
        sigma_max_hi: factors.iter().map(|r| r.sigma_max_hi).fold(0.0, f64::max),
        sigma_max_lo: factors.iter().map(|r| r.sigma_max_lo).fold(f64::INFINITY, f64::min),
        degenerate: factors.iter().any(|r| r.degenerate),
        factors,
    })
}

/// Named families of subspaces.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedSpace {
    /// All degree-`d` forms.
    Full,
    /// `span{x_1^d, ..., x_n^d}`.
    PowerMonomials,
    /// `span{(sum x_i^2)^(d/2 - 1) x_k x_l}` for even `d`; rotation invariant.
    SosFamily,
    /// Forms vanishing at `u` with derivative along `v` vanishing at `u`.
    /// Empty `u` and `v` stand for `e_1` and `e_2`.
    Degenerate { u: Vec<f64>, v: Vec<f64> },
}

impl std::str::FromStr for NamedSpace {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "power_monomials" => Ok(Self::PowerMonomials),
            "sos_family" => Ok(Self::SosFamily),
            "degenerate" => Ok(Self::Degenerate { u: Vec::new(), v: Vec::new() }),
            other => invalid(format!("unknown named space {other:?}")),
        }
    }
}

/// Builds one of the [`NamedSpace`] families.
pub fn make_named_space(kind: &NamedSpace, n: usize, d: u32) -> Result<PolySubspace> {
    if n < 2 || d == 0 {
        return invalid("named spaces need n >= 2 and d >= 1");
    }
    let basis = monomial_basis(n, d)?;
    let len = basis.len();
    match kind {
        NamedSpace::Full => PolySubspace::full(n, d),
        NamedSpace::PowerMonomials => {
            let rows = (0..n)
                .map(|i| {
                    let mut alpha = vec![0u32; n];
                    alpha[i] = d;
                    let mut r = vec![0.0; len];
                    r[basis.index_of(&alpha).expect("pure power in basis")] = 1.0;
                    r
                })
                .collect();
            PolySubspace::from_orthonormal_rows(n, d, rows)
        }
        NamedSpace::SosFamily => {
            if d % 2 != 0 || d < 2 {
                return invalid("the sos family needs an even degree d >= 2");
            }
            let sq = HomogeneousPolynomial::new(n, 2, {
                let b2 = monomial_basis(n, 2)?;
                b2.exponents().map(|a| if a.contains(&2) { 1.0 } else { 0.0 }).collect()
            })?;
            let mut power = HomogeneousPolynomial::new(n, 0, vec![1.0])?;
            for _ in 0..(d / 2 - 1) {
                power = power.mul(&sq)?;
            }
            let mut gens = Vec::with_capacity(n * (n + 1) / 2);
            for k in 0..n {
                for l in k..n {
                    let mut alpha = vec![0u32; n];
                    alpha[k] += 1;
                    alpha[l] += 1;
                    let xkxl = HomogeneousPolynomial::from_terms(n, 2, &[(alpha, 1.0)])?;
                    gens.push(power.mul(&xkxl)?);
                }
            }
            orthonormalize(&gens)
        }
        NamedSpace::Degenerate { u, v } if u.is_empty() && v.is_empty() => {
            let e = |i: usize| (0..n).map(|j| if j == i { 1.0 } else { 0.0 }).collect();
            make_named_space(&NamedSpace::Degenerate { u: e(0), v: e(1) }, n, d)
        }
        NamedSpace::Degenerate { u, v } => {
            if u.len() != n || v.len() != n {
                return invalid("u and v must have n coordinates");
            }
            let nu = dot(u, u).sqrt();
            let nv = dot(v, v).sqrt();
            if (nu - 1.0).abs() > 1e-12 || (nv - 1.0).abs() > 1e-12 || dot(u, v).abs() > 1e-12 {
                return invalid("u and v must be orthonormal");
            }
            let mut phi = vec![0.0; len];
            basis.veronese_into(u, &mut Vec::new(), &mut phi);
            let psi: Vec<f64> = basis
                .exponents()
                .enumerate()
                .map(|(i, alpha)| {
                    let mut s = 0.0;
                    for j in 0..n {
                        if alpha[j] == 0 {
                            continue;
                        }
                        let mut t = v[j] * alpha[j] as f64;
                        for (k, &a) in alpha.iter().enumerate() {
                            let e = if k == j { a - 1 } else { a };
                            t *= u[k].powi(e as i32);
                        }
                        s += t;
                    }
                    basis.sqrt_weights()[i] * s
                })
                .collect();
            let mut constraints = Vec::new();
            for c in [phi, psi] {
                if let Some(b) = orthogonalize_against(&constraints, c) {
                    constraints.push(b);
                }
            }
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(len - constraints.len());
            for i in 0..len {
                if rows.len() + constraints.len() == len {
                    break;
                }
                let mut e = vec![0.0; len];
                e[i] = 1.0;
                for c in &constraints {
                    let s = dot(&e, c);
                    e.iter_mut().zip(c).for_each(|(x, y)| *x -= s * y);
                }
                let mut all = constraints.clone();
                all.extend(rows.iter().cloned());
                let r0 = dot(&e, &e).sqrt();
                if r0 < 0.1 {
                    continue;
                }
                if let Some(b) = orthogonalize_against(&all, e) {
                    rows.push(b);
                }
            }
            PolySubspace::from_orthonormal_rows(n, d, rows)
        }
    }
}
