//! Local and global condition numbers of polynomial systems on the sphere.
//!
//! For a system `P` of `n - 1` forms in `n` variables and a unit vector `x`,
//! `L(P, x) = sqrt(sigma_min(D^-1 DP(x) B(x)^T)^2 + ||P(x)||^2)` where `B(x)` is
//! an orthonormal basis of the tangent space and `D = diag(sqrt(d_i))`.
//! The global value is `L(P) = min_x L(P, x)` and the condition number is
//! `kappa(P) = ||P||_W / L(P)`.
//!
//! `L(P, .)` is Lipschitz in chord distance with constant
//! `sqrt(Lg^2 + D1^2)`, `Lg = (D2 + D1) / sqrt(d_min)`, where `D1` and `D2` bound
//! the first and second derivatives of `P` on the unit ball.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::{EvalScratch, PolynomialSystem};
use crate::sphere::{
    level_delta, level_size, shared_net, shared_net_or_coarser, NetSymmetry, minimize_on_sphere, tangent_basis_into, MinimizeOptions, SphereNet,
    SphereObjective, SupNormBound,
};

pub use crate::sphere::tangent_basis;

/// Smallest singular value of a row-major `k x k` matrix.
pub fn sigma_min_square(a: &[f64], k: usize) -> f64 {
    match k {
        1 => a[0].abs(),
        2 => {
            let (p, q, r, s) = (a[0], a[1], a[2], a[3]);
            let big = 0.5 * ((p + s).hypot(q - r) + (p - s).hypot(q + r));
            if big == 0.0 {
                0.0
            } else {
                (p * s - q * r).abs() / big
            }
        }
        _ => {
            let m = DMatrix::from_row_slice(k, k, a);
            m.singular_values().min()
        }
    }
}

/// Largest singular value of a row-major `r x c` matrix.
pub fn sigma_max(a: &[f64], r: usize, c: usize) -> f64 {
    if r == 1 {
        return a.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    if r == 2 {
        let (x, y) = a.split_at(c);
        let p: f64 = x.iter().map(|v| v * v).sum();
        let s: f64 = y.iter().map(|v| v * v).sum();
        let q: f64 = x.iter().zip(y).map(|(u, v)| u * v).sum();
        let lam = 0.5 * (p + s) + (0.5 * (p - s)).hypot(q);
        return lam.max(0.0).sqrt();
    }
    DMatrix::from_row_slice(r, c, a).singular_values().max()
}

#[derive(Default)]
struct LocalScratch {
    eval: EvalScratch,
    vals: Vec<f64>,
    jac: Vec<f64>,
    basis: Vec<f64>,
    a: Vec<f64>,
}

thread_local! {
    static SCRATCH: std::cell::RefCell<LocalScratch> = std::cell::RefCell::new(LocalScratch::default());
}

/// `(L, sigma_min, ||P(x)||)` at a unit vector.
fn local_parts(p: &PolynomialSystem, scale: &[f64], x: &[f64], s: &mut LocalScratch) -> (f64, f64, f64) {
    let n = p.n();
    let k = n - 1;
    s.vals.resize(k, 0.0);
    s.jac.resize(k * n, 0.0);
    s.basis.resize(k * n, 0.0);
    s.a.resize(k * k, 0.0);
    p.eval_jac_into(x, &mut s.eval, &mut s.vals, &mut s.jac);
    tangent_basis_into(x, &mut s.basis);
    for i in 0..k {
        let row = &s.jac[i * n..(i + 1) * n];
        for j in 0..k {
            let b = &s.basis[j * n..(j + 1) * n];
            s.a[i * k + j] = row.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() / scale[i];
        }
    }
    let sig = sigma_min_square(&s.a, k);
    let res = s.vals.iter().map(|v| v * v).sum::<f64>().sqrt();
    (sig.hypot(res), sig, res)
}

/// `L(P, x)` and its parts at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalConditionValue {
    pub point: Vec<f64>,
    pub l_value: f64,
    /// `||P||_W / L(P, x)`; `None` when `L(P, x) = 0`.
    pub kappa: Option<f64>,
    pub sigma_min: f64,
    pub residual: f64,
}

/// Evaluates `L(P, x)` at a unit vector `x`.
pub fn local_l(p: &PolynomialSystem, x: &[f64]) -> Result<LocalConditionValue> {
    if x.len() != p.n() {
        return invalid("point has the wrong dimension");
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return invalid(format!("point must be a unit vector, has norm {norm}"));
    }
    let scale = p.degree_scaling();
    let mut s = LocalScratch::default();
    let (l, sig, res) = local_parts(p, &scale, x, &mut s);
    let bw = p.bw_norm();
    Ok(LocalConditionValue {
        point: x.to_vec(),
        l_value: l,
        kappa: (l > 0.0).then(|| bw / l),
        sigma_min: sig,
        residual: res,
    })
}

/// Certified derivative bounds and the resulting Lipschitz constant of `L(P, .)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzBounds {
    pub sup_norm: SupNormBound,
    /// Upper bound on `sup ||DP||` over the unit ball.
    pub d1: f64,
    /// Upper bound on `sup ||D^2 P||` over the unit ball.
    pub d2: f64,
    pub lipschitz: f64,
}

/// Derivative bounds for `P` from its values on `net`; any net radius is accepted.
pub fn lipschitz_bounds(p: &PolynomialSystem, net: &SphereNet) -> Result<LipschitzBounds> {
    let sup = crate::sphere::sup_norm_upper(p, net)?;
    let n = p.n();
    let k = n - 1;
    let d = p.max_degree() as f64;
    let equal = p.equal_degrees();
    let kellogg = |deg: f64| if equal { deg } else { deg * deg };
    let f1 = kellogg(d - 1.0);
    let top = net.level() as usize;
    let mut level_max = vec![0.0f64; top + 1];
    let mut s = EvalScratch::default();
    let mut vals = vec![0.0; k];
    let mut jac = vec![0.0; k * n];
    for (i, x) in net.points().enumerate() {
        p.eval_jac_into(x, &mut s, &mut vals, &mut jac);
        let op = sigma_max(&jac, k, n);
        let l = net.point_level(i) as usize;
        level_max[l] = level_max[l].max(op);
    }
    let mut running: f64 = 0.0;
    let mut d1_net = f64::INFINITY;
    for (l, m) in level_max.iter().enumerate() {
        running = running.max(*m);
        let dl = level_delta(n, l as u32);
        if f1 * dl < 1.0 {
            d1_net = d1_net.min(running / (1.0 - f1 * dl));
        }
    }
    let d1 = d1_net.min(kellogg(d) * sup.hi);
    let d2 = f1 * d1;
    let dmin = p.min_degree() as f64;
    let lg = (d2 + d1) / dmin.sqrt();
    Ok(LipschitzBounds { sup_norm: sup, d1, d2, lipschitz: lg.hypot(d1) })
}

struct LObjective<'a> {
    p: &'a PolynomialSystem,
    scale: Vec<f64>,
    lipschitz: f64,
}

impl SphereObjective for LObjective<'_> {
    fn dim(&self) -> usize {
        self.p.n()
    }
    fn value(&self, x: &[f64]) -> f64 {
        SCRATCH.with(|s| local_parts(self.p, &self.scale, x, &mut s.borrow_mut()).0)
    }
    fn modulus(&self, rho: f64) -> f64 {
        self.lipschitz * rho
    }
    fn is_even(&self) -> bool {
        true
    }
    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// Controls for [`global_l_with`].
#[derive(Clone, Debug)]
pub struct ConditionOptions {
    /// Net radius; defaults to `1 / (3 d^2)`.
    pub delta: Option<f64>,
    pub refine_iters: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Stop refining cells whose lower bound on `L` reaches this value.
    pub prune_above: Option<f64>,
    /// Stop once a point with `L` at or below this value is found.
    pub stop_below: Option<f64>,
    pub hints: Vec<Vec<f64>>,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self {
            delta: None,
            refine_iters: 100,
            rel_tol: 1e-3,
            abs_tol: 1e-14,
            max_evals: 1_000_000,
            seed: 0,
            prune_above: None,
            stop_below: None,
            hints: Vec::new(),
        }
    }
}

/// Certified bracket on `L(P)` and `kappa(P)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GlobalConditionReport {
    pub n: usize,
    pub degrees: Vec<u32>,
    pub bw_norm: f64,
    pub l_lo: f64,
    pub l_hi: f64,
    pub argmin: Vec<f64>,
    pub kappa_lo: f64,
    /// `None` means the bracket is unbounded above.
    pub kappa_hi: Option<f64>,
    pub delta: f64,
    pub net_size: usize,
    pub evals: usize,
    pub converged: bool,
    pub lipschitz: LipschitzBounds,
}

impl GlobalConditionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Largest number of root cells of the branch and bound; finer nets only feed the
/// derivative bounds, since refinement is adaptive.
pub const ROOT_CELLS: u128 = 20_000;

/// Default net radius `1 / (3 d^2)`.
pub fn default_delta(p: &PolynomialSystem) -> f64 {
    let d = p.max_degree() as f64;
    1.0 / (3.0 * d * d)
}

/// Certified `L(P)` with default tolerances.
pub fn global_l(p: &PolynomialSystem, delta: f64, refine_iters: usize) -> Result<GlobalConditionReport> {
    global_l_with(p, &ConditionOptions { delta: Some(delta), refine_iters, ..Default::default() })
}

/// Certified `kappa(P)`; the same report as [`global_l`].
pub fn global_kappa(p: &PolynomialSystem, delta: f64, refine_iters: usize) -> Result<GlobalConditionReport> {
    global_l(p, delta, refine_iters)
}

pub fn global_l_with(p: &PolynomialSystem, opts: &ConditionOptions) -> Result<GlobalConditionReport> {
    if p.is_zero() {
        return invalid("the zero system has no finite condition number");
    }
    let d = p.max_degree() as f64;
    let delta = opts.delta.unwrap_or_else(|| default_delta(p));
    if !(delta > 0.0 && delta * 3.0 * d * d <= 1.0 + 1e-12) {
        return invalid(format!("net radius {delta} must lie in (0, 1/(3 d^2)] with d = {d}"));
    }
    let net = shared_net_or_coarser(p.n(), delta)?;
    let lip = lipschitz_bounds(p, &net)?;
    let mut root_level = net.level();
    while root_level > 0 && level_size(p.n(), root_level).is_some_and(|s| s / 2 > ROOT_CELLS) {
        root_level -= 1;
    }
    let root = if root_level == net.level() {
        net.clone()
    } else {
        shared_net(p.n(), level_delta(p.n(), root_level), NetSymmetry::Antipodal)?
    };
    let obj = LObjective { p, scale: p.degree_scaling(), lipschitz: lip.lipschitz };
    let mopts = MinimizeOptions {
        refine_iters: opts.refine_iters,
        seed: opts.seed,
        abs_tol: opts.abs_tol,
        rel_tol: opts.rel_tol,
        max_evals: opts.max_evals,
        prune_above: opts.prune_above,
        stop_below: opts.stop_below,
        hints: opts.hints.clone(),
        ..Default::default()
    };
    let r = minimize_on_sphere(&obj, &root, &mopts)?;
    let bw = p.bw_norm();
    Ok(GlobalConditionReport {
        n: p.n(),
        degrees: p.degrees(),
        bw_norm: bw,
        l_lo: r.value_lo,
        l_hi: r.value_hi,
        argmin: r.argmin,
        kappa_lo: bw / r.value_hi,
        kappa_hi: (r.value_lo > 0.0).then(|| bw / r.value_lo),
        delta: net.delta_achieved(),
        net_size: root.len(),
        evals: r.evals,
        converged: r.converged,
        lipschitz: lip,
    })
}
