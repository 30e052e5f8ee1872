//! Nets on the unit sphere and certified minimization of functions with a known
//! modulus of continuity.
//!
//! For `n = 2` a net is a uniform angular grid with `4 * 2^J` points. For `n >= 3`
//! it is the radial projection of the vertex grid of spacing `2 / 2^J` on the
//! surface of the cube `[-1, 1]^n`. Radial projection is 1-Lipschitz outside the
//! unit ball, so a grid cell of half-width `h` projects into a chord ball of
//! radius `h * sqrt(n - 1)` around its projected center. Nets at consecutive `J`
//! are nested, and every point records the coarsest level it belongs to.
//!
//! [`minimize_on_sphere`] runs branch and bound over the grid cells: a cell with
//! center value `f(c)` and chord radius `r` is discarded once its lower bound,
//! `f(c) - modulus(r)` unless the objective supplies a sharper one, is within
//! tolerance of the incumbent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Error, Result};
use crate::poly::{fill_powers, eval_strided, HomogeneousPolynomial, PolynomialSystem};

/// Largest number of points a net may hold.
pub const MAX_NET_POINTS: usize = 4_000_000;

const PAR_THRESHOLD: usize = 256;

/// Whether a net covers the whole sphere or one point of each antipodal pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetSymmetry {
    Full,
    Antipodal,
}

/// A finite set of unit vectors with a certified covering radius.
#[derive(Clone, Debug)]
pub struct SphereNet {
    n: usize,
    symmetry: NetSymmetry,
    delta_target: f64,
    delta_achieved: f64,
    seed: u64,
    level: u32,
    points: Vec<f64>,
    levels: Vec<u8>,
    size_bound: f64,
}

/// Covering radius of the level-`l` grid.
pub fn level_delta(n: usize, l: u32) -> f64 {
    if n == 2 {
        let k = 4.0 * 2f64.powi(l as i32);
        2.0 * (std::f64::consts::PI / (2.0 * k)).sin()
    } else {
        ((n - 1) as f64).sqrt() / 2f64.powi(l as i32)
    }
}

/// Number of points of the full level-`l` net.
pub fn level_size(n: usize, l: u32) -> Option<u128> {
    if n == 2 {
        return Some(4u128 << l);
    }
    let k = 1u128.checked_shl(l)?;
    let a = (k + 1).checked_pow(n as u32)?;
    let b = (k - 1).checked_pow(n as u32)?;
    Some(a - b)
}

/// Size bound `2n (1 + 2/delta)^(n-1)` for a delta-net of the sphere.
pub fn lemma_size_bound(n: usize, delta: f64) -> f64 {
    2.0 * n as f64 * (1.0 + 2.0 / delta).powi(n as i32 - 1)
}

fn coarsest_level(idx: u64, top: u32) -> u32 {
    if idx == 0 {
        0
    } else {
        top - idx.trailing_zeros().min(top)
    }
}

/// Builds a full net with covering radius at most `delta`.
pub fn build_net(n: usize, delta: f64, seed: u64) -> Result<SphereNet> {
    build_net_with(n, delta, seed, NetSymmetry::Full)
}

/// Builds a net holding one point of each antipodal pair, sufficient for even functions.
pub fn build_antipodal_net(n: usize, delta: f64, seed: u64) -> Result<SphereNet> {
    build_net_with(n, delta, seed, NetSymmetry::Antipodal)
}

/// Process-wide cache of nets keyed by `(n, delta, symmetry)`.
///
/// Grid nets do not depend on the seed; cached nets record seed 0.
pub fn shared_net(n: usize, delta: f64, symmetry: NetSymmetry) -> Result<Arc<SphereNet>> {
    type Key = (usize, u64, NetSymmetry);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<SphereNet>>>> = OnceLock::new();
    let key = (n, delta.to_bits(), symmetry);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(net) = cache.lock().expect("net cache poisoned").get(&key) {
        return Ok(net.clone());
    }
    let net = Arc::new(build_net_with(n, delta, 0, symmetry)?);
    cache.lock().expect("net cache poisoned").insert(key, net.clone());
    Ok(net)
}

pub fn build_net_with(n: usize, delta: f64, seed: u64, symmetry: NetSymmetry) -> Result<SphereNet> {
    if n < 2 {
        return invalid("sphere nets need n >= 2");
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid("delta must be positive");
    }
    let mut level = 0u32;
    while level_delta(n, level) > delta {
        level += 1;
    }
    let size = level_size(n, level).unwrap_or(u128::MAX);
    let stored = match symmetry {
        NetSymmetry::Full => size,
        NetSymmetry::Antipodal => size / 2,
    };
    if stored > MAX_NET_POINTS as u128 {
        let mut feasible = 0;
        while level_size(n, feasible + 1).is_some_and(|s| s <= MAX_NET_POINTS as u128) {
            feasible += 1;
        }
        return Err(Error::ResourceExhausted {
            message: format!("net for n={n}, delta={delta} needs {size} points"),
            achieved: level_delta(n, feasible),
        });
    }
    let mut points = Vec::with_capacity(stored as usize * n);
    let mut levels = Vec::with_capacity(stored as usize);
    if n == 2 {
        let k = 4u64 << level;
        let count = match symmetry {
            NetSymmetry::Full => k,
            NetSymmetry::Antipodal => k / 2,
        };
        for i in 0..count {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            points.extend_from_slice(&[th.cos(), th.sin()]);
            levels.push(coarsest_level(i, level) as u8);
        }
    } else {
        let k = 1u64 << level;
        let mut idx = vec![0u64; n];
        let mut y = vec![0.0; n];
        for axis in 0..n {
            let signs: &[u64] = match symmetry {
                NetSymmetry::Full => &[0, 1],
                NetSymmetry::Antipodal => &[1],
            };
            for &s in signs {
                // points whose first boundary coordinate is `axis`
                let free: Vec<usize> = (0..n).filter(|&b| b != axis).collect();
                let ranges: Vec<(u64, u64)> = free
                    .iter()
                    .map(|&b| if b < axis { (1, k.saturating_sub(1)) } else { (0, k) })
                    .collect();
                if ranges.iter().any(|&(lo, hi)| lo > hi) {
                    continue;
                }
                idx[axis] = s * k;
                for (f, r) in free.iter().zip(&ranges) {
                    idx[*f] = r.0;
                }
                loop {
                    let mut norm = 0.0;
                    for j in 0..n {
                        y[j] = -1.0 + 2.0 * idx[j] as f64 / k as f64;
                        norm += y[j] * y[j];
                    }
                    let norm = norm.sqrt();
                    points.extend(y.iter().map(|v| v / norm));
                    let lv = idx.iter().map(|&i| coarsest_level(i, level)).max().unwrap_or(0);
                    levels.push(lv as u8);
                    // odometer over free coordinates
                    let mut carry = true;
                    for (f, r) in free.iter().zip(&ranges) {
                        if !carry {
                            break;
                        }
                        if idx[*f] < r.1 {
                            idx[*f] += 1;
                            carry = false;
                        } else {
                            idx[*f] = r.0;
                        }
                    }
                    if carry {
                        break;
                    }
                }
            }
        }
    }
    let delta_achieved = level_delta(n, level);
    Ok(SphereNet {
        n,
        symmetry,
        delta_target: delta,
        delta_achieved,
        seed,
        level,
        points,
        levels,
        size_bound: lemma_size_bound(n, delta),
    })
}

impl SphereNet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symmetry(&self) -> NetSymmetry {
        self.symmetry
    }

    pub fn delta_target(&self) -> f64 {
        self.delta_target
    }

    /// Certified covering radius in chord distance.
    pub fn delta_achieved(&self) -> f64 {
        self.delta_achieved
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Dyadic refinement level of the grid.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.n)
    }

    /// Coarsest nested level containing point `i`.
    pub fn point_level(&self, i: usize) -> u32 {
        self.levels[i] as u32
    }

    /// The size bound `2n (1 + 2/delta_target)^(n-1)`.
    pub fn size_bound(&self) -> f64 {
        self.size_bound
    }

    /// True when the full net is larger than the size bound.
    pub fn exceeds_size_bound(&self) -> bool {
        let full = match self.symmetry {
            NetSymmetry::Full => self.len(),
            NetSymmetry::Antipodal => 2 * self.len(),
        };
        full as f64 > self.size_bound
    }

    fn root_cells(&self) -> Vec<Cell> {
        let n = self.n;
        if n == 2 {
            let k = 4usize << self.level;
            let count = match self.symmetry {
                NetSymmetry::Full => k,
                NetSymmetry::Antipodal => k / 2,
            };
            let half = std::f64::consts::PI / k as f64;
            return (0..count)
                .map(|i| Cell::Arc { theta: 2.0 * std::f64::consts::PI * i as f64 / k as f64, half })
                .collect();
        }
        let k = 1usize << self.level;
        let h = 1.0 / k as f64;
        let signs: &[f64] = match self.symmetry {
            NetSymmetry::Full => &[-1.0, 1.0],
            NetSymmetry::Antipodal => &[1.0],
        };
        let per_face = (k + 1).pow(n as u32 - 1);
        let mut cells = Vec::with_capacity(per_face * n * signs.len());
        for axis in 0..n {
            for &sign in signs {
                for flat in 0..per_face {
                    let mut rem = flat;
                    let coords: Vec<f64> = (0..n - 1)
                        .map(|_| {
                            let i = rem % (k + 1);
                            rem /= k + 1;
                            -1.0 + 2.0 * i as f64 * h
                        })
                        .collect();
                    cells.push(Cell::Face { axis: axis as u8, sign, coords, half: h });
                }
            }
        }
        cells
    }
}

/// Samples `samples` uniform points and returns the largest distance to the net.
///
/// For antipodal nets the distance to the nearer of `v` and `-v` is used.
pub fn verify_covering(net: &SphereNet, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = net.n();
    let mut worst: f64 = 0.0;
    let mut v = vec![0.0; n];
    for _ in 0..samples {
        random_unit_into(&mut rng, &mut v);
        let mut best = f64::INFINITY;
        for p in net.points() {
            let mut d2 = 0.0;
            let mut a2 = 0.0;
            for j in 0..n {
                d2 += (p[j] - v[j]).powi(2);
                a2 += (p[j] + v[j]).powi(2);
            }
            let d = if net.symmetry == NetSymmetry::Antipodal { d2.min(a2) } else { d2 };
            best = best.min(d);
        }
        worst = worst.max(best.sqrt());
    }
    worst
}

/// Uniform random unit vector.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    random_unit_into(rng, &mut v);
    v
}

fn random_unit_into<R: Rng + ?Sized>(rng: &mut R, v: &mut [f64]) {
    loop {
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Orthonormal basis of the tangent space `x^perp` at a unit vector `x`.
///
/// The columns of the Householder reflector exchanging `e_n` and `x`
/// (or `-x` when `x` is close to `e_n`), minus the one mapped to `x`.
pub fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut flat = vec![0.0; (n - 1) * n];
    tangent_basis_into(x, &mut flat);
    flat.chunks(n).map(|c| c.to_vec()).collect()
}

/// Writes the `n - 1` tangent vectors row by row into `out`.
pub(crate) fn tangent_basis_into(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    let s = if x[n - 1] >= 0.0 { 1.0 } else { -1.0 };
    // w = x + s e_n, reflector I - 2 w w^T / |w|^2 maps e_n to -s x
    let mut w2 = 0.0;
    for j in 0..n {
        let wj = if j == n - 1 { x[j] + s } else { x[j] };
        w2 += wj * wj;
    }
    for i in 0..n - 1 {
        let wi = x[i];
        let row = &mut out[i * n..(i + 1) * n];
        for j in 0..n {
            let wj = if j == n - 1 { x[j] + s } else { x[j] };
            row[j] = if i == j { 1.0 } else { 0.0 } - 2.0 * wi * wj / w2;
        }
    }
}

/// Lower and upper bounds on `sup_{|x|=1} ||P(x)||`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupNormBound {
    pub lo: f64,
    pub hi: f64,
    pub argmax: Vec<f64>,
}

/// Bounds the sup norm of a system over the sphere from its values on a net.
///
/// With `f = d` for equal degrees and `f = d_max^2` otherwise, every nested level
/// with `f * delta < 1` yields `sup <= max_net / (1 - f * delta)`; the smallest
/// such bound is returned.
pub fn sup_norm_bound(p: &PolynomialSystem, net: &SphereNet) -> Result<SupNormBound> {
    sup_norm_bound_polys(p.polys(), net)
}

/// [`sup_norm_bound`] for any list of polynomials in the same variables.
pub fn sup_norm_bound_polys(polys: &[HomogeneousPolynomial], net: &SphereNet) -> Result<SupNormBound> {
    let Some(first) = polys.first() else {
        return invalid("no polynomials given");
    };
    let n = first.n();
    if polys.iter().any(|q| q.n() != n) || net.n() != n {
        return invalid("net and polynomials have different dimensions");
    }
    let dmax = polys.iter().map(|q| q.degree()).max().unwrap_or(0) as f64;
    let equal = polys.iter().all(|q| q.degree() as f64 == dmax);
    let factor = if equal { dmax } else { dmax * dmax };
    if dmax * dmax * net.delta_achieved() >= 1.0 {
        return invalid(format!(
            "net radius {} must satisfy d^2 delta < 1 for d = {dmax}",
            net.delta_achieved()
        ));
    }
    let top = net.level() as usize;
    let mut level_max = vec![0.0f64; top + 1];
    let mut level_arg = vec![0usize; top + 1];
    let stride = dmax as usize + 1;
    let mut pw = Vec::new();
    for (i, x) in net.points().enumerate() {
        fill_powers(x, dmax as usize, &mut pw);
        let v2: f64 = polys.iter().map(|q| eval_strided(q, &pw, stride).powi(2)).sum();
        let l = net.point_level(i) as usize;
        if v2 > level_max[l] {
            level_max[l] = v2;
            level_arg[l] = i;
        }
    }
    let mut lo2: f64 = 0.0;
    let mut arg = 0;
    let mut hi = f64::INFINITY;
    for l in 0..=top {
        if level_max[l] > lo2 {
            lo2 = level_max[l];
            arg = level_arg[l];
        }
        let dl = level_delta(n, l as u32);
        if factor * dl < 1.0 {
            hi = hi.min(lo2.sqrt() / (1.0 - factor * dl));
        }
    }
    let lo = lo2.sqrt();
    Ok(SupNormBound { lo, hi, argmax: net.point(arg).to_vec() })
}

/// Antipodal nets used in place of a net that would exceed [`MAX_NET_POINTS`].
pub const FALLBACK_NET_POINTS: u128 = 100_000;

/// The shared antipodal net of radius `delta`, or the finest level with at most
/// [`FALLBACK_NET_POINTS`] points when that net is too large.
pub fn shared_net_or_coarser(n: usize, delta: f64) -> Result<Arc<SphereNet>> {
    match shared_net(n, delta, NetSymmetry::Antipodal) {
        Err(Error::ResourceExhausted { .. }) => {
            let mut l = 0;
            while level_size(n, l + 1).is_some_and(|s| s / 2 <= FALLBACK_NET_POINTS) {
                l += 1;
            }
            shared_net(n, level_delta(n, l), NetSymmetry::Antipodal)
        }
        r => r,
    }
}

/// Upper bound on `sup ||P(x)||` over the sphere: the net bound when the net is
/// fine enough, capped by `||P||_W`, which bounds it through the reproducing kernel.
pub fn sup_norm_upper(p: &PolynomialSystem, net: &SphereNet) -> Result<SupNormBound> {
    let bw = p.bw_norm();
    let d = p.max_degree() as f64;
    if d * d * net.delta_achieved() < 1.0 {
        let mut b = sup_norm_bound(p, net)?;
        b.hi = b.hi.min(bw).max(b.lo);
        return Ok(b);
    }
    let mut lo: f64 = 0.0;
    let mut arg = 0;
    let stride = d as usize + 1;
    let mut pw = Vec::new();
    for (i, x) in net.points().enumerate() {
        fill_powers(x, d as usize, &mut pw);
        let v = p.polys().iter().map(|q| eval_strided(q, &pw, stride).powi(2)).sum::<f64>().sqrt();
        if v > lo {
            lo = v;
            arg = i;
        }
    }
    Ok(SupNormBound { lo, hi: bw.max(lo), argmax: net.point(arg).to_vec() })
}

/// A real function on the unit sphere with a certified modulus of continuity.
pub trait SphereObjective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Upper bound on `|f(x) - f(y)|` for unit vectors with `|x - y| <= rho`.
    fn modulus(&self, rho: f64) -> f64;

    /// `(f(x), lo, hi)` with `lo <= f(y) <= hi` for unit `y` with `|x - y| <= rho`.
    fn cell_bounds(&self, x: &[f64], rho: f64) -> (f64, f64, f64) {
        let v = self.value(x);
        let m = self.modulus(rho);
        (v, v - m, v + m)
    }

    /// `f(-x) = f(x)`, which allows antipodal nets.
    fn is_even(&self) -> bool {
        false
    }

    /// `f >= 0`, which lets the lower bound be clamped at zero.
    fn is_nonnegative(&self) -> bool {
        false
    }
}

/// A closure objective with a Lipschitz constant in chord distance.
pub struct LipschitzObjective<F> {
    pub n: usize,
    pub lipschitz: f64,
    pub f: F,
    pub even: bool,
    pub nonnegative: bool,
}

impl<F: Fn(&[f64]) -> f64 + Sync> SphereObjective for LipschitzObjective<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn modulus(&self, rho: f64) -> f64 {
        self.lipschitz * rho
    }
    fn is_even(&self) -> bool {
        self.even
    }
    fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }
}

struct Negated<'a, O: ?Sized>(&'a O);

impl<O: SphereObjective + ?Sized> SphereObjective for Negated<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        -self.0.value(x)
    }
    fn modulus(&self, rho: f64) -> f64 {
        self.0.modulus(rho)
    }
    fn cell_bounds(&self, x: &[f64], rho: f64) -> (f64, f64, f64) {
        let (v, lo, hi) = self.0.cell_bounds(x, rho);
        (-v, -hi, -lo)
    }
    fn is_even(&self) -> bool {
        self.0.is_even()
    }
}

/// Controls for [`minimize_on_sphere`].
#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    /// Descent iterations per start.
    pub refine_iters: usize,
    /// Number of best net cells used as descent starts.
    pub starts: usize,
    /// Seeds the extra random descent starts.
    pub seed: u64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Refinement levels after the net; 0 returns the plain net bound.
    pub max_levels: usize,
    /// Budget on objective evaluations in the refinement phase.
    pub max_evals: usize,
    /// Cells whose lower bound reaches this value are not refined.
    pub prune_above: Option<f64>,
    /// Stop as soon as the incumbent is at or below this value.
    pub stop_below: Option<f64>,
    /// Additional descent starting points.
    pub hints: Vec<Vec<f64>>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            refine_iters: 200,
            starts: 4,
            seed: 0,
            abs_tol: 1e-12,
            rel_tol: 1e-3,
            max_levels: 60,
            max_evals: 2_000_000,
            prune_above: None,
            stop_below: None,
            hints: Vec::new(),
        }
    }
}

/// Outcome of [`minimize_on_sphere`]: `value_lo <= min f <= value_hi = f(argmin)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub value_lo: f64,
    pub value_hi: f64,
    pub argmin: Vec<f64>,
    pub net_min: f64,
    pub evals: usize,
    pub levels: usize,
    /// Every cell was discarded by the tolerance or `prune_above` rule.
    pub converged: bool,
}

#[derive(Clone, Debug)]
enum Cell {
    Arc { theta: f64, half: f64 },
    Face { axis: u8, sign: f64, coords: Vec<f64>, half: f64 },
}

impl Cell {
    fn radius(&self, n: usize) -> f64 {
        match self {
            Cell::Arc { half, .. } => 2.0 * (half / 2.0).sin(),
            Cell::Face { half, .. } => half * ((n - 1) as f64).sqrt(),
        }
    }

    fn center(&self, n: usize, out: &mut [f64]) {
        match self {
            Cell::Arc { theta, .. } => {
                out[0] = theta.cos();
                out[1] = theta.sin();
            }
            Cell::Face { axis, sign, coords, .. } => {
                let a = *axis as usize;
                let mut c = coords.iter();
                for (j, o) in out.iter_mut().enumerate().take(n) {
                    *o = if j == a { *sign } else { *c.next().expect("face coordinate") };
                }
                normalize(out);
            }
        }
    }

    fn split(&self, out: &mut Vec<Cell>) {
        match self {
            Cell::Arc { theta, half } => {
                let h = half / 2.0;
                out.push(Cell::Arc { theta: theta - h, half: h });
                out.push(Cell::Arc { theta: theta + h, half: h });
            }
            Cell::Face { axis, sign, coords, half } => {
                let h = half / 2.0;
                let m = coords.len();
                for mask in 0..(1usize << m) {
                    let child: Vec<f64> = coords
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if mask >> i & 1 == 1 { c + h } else { c - h })
                        .collect();
                    if child.iter().all(|c| c.abs() <= 1.0) {
                        out.push(Cell::Face { axis: *axis, sign: *sign, coords: child, half: h });
                    }
                }
            }
        }
    }
}

/// Center values and cell lower bounds.
fn eval_cells<O: SphereObjective + ?Sized>(obj: &O, cells: &[Cell]) -> Vec<(f64, f64)> {
    let n = obj.dim();
    let one = |c: &Cell| {
        let mut x = vec![0.0; n];
        c.center(n, &mut x);
        let (v, lo, _) = obj.cell_bounds(&x, c.radius(n));
        (v, lo)
    };
    if cells.len() >= PAR_THRESHOLD {
        cells.par_iter().map(one).collect()
    } else {
        cells.iter().map(one).collect()
    }
}

fn argmin_of(vals: &[f64]) -> (usize, f64) {
    let mut bi = 0;
    let mut bv = f64::INFINITY;
    for (i, &v) in vals.iter().enumerate() {
        if v < bv {
            bv = v;
            bi = i;
        }
    }
    (bi, bv)
}

/// Certified global minimization of `obj` over the sphere, starting from `net`.
pub fn minimize_on_sphere<O: SphereObjective + ?Sized>(
    obj: &O,
    net: &SphereNet,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let n = obj.dim();
    if net.n() != n {
        return invalid(format!("net lives in dimension {}, objective in {n}", net.n()));
    }
    if net.symmetry() == NetSymmetry::Antipodal && !obj.is_even() {
        return invalid("antipodal nets require an even objective");
    }
    let mut cells = net.root_cells();
    let (mut vals, mut lbs): (Vec<f64>, Vec<f64>) = eval_cells(obj, &cells).into_iter().unzip();
    if vals.iter().any(|v| !v.is_finite()) {
        return invalid("objective returned a non-finite value");
    }
    let mut evals = vals.len();
    let (bi, net_min) = argmin_of(&vals);
    let mut best = net_min;
    let mut argmin = vec![0.0; n];
    cells[bi].center(n, &mut argmin);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    for &i in order.iter().take(opts.starts) {
        let mut x = vec![0.0; n];
        cells[i].center(n, &mut x);
        starts.push(x);
    }
    for h in &opts.hints {
        if h.len() != n {
            return invalid("hint has the wrong dimension");
        }
        let mut x = h.clone();
        if normalize(&mut x) > 0.0 {
            starts.push(x);
        }
    }
    if opts.starts > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
        for _ in 0..2 {
            starts.push(random_unit(&mut rng, n));
        }
    }
    if opts.refine_iters > 0 {
        for s in &starts {
            let (x, f, used) = descend(obj, s, opts.refine_iters);
            evals += used;
            if f < best {
                best = f;
                argmin = x;
            }
        }
    }

    let mut settled_lo = f64::INFINITY;
    let mut levels = 0;
    let mut converged = false;
    let active_lo;
    let mut bnb_improved = false;
    loop {
        if opts.stop_below.is_some_and(|s| best <= s) {
            active_lo = lbs.iter().cloned().fold(f64::INFINITY, f64::min);
            break;
        }
        let tol = opts.abs_tol.max(opts.rel_tol * best.abs());
        let mut keep = Vec::new();
        for ((c, v), lb) in cells.into_iter().zip(vals).zip(lbs) {
            if lb >= best - tol || opts.prune_above.is_some_and(|p| lb >= p) {
                settled_lo = settled_lo.min(lb);
            } else {
                keep.push((lb, v, c));
            }
        }
        if keep.is_empty() {
            converged = true;
            active_lo = f64::INFINITY;
            break;
        }
        let fan = if n == 2 { 2 } else { 1usize << (n - 1) };
        // when the budget cannot cover every open cell, split the lowest bounds first
        let budget = opts.max_evals.saturating_sub(evals) / fan;
        if levels >= opts.max_levels || budget == 0 {
            active_lo = keep.iter().map(|k| k.0).fold(f64::INFINITY, f64::min);
            break;
        }
        let mut rest = Vec::new();
        if keep.len() > budget {
            keep.sort_by(|a, b| a.0.total_cmp(&b.0));
            rest = keep.split_off(budget);
        }
        let mut children = Vec::with_capacity(keep.len() * fan);
        for (_, _, c) in &keep {
            c.split(&mut children);
        }
        drop(keep);
        let (child_vals, child_lbs): (Vec<f64>, Vec<f64>) = eval_cells(obj, &children).into_iter().unzip();
        if child_vals.iter().any(|v| !v.is_finite()) {
            return invalid("objective returned a non-finite value");
        }
        evals += child_vals.len();
        levels += 1;
        let (ci, cv) = argmin_of(&child_vals);
        if cv < best {
            best = cv;
            children[ci].center(n, &mut argmin);
            bnb_improved = true;
        }
        cells = children;
        vals = child_vals;
        lbs = child_lbs;
        for (lb, v, c) in rest {
            cells.push(c);
            vals.push(v);
            lbs.push(lb);
        }
    }
    if bnb_improved && opts.refine_iters > 0 {
        let (x, f, used) = descend(obj, &argmin.clone(), opts.refine_iters);
        evals += used;
        if f < best {
            best = f;
            argmin = x;
        }
    }
    let mut value_lo = settled_lo.min(active_lo).min(best);
    if obj.is_nonnegative() {
        value_lo = value_lo.max(0.0);
    }
    Ok(MinimizeResult { value_lo, value_hi: best, argmin, net_min, evals, levels, converged })
}

/// Certified maximization; `value_lo`/`value_hi` bracket the maximum.
pub fn maximize_on_sphere<O: SphereObjective + ?Sized>(
    obj: &O,
    net: &SphereNet,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let neg = Negated(obj);
    let mut o = opts.clone();
    o.prune_above = opts.prune_above.map(|p| -p);
    o.stop_below = opts.stop_below.map(|s| -s);
    let r = minimize_on_sphere(&neg, net, &o)?;
    Ok(MinimizeResult {
        value_lo: -r.value_hi,
        value_hi: -r.value_lo,
        argmin: r.argmin,
        net_min: -r.net_min,
        evals: r.evals,
        levels: r.levels,
        converged: r.converged,
    })
}

/// Projected descent on `f |f|` with a central-difference Riemannian gradient.
fn descend<O: SphereObjective + ?Sized>(obj: &O, x0: &[f64], iters: usize) -> (Vec<f64>, f64, usize) {
    const FD_STEP: f64 = 1e-6;
    let n = obj.dim();
    let surrogate = |f: f64| f * f.abs();
    let mut x = x0.to_vec();
    normalize(&mut x);
    let mut f = obj.value(&x);
    let mut g = surrogate(f);
    let mut evals = 1;
    let mut basis = vec![0.0; (n - 1) * n];
    let mut grad = vec![0.0; n - 1];
    let mut y = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut step: f64 = 0.1;
    for _ in 0..iters {
        tangent_basis_into(&x, &mut basis);
        for i in 0..n - 1 {
            let b = &basis[i * n..(i + 1) * n];
            for j in 0..n {
                y[j] = x[j] + FD_STEP * b[j];
            }
            normalize(&mut y);
            let gp = surrogate(obj.value(&y));
            for j in 0..n {
                y[j] = x[j] - FD_STEP * b[j];
            }
            normalize(&mut y);
            let gm = surrogate(obj.value(&y));
            grad[i] = (gp - gm) / (2.0 * FD_STEP);
        }
        evals += 2 * (n - 1);
        let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !gn.is_finite() || gn == 0.0 || gn <= 1e-12 * g.abs() {
            break;
        }
        dir.iter_mut().for_each(|d| *d = 0.0);
        for i in 0..n - 1 {
            for j in 0..n {
                dir[j] -= grad[i] / gn * basis[i * n + j];
            }
        }
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..n {
                y[j] = x[j] + t * dir[j];
            }
            normalize(&mut y);
            let fy = obj.value(&y);
            evals += 1;
            let gy = surrogate(fy);
            if gy <= g - 1e-4 * t * gn {
                x.copy_from_slice(&y);
                f = fy;
                g = gy;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (2.0 * t).min(1.0);
    }
    (x, f, evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_net_sizes() {
        assert!(build_net(2, 1.0, 0).unwrap().len() >= 4);
        let net = build_net(2, 0.1, 0).unwrap();
        assert_eq!(net.len(), 32);
        assert!(net.delta_achieved() <= 0.1);
    }

    #[test]
    fn cube_grid_sizes_match_formula() {
        for l in 0..5 {
            let delta = level_delta(3, l);
            let full = build_net(3, delta, 0).unwrap();
            assert_eq!(full.len() as u128, level_size(3, l).unwrap());
            let half = build_antipodal_net(3, delta, 0).unwrap();
            assert_eq!(2 * half.len(), full.len());
        }
    }

    #[test]
    fn nets_are_unit_vectors() {
        let net = build_net(4, 0.5, 0).unwrap();
        for p in net.points() {
            let r: f64 = p.iter().map(|v| v * v).sum();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_covering_within_radius() {
        for n in [2, 3, 4] {
            let net = build_net(n, 0.4, 0).unwrap();
            assert!(verify_covering(&net, 2000, 1) <= net.delta_achieved());
            let half = build_antipodal_net(n, 0.4, 0).unwrap();
            assert!(verify_covering(&half, 2000, 2) <= half.delta_achieved());
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        for x in [vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0], vec![0.6, 0.0, 0.8], vec![1.0, 0.0, 0.0]] {
            let b = tangent_basis(&x);
            for (i, u) in b.iter().enumerate() {
                let ux: f64 = u.iter().zip(&x).map(|(a, c)| a * c).sum();
                assert!(ux.abs() < 1e-14);
                for (j, v) in b.iter().enumerate() {
                    let uv: f64 = u.iter().zip(v).map(|(a, c)| a * c).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((uv - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn distance_to_pole_is_minimized_at_pole() {
        let obj = LipschitzObjective {
            n: 3,
            lipschitz: 2.0,
            f: |x: &[f64]| (x[0] - 1.0).powi(2) + x[1] * x[1] + x[2] * x[2],
            even: false,
            nonnegative: true,
        };
        let net = build_net(3, 0.2, 0).unwrap();
        let r = minimize_on_sphere(&obj, &net, &MinimizeOptions { abs_tol: 1e-8, rel_tol: 0.0, ..Default::default() })
            .unwrap();
        assert!(r.value_hi < 1e-8);
        assert!(r.value_lo <= r.value_hi);
        assert!((r.argmin[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn constant_objective_net_only() {
        let obj = LipschitzObjective { n: 3, lipschitz: 1.5, f: |_: &[f64]| 2.0, even: true, nonnegative: true };
        let net = build_antipodal_net(3, 0.3, 0).unwrap();
        let opts = MinimizeOptions { max_levels: 0, refine_iters: 0, ..Default::default() };
        let r = minimize_on_sphere(&obj, &net, &opts).unwrap();
        assert_eq!(r.value_hi, 2.0);
        assert!((r.value_lo - (2.0 - 1.5 * net.delta_achieved())).abs() < 1e-15);
    }

    #[test]
    fn antipodal_net_rejects_odd_objective() {
        let obj = LipschitzObjective { n: 2, lipschitz: 1.0, f: |x: &[f64]| x[0], even: false, nonnegative: false };
        let net = build_antipodal_net(2, 0.3, 0).unwrap();
        assert!(minimize_on_sphere(&obj, &net, &MinimizeOptions::default()).is_err());
    }

    #[test]
    fn sup_norm_of_linear_form() {
        let p = HomogeneousPolynomial::new(3, 1, vec![1.0, 2.0, 2.0]).unwrap();
        let net = build_antipodal_net(3, 0.05, 0).unwrap();
        let b = sup_norm_bound_polys(&[p], &net).unwrap();
        assert!(b.lo <= 3.0 && 3.0 <= b.hi);
        assert!(b.hi - b.lo < 0.2);
    }
}
