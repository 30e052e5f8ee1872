//! Dense homogeneous polynomials in the monomial basis with the Bombieri-Weyl
//! inner product.
//!
//! Monomials of degree `d` in `n` variables are stored in reverse-lexicographic
//! order: exponent vectors sorted descending lexicographically, so `x1^d` comes
//! first and `xn^d` last. Every polynomial of a given `(n, d)` shares one cached
//! [`MonomialBasis`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Largest monomial basis the crate will materialize.
pub const MAX_BASIS_LEN: usize = 2_000_000;

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = c.checked_mul(n as u128 - k as u128 + i)? / i;
    }
    Some(c)
}

/// Exact multinomial coefficient `d! / (alpha_1! ... alpha_n!)`.
///
/// Fails with [`Error::InvalidArgument`] if `|alpha| != d` and with
/// [`Error::Overflow`] if the value does not fit in a `u128`.
pub fn multinomial(d: u32, alpha: &[u32]) -> Result<u128> {
    let total: u64 = alpha.iter().map(|&a| a as u64).sum();
    if total != d as u64 {
        return invalid(format!("exponent sum {total} differs from degree {d}"));
    }
    let mut acc: u128 = 1;
    let mut running: u64 = 0;
    for &a in alpha {
        running += a as u64;
        let b = binomial_u128(running, a as u64)
            .ok_or_else(|| Error::Overflow(format!("multinomial({d}; {alpha:?})")))?;
        acc = acc
            .checked_mul(b)
            .ok_or_else(|| Error::Overflow(format!("multinomial({d}; {alpha:?})")))?;
    }
    Ok(acc)
}

/// Natural log of the multinomial coefficient via log-gamma.
pub fn ln_multinomial(d: u32, alpha: &[u32]) -> f64 {
    let mut s = libm::lgamma(d as f64 + 1.0);
    for &a in alpha {
        s -= libm::lgamma(a as f64 + 1.0);
    }
    s
}

/// Multinomial weight as a float; exact when it fits in `u128`, log-gamma otherwise.
pub fn multinomial_f64(d: u32, alpha: &[u32]) -> f64 {
    match multinomial(d, alpha) {
        Ok(m) => m as f64,
        Err(_) => ln_multinomial(d, alpha).exp(),
    }
}

/// `binom(n + d - 1, d)`, the number of degree-`d` monomials in `n` variables.
pub fn basis_len(n: usize, d: u32) -> Option<usize> {
    if n == 0 {
        return None;
    }
    let v = binomial_u128(n as u64 + d as u64 - 1, d as u64)?;
    usize::try_from(v).ok()
}

/// The ordered monomial basis of homogeneous polynomials of degree `d` in `n` variables.
#[derive(Debug)]
pub struct MonomialBasis {
    n: usize,
    d: u32,
    exps: Vec<u32>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    index: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    fn build(n: usize, d: u32) -> Result<Self> {
        let len = basis_len(n, d)
            .filter(|&l| l <= MAX_BASIS_LEN)
            .ok_or_else(|| Error::InvalidArgument(format!("basis for n={n}, d={d} is too large")))?;
        let mut exps = Vec::with_capacity(len * n);
        let mut cur = vec![0u32; n];
        fill_exponents(&mut cur, 0, d, &mut exps);
        debug_assert_eq!(exps.len(), len * n);
        let mut weights = Vec::with_capacity(len);
        let mut index = HashMap::with_capacity(len);
        for (i, alpha) in exps.chunks(n).enumerate() {
            weights.push(multinomial_f64(d, alpha));
            index.insert(alpha.to_vec(), i);
        }
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self { n, d, exps, weights, sqrt_weights, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Exponent vector of the `i`-th monomial.
    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exps[i * self.n..(i + 1) * self.n]
    }

    pub fn exponents(&self) -> impl Iterator<Item = &[u32]> {
        self.exps.chunks(self.n)
    }

    /// Multinomial weight `binom(d, alpha)` of the `i`-th monomial.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Orthonormal-coordinate Veronese vector `phi(v)_alpha = sqrt(w_alpha) v^alpha`.
    ///
    /// For unit `v` this has Euclidean norm `|v|^d = 1`.
    pub fn veronese_into(&self, v: &[f64], powers: &mut Vec<f64>, out: &mut [f64]) {
        let stride = self.d as usize + 1;
        fill_powers(v, self.d as usize, powers);
        for (i, alpha) in self.exps.chunks(self.n).enumerate() {
            let mut m = self.sqrt_weights[i];
            for (j, &a) in alpha.iter().enumerate() {
                m *= powers[j * stride + a as usize];
            }
            out[i] = m;
        }
    }

    /// `out_k = sum_alpha w_alpha d phi(v)_alpha / d v_k`; `powers` must hold the
    /// table filled by [`Self::veronese_into`] for the same `v`.
    pub fn veronese_grad_dot(&self, powers: &[f64], w: &[f64], out: &mut [f64]) {
        let stride = self.d as usize + 1;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, alpha) in self.exps.chunks(self.n).enumerate() {
            let wi = w[i] * self.sqrt_weights[i];
            if wi == 0.0 {
                continue;
            }
            for k in 0..self.n {
                let ak = alpha[k] as usize;
                if ak == 0 {
                    continue;
                }
                let mut m = wi * ak as f64;
                for (j, &a) in alpha.iter().enumerate() {
                    m *= powers[j * stride + if j == k { ak - 1 } else { a as usize }];
                }
                out[k] += m;
            }
        }
    }
}

fn fill_exponents(cur: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<u32>) {
    let n = cur.len();
    if pos == n - 1 {
        cur[pos] = remaining;
        out.extend_from_slice(cur);
        return;
    }
    for a in (0..=remaining).rev() {
        cur[pos] = a;
        fill_exponents(cur, pos + 1, remaining - a, out);
    }
    cur[pos] = 0;
}

/// Cached monomial basis for `(n, d)`.
pub fn monomial_basis(n: usize, d: u32) -> Result<Arc<MonomialBasis>> {
    if n == 0 {
        return invalid("number of variables must be positive");
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<MonomialBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(n, d)) {
        return Ok(b.clone());
    }
    let built = Arc::new(MonomialBasis::build(n, d)?);
    let mut guard = cache.lock().expect("basis cache poisoned");
    Ok(guard.entry((n, d)).or_insert(built).clone())
}

/// Writes `x_j^k` to `out[j * (d + 1) + k]` for `k <= d`.
pub(crate) fn fill_powers(x: &[f64], d: usize, out: &mut Vec<f64>) {
    let stride = d + 1;
    out.clear();
    out.resize(x.len() * stride, 0.0);
    for (j, &xj) in x.iter().enumerate() {
        let row = &mut out[j * stride..(j + 1) * stride];
        row[0] = 1.0;
        for k in 1..stride {
            row[k] = row[k - 1] * xj;
        }
    }
}

/// A homogeneous polynomial of fixed degree stored by its monomial coefficients.
#[derive(Clone, Debug)]
pub struct HomogeneousPolynomial {
    basis: Arc<MonomialBasis>,
    coeffs: Vec<f64>,
}

impl PartialEq for HomogeneousPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n() && self.degree() == other.degree() && self.coeffs == other.coeffs
    }
}

impl HomogeneousPolynomial {
    /// Builds a polynomial from coefficients in basis order.
    pub fn new(n: usize, d: u32, coeffs: Vec<f64>) -> Result<Self> {
        let basis = monomial_basis(n, d)?;
        if coeffs.len() != basis.len() {
            return invalid(format!(
                "expected {} coefficients for n={n}, d={d}, got {}",
                basis.len(),
                coeffs.len()
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zero(n: usize, d: u32) -> Result<Self> {
        let basis = monomial_basis(n, d)?;
        let coeffs = vec![0.0; basis.len()];
        Ok(Self { basis, coeffs })
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms(n: usize, d: u32, terms: &[(Vec<u32>, f64)]) -> Result<Self> {
        let mut p = Self::zero(n, d)?;
        for (alpha, c) in terms {
            if alpha.len() != n || alpha.iter().sum::<u32>() != d {
                return invalid(format!("exponent {alpha:?} is not a degree-{d} monomial in {n} variables"));
            }
            let i = p.basis.index_of(alpha).expect("valid exponent is in basis");
            p.coeffs[i] += c;
        }
        if p.coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(p)
    }

    /// Builds a polynomial from coordinates in the Bombieri-Weyl orthonormal basis
    /// `sqrt(binom(d, alpha)) x^alpha`.
    pub fn from_orthonormal_coords(n: usize, d: u32, coords: &[f64]) -> Result<Self> {
        let basis = monomial_basis(n, d)?;
        if coords.len() != basis.len() {
            return invalid("orthonormal coordinate vector has wrong length");
        }
        let coeffs = coords.iter().zip(basis.sqrt_weights()).map(|(b, s)| b * s).collect();
        Self::new(n, d, coeffs)
    }

    /// Coordinates `c_alpha / sqrt(binom(d, alpha))` in the orthonormal basis.
    pub fn orthonormal_coords(&self) -> Vec<f64> {
        self.coeffs.iter().zip(self.basis.sqrt_weights()).map(|(c, s)| c / s).collect()
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^alpha`; zero for exponents outside the basis.
    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.basis.index_of(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn bw_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.weights())
            .map(|(c, w)| c * c / w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { basis: self.basis.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.check_same_space(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + s * b).collect();
        Ok(Self { basis: self.basis.clone(), coeffs })
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() || self.degree() != other.degree() {
            return invalid(format!(
                "polynomials live in different spaces: (n={}, d={}) vs (n={}, d={})",
                self.n(),
                self.degree(),
                other.n(),
                other.degree()
            ));
        }
        Ok(())
    }

    /// Evaluates at `x` (any point, not only on the sphere).
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut pw = Vec::new();
        fill_powers(x, self.degree() as usize, &mut pw);
        Ok(eval_strided(self, &pw, self.degree() as usize + 1))
    }

    /// Gradient at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut pw = Vec::new();
        fill_powers(x, self.degree() as usize, &mut pw);
        let mut g = vec![0.0; self.n()];
        eval_grad_strided(self, &pw, self.degree() as usize + 1, &mut g);
        Ok(g)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return invalid(format!("point has {} coordinates, expected {}", x.len(), self.n()));
        }
        Ok(())
    }

    /// Product of two homogeneous polynomials in the same variables.
    pub(crate) fn mul(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return invalid("cannot multiply polynomials in different numbers of variables");
        }
        let n = self.n();
        let mut out = Self::zero(n, self.degree() + other.degree())?;
        let mut e = vec![0u32; n];
        for (a, alpha) in self.coeffs.iter().zip(self.basis.exponents()) {
            if *a == 0.0 {
                continue;
            }
            for (b, beta) in other.coeffs.iter().zip(other.basis.exponents()) {
                if *b == 0.0 {
                    continue;
                }
                for j in 0..n {
                    e[j] = alpha[j] + beta[j];
                }
                let i = out.basis.index_of(&e).expect("product exponent in basis");
                out.coeffs[i] += a * b;
            }
        }
        Ok(out)
    }

    /// The polynomial `x -> p(R x)` for a square matrix `R`.
    pub fn compose_linear(&self, r: &DMatrix<f64>) -> Result<Self> {
        let n = self.n();
        if r.nrows() != n || r.ncols() != n {
            return invalid(format!("substitution matrix must be {n}x{n}"));
        }
        let d = self.degree();
        let one = Self::new(n, 0, vec![1.0])?;
        // powers[j][e] = (sum_k R[j,k] x_k)^e
        let mut powers: Vec<Vec<Self>> = Vec::with_capacity(n);
        for j in 0..n {
            let lin = Self::new(n, 1, (0..n).map(|k| r[(j, k)]).collect())?;
            let mut row = vec![one.clone()];
            for e in 1..=d as usize {
                let next = row[e - 1].mul(&lin)?;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Self::zero(n, d)?;
        for (c, alpha) in self.coeffs.iter().zip(self.basis.exponents()) {
            if *c == 0.0 {
                continue;
            }
            let mut term = one.scaled(*c);
            for j in 0..n {
                if alpha[j] > 0 {
                    term = term.mul(&powers[j][alpha[j] as usize])?;
                }
            }
            for (o, t) in out.coeffs.iter_mut().zip(&term.coeffs) {
                *o += t;
            }
        }
        Ok(out)
    }
}

/// Bombieri-Weyl inner product `sum_alpha p_alpha q_alpha / binom(d, alpha)`.
pub fn bw_inner(p: &HomogeneousPolynomial, q: &HomogeneousPolynomial) -> Result<f64> {
    p.check_same_space(q)?;
    Ok(p.coeffs
        .iter()
        .zip(&q.coeffs)
        .zip(p.basis.weights())
        .map(|((a, b), w)| a * b / w)
        .sum())
}

pub fn bw_norm(p: &HomogeneousPolynomial) -> f64 {
    p.bw_norm()
}

/// Reusable buffers for allocation-free system evaluation.
#[derive(Default, Debug, Clone)]
pub struct EvalScratch {
    pub(crate) powers: Vec<f64>,
}

/// A system of `n - 1` homogeneous polynomials in `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSystem {
    n: usize,
    polys: Vec<HomogeneousPolynomial>,
}

impl PolynomialSystem {
    pub fn new(polys: Vec<HomogeneousPolynomial>) -> Result<Self> {
        let Some(first) = polys.first() else {
            return invalid("a system needs at least one polynomial");
        };
        let n = first.n();
        if n < 2 {
            return invalid("a system needs at least two variables");
        }
        if polys.iter().any(|p| p.n() != n) {
            return invalid("all polynomials of a system must share the number of variables");
        }
        if polys.len() != n - 1 {
            return invalid(format!("a system in {n} variables needs {} polynomials, got {}", n - 1, polys.len()));
        }
        if polys.iter().any(|p| p.degree() == 0) {
            return invalid("degrees must be positive");
        }
        Ok(Self { n, polys })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[HomogeneousPolynomial] {
        &self.polys
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.polys.iter().map(|p| p.degree()).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> u32 {
        self.polys.iter().map(|p| p.degree()).min().unwrap_or(0)
    }

    pub fn equal_degrees(&self) -> bool {
        self.max_degree() == self.min_degree()
    }

    /// Diagonal of the degree scaling `diag(sqrt(d_1), ..., sqrt(d_{n-1}))`.
    pub fn degree_scaling(&self) -> Vec<f64> {
        self.polys.iter().map(|p| (p.degree() as f64).sqrt()).collect()
    }

    /// `sqrt(sum_i ||p_i||^2)`.
    pub fn bw_norm(&self) -> f64 {
        self.polys.iter().map(|p| p.bw_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.polys.iter().all(|p| p.is_zero())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, polys: self.polys.iter().map(|p| p.scaled(s)).collect() }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        if self.degrees() != other.degrees() || self.n != other.n {
            return invalid("systems have different shapes");
        }
        let polys = self
            .polys
            .iter()
            .zip(&other.polys)
            .map(|(a, b)| a.add_scaled(b, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: self.n, polys })
    }

    /// The system `x -> P(R x)`.
    pub fn compose_linear(&self, r: &DMatrix<f64>) -> Result<Self> {
        let polys = self.polys.iter().map(|p| p.compose_linear(r)).collect::<Result<Vec<_>>>()?;
        Self::new(polys)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut s = EvalScratch::default();
        let mut vals = vec![0.0; self.polys.len()];
        fill_powers(x, self.max_degree() as usize, &mut s.powers);
        let stride = self.max_degree() as usize + 1;
        for (v, p) in vals.iter_mut().zip(&self.polys) {
            *v = eval_strided(p, &s.powers, stride);
        }
        Ok(vals)
    }

    /// Jacobian as an `(n - 1) x n` matrix.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let mut s = EvalScratch::default();
        let mut vals = vec![0.0; self.polys.len()];
        let mut jac = vec![0.0; self.polys.len() * self.n];
        self.eval_jac_into(x, &mut s, &mut vals, &mut jac);
        Ok(DMatrix::from_row_slice(self.polys.len(), self.n, &jac))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return invalid(format!("point has {} coordinates, expected {}", x.len(), self.n));
        }
        Ok(())
    }

    /// Values into `vals`, Jacobian rows (row-major) into `jac`.
    pub(crate) fn eval_jac_into(&self, x: &[f64], s: &mut EvalScratch, vals: &mut [f64], jac: &mut [f64]) {
        let dmax = self.max_degree() as usize;
        fill_powers(x, dmax, &mut s.powers);
        let stride = dmax + 1;
        let n = self.n;
        for (i, p) in self.polys.iter().enumerate() {
            vals[i] = eval_grad_strided(p, &s.powers, stride, &mut jac[i * n..(i + 1) * n]);
        }
    }
}

pub(crate) fn eval_strided(p: &HomogeneousPolynomial, pw: &[f64], stride: usize) -> f64 {
    let n = p.n();
    let mut s = 0.0;
    for (c, alpha) in p.coeffs.iter().zip(p.basis.exponents()) {
        if *c == 0.0 {
            continue;
        }
        let mut m = *c;
        for j in 0..n {
            m *= pw[j * stride + alpha[j] as usize];
        }
        s += m;
    }
    s
}

fn eval_grad_strided(p: &HomogeneousPolynomial, pw: &[f64], stride: usize, grad: &mut [f64]) -> f64 {
    let n = p.n();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut s = 0.0;
    for (c, alpha) in p.coeffs.iter().zip(p.basis.exponents()) {
        if *c == 0.0 {
            continue;
        }
        let mut m = *c;
        for j in 0..n {
            m *= pw[j * stride + alpha[j] as usize];
        }
        s += m;
        for j in 0..n {
            let a = alpha[j] as usize;
            if a == 0 {
                continue;
            }
            let mut t = *c * a as f64 * pw[j * stride + a - 1];
            for k in 0..n {
                if k != j {
                    t *= pw[k * stride + alpha[k] as usize];
                }
            }
            grad[j] += t;
        }
    }
    s
}

/// The system-level Bombieri-Weyl norm.
pub fn bw_norm_system(p: &PolynomialSystem) -> f64 {
    p.bw_norm()
}
