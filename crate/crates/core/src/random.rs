//! Random coefficient models, seeded streams and random subspaces.
//!
//! A [`RandomModel`] draws coefficient vectors that are centered, sub-Gaussian
//! with constant `K` and satisfy the anti-concentration bound
//! `P(|X_i - u| <= eps) <= c0 * eps`.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::{HomogeneousPolynomial, PolynomialSystem};
use crate::subspace::{orthonormalize, PolySubspace, SystemSubspace};

/// Distribution family of the coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Independent standard normals.
    Gaussian,
    /// Uniform on the `l_p` ball of the coefficient space, scaled to unit coordinate variance.
    LpBall { p: f64 },
    /// Independent variables with density proportional to `exp(-|x|^p)`, scaled to unit variance.
    ExpPower { p: f64 },
}

/// A coefficient distribution with its sub-Gaussian and anti-concentration constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomModel {
    pub family: Family,
    /// Sub-Gaussian constant `K`.
    pub k: f64,
    /// Anti-concentration constant `c0`.
    pub c0: f64,
    /// Upper bound on the coordinate densities, if known.
    pub density_bound: Option<f64>,
}

impl RandomModel {
    /// Validates `K * c0 >= 1/4` and `p >= 2`.
    pub fn new(family: Family, k: f64, c0: f64, density_bound: Option<f64>) -> Result<Self> {
        if !(k > 0.0 && c0 > 0.0 && k.is_finite() && c0.is_finite()) {
            return invalid("K and c0 must be positive and finite");
        }
        if k * c0 < 0.25 {
            return invalid(format!("K * c0 = {} is below 1/4", k * c0));
        }
        match family {
            Family::LpBall { p } | Family::ExpPower { p } if !(p >= 2.0 && p.is_finite()) => {
                return invalid(format!("exponent p = {p} must be at least 2"));
            }
            _ => {}
        }
        if density_bound.is_some_and(|b| !(b > 0.0)) {
            return invalid("density bound must be positive");
        }
        Ok(Self { family, k, c0, density_bound })
    }

    /// Standard Gaussian: `K = sqrt(2)`, `c0 = sqrt(2/pi)`, density bound `1/sqrt(2 pi)`.
    pub fn gaussian() -> Self {
        Self {
            family: Family::Gaussian,
            k: std::f64::consts::SQRT_2,
            c0: (2.0 / std::f64::consts::PI).sqrt(),
            density_bound: Some(1.0 / (2.0 * std::f64::consts::PI).sqrt()),
        }
    }

    /// Uniform on the `l_p` ball; `K = 2`, `c0 = 2`, no density bound.
    pub fn lp_ball(p: f64) -> Result<Self> {
        Self::new(Family::LpBall { p }, 2.0, 2.0, None)
    }

    /// Exponential-power law; `K = 2`, `c0 = 2`, density bound 1.
    pub fn exp_power(p: f64) -> Result<Self> {
        Self::new(Family::ExpPower { p }, 2.0, 2.0, Some(1.0))
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Gaussian => "gaussian".to_string(),
            Family::LpBall { p } => format!("lp_ball:{p}"),
            Family::ExpPower { p } => format!("exp_power:{p}"),
        }
    }
}

impl FromStr for RandomModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "gaussian" {
            return Ok(Self::gaussian());
        }
        let (name, p) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model {s:?}")))?;
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad exponent in model {s:?}")))?;
        match name.trim() {
            "lp_ball" => Self::lp_ball(p),
            "exp_power" => Self::exp_power(p),
            other => invalid(format!("unknown model {other:?}")),
        }
    }
}

/// Derives independent, reproducible random streams from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub master: u64,
}

impl SeedPlan {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    /// The generator of stream `index`; streams never overlap.
    pub fn rng(&self, index: u64) -> ChaCha20Rng {
        let mut r = ChaCha20Rng::seed_from_u64(self.master);
        r.set_stream(index);
        r
    }

    /// A child plan whose streams are disjoint from this plan's for distinct `tag`.
    pub fn child(&self, tag: u64) -> Self {
        let mut r = self.rng(u64::MAX - tag);
        Self { master: r.random() }
    }
}

fn exp_power_raw<R: Rng + ?Sized>(p: f64, gamma: &Gamma<f64>, rng: &mut R) -> f64 {
    let g: f64 = gamma.sample(rng);
    let y = g.powf(1.0 / p);
    if rng.random::<bool>() {
        y
    } else {
        -y
    }
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Draws `count` coefficients from `model`; for `lp_ball` they form one vector.
pub fn sample_coeffs<R: Rng + ?Sized>(model: &RandomModel, count: usize, rng: &mut R) -> Vec<f64> {
    match model.family {
        Family::Gaussian => (0..count).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        Family::ExpPower { p } => {
            let gamma = Gamma::new(1.0 / p, 1.0).expect("valid gamma shape");
            let scale = (0.5 * (ln_gamma(1.0 / p) - ln_gamma(3.0 / p))).exp();
            (0..count).map(|_| scale * exp_power_raw(p, &gamma, rng)).collect()
        }
        Family::LpBall { p } => {
            let gamma = Gamma::new(1.0 / p, 1.0).expect("valid gamma shape");
            let y: Vec<f64> = (0..count).map(|_| exp_power_raw(p, &gamma, rng)).collect();
            let w: f64 = Exp1.sample(rng);
            let denom = (y.iter().map(|v| v.abs().powf(p)).sum::<f64>() + w).powf(1.0 / p);
            let nf = count as f64;
            let ln_var = ln_gamma(3.0 / p) - ln_gamma(1.0 / p) + ln_gamma(nf / p + 1.0) - ln_gamma((nf + 2.0) / p + 1.0);
            let scale = (-0.5 * ln_var).exp();
            y.into_iter().map(|v| scale * v / denom).collect()
        }
    }
}

/// A random system `sum_j xi_ij u_ij` in the orthonormal bases of the factors of `e`.
pub fn sample_system<R: Rng + ?Sized>(e: &SystemSubspace, model: &RandomModel, rng: &mut R) -> Result<PolynomialSystem> {
    let xi = sample_coeffs(model, e.dim(), rng);
    system_from_coords(e, &xi)
}

/// The system with coordinates `xi` (concatenated over factors) in the bases of `e`.
pub fn system_from_coords(e: &SystemSubspace, xi: &[f64]) -> Result<PolynomialSystem> {
    if xi.len() != e.dim() {
        return invalid("coordinate vector length differs from dim E");
    }
    let mut polys = Vec::with_capacity(e.factors().len());
    let mut off = 0;
    for f in e.factors() {
        polys.push(f.combine(&xi[off..off + f.dim()])?);
        off += f.dim();
    }
    PolynomialSystem::new(polys)
}

/// How a center system is perturbed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SmoothingMode {
    /// `Q + G`.
    Additive,
    /// `Q + delta ||Q||_W G`.
    DeltaScaled { delta: f64 },
}

impl FromStr for SmoothingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "additive" {
            return Ok(Self::Additive);
        }
        if let Some(d) = s.strip_prefix("delta_scaled:") {
            let delta: f64 = d.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad delta in {s:?}")))?;
            if !(delta >= 0.0 && delta.is_finite()) {
                return invalid("smoothing delta must be nonnegative");
            }
            return Ok(Self::DeltaScaled { delta });
        }
        invalid(format!("unknown smoothing mode {s:?}"))
    }
}

/// A random perturbation of `q` drawn from `model` over `e`.
pub fn sample_smoothed<R: Rng + ?Sized>(
    e: &SystemSubspace,
    q: &PolynomialSystem,
    model: &RandomModel,
    mode: SmoothingMode,
    rng: &mut R,
) -> Result<PolynomialSystem> {
    e.check_contains(q)?;
    let g = sample_system(e, model, rng)?;
    match mode {
        SmoothingMode::Additive => q.add_scaled(&g, 1.0),
        SmoothingMode::DeltaScaled { delta } if delta < 0.0 => invalid("smoothing delta must be nonnegative"),
        SmoothingMode::DeltaScaled { delta } if delta == 0.0 => Ok(q.clone()),
        SmoothingMode::DeltaScaled { delta } => q.add_scaled(&g, delta * q.bw_norm()),
    }
}

/// A uniformly random `m`-dimensional subspace of degree-`d` forms.
pub fn sample_haar_subspace<R: Rng + ?Sized>(n: usize, d: u32, m: usize, rng: &mut R) -> Result<PolySubspace> {
    let len = crate::poly::monomial_basis(n, d)?.len();
    if m == 0 || m > len {
        return invalid(format!("subspace dimension {m} must lie in 1..={len}"));
    }
    let mut last = None;
    for _ in 0..2 {
        let gens = (0..m)
            .map(|_| {
                let c: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
                HomogeneousPolynomial::from_orthonormal_coords(n, d, &c)
            })
            .collect::<Result<Vec<_>>>()?;
        match orthonormalize(&gens) {
            Ok(f) if f.dim() == m => return Ok(f),
            Ok(f) => last = Some(Error::InvalidArgument(format!("sampled generators have rank {} < {m}", f.dim()))),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("two failed draws"))
}

/// A Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn unit_variance_models() {
        let mut rng = SeedPlan::new(3).rng(0);
        for model in [RandomModel::gaussian(), RandomModel::exp_power(2.0).unwrap(), RandomModel::exp_power(4.0).unwrap()] {
            let x = sample_coeffs(&model, 200_000, &mut rng);
            let (m, v) = moments(&x);
            assert!(m.abs() < 0.01, "{model:?} mean {m}");
            assert!((v - 1.0).abs() < 0.02, "{model:?} var {v}");
        }
        let lp = RandomModel::lp_ball(3.0).unwrap();
        let mut all = Vec::new();
        for _ in 0..2000 {
            all.extend(sample_coeffs(&lp, 50, &mut rng));
        }
        let (m, v) = moments(&all);
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.03, "lp ball mean {m} var {v}");
    }

    #[test]
    fn constructor_checks() {
        assert!(RandomModel::new(Family::Gaussian, 0.1, 1.0, None).is_err());
        assert!(RandomModel::exp_power(1.5).is_err());
        assert!("lp_ball:3".parse::<RandomModel>().is_ok());
        assert!("cauchy".parse::<RandomModel>().is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let plan = SeedPlan::new(42);
        let a: Vec<f64> = sample_coeffs(&RandomModel::gaussian(), 5, &mut plan.rng(1));
        let b: Vec<f64> = sample_coeffs(&RandomModel::gaussian(), 5, &mut plan.rng(1));
        let c: Vec<f64> = sample_coeffs(&RandomModel::gaussian(), 5, &mut plan.rng(2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn orthogonal_matrix_is_orthogonal() {
        let q = random_orthogonal(4, &mut SeedPlan::new(1).rng(0));
        let e = q.transpose() * &q - DMatrix::identity(4, 4);
        assert!(e.amax() < 1e-12);
    }
}
