//! Bound formulas and seeded Monte Carlo experiments.
//!
//! Every experiment draws trial `i` from stream `i` of a [`SeedPlan`], evaluates
//! trials in parallel and aggregates them in trial order, so reruns with the
//! same configuration reproduce every row bit for bit.
//!
//! Tail checks are one-sided: a row passes when the lower end of the 95% Wilson
//! interval of the empirical exceedance frequency is at most the theorem bound.
//! A trial counts as an exceedance only when the lower end of its certified
//! condition-number bracket clears the threshold.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condition::{global_l_with, ConditionOptions, GlobalConditionReport};
use crate::error::{invalid, Result};
use crate::poly::{monomial_basis, PolynomialSystem};
use crate::random::{
    sample_coeffs, sample_haar_subspace, sample_smoothed, sample_system, RandomModel, SeedPlan, SmoothingMode,
};
use crate::sphere::{level_delta, shared_net, shared_net_or_coarser, sup_norm_upper, NetSymmetry};
use crate::subspace::{dispersion_system_with, dispersion_with, DispersionOptions, SystemDispersion, SystemSubspace};

/// Two-sided 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Largest fraction of ambiguous trials before an experiment is inconclusive.
pub const MAX_AMBIGUOUS_FRACTION: f64 = 0.05;

/// Universal constants that the theorems leave unspecified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// `C >= 4`.
    pub c: f64,
    /// Power of `log(ed)` inside the bracket of `M`; 1 or 2.
    pub log_exponent: u32,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { c: 4.0, log_exponent: 1, a1: 1.0, a2: 1.0, a3: 1.0 }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 4.0 && self.c.is_finite()) {
            return invalid(format!("C = {} must be at least 4", self.c));
        }
        if !matches!(self.log_exponent, 1 | 2) {
            return invalid("log_exponent must be 1 or 2");
        }
        if [self.a1, self.a2, self.a3].iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return invalid("a-constants must be positive");
        }
        Ok(())
    }
}

/// `log(e d) = 1 + ln d`.
pub fn log_ed(d: u32) -> f64 {
    1.0 + (d as f64).ln()
}

/// The quantities of `E` that enter the bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub n: usize,
    pub d: u32,
    pub dim: usize,
    /// Upper end of the dispersion bracket; `None` for degenerate spaces.
    pub sigma_hi: Option<f64>,
    pub sigma_max_lo: f64,
    pub sigma_max_hi: f64,
}

impl SpaceSummary {
    pub fn new(e: &SystemSubspace, disp: &SystemDispersion) -> Self {
        Self {
            n: e.n(),
            d: e.max_degree(),
            dim: e.dim(),
            sigma_hi: disp.sigma_hi,
            sigma_max_lo: disp.sigma_max_lo,
            sigma_max_hi: disp.sigma_max_hi,
        }
    }

    fn core(&self, k: f64, c0: f64, b: &BoundConfig) -> Option<f64> {
        let sigma = self.sigma_hi?;
        let l = log_ed(self.d).powi(b.log_exponent as i32);
        let d2 = (self.d as f64).powi(2);
        Some((c0 * b.c * k * d2 * l * sigma).powi(2 * self.n as i32 - 2))
    }
}

/// `M = n K sqrt(dim E) (c0 C K d^2 log(ed) sigma(E))^(2n-2)`; `None` means `+inf`.
pub fn compute_m_average(s: &SpaceSummary, k: f64, c0: f64, b: &BoundConfig) -> Option<f64> {
    Some(s.n as f64 * k * (s.dim as f64).sqrt() * s.core(k, c0, b)?)
}

/// Which form of the smoothed `M` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MVariant {
    /// `(1 + ||Q||_W / (sqrt(n) K log(ed)))^(2n-1)` correction.
    Statement,
    /// `(1 + ||Q||_W) (1 + ||Q||_inf / (sqrt(n) log(ed) K sigma_max))^(2n-2)` correction.
    Remark,
}

impl std::str::FromStr for MVariant {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "statement" => Ok(Self::Statement),
            "remark" => Ok(Self::Remark),
            other => invalid(format!("unknown variant {other:?}")),
        }
    }
}

/// Smoothed-analysis `M` for `P = Q + G`; `q_inf_hi` is only used by [`MVariant::Remark`].
pub fn compute_m_smoothed(
    s: &SpaceSummary,
    q_bw: f64,
    q_inf_hi: f64,
    k: f64,
    c0: f64,
    b: &BoundConfig,
    variant: MVariant,
) -> Option<f64> {
    let base = compute_m_average(s, k, c0, b)?;
    let l = log_ed(s.d).powi(b.log_exponent as i32);
    let rn = (s.n as f64).sqrt();
    let e = 2 * s.n as i32;
    Some(match variant {
        MVariant::Statement => base * (1.0 + q_bw / (rn * k * l)).powi(e - 1),
        MVariant::Remark => {
            base * (1.0 + q_bw) * (1.0 + q_inf_hi / (rn * l * k * s.sigma_max_lo)).powi(e - 2)
        }
    })
}

/// `M` for `P = Q + delta ||Q||_W G`: the statement form with `K' = delta ||Q|| K`
/// and `c0' = c0 / (delta ||Q||)`.
pub fn compute_m_delta_scaled(s: &SpaceSummary, q_bw: f64, delta: f64, k: f64, c0: f64, b: &BoundConfig) -> Option<f64> {
    let scale = delta * q_bw;
    compute_m_smoothed(s, q_bw, 0.0, scale * k, c0 / scale, b, MVariant::Statement)
}

/// Tail bound `3/sqrt(t)` for `t <= e^(2n log(ed))`, else
/// `(e^2 + 1)/sqrt(t) (ln t / (2n log(ed)))^(n/2)`.
pub fn tail_bound(t: f64, n: usize, d: u32) -> Result<f64> {
    if !(t >= 1.0 && t.is_finite()) {
        return invalid(format!("tail parameter t = {t} must be at least 1"));
    }
    let knee = 2.0 * n as f64 * log_ed(d);
    Ok(if t.ln() <= knee {
        3.0 / t.sqrt()
    } else {
        (std::f64::consts::E.powi(2) + 1.0) / t.sqrt() * (t.ln() / knee).powf(n as f64 / 2.0)
    })
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "AMBIGUOUS")]
    Ambiguous,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Ambiguous => "AMBIGUOUS",
        })
    }
}

/// One tail-check row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailRow {
    /// `kappa`, `norm` or `sup`.
    pub check: String,
    pub t: f64,
    /// Scale multiplying `t` in the threshold (`M` for the main check).
    pub m: f64,
    pub threshold: f64,
    pub exceed_count: usize,
    pub ambiguous_count: usize,
    pub trials: usize,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

impl TailRow {
    fn new(check: &str, t: f64, m: f64, threshold: f64, exceed: usize, ambiguous: usize, trials: usize, bound: f64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(exceed, trials, Z95);
        Self {
            check: check.to_string(),
            t,
            m,
            threshold,
            exceed_count: exceed,
            ambiguous_count: ambiguous,
            trials,
            p_hat: exceed as f64 / trials as f64,
            ci_lo,
            ci_hi,
            bound,
            verdict: if ci_lo <= bound { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// Check of `E log kappa <= 1 + log M` from the trial brackets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpectationRow {
    pub mean_log_kappa_lo: f64,
    /// `None` when some trial has an unbounded bracket.
    pub mean_log_kappa_hi: Option<f64>,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Certified data of one Monte Carlo trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub bw_norm: f64,
    pub kappa_lo: f64,
    pub kappa_hi: Option<f64>,
    pub sup_lo: f64,
    pub sup_hi: f64,
    pub evals: usize,
}

impl TrialRecord {
    fn from_report(r: &GlobalConditionReport) -> Self {
        Self {
            bw_norm: r.bw_norm,
            kappa_lo: r.kappa_lo,
            kappa_hi: r.kappa_hi,
            sup_lo: r.lipschitz.sup_norm.lo,
            sup_hi: r.lipschitz.sup_norm.hi,
            evals: r.evals,
        }
    }
}

/// Shared settings of the tail experiments.
#[derive(Clone, Debug)]
pub struct TailConfig {
    pub trials: usize,
    pub t_grid: Vec<f64>,
    /// Parameters of the `||P||_W` auxiliary check.
    pub norm_t_grid: Vec<f64>,
    /// Parameters of the `||P||_inf` auxiliary check.
    pub sup_s_grid: Vec<f64>,
    pub bounds: BoundConfig,
    pub seed: u64,
    /// Relative tolerance of each condition-number bracket.
    pub rel_tol: f64,
    pub max_evals: usize,
    pub refine_iters: usize,
    pub dispersion: DispersionOptions,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            trials: 2000,
            t_grid: vec![4.0, 25.0, 100.0],
            norm_t_grid: vec![1.1, 1.3],
            sup_s_grid: vec![1.5, 2.0],
            bounds: BoundConfig::default(),
            seed: 0,
            rel_tol: 0.5,
            max_evals: 1_000_000,
            refine_iters: 50,
            dispersion: DispersionOptions::default(),
        }
    }
}

impl TailConfig {
    fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        if self.trials < 100 {
            return invalid("tail experiments need at least 100 trials");
        }
        if self.t_grid.is_empty() {
            return invalid("t grid is empty");
        }
        if self.t_grid.iter().any(|t| !(*t >= 1.0 && t.is_finite())) {
            return invalid("every t in the grid must satisfy t >= 1");
        }
        if self.norm_t_grid.iter().chain(&self.sup_s_grid).any(|t| !(*t > 0.0 && t.is_finite())) {
            return invalid("auxiliary grids must be positive");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return invalid("rel_tol must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Result of a (smoothed) tail experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailResult {
    pub m: f64,
    pub space: SpaceSummary,
    pub rows: Vec<TailRow>,
    pub aux_rows: Vec<TailRow>,
    pub expectation: ExpectationRow,
    pub ambiguous_trials: usize,
    pub ambiguous_fraction: f64,
    pub inconclusive: bool,
    pub trials: Vec<TrialRecord>,
    pub notes: Vec<String>,
}

fn run_trials<F>(cfg: &TailConfig, m: f64, draw: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(u64) -> Result<PolynomialSystem> + Sync,
{
    let tmin = cfg.t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = cfg.t_grid.iter().cloned().fold(0.0, f64::max);
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let p = draw(i)?;
            let bw = p.bw_norm();
            let opts = ConditionOptions {
                rel_tol: cfg.rel_tol,
                max_evals: cfg.max_evals,
                refine_iters: cfg.refine_iters,
                seed: i,
                prune_above: Some(bw / (tmin * m)),
                stop_below: Some(bw / (tmax * m)),
                ..Default::default()
            };
            Ok(TrialRecord::from_report(&global_l_with(&p, &opts)?))
        })
        .collect()
}

/// Counts `(exceed, ambiguous)` with `lo >= thr` as exceedance and `lo < thr < hi` as ambiguous.
fn count_exceed(brackets: impl Iterator<Item = (f64, Option<f64>)>, thr: f64) -> (usize, usize) {
    let mut ex = 0;
    let mut amb = 0;
    for (lo, hi) in brackets {
        if lo >= thr {
            ex += 1;
        } else if hi.is_none_or(|h| h >= thr) {
            amb += 1;
        }
    }
    (ex, amb)
}

fn kappa_rows(cfg: &TailConfig, space: &SpaceSummary, m: f64, trials: &[TrialRecord]) -> Result<(Vec<TailRow>, usize)> {
    let mut rows = Vec::new();
    let mut any_amb = vec![false; trials.len()];
    for &t in &cfg.t_grid {
        let thr = t * m;
        let (ex, amb) = count_exceed(trials.iter().map(|r| (r.kappa_lo, r.kappa_hi)), thr);
        for (flag, r) in any_amb.iter_mut().zip(trials) {
            if r.kappa_lo < thr && r.kappa_hi.is_none_or(|h| h >= thr) {
                *flag = true;
            }
        }
        rows.push(TailRow::new("kappa", t, m, thr, ex, amb, trials.len(), tail_bound(t, space.n, space.d)?));
    }
    Ok((rows, any_amb.iter().filter(|a| **a).count()))
}

fn expectation_row(m: f64, trials: &[TrialRecord]) -> ExpectationRow {
    let n = trials.len() as f64;
    let lo = trials.iter().map(|r| r.kappa_lo.ln()).sum::<f64>() / n;
    let hi = trials
        .iter()
        .try_fold(0.0, |acc, r| r.kappa_hi.map(|h| acc + h.ln()))
        .map(|s| s / n);
    let bound = 1.0 + m.ln();
    let verdict = match hi {
        Some(h) if h <= bound => Verdict::Pass,
        _ if lo > bound => Verdict::Fail,
        _ => Verdict::Ambiguous,
    };
    ExpectationRow { mean_log_kappa_lo: lo, mean_log_kappa_hi: hi, bound, verdict }
}

fn space_summary(e: &SystemSubspace, cfg: &TailConfig) -> Result<SpaceSummary> {
    let disp = dispersion_system_with(e, &cfg.dispersion)?;
    let s = SpaceSummary::new(e, &disp);
    if s.sigma_hi.is_none() {
        return invalid("E is degenerate or its dispersion could not be bounded");
    }
    Ok(s)
}

/// Average-case tail experiment for `P` drawn from `model` over `e`.
pub fn run_tail_experiment(e: &SystemSubspace, model: &RandomModel, cfg: &TailConfig) -> Result<TailResult> {
    cfg.validate()?;
    let space = space_summary(e, cfg)?;
    let m = compute_m_average(&space, model.k, model.c0, &cfg.bounds).expect("non-degenerate E");
    let plan = SeedPlan::new(cfg.seed);
    let trials = run_trials(cfg, m, |i| sample_system(e, model, &mut plan.rng(i)))?;
    let (rows, amb) = kappa_rows(cfg, &space, m, &trials)?;
    let mut aux_rows = Vec::new();
    let sqrt_dim = (space.dim as f64).sqrt();
    for &t in &cfg.norm_t_grid {
        let thr = t * sqrt_dim;
        let ex = trials.iter().filter(|r| r.bw_norm >= thr).count();
        let bound = (1.0 - cfg.bounds.a1 * t * t * space.dim as f64 / model.k.powi(2)).exp().min(1.0);
        aux_rows.push(TailRow::new("norm", t, sqrt_dim, thr, ex, 0, trials.len(), bound));
    }
    let l = log_ed(space.d);
    let sup_scale = space.sigma_max_hi * (space.n as f64).sqrt() * l;
    for &s in &cfg.sup_s_grid {
        let thr = s * sup_scale;
        let (ex, amb) = count_exceed(trials.iter().map(|r| (r.sup_lo, Some(r.sup_hi))), thr);
        let bound = (1.0 - cfg.bounds.a3 * s * s * space.n as f64 * l * l / model.k.powi(2)).exp().min(1.0);
        aux_rows.push(TailRow::new("sup", s, sup_scale, thr, ex, amb, trials.len(), bound));
    }
    let expectation = expectation_row(m, &trials);
    let frac = amb as f64 / trials.len() as f64;
    Ok(TailResult {
        m,
        space,
        rows,
        aux_rows,
        expectation,
        ambiguous_trials: amb,
        ambiguous_fraction: frac,
        inconclusive: frac > MAX_AMBIGUOUS_FRACTION,
        trials,
        notes: vec![format!("log(ed) exponent in M: {}", cfg.bounds.log_exponent)],
    })
}

/// Smoothed tail experiment for `P = Q + G` or `P = Q + delta ||Q||_W G`.
pub fn run_smoothed_tail_experiment(
    e: &SystemSubspace,
    q: &PolynomialSystem,
    model: &RandomModel,
    mode: SmoothingMode,
    variant: MVariant,
    cfg: &TailConfig,
) -> Result<TailResult> {
    cfg.validate()?;
    if model.density_bound.is_none() {
        return invalid(format!(
            "model {} has no declared density bound; smoothed experiments need one",
            model.name()
        ));
    }
    e.check_contains(q)?;
    let space = space_summary(e, cfg)?;
    let q_bw = q.bw_norm();
    let d = space.d as f64;
    let q_net = shared_net_or_coarser(e.n(), 0.5 / (d * d))?;
    let q_inf_hi = if q.is_zero() { 0.0 } else { sup_norm_upper(q, &q_net)?.hi };
    let (m, k_eff) = match mode {
        SmoothingMode::Additive => (
            compute_m_smoothed(&space, q_bw, q_inf_hi, model.k, model.c0, &cfg.bounds, variant),
            model.k,
        ),
        SmoothingMode::DeltaScaled { delta } => {
            if q.is_zero() {
                return invalid("delta-scaled smoothing needs a nonzero center system");
            }
            (compute_m_delta_scaled(&space, q_bw, delta, model.k, model.c0, &cfg.bounds), delta * q_bw * model.k)
        }
    };
    let m = m.expect("non-degenerate E");
    let plan = SeedPlan::new(cfg.seed);
    let trials = run_trials(cfg, m, |i| sample_smoothed(e, q, model, mode, &mut plan.rng(i)))?;
    let (rows, amb) = kappa_rows(cfg, &space, m, &trials)?;
    let mut aux_rows = Vec::new();
    let sqrt_dim = (space.dim as f64).sqrt();
    for &t in &cfg.norm_t_grid {
        let thr = t * k_eff * sqrt_dim + q_bw;
        let ex = trials.iter().filter(|r| r.bw_norm >= thr).count();
        let bound = (1.0 - t * t * space.dim as f64 / model.k.powi(2)).exp().min(1.0);
        aux_rows.push(TailRow::new("norm", t, k_eff * sqrt_dim, thr, ex, 0, trials.len(), bound));
    }
    let l = log_ed(space.d);
    let sup_scale = space.sigma_max_hi * (space.n as f64).sqrt() * l;
    for &s in &cfg.sup_s_grid {
        let thr = s * sup_scale + q_inf_hi;
        let (ex, amb) = count_exceed(trials.iter().map(|r| (r.sup_lo, Some(r.sup_hi))), thr);
        let bound = (1.0 - cfg.bounds.a3 * s * s * space.n as f64 * l * l / k_eff.powi(2)).exp().min(1.0);
        aux_rows.push(TailRow::new("sup", s, sup_scale, thr, ex, amb, trials.len(), bound));
    }
    let expectation = expectation_row(m, &trials);
    let frac = amb as f64 / trials.len() as f64;
    Ok(TailResult {
        m,
        space,
        rows,
        aux_rows,
        expectation,
        ambiguous_trials: amb,
        ambiguous_fraction: frac,
        inconclusive: frac > MAX_AMBIGUOUS_FRACTION,
        trials,
        notes: vec![
            format!("log(ed) exponent in M: {}", cfg.bounds.log_exponent),
            "norm auxiliary bound uses exp(1 - t^2 dim(E) / K^2)".to_string(),
        ],
    })
}

/// One candidate of the approximant search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: usize,
    pub distance: f64,
    pub kappa_lo: f64,
    pub kappa_hi: Option<f64>,
    pub distance_ok: bool,
    pub kappa_ok: bool,
}

/// Outcome of [`find_wellconditioned`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproximantResult {
    pub epsilon: f64,
    /// Sub-Gaussian constant of the perturbation.
    pub k_target: f64,
    pub distance_bound: f64,
    pub kappa_bound: f64,
    pub attempts: Vec<AttemptRecord>,
    /// Index of the first attempt meeting both bounds.
    pub found: Option<usize>,
    #[serde(skip)]
    pub candidate: Option<PolynomialSystem>,
    pub best_kappa_hi: Option<f64>,
    pub distance_rate: f64,
    pub joint_rate: f64,
}

/// Controls of [`find_wellconditioned`].
#[derive(Clone, Debug)]
pub struct ApproximantConfig {
    pub epsilon: f64,
    pub attempts: usize,
    pub bounds: BoundConfig,
    pub seed: u64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub dispersion: DispersionOptions,
}

impl Default for ApproximantConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            attempts: 100,
            bounds: BoundConfig::default(),
            seed: 0,
            rel_tol: 0.5,
            max_evals: 1_000_000,
            dispersion: DispersionOptions::default(),
        }
    }
}

/// Searches `Q + G` with Gaussian `G` of sub-Gaussian constant
/// `K = eps ||Q||_W / (sqrt(n) log(ed))` for a well-conditioned approximant.
///
/// A standard normal has `K = sqrt(2)`, so `G = (K / sqrt(2)) Z` with `Z` standard.
pub fn find_wellconditioned(
    q: &PolynomialSystem,
    e: &SystemSubspace,
    cfg: &ApproximantConfig,
) -> Result<ApproximantResult> {
    cfg.bounds.validate()?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        return invalid("epsilon must lie in (0, 1)");
    }
    if cfg.attempts == 0 {
        return invalid("attempts must be positive");
    }
    if q.is_zero() {
        return invalid("the center system must be nonzero");
    }
    e.check_contains(q)?;
    let disp = dispersion_system_with(e, &cfg.dispersion)?;
    let space = SpaceSummary::new(e, &disp);
    let Some(sigma) = space.sigma_hi else {
        return invalid("E is degenerate");
    };
    let n = space.n as f64;
    let l = log_ed(space.d);
    let q_bw = q.bw_norm();
    let sqrt_dim = (space.dim as f64).sqrt();
    let k_target = cfg.epsilon * q_bw / (n.sqrt() * l);
    let distance_bound = cfg.epsilon * q_bw * sqrt_dim / (l * n.sqrt());
    let d2 = (space.d as f64).powi(2);
    let kappa_bound = n.sqrt() * sqrt_dim * (d2 * cfg.bounds.c * l * sigma / cfg.epsilon).powi(2 * space.n as i32 - 2);
    let model = RandomModel::gaussian();
    let scale = k_target / model.k;
    let plan = SeedPlan::new(cfg.seed);
    let outcomes: Vec<(AttemptRecord, PolynomialSystem)> = (0..cfg.attempts)
        .into_par_iter()
        .map(|i| {
            let g = sample_system(e, &model, &mut plan.rng(i as u64))?;
            let p = q.add_scaled(&g, scale)?;
            let distance = g.bw_norm() * scale;
            let bw = p.bw_norm();
            let opts = ConditionOptions {
                rel_tol: cfg.rel_tol,
                max_evals: cfg.max_evals,
                seed: i as u64,
                prune_above: Some(bw / kappa_bound),
                ..Default::default()
            };
            let r = global_l_with(&p, &opts)?;
            let rec = AttemptRecord {
                attempt: i,
                distance,
                kappa_lo: r.kappa_lo,
                kappa_hi: r.kappa_hi,
                distance_ok: distance <= distance_bound,
                kappa_ok: r.kappa_hi.is_some_and(|h| h <= kappa_bound),
            };
            Ok((rec, p))
        })
        .collect::<Result<_>>()?;
    let found = outcomes.iter().position(|(r, _)| r.distance_ok && r.kappa_ok);
    let candidate = found.map(|i| outcomes[i].1.clone());
    let attempts: Vec<AttemptRecord> = outcomes.into_iter().map(|(r, _)| r).collect();
    let best_kappa_hi = attempts.iter().filter_map(|r| r.kappa_hi).fold(None, |acc: Option<f64>, h| {
        Some(acc.map_or(h, |a| a.min(h)))
    });
    let total = attempts.len() as f64;
    Ok(ApproximantResult {
        epsilon: cfg.epsilon,
        k_target,
        distance_bound,
        kappa_bound,
        distance_rate: attempts.iter().filter(|r| r.distance_ok).count() as f64 / total,
        joint_rate: attempts.iter().filter(|r| r.distance_ok && r.kappa_ok).count() as f64 / total,
        attempts,
        found,
        candidate,
        best_kappa_hi,
    })
}

/// Quantiles of the dispersion of random subspaces of one dimension.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrassmannRow {
    pub m: usize,
    pub samples: usize,
    pub finite: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    /// `(sqrt(m) + C t sqrt(n) log(ed)) / (sqrt(m) - C t sqrt(n) log(ed))`; `None` when vacuous.
    pub bound: Option<f64>,
}

/// Controls of [`run_grassmann_dispersion`].
#[derive(Clone, Debug)]
pub struct GrassmannConfig {
    pub m_grid: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Constants of the overlaid bound curve.
    pub c: f64,
    pub t: f64,
    pub dispersion: DispersionOptions,
}

impl Default for GrassmannConfig {
    fn default() -> Self {
        Self {
            m_grid: vec![6, 10, 14],
            samples: 50,
            seed: 0,
            c: 1.0,
            t: 1.0,
            dispersion: DispersionOptions { rel_tol: 1e-2, ..Default::default() },
        }
    }
}

/// Empirical quantile with linear interpolation of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        if sorted[i + 1].is_infinite() {
            return if frac == 0.0 { sorted[i] } else { f64::INFINITY };
        }
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Dispersion of Haar-random `m`-dimensional subspaces of degree-`d` forms.
pub fn run_grassmann_dispersion(n: usize, d: u32, cfg: &GrassmannConfig) -> Result<Vec<GrassmannRow>> {
    let len = monomial_basis(n, d)?.len();
    if cfg.samples == 0 {
        return invalid("samples must be positive");
    }
    if cfg.m_grid.iter().any(|&m| m < 2 || m > len) {
        return invalid(format!("every m must lie in 2..={len}"));
    }
    let plan = SeedPlan::new(cfg.seed);
    let l = log_ed(d);
    let mut rows = Vec::new();
    for (gi, &m) in cfg.m_grid.iter().enumerate() {
        let sub = plan.child(gi as u64);
        let mut sig: Vec<f64> = (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| {
                let f = sample_haar_subspace(n, d, m, &mut sub.rng(i))?;
                let r = dispersion_with(&f, &DispersionOptions { seed: i, ..cfg.dispersion.clone() })?;
                Ok(r.sigma_hi.unwrap_or(f64::INFINITY))
            })
            .collect::<Result<_>>()?;
        sig.sort_by(f64::total_cmp);
        let gap = cfg.c * cfg.t * (n as f64).sqrt() * l;
        let rm = (m as f64).sqrt();
        rows.push(GrassmannRow {
            m,
            samples: cfg.samples,
            finite: sig.iter().filter(|s| s.is_finite()).count(),
            min: sig[0],
            q25: quantile(&sig, 0.25),
            median: quantile(&sig, 0.5),
            q75: quantile(&sig, 0.75),
            max: sig[sig.len() - 1],
            bound: (rm > gap).then(|| (rm + gap) / (rm - gap)),
        });
    }
    Ok(rows)
}

/// Monte Carlo estimate of `E sup_{|x|=1} |G(x)|` for Gaussian `G` in degree-`d` forms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VeroneseEstimate {
    pub n: usize,
    pub d: u32,
    pub samples: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `mean / (sqrt(n) log(ed))`.
    pub ratio: f64,
    pub net_delta: f64,
}

/// `E ||G||_2` for a standard Gaussian vector in `R^k`.
pub fn chi_mean(k: usize) -> f64 {
    let k = k as f64;
    (std::f64::consts::LN_2 / 2.0 + libm::lgamma((k + 1.0) / 2.0) - libm::lgamma(k / 2.0)).exp()
}

/// Midpoints of certified sup-norm brackets averaged over `samples` Gaussian forms.
pub fn estimate_veronese_complexity(n: usize, d: u32, samples: usize, seed: u64, delta: f64) -> Result<VeroneseEstimate> {
    if samples < 100 {
        return invalid("at least 100 samples are required");
    }
    let df = d as f64;
    if !(delta > 0.0 && df * df * delta < 1.0) {
        return invalid("net radius must satisfy d^2 delta < 1");
    }
    let net = shared_net(n, delta, NetSymmetry::Antipodal)?;
    let basis = monomial_basis(n, d)?;
    let len = basis.len();
    let mut table = vec![0.0; net.len() * len];
    let mut pw = Vec::new();
    for (i, x) in net.points().enumerate() {
        basis.veronese_into(x, &mut pw, &mut table[i * len..(i + 1) * len]);
    }
    let top = net.level() as usize;
    let model = RandomModel::gaussian();
    let plan = SeedPlan::new(seed);
    let mids: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let g = sample_coeffs(&model, len, &mut plan.rng(s));
            let mut level_max = vec![0.0f64; top + 1];
            for (i, row) in table.chunks(len).enumerate() {
                let v: f64 = row.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs();
                let l = net.point_level(i) as usize;
                if v > level_max[l] {
                    level_max[l] = v;
                }
            }
            let mut lo: f64 = 0.0;
            let mut hi = f64::INFINITY;
            for (l, v) in level_max.iter().enumerate() {
                lo = lo.max(*v);
                let dl = level_delta(n, l as u32);
                if df * dl < 1.0 {
                    hi = hi.min(lo / (1.0 - df * dl));
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let k = mids.len() as f64;
    let mean = mids.iter().sum::<f64>() / k;
    let var = mids.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let sd = var.sqrt();
    let half = Z95 * sd / k.sqrt();
    Ok(VeroneseEstimate {
        n,
        d,
        samples,
        mean,
        std_dev: sd,
        ci_lo: mean - half,
        ci_hi: mean + half,
        ratio: mean / ((n as f64).sqrt() * log_ed(d)),
        net_delta: net.delta_achieved(),
    })
}

/// A CSV table with string cells.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Formats a float for CSV: shortest round-trip representation, exponent form for extreme magnitudes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), fmt_f64)
}

/// Column set of the main tail CSV.
pub const TAIL_COLUMNS: [&str; 11] =
    ["t", "M", "threshold", "exceed_count", "ambiguous_count", "trials", "p_hat", "ci_lo", "ci_hi", "bound", "verdict"];

fn tail_table(rows: &[TailRow], with_check: bool) -> Table {
    let mut cols: Vec<&str> = Vec::new();
    if with_check {
        cols.push("check");
    }
    cols.extend(TAIL_COLUMNS);
    let mut t = Table::new(&cols);
    for r in rows {
        let mut row = Vec::new();
        if with_check {
            row.push(r.check.clone());
        }
        row.extend([
            fmt_f64(r.t),
            fmt_f64(r.m),
            fmt_f64(r.threshold),
            r.exceed_count.to_string(),
            r.ambiguous_count.to_string(),
            r.trials.to_string(),
            fmt_f64(r.p_hat),
            fmt_f64(r.ci_lo),
            fmt_f64(r.ci_hi),
            fmt_f64(r.bound),
            r.verdict.to_string(),
        ]);
        t.push(row);
    }
    t
}

/// Configuration echo, results and provenance of one experiment run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Vec<(String, String)>,
    pub seed: u64,
    pub table: Table,
    pub aux_table: Option<Table>,
    pub summary: serde_json::Value,
    pub notes: Vec<String>,
    pub inconclusive: bool,
    pub wall_clock_secs: f64,
    pub version: String,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: Vec<(String, String)>, seed: u64, table: Table) -> Self {
        Self {
            experiment: experiment.to_string(),
            config,
            seed,
            table,
            aux_table: None,
            summary: serde_json::Value::Null,
            notes: Vec::new(),
            inconclusive: false,
            wall_clock_secs: 0.0,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_csv(&self) -> String {
        self.table.to_csv()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Human-readable summary lines.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {} (seed {}, {:.2}s)", self.experiment, self.seed, self.wall_clock_secs);
        for (k, v) in &self.config {
            let _ = writeln!(s, "  {k} = {v}");
        }
        s.push_str(&self.table.to_csv());
        if let Some(aux) = &self.aux_table {
            s.push_str("auxiliary checks:\n");
            s.push_str(&aux.to_csv());
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        if self.inconclusive {
            s.push_str("INCONCLUSIVE: too many ambiguous trials\n");
        }
        s
    }
}

impl TailResult {
    /// Report with the main tail CSV and the auxiliary/expectation rows.
    pub fn report(&self, name: &str, config: Vec<(String, String)>, seed: u64, started: Instant) -> ExperimentReport {
        let mut r = ExperimentReport::new(name, config, seed, tail_table(&self.rows, false));
        r.aux_table = Some(tail_table(&self.aux_rows, true));
        r.summary = serde_json::json!({
            "M": self.m,
            "space": self.space,
            "expectation": self.expectation,
            "ambiguous_trials": self.ambiguous_trials,
            "ambiguous_fraction": self.ambiguous_fraction,
            "rows": self.rows,
            "aux_rows": self.aux_rows,
        });
        r.notes = self.notes.clone();
        r.notes.push(format!(
            "expectation: mean log kappa in [{}, {}] vs bound 1 + log M = {} -> {}",
            self.expectation.mean_log_kappa_lo,
            fmt_opt(self.expectation.mean_log_kappa_hi),
            self.expectation.bound,
            self.expectation.verdict
        ));
        r.inconclusive = self.inconclusive;
        r.wall_clock_secs = started.elapsed().as_secs_f64();
        r
    }
}

impl ApproximantResult {
    pub fn report(&self, config: Vec<(String, String)>, seed: u64, started: Instant) -> ExperimentReport {
        let mut t = Table::new(&["attempt", "distance", "kappa_lo", "kappa_hi", "distance_ok", "kappa_ok"]);
        for a in &self.attempts {
            t.push(vec![
                a.attempt.to_string(),
                fmt_f64(a.distance),
                fmt_f64(a.kappa_lo),
                fmt_opt(a.kappa_hi),
                a.distance_ok.to_string(),
                a.kappa_ok.to_string(),
            ]);
        }
        let mut r = ExperimentReport::new("approx", config, seed, t);
        r.summary = serde_json::json!({
            "k_target": self.k_target,
            "distance_bound": self.distance_bound,
            "kappa_bound": self.kappa_bound,
            "found": self.found,
            "best_kappa_hi": self.best_kappa_hi,
            "distance_rate": self.distance_rate,
            "joint_rate": self.joint_rate,
        });
        r.notes.push(format!(
            "distance rate {}, joint rate {}, first success {:?}",
            self.distance_rate, self.joint_rate, self.found
        ));
        r.wall_clock_secs = started.elapsed().as_secs_f64();
        r
    }
}

/// Report for [`run_grassmann_dispersion`] rows.
pub fn grassmann_report(rows: &[GrassmannRow], config: Vec<(String, String)>, seed: u64, started: Instant) -> ExperimentReport {
    let mut t = Table::new(&["m", "samples", "finite", "min", "q25", "median", "q75", "max", "bound"]);
    for g in rows {
        t.push(vec![
            g.m.to_string(),
            g.samples.to_string(),
            g.finite.to_string(),
            fmt_f64(g.min),
            fmt_f64(g.q25),
            fmt_f64(g.median),
            fmt_f64(g.q75),
            fmt_f64(g.max),
            fmt_opt(g.bound),
        ]);
    }
    let mut r = ExperimentReport::new("grassmann", config, seed, t);
    r.summary = serde_json::to_value(rows).unwrap_or_default();
    r.wall_clock_secs = started.elapsed().as_secs_f64();
    r
}

/// Report for [`estimate_veronese_complexity`].
pub fn veronese_report(e: &VeroneseEstimate, config: Vec<(String, String)>, seed: u64, started: Instant) -> ExperimentReport {
    let mut t = Table::new(&["n", "d", "samples", "mean", "std_dev", "ci_lo", "ci_hi", "ratio", "net_delta"]);
    t.push(vec![
        e.n.to_string(),
        e.d.to_string(),
        e.samples.to_string(),
        fmt_f64(e.mean),
        fmt_f64(e.std_dev),
        fmt_f64(e.ci_lo),
        fmt_f64(e.ci_hi),
        fmt_f64(e.ratio),
        fmt_f64(e.net_delta),
    ]);
    let mut r = ExperimentReport::new("veronese-gamma", config, seed, t);
    r.summary = serde_json::to_value(e).unwrap_or_default();
    if e.d == 1 {
        r.notes.push(format!("closed form for d = 1: chi mean {}", chi_mean(e.n)));
    }
    r.wall_clock_secs = started.elapsed().as_secs_f64();
    r
}
