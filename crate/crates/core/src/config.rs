//! Line-based `key = value` configuration files.
//!
//! ```
//! use polycond::config::Config;
//! let c = Config::parse("trials = 200\nt_grid = 4, 25  # thresholds\n").unwrap();
//! assert_eq!(c.get::<usize>("trials").unwrap(), Some(200));
//! assert_eq!(c.get_list::<f64>("t_grid").unwrap(), Some(vec![4.0, 25.0]));
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{ApproximantConfig, BoundConfig, GrassmannConfig, TailConfig};
use crate::io;
use crate::poly::{HomogeneousPolynomial, PolynomialSystem};
use crate::random::{sample_system, RandomModel, SeedPlan};
use crate::subspace::{make_named_space, DispersionOptions, NamedSpace, SystemSubspace};

/// Parsed configuration; keys are unique and kept with their line numbers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: i + 1, message: format!("expected `key = value`, got {line:?}") });
            };
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse { line: i + 1, message: "empty key".into() });
            }
            if entries.insert(k.to_string(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse { line: i + 1, message: format!("duplicate key {k:?}") });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets or replaces a key, as a command-line override would.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.parse()
            .map(Some)
            .map_err(|_| Error::Parse { line: *line, message: format!("bad value for {key}: {v:?}") })
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some((line, v)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Error::Parse { line: *line, message: format!("bad list item for {key}: {x:?}") })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    /// Keys not in `known`, for rejecting typos.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.entries.keys().filter(|k| !known.contains(&k.as_str())).cloned().collect()
    }

    /// Sorted `(key, value)` pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.entries.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect()
    }
}

/// Keys shared by the experiment builders below.
pub const COMMON_KEYS: [&str; 13] =
    ["seed", "model", "K", "c0", "density_bound", "C", "log_exponent", "a1", "a2", "a3", "n", "d", "degrees"];

impl Config {
    /// `model`, optionally overriding `K`, `c0` and `density_bound`.
    pub fn model(&self) -> Result<RandomModel> {
        let base: RandomModel = self.raw("model").unwrap_or("gaussian").parse()?;
        let k = self.get_or("K", base.k)?;
        let c0 = self.get_or("c0", base.c0)?;
        let density = match self.get::<f64>("density_bound")? {
            Some(b) => Some(b),
            None => base.density_bound,
        };
        RandomModel::new(base.family, k, c0, density)
    }

    /// `C`, `log_exponent` and `a1`..`a3`.
    pub fn bounds(&self) -> Result<BoundConfig> {
        let d = BoundConfig::default();
        let b = BoundConfig {
            c: self.get_or("C", d.c)?,
            log_exponent: self.get_or("log_exponent", d.log_exponent)?,
            a1: self.get_or("a1", d.a1)?,
            a2: self.get_or("a2", d.a2)?,
            a3: self.get_or("a3", d.a3)?,
        };
        b.validate()?;
        Ok(b)
    }

    /// `n` (default 3) and `degrees`, or `d` (default 2) repeated `n - 1` times.
    pub fn shape(&self) -> Result<(usize, Vec<u32>)> {
        let n: usize = self.get_or("n", 3)?;
        if n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        let degrees = match self.get_list::<u32>("degrees")? {
            Some(ds) => ds,
            None => vec![self.get_or("d", 2u32)?; n - 1],
        };
        if degrees.len() != n - 1 {
            return Err(Error::InvalidArgument(format!("need {} degrees for n = {n}", n - 1)));
        }
        Ok((n, degrees))
    }

    /// `space = full | power_monomials | sos_family | degenerate | <subspace file>`, used for every factor.
    pub fn system_space(&self) -> Result<SystemSubspace> {
        let (n, degrees) = self.shape()?;
        let spec = self.raw("space").unwrap_or("full");
        if let Ok(kind) = spec.parse::<NamedSpace>() {
            let factors = degrees.iter().map(|&d| make_named_space(&kind, n, d)).collect::<Result<Vec<_>>>()?;
            return SystemSubspace::new(factors);
        }
        let f = io::parse_subspace(&std::fs::read_to_string(spec)?)?;
        if f.n() != n || degrees.iter().any(|&d| d != f.degree()) {
            return Err(Error::InvalidArgument("subspace file does not match n and degrees".into()));
        }
        SystemSubspace::repeated(f)
    }

    /// `center = random | zero | degenerate | <system file>` inside `e`.
    ///
    /// `degenerate` is `p_i = x_1^(d_i - 1) x_{i+1}`, which has a singular zero; it
    /// requires `e` to be the full space.
    pub fn center(&self, e: &SystemSubspace, seed: u64) -> Result<PolynomialSystem> {
        let spec = self.raw("center").unwrap_or("random");
        match spec {
            "random" => {
                let mut rng = SeedPlan::new(seed).child(u64::MAX).rng(0);
                sample_system(e, &RandomModel::gaussian(), &mut rng)
            }
            "zero" => {
                let polys = e
                    .degrees()
                    .iter()
                    .map(|&d| HomogeneousPolynomial::zero(e.n(), d))
                    .collect::<Result<Vec<_>>>()?;
                PolynomialSystem::new(polys)
            }
            "degenerate" => degenerate_center(e.n(), &e.degrees()),
            path => io::parse_system(&std::fs::read_to_string(path)?),
        }
    }

    pub fn tail_config(&self, seed: u64) -> Result<TailConfig> {
        let d = TailConfig::default();
        Ok(TailConfig {
            trials: self.get_or("trials", d.trials)?,
            t_grid: self.get_list("t_grid")?.unwrap_or(d.t_grid),
            norm_t_grid: self.get_list("norm_t_grid")?.unwrap_or(d.norm_t_grid),
            sup_s_grid: self.get_list("sup_s_grid")?.unwrap_or(d.sup_s_grid),
            bounds: self.bounds()?,
            seed,
            rel_tol: self.get_or("rel_tol", d.rel_tol)?,
            max_evals: self.get_or("max_evals", d.max_evals)?,
            refine_iters: self.get_or("refine", d.refine_iters)?,
            dispersion: DispersionOptions {
                delta: self.get_or("dispersion_delta", d.dispersion.delta)?,
                seed,
                ..d.dispersion
            },
        })
    }

    pub fn approximant_config(&self, seed: u64) -> Result<ApproximantConfig> {
        let d = ApproximantConfig::default();
        Ok(ApproximantConfig {
            epsilon: self.get_or("epsilon", d.epsilon)?,
            attempts: self.get_or("attempts", d.attempts)?,
            bounds: self.bounds()?,
            seed,
            rel_tol: self.get_or("rel_tol", d.rel_tol)?,
            max_evals: self.get_or("max_evals", d.max_evals)?,
            dispersion: DispersionOptions {
                delta: self.get_or("dispersion_delta", d.dispersion.delta)?,
                seed,
                ..d.dispersion
            },
        })
    }

    pub fn grassmann_config(&self, seed: u64) -> Result<GrassmannConfig> {
        let d = GrassmannConfig::default();
        Ok(GrassmannConfig {
            m_grid: self.get_list("m_grid")?.unwrap_or(d.m_grid),
            samples: self.get_or("samples", d.samples)?,
            seed,
            c: self.get_or("curve_C", d.c)?,
            t: self.get_or("curve_t", d.t)?,
            dispersion: DispersionOptions {
                delta: self.get_or("dispersion_delta", d.dispersion.delta)?,
                rel_tol: self.get_or("rel_tol", d.dispersion.rel_tol)?,
                ..d.dispersion
            },
        })
    }
}

/// `p_i = x_1^(d_i - 1) x_{i+1}`: every `p_i` vanishes to order `d_i - 1` on `x_1 = 0`.
pub fn degenerate_center(n: usize, degrees: &[u32]) -> Result<PolynomialSystem> {
    let polys = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut alpha = vec![0u32; n];
            alpha[0] = d - 1;
            alpha[i + 1] += 1;
            HomogeneousPolynomial::from_terms(n, d, &[(alpha, 1.0)])
        })
        .collect::<Result<Vec<_>>>()?;
    PolynomialSystem::new(polys)
}
