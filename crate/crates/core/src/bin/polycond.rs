use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polycond::condition::{global_l_with, ConditionOptions};
use polycond::config::{Config, COMMON_KEYS};
use polycond::experiments::{
    estimate_veronese_complexity, find_wellconditioned, fmt_f64, grassmann_report, run_grassmann_dispersion,
    run_smoothed_tail_experiment, run_tail_experiment, veronese_report, ExperimentReport, MVariant, Table,
};
use polycond::io::{parse_system, write_atomic, NetCache};
use polycond::random::SmoothingMode;
use polycond::sphere::{build_net_with, verify_covering, NetSymmetry};
use polycond::subspace::{dispersion_system_with, DispersionOptions};
use polycond::Error;

/// Condition numbers, dispersion constants and tail-bound experiments for polynomial systems.
#[derive(Parser)]
#[command(name = "polycond", version)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Line-based `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result table as CSV to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit the full JSON report (to stdout, and next to `--out` when given).
    #[arg(long, global = true)]
    json: bool,
    /// Extra `key=value` configuration overrides.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified condition number of a system file.
    Kappa(KappaArgs),
    /// Dispersion constant of a named or file-based subspace.
    Dispersion(SpaceArgs),
    /// Average-case tail experiment.
    Tail(TailArgs),
    /// Smoothed tail experiment around a center system.
    SmoothedTail(SmoothedArgs),
    /// Search for a well-conditioned approximant of a center system.
    Approx(ApproxArgs),
    /// Dispersion of random subspaces.
    Grassmann(GrassmannArgs),
    /// Monte Carlo estimate of the Veronese Gaussian complexity.
    VeroneseGamma(VeroneseArgs),
    /// Size and covering radius of a sphere net.
    Netinfo(NetArgs),
}

#[derive(Args)]
struct KappaArgs {
    /// System file (`n=<n> degrees=<...>` header).
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    refine: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<String>,
}

#[derive(Args)]
struct SpaceArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    degrees: Option<String>,
    /// full | power_monomials | sos_family | degenerate | <subspace file>
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<String>,
}

#[derive(Args)]
struct TailArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// gaussian | lp_ball:<p> | exp_power:<p>
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Comma-separated thresholds `t >= 1`.
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
}

#[derive(Args)]
struct SmoothedArgs {
    #[command(flatten)]
    tail: TailArgs,
    /// random | zero | degenerate | <system file>
    #[arg(long)]
    center: Option<String>,
    /// additive | delta_scaled:<delta>
    #[arg(long)]
    mode: Option<String>,
    /// statement | remark
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    center: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    attempts: Option<String>,
}

#[derive(Args)]
struct GrassmannArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long = "m-grid")]
    m_grid: Option<String>,
    #[arg(long)]
    samples: Option<String>,
}

#[derive(Args)]
struct VeroneseArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long = "net-delta")]
    net_delta: Option<String>,
}

#[derive(Args)]
struct NetArgs {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// full | antipodal
    #[arg(long)]
    symmetry: Option<String>,
    /// Directory of the on-disk net cache.
    #[arg(long)]
    cache: Option<String>,
    /// Number of random points used to check the covering radius.
    #[arg(long)]
    verify: Option<String>,
}

impl SpaceArgs {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("n", &self.n),
            ("d", &self.d),
            ("degrees", &self.degrees),
            ("space", &self.space),
            ("delta", &self.delta),
            ("rel_tol", &self.rel_tol),
        ]
    }
}

impl TailArgs {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        let mut v = self.space.pairs();
        v.extend([("model", &self.model), ("trials", &self.trials), ("t_grid", &self.t_grid)]);
        v
    }
}

const TAIL_KEYS: [&str; 12] = [
    "space",
    "trials",
    "t_grid",
    "norm_t_grid",
    "sup_s_grid",
    "rel_tol",
    "max_evals",
    "refine",
    "dispersion_delta",
    "center",
    "mode",
    "variant",
];

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Kappa(_) => "kappa",
            Command::Dispersion(_) => "dispersion",
            Command::Tail(_) => "tail",
            Command::SmoothedTail(_) => "smoothed-tail",
            Command::Approx(_) => "approx",
            Command::Grassmann(_) => "grassmann",
            Command::VeroneseGamma(_) => "veronese-gamma",
            Command::Netinfo(_) => "netinfo",
        }
    }

    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        match self {
            Command::Kappa(a) => vec![
                ("system", &a.system),
                ("delta", &a.delta),
                ("refine", &a.refine),
                ("rel_tol", &a.rel_tol),
            ],
            Command::Dispersion(a) => a.pairs(),
            Command::Tail(a) => a.pairs(),
            Command::SmoothedTail(a) => {
                let mut v = a.tail.pairs();
                v.extend([("center", &a.center), ("mode", &a.mode), ("variant", &a.variant)]);
                v
            }
            Command::Approx(a) => {
                let mut v = a.space.pairs();
                v.extend([("center", &a.center), ("epsilon", &a.epsilon), ("attempts", &a.attempts)]);
                v
            }
            Command::Grassmann(a) => {
                vec![("n", &a.n), ("d", &a.d), ("m_grid", &a.m_grid), ("samples", &a.samples)]
            }
            Command::VeroneseGamma(a) => {
                vec![("n", &a.n), ("d", &a.d), ("samples", &a.samples), ("net_delta", &a.net_delta)]
            }
            Command::Netinfo(a) => vec![
                ("n", &a.n),
                ("delta", &a.delta),
                ("symmetry", &a.symmetry),
                ("cache", &a.cache),
                ("verify", &a.verify),
            ],
        }
    }

    fn known_keys(&self) -> Vec<&'static str> {
        let mut k: Vec<&str> = COMMON_KEYS.to_vec();
        k.extend(self.pairs().iter().map(|(key, _)| *key));
        match self {
            Command::Tail(_) | Command::SmoothedTail(_) | Command::Approx(_) => {
                k.extend(TAIL_KEYS);
                k.extend(["epsilon", "attempts"]);
            }
            Command::Grassmann(_) => k.extend(["curve_C", "curve_t", "dispersion_delta", "rel_tol"]),
            Command::Dispersion(_) => k.push("refine"),
            Command::Kappa(_) => k.push("max_evals"),
            _ => {}
        }
        k
    }
}

fn run(cli: &Cli) -> Result<ExperimentReport, Error> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for (k, v) in cli.command.pairs() {
        if let Some(v) = v {
            cfg.set(k, v.clone());
        }
    }
    for kv in &cli.set {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(Error::InvalidArgument(format!("--set expects KEY=VALUE, got {kv:?}")));
        };
        cfg.set(k.trim(), v.trim());
    }
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    let unknown = cfg.unknown_keys(&cli.command.known_keys());
    if !unknown.is_empty() {
        return Err(Error::InvalidArgument(format!("unknown configuration keys: {}", unknown.join(", "))));
    }
    let seed: u64 = cfg.get_or("seed", 0)?;
    let echo = cfg.echo();
    let started = Instant::now();
    let name = cli.command.name();
    let mut report = match &cli.command {
        Command::Kappa(_) => {
            let path: String = cfg
                .get("system")?
                .ok_or_else(|| Error::InvalidArgument("kappa needs --system <file>".into()))?;
            let p = parse_system(&std::fs::read_to_string(path)?)?;
            let d = ConditionOptions::default();
            let opts = ConditionOptions {
                delta: cfg.get("delta")?,
                refine_iters: cfg.get_or("refine", d.refine_iters)?,
                rel_tol: cfg.get_or("rel_tol", d.rel_tol)?,
                max_evals: cfg.get_or("max_evals", d.max_evals)?,
                seed,
                ..d
            };
            let r = global_l_with(&p, &opts)?;
            let mut t = Table::new(&["kappa_lo", "kappa_hi", "l_lo", "l_hi", "bw_norm", "delta", "net_size", "converged"]);
            t.push(vec![
                fmt_f64(r.kappa_lo),
                r.kappa_hi.map_or("inf".into(), fmt_f64),
                fmt_f64(r.l_lo),
                fmt_f64(r.l_hi),
                fmt_f64(r.bw_norm),
                fmt_f64(r.delta),
                r.net_size.to_string(),
                r.converged.to_string(),
            ]);
            let mut rep = ExperimentReport::new(name, echo, seed, t);
            rep.summary = serde_json::to_value(&r)?;
            rep
        }
        Command::Dispersion(_) => {
            let e = cfg.system_space()?;
            let d = DispersionOptions::default();
            let opts = DispersionOptions {
                delta: cfg.get_or("delta", d.delta)?,
                refine_iters: cfg.get_or("refine", d.refine_iters)?,
                rel_tol: cfg.get_or("rel_tol", d.rel_tol)?,
                seed,
                ..d
            };
            let r = dispersion_system_with(&e, &opts)?;
            let mut t = Table::new(&["dim", "sigma_lo", "sigma_hi", "sigma_max_lo", "sigma_max_hi", "degenerate"]);
            t.push(vec![
                e.dim().to_string(),
                fmt_f64(r.sigma_lo),
                r.sigma_hi.map_or("inf".into(), fmt_f64),
                fmt_f64(r.sigma_max_lo),
                fmt_f64(r.sigma_max_hi),
                r.degenerate.to_string(),
            ]);
            let mut rep = ExperimentReport::new(name, echo, seed, t);
            rep.summary = serde_json::to_value(&r)?;
            rep
        }
        Command::Tail(_) => {
            let e = cfg.system_space()?;
            let r = run_tail_experiment(&e, &cfg.model()?, &cfg.tail_config(seed)?)?;
            r.report(name, echo, seed, started)
        }
        Command::SmoothedTail(_) => {
            let e = cfg.system_space()?;
            let q = cfg.center(&e, seed)?;
            let mode: SmoothingMode = cfg.raw("mode").unwrap_or("additive").parse()?;
            let variant: MVariant = cfg.raw("variant").unwrap_or("statement").parse()?;
            let r = run_smoothed_tail_experiment(&e, &q, &cfg.model()?, mode, variant, &cfg.tail_config(seed)?)?;
            r.report(name, echo, seed, started)
        }
        Command::Approx(_) => {
            let e = cfg.system_space()?;
            let q = cfg.center(&e, seed)?;
            let r = find_wellconditioned(&q, &e, &cfg.approximant_config(seed)?)?;
            let mut rep = r.report(echo, seed, started);
            if r.found.is_none() {
                rep.notes.push("no candidate met both bounds; raise C or attempts".into());
            }
            rep
        }
        Command::Grassmann(_) => {
            let n = cfg.get_or("n", 3usize)?;
            let d = cfg.get_or("d", 4u32)?;
            let rows = run_grassmann_dispersion(n, d, &cfg.grassmann_config(seed)?)?;
            grassmann_report(&rows, echo, seed, started)
        }
        Command::VeroneseGamma(_) => {
            let n = cfg.get_or("n", 2usize)?;
            let d = cfg.get_or("d", 1u32)?;
            let samples = cfg.get_or("samples", 2000usize)?;
            let df = d as f64;
            let delta = cfg.get_or("net_delta", (0.01f64).min(0.5 / (df * df)))?;
            let est = estimate_veronese_complexity(n, d, samples, seed, delta)?;
            veronese_report(&est, echo, seed, started)
        }
        Command::Netinfo(_) => {
            let n = cfg.get_or("n", 3usize)?;
            let delta = cfg.get_or("delta", 0.1f64)?;
            let symmetry = match cfg.raw("symmetry").unwrap_or("full") {
                "full" => NetSymmetry::Full,
                "antipodal" => NetSymmetry::Antipodal,
                other => return Err(Error::InvalidArgument(format!("unknown symmetry {other:?}"))),
            };
            let net = match cfg.raw("cache") {
                Some(dir) => NetCache::new(dir)?.get_or_build(n, delta, seed, symmetry)?,
                None => build_net_with(n, delta, seed, symmetry)?,
            };
            let verify: usize = cfg.get_or("verify", 0)?;
            let mut t = Table::new(&["n", "delta_target", "delta_achieved", "size", "size_bound", "exceeds_bound", "empirical_radius"]);
            t.push(vec![
                n.to_string(),
                fmt_f64(net.delta_target()),
                fmt_f64(net.delta_achieved()),
                net.len().to_string(),
                fmt_f64(net.size_bound()),
                net.exceeds_size_bound().to_string(),
                if verify > 0 { fmt_f64(verify_covering(&net, verify, seed)) } else { "".into() },
            ]);
            let mut rep = ExperimentReport::new(name, echo, seed, t);
            if net.exceeds_size_bound() {
                rep.notes.push("net is larger than the covering-number bound".into());
            }
            rep
        }
    };
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                Error::ResourceExhausted { .. } => 4,
                _ => 2,
            });
        }
    };
    let emitted = (|| -> Result<(), Error> {
        if let Some(out) = &cli.out {
            write_atomic(out, &report.to_csv())?;
            if cli.json {
                write_atomic(&out.with_extension("json"), &report.to_json()?)?;
            }
        }
        if cli.json {
            println!("{}", report.to_json()?);
        } else {
            print!("{}", report.summary_text());
        }
        Ok(())
    })();
    if let Err(e) = emitted {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.inconclusive {
        eprintln!("experiment inconclusive: more than 5% of trials ambiguous");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
