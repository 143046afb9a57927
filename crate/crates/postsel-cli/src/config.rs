//! Flag resolution: command-line flags override an optional key=value
//! config file, which overrides built-in defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use postsel::dist::Tolerances;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "POSTSEL_CACHE_DIR";

#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Estimator correlation rho, |rho| <= 0.999
    #[arg(long)]
    pub rho: Option<f64>,
    /// Model-selection cutoff c > 0
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Significance level delta in (0, 1)
    #[arg(long)]
    pub delta: Option<f64>,
    /// Confidence defect eta in (0, delta) for loh/lohstar/min
    #[arg(long)]
    pub eta: Option<f64>,
    /// Comma-separated eta set for the mccloskey rule
    #[arg(long, value_delimiter = ',')]
    pub eta_list: Option<Vec<f64>>,
    /// Critical-value rule
    #[arg(long, value_parser = ["sup", "bootstrap", "loh", "lohstar", "min", "mccloskey"])]
    pub rule: Option<String>,
    /// Explicit gamma values (comma separated); overrides the range flags
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub gamma_step: Option<f64>,
    /// Monte Carlo instead of the semi-analytic integral
    #[arg(long)]
    pub mc: bool,
    /// Monte Carlo replications
    #[arg(long)]
    pub reps: Option<u64>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (CSV; companion files derive from its stem)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Quantile-grid cache directory (default: $POSTSEL_CACHE_DIR)
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Absolute tolerance of each cdf quadrature
    #[arg(long)]
    pub tol_quad: Option<f64>,
    /// Bracket width at which quantile root finding stops
    #[arg(long)]
    pub tol_quantile: Option<f64>,
}

/// Gamma evaluation points: an explicit list or a uniform range.
#[derive(Clone, Debug)]
pub enum GammaSpec {
    List(Vec<f64>),
    Range { min: f64, max: f64, step: f64 },
}

impl GammaSpec {
    pub fn points(&self) -> Vec<f64> {
        match self {
            GammaSpec::List(v) => v.clone(),
            GammaSpec::Range { min, max, step } => {
                let n = ((max - min) / step).ceil() as usize + 1;
                let d = (n - 1) as f64;
                (0..n)
                    .map(|i| (min * (d - i as f64) + max * i as f64) / d)
                    .collect()
            }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            GammaSpec::List(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| {
                    (lo.min(g), hi.max(g))
                }),
            GammaSpec::Range { min, max, .. } => (*min, *max),
        }
    }
}

/// Fully resolved settings for one command invocation.
#[derive(Clone, Debug)]
pub struct Settings {
    pub rho: f64,
    pub cutoff: f64,
    pub delta: f64,
    pub eta: f64,
    pub eta_list: Option<Vec<f64>>,
    pub rule: String,
    pub gammas: GammaSpec,
    pub mc: bool,
    pub reps: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub tol: Tolerances,
}

impl Settings {
    /// The etas the resolved rule consumes.
    pub fn rule_etas(&self) -> Vec<f64> {
        match self.rule.as_str() {
            "mccloskey" => self
                .eta_list
                .clone()
                .unwrap_or_else(|| vec![self.eta, 2.0 * self.eta]),
            "loh" | "lohstar" | "min" => vec![self.eta],
            _ => vec![],
        }
    }
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(
                "config {}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            );
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
    }
}

/// Default gamma range per command.
pub struct RangeDefaults {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

/// Resolves flags over the config file over defaults.
pub fn resolve(
    args: &CommonArgs,
    config_path: Option<&Path>,
    range_default: RangeDefaults,
) -> Result<Settings> {
    let cfg = match config_path {
        Some(p) => parse_config_file(p)?,
        None => HashMap::new(),
    };

    let rho = args.rho.or(get(&cfg, "rho")?).unwrap_or(0.7);
    let cutoff = args.cutoff.or(get(&cfg, "cutoff")?).unwrap_or(1.96);
    let delta = args.delta.or(get(&cfg, "delta")?).unwrap_or(0.05);
    let eta = args.eta.or(get(&cfg, "eta")?).unwrap_or(0.01);
    let eta_list = args.eta_list.clone().or_else(|| {
        cfg.get("eta-list").map(|raw| {
            raw.split(',')
                .filter_map(|x| x.trim().parse().ok())
                .collect()
        })
    });
    let rule = args
        .rule
        .clone()
        .or(get(&cfg, "rule")?)
        .unwrap_or_else(|| "bootstrap".into());

    let gammas = if let Some(list) = args
        .gamma
        .clone()
        .or_else(|| {
            cfg.get("gamma").map(|raw| {
                raw.split(',')
                    .filter_map(|x| x.trim().parse().ok())
                    .collect()
            })
        })
        .filter(|v: &Vec<f64>| !v.is_empty())
    {
        GammaSpec::List(list)
    } else {
        let min = args.gamma_min.or(get(&cfg, "gamma-min")?).unwrap_or(range_default.min);
        let max = args.gamma_max.or(get(&cfg, "gamma-max")?).unwrap_or(range_default.max);
        let step = args
            .gamma_step
            .or(get(&cfg, "gamma-step")?)
            .unwrap_or(range_default.step);
        if !(min < max && step > 0.0) {
            bail!("gamma range needs min < max and positive step (got [{min}, {max}] step {step})");
        }
        GammaSpec::Range { min, max, step }
    };

    let mc = args.mc || get::<bool>(&cfg, "mc")?.unwrap_or(false);
    let reps = args.reps.or(get(&cfg, "reps")?).unwrap_or(100_000);
    let seed = args.seed.or(get(&cfg, "seed")?).unwrap_or(42);
    let out = args.out.clone().or_else(|| cfg.get("out").map(PathBuf::from));
    let cache_dir = args
        .cache_dir
        .clone()
        .or_else(|| cfg.get("cache-dir").map(PathBuf::from))
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from));

    let mut tol = Tolerances::default();
    if let Some(q) = args.tol_quad.or(get(&cfg, "tol-quad")?) {
        tol.quad_abs_tol = q;
    }
    if let Some(r) = args.tol_quantile.or(get(&cfg, "tol-quantile")?) {
        tol.root_tol = r;
    }
    tol.validate()?;

    Ok(Settings {
        rho,
        cutoff,
        delta,
        eta,
        eta_list,
        rule,
        gammas,
        mc,
        reps,
        seed,
        out,
        cache_dir,
        tol,
    })
}
