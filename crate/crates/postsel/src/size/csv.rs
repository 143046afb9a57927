//! CSV serialization of size curves and reports.
//!
//! Column order is fixed: `gamma,rejection,stderr,method,reps,seed`.
//! Commented header lines carry the model parameters, rule, tolerances, and
//! artifact version. Floats are printed with 10 significant digits.

use std::io::{BufRead, Write};

use crate::critval::CriticalValueRule;
use crate::dist::{ModelParams, Tolerances};
use crate::error::{Error, Result};

use super::{rejection_prob_mc, rejection_prob_semianalytic, SizeReport, SizeResources};

/// How the rejection probabilities of a curve were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMethod {
    SemiAnalytic,
    MonteCarlo,
}

impl std::fmt::Display for SizeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SizeMethod::SemiAnalytic => "semi-analytic",
            SizeMethod::MonteCarlo => "monte-carlo",
        })
    }
}

/// Rejection probability as a function of gamma for one rule.
#[derive(Clone, Debug)]
pub struct SizeCurve {
    pub rule: CriticalValueRule,
    pub params: ModelParams,
    pub tolerances: Tolerances,
    pub gammas: Vec<f64>,
    pub rejection: Vec<f64>,
    pub stderr: Vec<f64>,
    pub method: SizeMethod,
    pub reps: u64,
    pub seed: u64,
}

fn gamma_nodes(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo < hi && step > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "curve grid needs lo < hi and positive step, got [{lo}, {hi}] step {step}"
        )));
    }
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let d = (n - 1) as f64;
    Ok((0..n)
        .map(|i| (lo * (d - i as f64) + hi * i as f64) / d)
        .collect())
}

impl SizeCurve {
    /// Semi-analytic curve over a uniform gamma grid.
    pub fn semianalytic(res: &SizeResources, lo: f64, hi: f64, step: f64) -> Result<Self> {
        Self::semianalytic_at(res, gamma_nodes(lo, hi, step)?)
    }

    /// Semi-analytic curve at explicit gamma points.
    pub fn semianalytic_at(res: &SizeResources, gammas: Vec<f64>) -> Result<Self> {
        let rejection: Vec<f64> = gammas
            .iter()
            .map(|&g| rejection_prob_semianalytic(res, g))
            .collect::<Result<_>>()?;
        let stderr = vec![0.0; gammas.len()];
        Ok(Self {
            rule: res.rule().clone(),
            params: res.params(),
            tolerances: Tolerances::default(),
            gammas,
            rejection,
            stderr,
            method: SizeMethod::SemiAnalytic,
            reps: 0,
            seed: 0,
        })
    }

    /// Monte Carlo curve over a uniform gamma grid.
    pub fn monte_carlo(
        res: &SizeResources,
        lo: f64,
        hi: f64,
        step: f64,
        reps: u64,
        seed: u64,
    ) -> Result<Self> {
        Self::monte_carlo_at(res, gamma_nodes(lo, hi, step)?, reps, seed)
    }

    /// Monte Carlo curve at explicit gamma points.
    pub fn monte_carlo_at(
        res: &SizeResources,
        gammas: Vec<f64>,
        reps: u64,
        seed: u64,
    ) -> Result<Self> {
        let mut rejection = Vec::with_capacity(gammas.len());
        let mut stderr = Vec::with_capacity(gammas.len());
        for (i, &g) in gammas.iter().enumerate() {
            // one derived seed per node keeps nodes independent
            let (p, se) = rejection_prob_mc(res, g, reps, seed ^ ((i as u64) << 32))?;
            rejection.push(p);
            stderr.push(se);
        }
        Ok(Self {
            rule: res.rule().clone(),
            params: res.params(),
            tolerances: Tolerances::default(),
            gammas,
            rejection,
            stderr,
            method: SizeMethod::MonteCarlo,
            reps,
            seed,
        })
    }

    /// Writes the documented CSV schema.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# postsel size curve v{}", env!("CARGO_PKG_VERSION"))?;
        let etas = self
            .rule
            .etas()
            .iter()
            .map(|e| format!("{e:.9e}"))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "# rule={} delta={:.9e} eta={}",
            self.rule.name(),
            self.rule.delta(),
            if etas.is_empty() { "-" } else { &etas }
        )?;
        writeln!(
            w,
            "# rho={:.9e} cutoff={:.9e}",
            self.params.rho(),
            self.params.cutoff()
        )?;
        writeln!(
            w,
            "# tol_quad={:.9e} tol_root={:.9e} max_subdivisions={} semi_tol={:.9e}",
            self.tolerances.quad_abs_tol,
            self.tolerances.root_tol,
            self.tolerances.quad_max_subdivisions,
            super::SEMI_ANALYTIC_TOL,
        )?;
        writeln!(w, "# columns: gamma,rejection,stderr,method,reps,seed")?;
        for i in 0..self.gammas.len() {
            writeln!(
                w,
                "{:.9e},{:.9e},{:.9e},{},{},{}",
                self.gammas[i], self.rejection[i], self.stderr[i], self.method, self.reps, self.seed
            )?;
        }
        Ok(())
    }

    /// Reads a curve written by [`SizeCurve::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rule_name = String::new();
        let mut delta = f64::NAN;
        let mut etas: Vec<f64> = Vec::new();
        let mut rho = f64::NAN;
        let mut cutoff = f64::NAN;
        let mut tolerances = Tolerances::default();
        let mut gammas = Vec::new();
        let mut rejection = Vec::new();
        let mut stderr = Vec::new();
        let mut method = None;
        let mut reps = 0u64;
        let mut seed = 0u64;

        let bad = |what: &str| Error::Cache(format!("size-curve csv: {what}"));

        for line in r.lines() {
            let line = line.map_err(|e| bad(&format!("read error: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for token in rest.split_whitespace() {
                    let Some((k, v)) = token.split_once('=') else {
                        continue;
                    };
                    match k {
                        "rule" => rule_name = v.to_string(),
                        "delta" => delta = v.parse().map_err(|_| bad("bad delta"))?,
                        "eta" if v != "-" => {
                            etas = v
                                .split(';')
                                .map(|x| x.parse().map_err(|_| bad("bad eta")))
                                .collect::<Result<_>>()?;
                        }
                        "rho" => rho = v.parse().map_err(|_| bad("bad rho"))?,
                        "cutoff" => cutoff = v.parse().map_err(|_| bad("bad cutoff"))?,
                        "tol_quad" => {
                            tolerances.quad_abs_tol = v.parse().map_err(|_| bad("bad tol"))?
                        }
                        "tol_root" => {
                            tolerances.root_tol = v.parse().map_err(|_| bad("bad tol"))?
                        }
                        "max_subdivisions" => {
                            tolerances.quad_max_subdivisions =
                                v.parse().map_err(|_| bad("bad tol"))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            gammas.push(fields[0].parse().map_err(|_| bad("bad gamma"))?);
            rejection.push(fields[1].parse().map_err(|_| bad("bad rejection"))?);
            stderr.push(fields[2].parse().map_err(|_| bad("bad stderr"))?);
            method = Some(match fields[3] {
                "semi-analytic" => SizeMethod::SemiAnalytic,
                "monte-carlo" => SizeMethod::MonteCarlo,
                other => return Err(bad(&format!("unknown method {other}"))),
            });
            reps = fields[4].parse().map_err(|_| bad("bad reps"))?;
            seed = fields[5].parse().map_err(|_| bad("bad seed"))?;
        }

        let rule = rule_from_parts(&rule_name, delta, &etas)?;
        let params = ModelParams::new(rho, cutoff)?;
        Ok(Self {
            rule,
            params,
            tolerances,
            gammas,
            rejection,
            stderr,
            method: method.ok_or_else(|| bad("no data rows"))?,
            reps,
            seed,
        })
    }
}

/// Builds a rule from its CSV/CLI identifier plus parameters.
pub fn rule_from_parts(name: &str, delta: f64, etas: &[f64]) -> Result<CriticalValueRule> {
    let need_eta = || -> Result<f64> {
        etas.first().copied().ok_or_else(|| {
            Error::Domain(format!("rule '{name}' needs an eta parameter"))
        })
    };
    match name {
        "sup" => CriticalValueRule::fixed_sup(delta),
        "bootstrap" => CriticalValueRule::bootstrap(delta),
        "loh" => CriticalValueRule::loh(delta, need_eta()?),
        "lohstar" => CriticalValueRule::loh_star(delta, need_eta()?),
        "min" => CriticalValueRule::min_rule(delta, need_eta()?),
        "mccloskey" => {
            if etas.is_empty() {
                return Err(Error::Domain("mccloskey needs an eta list".into()));
            }
            CriticalValueRule::mccloskey(delta, etas)
        }
        other => Err(Error::Domain(format!(
            "unknown rule '{other}' (expected sup|bootstrap|loh|lohstar|min|mccloskey)"
        ))),
    }
}

impl SizeReport {
    /// Single-row CSV with a commented header; complements the curve schema.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# postsel size report v{}", env!("CARGO_PKG_VERSION"))?;
        writeln!(
            w,
            "# columns: rule,delta,eta,max_size,argmax_gamma,min_size,verdict,margin,error_budget,floor_gamma,floor_size"
        )?;
        let etas = self
            .rule
            .etas()
            .iter()
            .map(|e| format!("{e:.9e}"))
            .collect::<Vec<_>>()
            .join(";");
        let (fg, fs) = match &self.floor {
            Some(f) => (format!("{:.9e}", f.gamma_star), format!("{:.9e}", f.size_at_gamma_star)),
            None => ("-".into(), "-".into()),
        };
        writeln!(
            w,
            "{},{:.9e},{},{:.9e},{:.9e},{:.9e},{},{:.9e},{:.9e},{},{}",
            self.rule.name(),
            self.delta,
            if etas.is_empty() { "-".into() } else { etas },
            self.max_size,
            self.argmax_gamma,
            self.min_size,
            self.verdict,
            self.margin,
            self.error_budget,
            fg,
            fs
        )
    }
}
