//! Rejection probability of each critical-value rule as a function of gamma,
//! by a semi-analytic one-dimensional integral and by Monte Carlo.
//!
//! Conditionally on Z = z the statistic is strictly increasing in W on both
//! selection branches, with the rule's critical value depending on the data
//! only through gamma_hat = z + gamma. Integrating W out analytically leaves
//!
//! ```text
//! P(reject) = int phi(z) (1 - Phi(w*(z))) dz,
//! w*(z) = (chat(z + gamma) - rho z) / sqrt(1 - rho^2)   if |z + gamma| >  c
//!       =  chat(z + gamma) + rho gamma / sqrt(1 - rho^2) if |z + gamma| <= c
//! ```
//!
//! The integrand is smooth except at the two selection boundaries
//! z = -gamma -+ c, so the quadrature is split there. The semi-analytic
//! integral is the primary size oracle; Monte Carlo over the exact sampler
//! is the independent cross-check.

pub mod csv;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::critval::{compute_sup, golden_max, CriticalValueRule, RuleContext, RuleKind, SupResult};
use crate::dist::{Distribution, Gamma, ModelParams, Tolerances};
use crate::error::{Error, Result};
use crate::kernel::quad::{self, QuadratureSpec};
use crate::kernel::{normal, Probability};

/// Truncation of the z-integral; Phi(-12) ~ 1.8e-33.
pub const Z_BOUND: f64 = 12.0;
/// Per-segment quadrature tolerance of the semi-analytic integral.
const SEGMENT_TOL: f64 = 1e-9;
/// Claimed accuracy of one semi-analytic size evaluation.
pub const SEMI_ANALYTIC_TOL: f64 = 1e-6;
/// Accuracy attributed to the gamma-grid maximization.
pub const REFINE_TOL: f64 = 1e-5;
/// Default gamma scan for size maximization.
pub const SIZE_SCAN_BOUND: f64 = 40.0;
pub const SIZE_SCAN_STEP: f64 = 0.05;

/// Monte Carlo replication block; one derived rng stream per block keeps
/// results identical under any parallel schedule.
const MC_BLOCK: u64 = 1 << 16;

/// Prebuilt resources for size evaluation of one rule: the worst-case value
/// at delta and quantile grids covering every gamma_hat the z-integral can
/// request.
#[derive(Clone, Debug)]
pub struct SizeResources {
    ctx: RuleContext,
    gamma_lo: f64,
    gamma_hi: f64,
}

impl SizeResources {
    /// Covers size evaluation for every gamma in `[gamma_lo, gamma_hi]`.
    pub fn build(
        params: ModelParams,
        rule: CriticalValueRule,
        gamma_lo: f64,
        gamma_hi: f64,
        grid_step: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        if !(gamma_lo.is_finite() && gamma_hi.is_finite() && gamma_lo <= gamma_hi) {
            return Err(Error::Domain(format!(
                "gamma range must be finite and ordered, got [{gamma_lo}, {gamma_hi}]"
            )));
        }
        let ctx = RuleContext::build(
            params,
            rule,
            gamma_lo - Z_BOUND,
            gamma_hi + Z_BOUND,
            grid_step,
            tol,
        )?;
        Ok(Self {
            ctx,
            gamma_lo,
            gamma_hi,
        })
    }

    /// Default grid step and tolerances.
    pub fn for_rule(
        params: ModelParams,
        rule: CriticalValueRule,
        gamma_lo: f64,
        gamma_hi: f64,
    ) -> Result<Self> {
        Self::build(
            params,
            rule,
            gamma_lo,
            gamma_hi,
            crate::critval::DEFAULT_GRID_STEP,
            Tolerances::default(),
        )
    }

    /// Wraps an existing rule context (for example one assembled from cached
    /// grids), verifying that its grids cover the z-integral's reach over
    /// the stated gamma range.
    pub fn from_context(ctx: RuleContext, gamma_lo: f64, gamma_hi: f64) -> Result<Self> {
        let w = ctx.rule().max_half_width();
        let (need_lo, need_hi) = (gamma_lo - Z_BOUND - w, gamma_hi + Z_BOUND + w);
        for grid in ctx.grids().grids() {
            if grid.gamma_lo() > need_lo || grid.gamma_hi() < need_hi {
                return Err(Error::GridRange {
                    lo: need_lo,
                    hi: need_hi,
                    grid_lo: grid.gamma_lo(),
                    grid_hi: grid.gamma_hi(),
                });
            }
        }
        Ok(Self {
            ctx,
            gamma_lo,
            gamma_hi,
        })
    }

    #[inline]
    pub fn params(&self) -> ModelParams {
        self.ctx.params()
    }

    #[inline]
    pub fn rule(&self) -> &CriticalValueRule {
        self.ctx.rule()
    }

    #[inline]
    pub fn sup(&self) -> SupResult {
        self.ctx.sup()
    }

    #[inline]
    pub fn context(&self) -> &RuleContext {
        &self.ctx
    }

    pub fn gamma_range(&self) -> (f64, f64) {
        (self.gamma_lo, self.gamma_hi)
    }

    fn check_gamma(&self, gamma: f64) -> Result<()> {
        if !(gamma >= self.gamma_lo && gamma <= self.gamma_hi) {
            return Err(Error::GridRange {
                lo: gamma,
                hi: gamma,
                grid_lo: self.gamma_lo,
                grid_hi: self.gamma_hi,
            });
        }
        Ok(())
    }
}

/// Integrates `f(z) * phi(z)` over the three selection segments, splitting
/// at z = -gamma -+ c and truncating at +-Z_BOUND. `f` receives (z, branch)
/// with branch true on the unrestricted segments.
fn integrate_over_branches<F: Fn(f64, bool) -> f64>(
    gamma: f64,
    cutoff: f64,
    f: F,
) -> Result<f64> {
    let spec = QuadratureSpec {
        abs_tol: SEGMENT_TOL,
        max_subdivisions: 1 << 16,
    };
    let (zl, zr) = (-gamma - cutoff, -gamma + cutoff);
    let mut total = 0.0;
    let segments = [
        (-Z_BOUND, zl.clamp(-Z_BOUND, Z_BOUND), true),
        (
            zl.clamp(-Z_BOUND, Z_BOUND),
            zr.clamp(-Z_BOUND, Z_BOUND),
            false,
        ),
        (zr.clamp(-Z_BOUND, Z_BOUND), Z_BOUND, true),
    ];
    for (a, b, unrestricted) in segments {
        if b > a {
            total += quad::integrate(|z| f(z, unrestricted), a, b, &spec)?;
        }
    }
    if !total.is_finite() {
        return Err(Error::Consistency(
            "size integrand produced a non-finite value".into(),
        ));
    }
    Ok(total)
}

/// Exact (to quadrature accuracy) rejection probability of the rule's test
/// at the given true gamma.
pub fn rejection_prob_semianalytic(res: &SizeResources, gamma: f64) -> Result<f64> {
    res.check_gamma(gamma)?;
    let p = res.params();
    let (rho, c) = (p.rho(), p.cutoff());
    let s = (1.0 - rho * rho).sqrt();
    let shift = rho * gamma / s;
    let ctx = &res.ctx;
    let value = integrate_over_branches(gamma, c, |z, unrestricted| {
        let chat = match ctx.evaluate(z + gamma) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let w_star = if unrestricted {
            (chat - rho * z) / s
        } else {
            chat + shift
        };
        normal::pdf(z) * (1.0 - normal::cdf(w_star))
    })?;
    Ok(value.clamp(0.0, 1.0))
}

/// Monte Carlo rejection probability with binomial standard error.
/// Deterministic for a given seed, independent of the parallel schedule.
pub fn rejection_prob_mc(
    res: &SizeResources,
    gamma: f64,
    reps: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if reps == 0 {
        return Err(Error::Domain("Monte Carlo needs reps >= 1".into()));
    }
    res.check_gamma(gamma)?;
    let dist = Distribution::new(res.params(), Gamma::new(gamma)?);
    let ctx = &res.ctx;
    let n_blocks = reps.div_ceil(MC_BLOCK);
    let counts: Vec<u64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| -> Result<u64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b + 1);
            let take = MC_BLOCK.min(reps - b * MC_BLOCK);
            let mut count = 0u64;
            for _ in 0..take {
                let draw = dist.sample(&mut rng);
                if draw.t > ctx.evaluate(draw.gamma_hat)? {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect::<Result<_>>()?;
    let hits: u64 = counts.iter().sum();
    let p_hat = hits as f64 / reps as f64;
    let stderr = (p_hat * (1.0 - p_hat) / reps as f64).sqrt();
    Ok((p_hat, stderr))
}

/// Verdict of a size report against the nominal level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelVerdict {
    Holds,
    Overshoots,
    Inconclusive,
}

impl std::fmt::Display for LevelVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LevelVerdict::Holds => "holds",
            LevelVerdict::Overshoots => "overshoots",
            LevelVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Size-floor diagnostics for the Loh rule: the rejection probability at the
/// maximizer of the (delta - eta)-level quantile curve, which the paper's
/// argument lower-bounds by delta - eta.
#[derive(Clone, Copy, Debug)]
pub struct LohFloor {
    pub gamma_star: f64,
    pub size_at_gamma_star: f64,
    pub lower_bound: f64,
}

/// Maximal size of the rule's test over a gamma grid.
#[derive(Clone, Debug)]
pub struct SizeReport {
    pub rule: CriticalValueRule,
    pub delta: f64,
    pub max_size: f64,
    pub argmax_gamma: f64,
    pub min_size: f64,
    pub verdict: LevelVerdict,
    /// (max_size - delta) in units of the combined error budget.
    pub margin: f64,
    pub error_budget: f64,
    pub floor: Option<LohFloor>,
}

/// Evaluates the semi-analytic size over the gamma grid, refines around the
/// best nodes (and the worst-case maximizer), and issues a level verdict
/// measured against the combined numeric error budget.
pub fn max_size(res: &SizeResources, lo: f64, hi: f64, step: f64) -> Result<SizeReport> {
    if !(lo < hi && step > 0.0) {
        return Err(Error::Domain(format!(
            "size grid needs lo < hi and positive step, got [{lo}, {hi}] step {step}"
        )));
    }
    let n = {
        let raw = ((hi - lo) / step).ceil() as usize + 1;
        if raw % 2 == 0 {
            raw + 1
        } else {
            raw
        }
    };
    let node = |i: usize| -> f64 {
        let d = (n - 1) as f64;
        (lo * (d - i as f64) + hi * i as f64) / d
    };
    let sizes: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| rejection_prob_semianalytic(res, node(i)))
        .collect::<Result<_>>()?;

    let mut min_size = f64::INFINITY;
    for &v in &sizes {
        min_size = min_size.min(v);
    }

    // local maxima, best three, plus the worst-case maximizer
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || sizes[i] >= sizes[i - 1]) && (i + 1 == n || sizes[i] >= sizes[i + 1])
        })
        .collect();
    candidates.sort_by(|&a, &b| sizes[b].total_cmp(&sizes[a]));
    candidates.truncate(3);

    let eval = |g: f64| rejection_prob_semianalytic(res, g);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_gamma = 0.0;
    let consider = |val: f64, g: f64, best_val: &mut f64, best_gamma: &mut f64| {
        if val > *best_val + 1e-12
            || ((val - *best_val).abs() <= 1e-12 && tie_key(g) < tie_key(*best_gamma))
        {
            *best_val = val;
            *best_gamma = g;
        }
    };
    for &i in &candidates {
        let a = node(i.saturating_sub(1)).max(lo);
        let b = node((i + 1).min(n - 1)).min(hi);
        let (mut g, mut val) = golden_max(&eval, a, b, 1e-4)?;
        if val <= sizes[i] + 1e-12 {
            g = node(i);
            val = sizes[i];
        }
        consider(val, g, &mut best_val, &mut best_gamma);
    }
    let gm = res.sup().gamma_max;
    if gm >= lo && gm <= hi {
        let (g, val) = golden_max(&eval, (gm - step).max(lo), (gm + step).min(hi), 1e-4)?;
        consider(val, g, &mut best_val, &mut best_gamma);
        let at_gm = eval(gm)?;
        consider(at_gm, gm, &mut best_val, &mut best_gamma);
    }

    let delta = res.rule().delta();
    let error_budget = SEMI_ANALYTIC_TOL + REFINE_TOL;
    let verdict = if best_val <= delta + error_budget {
        LevelVerdict::Holds
    } else if best_val - delta > 3.0 * error_budget {
        LevelVerdict::Overshoots
    } else {
        LevelVerdict::Inconclusive
    };

    let floor = match res.rule().kind() {
        RuleKind::Loh { eta } => {
            let level = delta - eta.value();
            let sup_lower = compute_sup(res.params(), level)?;
            let g_star = sup_lower.gamma_max.clamp(res.gamma_lo, res.gamma_hi);
            Some(LohFloor {
                gamma_star: g_star,
                size_at_gamma_star: rejection_prob_semianalytic(res, g_star)?,
                lower_bound: level,
            })
        }
        _ => None,
    };

    Ok(SizeReport {
        rule: res.rule().clone(),
        delta,
        max_size: best_val,
        argmax_gamma: best_gamma,
        min_size,
        verdict,
        margin: (best_val - delta) / error_budget,
        error_budget,
        floor,
    })
}

/// Size maximization over the default grid.
pub fn max_size_default(res: &SizeResources) -> Result<SizeReport> {
    max_size(res, -SIZE_SCAN_BOUND, SIZE_SCAN_BOUND, SIZE_SCAN_STEP)
}

/// The additive size decomposition at the worst-case gamma:
/// `total = delta + P(chat < T' <= c_sup)`.
#[derive(Clone, Copy, Debug)]
pub struct Prop1Decomposition {
    /// P(chat(gamma_hat) < T' <= c_sup) at gamma = gamma_max.
    pub overshoot_term: f64,
    /// delta + overshoot_term.
    pub total: f64,
}

/// Computes the decomposition for a rule satisfying chat <= c_sup pointwise
/// (checked numerically over the covered gamma_hat grid) and verifies it
/// against the direct semi-analytic rejection probability.
pub fn prop1_decomposition(res: &SizeResources) -> Result<Prop1Decomposition> {
    let p = res.params();
    let (rho, c) = (p.rho(), p.cutoff());
    let s = (1.0 - rho * rho).sqrt();
    let sup = res.sup();
    let ctx = &res.ctx;

    // precondition: the rule never exceeds the worst-case value
    let (cover_lo, cover_hi) = (res.gamma_lo - Z_BOUND, res.gamma_hi + Z_BOUND);
    let n_check = (((cover_hi - cover_lo) / 0.05).ceil() as usize).max(2);
    for i in 0..=n_check {
        let gh = cover_lo + (cover_hi - cover_lo) * i as f64 / n_check as f64;
        let v = ctx.evaluate(gh)?;
        if v > sup.c_sup + 1e-7 {
            return Err(Error::Precondition(format!(
                "rule value {v} exceeds c_sup {} at gamma_hat {gh}",
                sup.c_sup
            )));
        }
    }

    let gamma = sup.gamma_max;
    let shift = rho * gamma / s;
    let overshoot = integrate_over_branches(gamma, c, |z, unrestricted| {
        let chat = match ctx.evaluate(z + gamma) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let (w_hi, w_lo) = if unrestricted {
            ((sup.c_sup - rho * z) / s, (chat - rho * z) / s)
        } else {
            (sup.c_sup + shift, chat + shift)
        };
        normal::pdf(z) * (normal::cdf(w_hi) - normal::cdf(w_lo)).max(0.0)
    })?;

    let delta = res.rule().delta();
    let total = delta + overshoot;
    let direct = rejection_prob_semianalytic(res, gamma)?;
    if (total - direct).abs() > 1e-5 {
        return Err(Error::Consistency(format!(
            "decomposition total {total} disagrees with direct size {direct} at gamma_max"
        )));
    }
    Ok(Prop1Decomposition {
        overshoot_term: overshoot,
        total,
    })
}

/// Whether eta is small enough for the min-rule overshoot claim:
/// `Phi^{-1}(1 - (delta - eta)) < c_sup(delta) - 1e-6`.
pub fn min_rule_condition_holds(sup_delta: &SupResult, delta: f64, eta: f64) -> Result<bool> {
    let delta = Probability::interior(delta)?.value();
    let eta = Probability::interior(eta)?.value();
    if eta >= delta {
        return Err(Error::Domain(format!(
            "need eta < delta, got eta={eta}, delta={delta}"
        )));
    }
    Ok(normal::quantile(1.0 - (delta - eta))? < sup_delta.c_sup - 1e-6)
}

/// Audits that the size pipeline consumes gamma alone: the same gamma target
/// reconstructed through regression designs at two different sample sizes
/// must yield (numerically) identical sizes.
pub fn n_invariance_check(params: ModelParams, rule: &CriticalValueRule) -> Result<bool> {
    use crate::dist::regression::RegressionDesign;
    let target = 1.7;
    let mut gammas = Vec::new();
    for n in [50usize, 500] {
        let design = RegressionDesign::two_level(n, params.rho())?;
        let beta = target * design.sigma_beta() / (n as f64).sqrt();
        gammas.push(design.gamma_from_beta(beta).value());
    }
    let (g1, g2) = (gammas[0], gammas[1]);
    if (g1 - g2).abs() > 1e-12 * (1.0 + target.abs()) {
        return Ok(false);
    }
    let res = SizeResources::for_rule(params, rule.clone(), target - 0.5, target + 0.5)?;
    let s1 = rejection_prob_semianalytic(&res, g1)?;
    let s2 = rejection_prob_semianalytic(&res, g2)?;
    // the two gammas agree to ~1e-16, so any size gap beyond slope * |g1-g2|
    // plus quadrature noise would mean a hidden n-dependence
    Ok((s1 - s2).abs() <= 1e-8 + 10.0 * (g1 - g2).abs())
}

#[inline]
fn tie_key(g: f64) -> f64 {
    g.abs() + if g > 0.0 { 0.25e-15 } else { 0.0 }
}

#[cfg(test)]
mod tests;
