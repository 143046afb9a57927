//! Critical-value rules for the post-selection test statistic.
//!
//! The deterministic worst-case value `c_sup` is the supremum of the
//! quantile curve over gamma. The random rules are functions of the observed
//! standardized estimate gamma_hat:
//!
//! * `Bootstrap`  - the quantile curve evaluated at gamma_hat;
//! * `Loh(eta)`   - the supremum of the (delta - eta)-level curve over the
//!   confidence interval gamma_hat +- Phi^{-1}(1 - eta/2);
//! * `LohStar(eta)` - the same interval supremum taken at level delta;
//! * `MinRule(eta)` - the smaller of the sup value and the Loh value;
//! * `McCloskey(etas)` - the minimum of MinRule values over a finite eta set.

pub mod cache;
mod grid;

pub use grid::QuantileGrid;

use rayon::prelude::*;

use crate::dist::{Distribution, Gamma, ModelParams, Tolerances};
use crate::error::{Error, Result};
use crate::kernel::{normal, Probability};

/// Search bound for the supremum over gamma.
pub const SUP_SEARCH_BOUND: f64 = 40.0;
/// Node spacing of the supremum scan.
pub const SUP_SCAN_STEP: f64 = 0.05;
/// Default node spacing of quantile grids.
pub const DEFAULT_GRID_STEP: f64 = 0.01;

/// Worst-case critical value and where it is attained.
#[derive(Clone, Copy, Debug)]
pub struct SupResult {
    /// sup over gamma of cbar_gamma(v).
    pub c_sup: f64,
    /// A gamma attaining the supremum (smallest |gamma|, negative first, on
    /// ties).
    pub gamma_max: f64,
    /// Whether the maximizer is interior to the search range.
    pub achieved: bool,
}

/// Tagged choice of critical-value rule at significance level delta.
#[derive(Clone, Debug, PartialEq)]
pub enum RuleKind {
    FixedSup,
    Bootstrap,
    Loh { eta: Probability },
    LohStar { eta: Probability },
    MinRule { eta: Probability },
    McCloskey { etas: Vec<Probability> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalValueRule {
    kind: RuleKind,
    delta: Probability,
}

impl CriticalValueRule {
    pub fn fixed_sup(delta: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::FixedSup,
            delta: Probability::interior(delta)?,
        })
    }

    pub fn bootstrap(delta: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::Bootstrap,
            delta: Probability::interior(delta)?,
        })
    }

    pub fn loh(delta: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::Loh {
                eta: check_eta(delta, eta)?,
            },
            delta: Probability::interior(delta)?,
        })
    }

    pub fn loh_star(delta: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::LohStar {
                eta: check_eta(delta, eta)?,
            },
            delta: Probability::interior(delta)?,
        })
    }

    pub fn min_rule(delta: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            kind: RuleKind::MinRule {
                eta: check_eta(delta, eta)?,
            },
            delta: Probability::interior(delta)?,
        })
    }

    pub fn mccloskey(delta: f64, etas: &[f64]) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::Domain("McCloskey needs a nonempty eta set".into()));
        }
        let etas = etas
            .iter()
            .map(|&e| check_eta(delta, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: RuleKind::McCloskey { etas },
            delta: Probability::interior(delta)?,
        })
    }

    #[inline]
    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta.value()
    }

    /// Short name matching the CLI rule identifiers.
    pub fn name(&self) -> &'static str {
        match self.kind {
            RuleKind::FixedSup => "sup",
            RuleKind::Bootstrap => "bootstrap",
            RuleKind::Loh { .. } => "loh",
            RuleKind::LohStar { .. } => "lohstar",
            RuleKind::MinRule { .. } => "min",
            RuleKind::McCloskey { .. } => "mccloskey",
        }
    }

    /// The eta parameters the rule uses, if any.
    pub fn etas(&self) -> Vec<f64> {
        match &self.kind {
            RuleKind::FixedSup | RuleKind::Bootstrap => Vec::new(),
            RuleKind::Loh { eta } | RuleKind::LohStar { eta } | RuleKind::MinRule { eta } => {
                vec![eta.value()]
            }
            RuleKind::McCloskey { etas } => etas.iter().map(|e| e.value()).collect(),
        }
    }

    /// Quantile levels whose grids the rule needs.
    pub fn levels_needed(&self) -> Vec<f64> {
        let d = self.delta.value();
        let mut levels = match &self.kind {
            RuleKind::FixedSup => vec![],
            RuleKind::Bootstrap | RuleKind::LohStar { .. } => vec![d],
            RuleKind::Loh { eta } | RuleKind::MinRule { eta } => vec![d - eta.value()],
            RuleKind::McCloskey { etas } => etas.iter().map(|e| d - e.value()).collect(),
        };
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        levels
    }

    /// Widest confidence-interval half-width the rule queries.
    pub fn max_half_width(&self) -> f64 {
        self.etas()
            .iter()
            .map(|&e| interval_half_width(e))
            .fold(0.0, f64::max)
    }

    /// Whether evaluation consults the worst-case value.
    pub fn needs_sup(&self) -> bool {
        matches!(
            self.kind,
            RuleKind::FixedSup | RuleKind::MinRule { .. } | RuleKind::McCloskey { .. }
        )
    }
}

fn check_eta(delta: f64, eta: f64) -> Result<Probability> {
    let p = Probability::interior(eta)?;
    if !(eta < delta) {
        return Err(Error::Domain(format!(
            "eta must satisfy 0 < eta < delta, got eta={eta}, delta={delta}"
        )));
    }
    Ok(p)
}

/// Half-width Phi^{-1}(1 - eta/2) of the 1-eta confidence interval for
/// gamma.
pub fn interval_half_width(eta: f64) -> f64 {
    normal::quantile(1.0 - eta / 2.0).expect("eta validated at construction")
}

/// Scans the quantile curve over [-bound, bound] and refines the best local
/// maxima by golden-section search. Ties break toward the smallest |gamma|,
/// negative before positive.
pub fn compute_sup_in(
    params: ModelParams,
    v: f64,
    bound: f64,
    scan_step: f64,
    tol: Tolerances,
) -> Result<SupResult> {
    if !(v > 0.0 && v < 1.0 && v.is_finite()) {
        return Err(Error::Domain(format!(
            "sup level must satisfy 0 < v < 1, got {v}"
        )));
    }
    let quantile_at = |g: f64| -> Result<f64> {
        Distribution::with_tolerances(params, Gamma::new(g)?, tol).quantile(v)
    };

    if params.rho() == 0.0 {
        // the curve is flat: every gamma attains the supremum
        return Ok(SupResult {
            c_sup: normal::quantile(1.0 - v)?,
            gamma_max: 0.0,
            achieved: true,
        });
    }

    let n = ((2.0 * bound) / scan_step).ceil() as usize + 1;
    let n = if n % 2 == 0 { n + 1 } else { n }; // odd count puts a node at 0
    let nodes: Vec<f64> = (0..n)
        .map(|i| {
            let d = (n - 1) as f64;
            (-bound * (d - i as f64) + bound * i as f64) / d
        })
        .collect();
    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&g| quantile_at(g))
        .collect::<Result<_>>()?;

    // candidate local maxima, best three first
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || values[i] >= values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1])
        })
        .collect();
    candidates.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| tie_key(nodes[a]).total_cmp(&tie_key(nodes[b])))
    });
    candidates.truncate(3);

    let mut best_val = f64::NEG_INFINITY;
    let mut best_gamma = 0.0;
    for &i in &candidates {
        let (node_g, node_v) = (nodes[i], values[i]);
        let lo = if i == 0 { nodes[0] } else { nodes[i - 1] };
        let hi = if i + 1 == n { nodes[n - 1] } else { nodes[i + 1] };
        let (mut g, mut val) = golden_max(&quantile_at, lo, hi, 1e-8)?;
        // keep the node itself when refinement brings no real improvement
        if val <= node_v + 1e-12 {
            g = node_g;
            val = node_v;
        }
        if val > best_val + 1e-12
            || ((val - best_val).abs() <= 1e-12 && tie_key(g) < tie_key(best_gamma))
        {
            best_val = val;
            best_gamma = g;
        }
    }

    Ok(SupResult {
        c_sup: best_val,
        gamma_max: best_gamma,
        achieved: best_gamma.abs() < bound - 0.5 * scan_step,
    })
}

/// [`compute_sup_in`] with the default search bound, scan step, and
/// tolerances.
pub fn compute_sup(params: ModelParams, v: f64) -> Result<SupResult> {
    compute_sup_in(params, v, SUP_SEARCH_BOUND, SUP_SCAN_STEP, Tolerances::default())
}

/// Plain scan of the quantile curve at fixed spacing; the cross-validation
/// oracle for [`compute_sup`]. Returns (max value, argmax).
pub fn brute_force_sup(
    params: ModelParams,
    v: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let tol = Tolerances::default();
    let vals: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = (n - 1) as f64;
            let g = (lo * (d - i as f64) + hi * i as f64) / d;
            let q = Distribution::with_tolerances(params, Gamma::new(g)?, tol).quantile(v)?;
            Ok((q, g))
        })
        .collect::<Result<_>>()?;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for &(q, g) in &vals {
        if q > best.0 + 1e-15 || ((q - best.0).abs() <= 1e-15 && tie_key(g) < tie_key(best.1)) {
            best = (q, g);
        }
    }
    Ok(best)
}

#[inline]
fn tie_key(g: f64) -> f64 {
    // orders by |gamma|, negative before positive
    g.abs() + if g > 0.0 { 0.25e-15 } else { 0.0 }
}

/// Golden-section maximization of `f` on [lo, hi]; returns (argmax, max).
pub(crate) fn golden_max<F: Fn(f64) -> Result<f64>>(f: &F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > xtol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Quantile grids for every level a rule needs, sharing one gamma coverage.
#[derive(Clone, Debug)]
pub struct GridSet {
    params: ModelParams,
    grids: Vec<QuantileGrid>,
}

impl GridSet {
    /// Builds one grid per level over `[lo, hi]`.
    pub fn build(
        params: ModelParams,
        levels: &[f64],
        lo: f64,
        hi: f64,
        step: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        let mut grids = Vec::with_capacity(levels.len());
        for &v in levels {
            grids.push(QuantileGrid::build(params, v, lo, hi, step, tol)?);
        }
        Ok(Self { params, grids })
    }

    /// Wraps pre-built grids (e.g. loaded from cache). All grids must share
    /// the model parameters.
    pub fn from_grids(grids: Vec<QuantileGrid>) -> Result<Self> {
        let params = grids
            .first()
            .ok_or_else(|| Error::Domain("GridSet needs at least one grid".into()))?
            .params();
        if grids.iter().any(|g| g.params() != params) {
            return Err(Error::Domain(
                "all grids in a GridSet must share model parameters".into(),
            ));
        }
        Ok(Self { params, grids })
    }

    #[inline]
    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn grids(&self) -> &[QuantileGrid] {
        &self.grids
    }

    /// The grid tabulated at quantile level `v` (exact match).
    pub fn at_level(&self, v: f64) -> Result<&QuantileGrid> {
        self.grids
            .iter()
            .find(|g| g.level() == v)
            .ok_or_else(|| Error::Domain(format!("no grid tabulated at level {v}")))
    }
}

/// Evaluates `rule` at the observed `gamma_hat`, reading interval suprema
/// and bootstrap quantiles from `grids` and the worst-case value from
/// `sup_delta`. Fails with a range error when the grids do not cover the
/// confidence interval around `gamma_hat`.
pub fn evaluate_rule(
    rule: &CriticalValueRule,
    gamma_hat: f64,
    sup_delta: &SupResult,
    grids: &GridSet,
) -> Result<f64> {
    let d = rule.delta();
    match rule.kind() {
        RuleKind::FixedSup => Ok(sup_delta.c_sup),
        RuleKind::Bootstrap => grids.at_level(d)?.value_at(gamma_hat),
        RuleKind::Loh { eta } => {
            let w = interval_half_width(eta.value());
            grids
                .at_level(d - eta.value())?
                .interval_sup_fast(gamma_hat - w, gamma_hat + w)
        }
        RuleKind::LohStar { eta } => {
            let w = interval_half_width(eta.value());
            grids.at_level(d)?.interval_sup_fast(gamma_hat - w, gamma_hat + w)
        }
        RuleKind::MinRule { eta } => {
            let loh = CriticalValueRule {
                kind: RuleKind::Loh { eta: *eta },
                delta: rule.delta,
            };
            Ok(sup_delta
                .c_sup
                .min(evaluate_rule(&loh, gamma_hat, sup_delta, grids)?))
        }
        RuleKind::McCloskey { etas } => {
            let mut best = f64::INFINITY;
            for eta in etas {
                let min_rule = CriticalValueRule {
                    kind: RuleKind::MinRule { eta: *eta },
                    delta: rule.delta,
                };
                best = best.min(evaluate_rule(&min_rule, gamma_hat, sup_delta, grids)?);
            }
            Ok(best)
        }
    }
}

/// Everything needed to evaluate one rule repeatedly: the worst-case value
/// at delta and grids covering a stated gamma_hat range.
#[derive(Clone, Debug)]
pub struct RuleContext {
    params: ModelParams,
    rule: CriticalValueRule,
    sup: SupResult,
    grids: GridSet,
}

impl RuleContext {
    /// Builds grids covering `[gamma_hat_lo, gamma_hat_hi]` plus the rule's
    /// confidence-interval half-width, and computes the worst-case value.
    pub fn build(
        params: ModelParams,
        rule: CriticalValueRule,
        gamma_hat_lo: f64,
        gamma_hat_hi: f64,
        grid_step: f64,
        tol: Tolerances,
    ) -> Result<Self> {
        let sup = compute_sup_in(params, rule.delta(), SUP_SEARCH_BOUND, SUP_SCAN_STEP, tol)?;
        let w = rule.max_half_width();
        let pad = 0.5;
        let levels = rule.levels_needed();
        // FixedSup consults no grid, but size evaluation still wants the
        // delta-level curve for diagnostics; always tabulate delta.
        let mut all_levels = levels;
        if !all_levels.iter().any(|&v| v == rule.delta()) {
            all_levels.push(rule.delta());
        }
        let grids = GridSet::build(
            params,
            &all_levels,
            gamma_hat_lo - w - pad,
            gamma_hat_hi + w + pad,
            grid_step,
            tol,
        )?;
        Ok(Self {
            params,
            rule,
            sup,
            grids,
        })
    }

    /// Assembles a context from an already computed sup and pre-built (for
    /// example cache-loaded) grids. The grids must cover every level the
    /// rule needs and share the model parameters.
    pub fn from_parts(
        params: ModelParams,
        rule: CriticalValueRule,
        sup: SupResult,
        grids: GridSet,
    ) -> Result<Self> {
        if grids.params() != params {
            return Err(Error::Domain(
                "grid parameters disagree with the requested model parameters".into(),
            ));
        }
        for level in rule.levels_needed() {
            grids.at_level(level)?;
        }
        Ok(Self {
            params,
            rule,
            sup,
            grids,
        })
    }

    #[inline]
    pub fn params(&self) -> ModelParams {
        self.params
    }

    #[inline]
    pub fn rule(&self) -> &CriticalValueRule {
        &self.rule
    }

    #[inline]
    pub fn sup(&self) -> SupResult {
        self.sup
    }

    #[inline]
    pub fn grids(&self) -> &GridSet {
        &self.grids
    }

    /// The rule's critical value at `gamma_hat`.
    pub fn evaluate(&self, gamma_hat: f64) -> Result<f64> {
        evaluate_rule(&self.rule, gamma_hat, &self.sup, &self.grids)
    }
}
