pub mod critval;
pub mod grid;
pub mod maxsize;
pub mod size;
pub mod verify;

use std::path::PathBuf;

use anyhow::Result;

use postsel::critval::{
    compute_sup_in, CriticalValueRule, GridSet, RuleContext, SUP_SCAN_STEP, SUP_SEARCH_BOUND,
    DEFAULT_GRID_STEP,
};
use postsel::size::csv::rule_from_parts;

use crate::config::Settings;
use crate::gridcache::{load_or_build, CacheStatus};

/// The rule the settings describe.
pub fn build_rule(settings: &Settings) -> Result<CriticalValueRule> {
    Ok(rule_from_parts(
        &settings.rule,
        settings.delta,
        &settings.rule_etas(),
    )?)
}

/// Levels the grids must tabulate: whatever the rule needs plus delta.
fn levels_for(rule: &CriticalValueRule) -> Vec<f64> {
    let mut levels = rule.levels_needed();
    if !levels.iter().any(|&v| v == rule.delta()) {
        levels.push(rule.delta());
    }
    levels
}

/// Gamma-hat coverage the grids need for direct rule evaluation over
/// `[lo, hi]`, or for size integrals over the same gamma range.
fn coverage(rule: &CriticalValueRule, lo: f64, hi: f64, for_size: bool) -> (f64, f64) {
    let z = if for_size { postsel::size::Z_BOUND } else { 0.0 };
    let w = rule.max_half_width();
    (lo - z - w - 0.5, hi + z + w + 0.5)
}

/// Builds a rule context, reading grids through the cache when enabled.
/// Returns the context together with one status line per grid.
pub fn build_context(
    settings: &Settings,
    rule: &CriticalValueRule,
    gamma_lo: f64,
    gamma_hi: f64,
    for_size: bool,
) -> Result<(RuleContext, Vec<String>)> {
    let params = postsel::dist::ModelParams::new(settings.rho, settings.cutoff)?;
    let sup = compute_sup_in(
        params,
        rule.delta(),
        SUP_SEARCH_BOUND,
        SUP_SCAN_STEP,
        settings.tol,
    )?;
    let (lo, hi) = coverage(rule, gamma_lo, gamma_hi, for_size);
    let mut grids = Vec::new();
    let mut notes = Vec::new();
    for level in levels_for(rule) {
        let (grid, status, path) = load_or_build(
            settings.cache_dir.as_deref(),
            params,
            level,
            lo,
            hi,
            DEFAULT_GRID_STEP,
            settings.tol,
        )?;
        if status != CacheStatus::Disabled {
            notes.push(format!(
                "grid level {level:.6}: {status} ({})",
                path.as_deref().map(|p| p.display().to_string()).unwrap_or_default()
            ));
        }
        grids.push(grid);
    }
    let ctx = RuleContext::from_parts(params, rule.clone(), sup, GridSet::from_grids(grids)?)?;
    Ok((ctx, notes))
}

/// Output path with a default file name and an optional forced extension.
pub fn out_path(settings: &Settings, default_name: &str) -> PathBuf {
    settings
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_name))
}

/// Companion path: same stem, different extension.
pub fn with_extension(path: &PathBuf, ext: &str) -> PathBuf {
    let mut p = path.clone();
    p.set_extension(ext);
    p
}
