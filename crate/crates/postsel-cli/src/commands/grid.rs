//! `postsel grid`: build and persist quantile-grid cache files.

use std::path::PathBuf;

use anyhow::Result;

use postsel::critval::DEFAULT_GRID_STEP;
use postsel::dist::ModelParams;

use crate::config::Settings;
use crate::gridcache::load_or_build;

use super::{build_rule, coverage, levels_for};

pub fn run(settings: &Settings) -> Result<i32> {
    let rule = build_rule(settings)?;
    let params = ModelParams::new(settings.rho, settings.cutoff)?;
    let (lo, hi) = settings.gammas.bounds();
    // build what the size pipeline will later request, so its lookups hit
    let (cover_lo, cover_hi) = coverage(&rule, lo, hi, true);
    let dir = settings
        .cache_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("postsel-cache"));

    for level in levels_for(&rule) {
        let (grid, status, path) = load_or_build(
            Some(&dir),
            params,
            level,
            cover_lo,
            cover_hi,
            DEFAULT_GRID_STEP,
            settings.tol,
        )?;
        println!(
            "level {level:.6}: {status}; {} nodes over [{:.3}, {:.3}] -> {}",
            grid.len(),
            grid.gamma_lo(),
            grid.gamma_hi(),
            path.map(|p| p.display().to_string()).unwrap_or_default()
        );
    }
    Ok(0)
}
