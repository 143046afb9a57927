//! Disk cache for quantile grids: load on key match and checksum success,
//! rebuild (and overwrite) otherwise.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use postsel::critval::cache::{cache_key, matches_request, read_grid, write_grid};
use postsel::critval::QuantileGrid;
use postsel::dist::{ModelParams, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    /// A file existed but was corrupt or keyed differently; it was rebuilt.
    Rejected,
    /// No cache directory configured; built in memory.
    Disabled,
}

impl std::fmt::Display for CacheStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CacheStatus::Hit => "cache hit",
            CacheStatus::Miss => "cache miss, built and stored",
            CacheStatus::Rejected => "cache rejected, rebuilt",
            CacheStatus::Disabled => "built in memory",
        })
    }
}

pub fn grid_file_name(
    params: ModelParams,
    level: f64,
    lo: f64,
    hi: f64,
    step: f64,
    tol: Tolerances,
) -> String {
    format!("grid-{:016x}.bin", cache_key(params, level, lo, hi, step, tol))
}

/// Loads the grid from `dir` if a matching, uncorrupted file exists;
/// otherwise builds it (and stores it when a directory is configured).
pub fn load_or_build(
    dir: Option<&Path>,
    params: ModelParams,
    level: f64,
    lo: f64,
    hi: f64,
    step: f64,
    tol: Tolerances,
) -> Result<(QuantileGrid, CacheStatus, Option<PathBuf>)> {
    let Some(dir) = dir else {
        let grid = QuantileGrid::build(params, level, lo, hi, step, tol)?;
        return Ok((grid, CacheStatus::Disabled, None));
    };
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create cache directory {}", dir.display()))?;
    let path = dir.join(grid_file_name(params, level, lo, hi, step, tol));

    let mut status = CacheStatus::Miss;
    if path.exists() {
        match File::open(&path)
            .map_err(anyhow::Error::from)
            .and_then(|f| read_grid(BufReader::new(f)).map_err(anyhow::Error::from))
        {
            Ok(grid) if matches_request(&grid, params, level, lo, hi, step, tol) => {
                return Ok((grid, CacheStatus::Hit, Some(path)));
            }
            _ => status = CacheStatus::Rejected,
        }
    }

    let grid = QuantileGrid::build(params, level, lo, hi, step, tol)?;
    let file = File::create(&path)
        .with_context(|| format!("cannot write cache file {}", path.display()))?;
    write_grid(&grid, BufWriter::new(file))?;
    Ok((grid, status, Some(path)))
}
