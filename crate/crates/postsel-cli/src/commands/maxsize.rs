//! `postsel maxsize`: maximal size over the gamma grid with level verdict.

use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};

use postsel::size::{max_size, SizeResources};

use crate::config::{GammaSpec, Settings};

use super::{build_context, build_rule, out_path};

pub fn run(settings: &Settings) -> Result<i32> {
    let rule = build_rule(settings)?;
    let (lo, hi, step) = match settings.gammas {
        GammaSpec::Range { min, max, step } => (min, max, step),
        GammaSpec::List(_) => {
            anyhow::bail!("maxsize scans a range; use --gamma-min/--gamma-max/--gamma-step")
        }
    };
    let (ctx, notes) = build_context(settings, &rule, lo, hi, true)?;
    for n in &notes {
        eprintln!("{n}");
    }
    let res = SizeResources::from_context(ctx, lo, hi)?;
    let report = max_size(&res, lo, hi, step)?;

    println!(
        "rule {} at delta {:.4}: max size {:.6} at gamma {:.4} over [{lo}, {hi}]",
        report.rule.name(),
        report.delta,
        report.max_size,
        report.argmax_gamma
    );
    println!(
        "verdict: {} (margin {:.2} error budgets of {:.1e}); min size over grid {:.6}",
        report.verdict, report.margin, report.error_budget, report.min_size
    );
    if let Some(floor) = &report.floor {
        println!(
            "loh floor: size {:.6} at the level-{:.4} maximizer gamma {:.4} (bound {:.4})",
            floor.size_at_gamma_star,
            floor.lower_bound,
            floor.gamma_star,
            floor.lower_bound
        );
    }

    let path = out_path(settings, "size_report.csv");
    let file = File::create(&path)
        .with_context(|| format!("cannot create output {}", path.display()))?;
    report.write_csv(BufWriter::new(file))?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}
