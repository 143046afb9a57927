//! `postsel critval`: critical values per rule as a function of gamma_hat.

use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{Context, Result};

use crate::config::Settings;

use super::{build_context, build_rule, out_path};

pub fn run(settings: &Settings) -> Result<i32> {
    let rule = build_rule(settings)?;
    let points = settings.gammas.points();
    let (lo, hi) = settings.gammas.bounds();
    let (ctx, notes) = build_context(settings, &rule, lo, hi, false)?;
    for n in &notes {
        eprintln!("{n}");
    }

    let sup = ctx.sup();
    let delta_grid = ctx.grids().at_level(rule.delta())?;

    println!(
        "rho={:.4} cutoff={:.4} delta={:.4} rule={}{}",
        settings.rho,
        settings.cutoff,
        rule.delta(),
        rule.name(),
        if rule.etas().is_empty() {
            String::new()
        } else {
            format!(
                " eta={}",
                rule.etas()
                    .iter()
                    .map(|e| format!("{e:.4}"))
                    .collect::<Vec<_>>()
                    .join(",")
            )
        }
    );
    println!(
        "c_sup = {:.10} at gamma_max = {:.6} (achieved = {})",
        sup.c_sup, sup.gamma_max, sup.achieved
    );
    println!(
        "{:>14} {:>18} {:>18} {:>14}",
        "gamma_hat", "quantile(delta)", "rule_value", "c_sup"
    );

    let path = out_path(settings, "critval.csv");
    let file = File::create(&path)
        .with_context(|| format!("cannot create output {}", path.display()))?;
    let mut csv = BufWriter::new(file);
    writeln!(csv, "# postsel critical values v{}", env!("CARGO_PKG_VERSION"))?;
    writeln!(
        csv,
        "# rule={} delta={:.9e} eta={} rho={:.9e} cutoff={:.9e}",
        rule.name(),
        rule.delta(),
        if rule.etas().is_empty() {
            "-".to_string()
        } else {
            rule.etas()
                .iter()
                .map(|e| format!("{e:.9e}"))
                .collect::<Vec<_>>()
                .join(";")
        },
        settings.rho,
        settings.cutoff
    )?;
    writeln!(
        csv,
        "# c_sup={:.9e} gamma_max={:.9e} achieved={}",
        sup.c_sup, sup.gamma_max, sup.achieved
    )?;
    writeln!(csv, "# columns: gamma_hat,quantile_delta,rule_value,c_sup")?;

    for &gh in &points {
        let quantile = delta_grid.value_at(gh)?;
        let value = ctx.evaluate(gh)?;
        println!("{gh:>14.6} {quantile:>18.10} {value:>18.10} {:>14.10}", sup.c_sup);
        writeln!(
            csv,
            "{gh:.9e},{quantile:.9e},{value:.9e},{:.9e}",
            sup.c_sup
        )?;
    }
    csv.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}
