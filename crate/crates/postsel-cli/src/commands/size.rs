//! `postsel size`: rejection-probability curve with CSV and SVG output.

use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};

use postsel::size::csv::SizeCurve;
use postsel::size::SizeResources;

use crate::config::Settings;
use crate::svg::{LineChart, Series};

use super::{build_context, build_rule, out_path, with_extension};

pub fn run(settings: &Settings) -> Result<i32> {
    let rule = build_rule(settings)?;
    let points = settings.gammas.points();
    let (lo, hi) = settings.gammas.bounds();
    let (ctx, notes) = build_context(settings, &rule, lo, hi, true)?;
    for n in &notes {
        eprintln!("{n}");
    }
    let res = SizeResources::from_context(ctx, lo, hi)?;

    let curve = if settings.mc {
        SizeCurve::monte_carlo_at(&res, points, settings.reps, settings.seed)?
    } else {
        SizeCurve::semianalytic_at(&res, points)?
    };

    let path = out_path(settings, "size_curve.csv");
    let file = File::create(&path)
        .with_context(|| format!("cannot create output {}", path.display()))?;
    curve.write_csv(BufWriter::new(file))?;
    eprintln!("wrote {}", path.display());

    let svg_path = with_extension(&path, "svg");
    let title = format!(
        "size of the {} test (rho={}, cutoff={}, delta={})",
        rule.name(),
        settings.rho,
        settings.cutoff,
        rule.delta()
    );
    let chart = LineChart {
        title: &title,
        x_label: "gamma",
        y_label: "rejection probability",
        series: vec![Series {
            x: &curve.gammas,
            y: &curve.rejection,
            color: "steelblue",
            label: rule.name(),
        }],
        reference: Some((rule.delta(), "nominal level")),
    };
    std::fs::write(&svg_path, chart.render())
        .with_context(|| format!("cannot write {}", svg_path.display()))?;
    eprintln!("wrote {}", svg_path.display());

    let (mut max_p, mut arg) = (f64::NEG_INFINITY, 0.0);
    for (g, p) in curve.gammas.iter().zip(&curve.rejection) {
        if *p > max_p {
            max_p = *p;
            arg = *g;
        }
    }
    println!(
        "{} curve over {} gamma points: max rejection {:.6} at gamma {:.4} (delta {})",
        curve.method,
        curve.gammas.len(),
        max_p,
        arg,
        rule.delta()
    );
    Ok(0)
}
