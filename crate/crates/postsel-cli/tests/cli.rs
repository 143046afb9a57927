//! End-to-end tests of the `postsel` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_postsel")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("postsel-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Data rows of a written CSV (comment lines skipped), split on commas.
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .filter_map(|f| f.parse::<f64>().ok())
                .collect()
        })
        .collect()
}

#[test]
fn critval_rho_zero_is_the_normal_quantile() {
    let dir = tmpdir("critval0");
    let out = run_in(
        &dir,
        &["critval", "--rho", "0", "--delta", "0.05", "--rule", "bootstrap", "--gamma", "3", "--out", "cv.csv"],
    );
    assert!(out.status.success(), "{out:?}");
    let rows = csv_rows(&dir.join("cv.csv"));
    assert_eq!(rows.len(), 1);
    // columns: gamma_hat, quantile_delta, rule_value, c_sup
    assert!((rows[0][2] - 1.6448536269514722).abs() <= 1e-4);
}

#[test]
fn critval_symmetric_median_is_zero() {
    let dir = tmpdir("critval-median");
    let out = run_in(
        &dir,
        &["critval", "--rho", "0.5", "--cutoff", "1.96", "--delta", "0.5", "--gamma", "0", "--out", "cv.csv"],
    );
    assert!(out.status.success());
    let rows = csv_rows(&dir.join("cv.csv"));
    assert!(rows[0][1].abs() <= 1e-6, "median quantile = {}", rows[0][1]);
}

#[test]
fn critval_min_rule_never_exceeds_sup() {
    let dir = tmpdir("critval-min");
    let out = run_in(
        &dir,
        &[
            "critval", "--rho", "0.6", "--delta", "0.05", "--eta", "0.01", "--rule", "min",
            "--gamma", "-3,-1,0,2", "--out", "cv.csv",
        ],
    );
    assert!(out.status.success());
    let rows = csv_rows(&dir.join("cv.csv"));
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!(row[2] <= row[3] + 1e-9, "min rule {} above sup {}", row[2], row[3]);
    }
}

#[test]
fn size_emits_csv_and_wellformed_svg() {
    let dir = tmpdir("size");
    let out = run_in(
        &dir,
        &[
            "size", "--rho", "0.3", "--delta", "0.05", "--rule", "bootstrap",
            "--gamma-min", "-2", "--gamma-max", "2", "--gamma-step", "0.5", "--out", "curve.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");

    let curve = postsel::size::csv::SizeCurve::read_csv(
        std::io::BufReader::new(std::fs::File::open(dir.join("curve.csv")).unwrap()),
    )
    .unwrap();
    assert_eq!(curve.gammas.len(), 9);
    assert!(curve.rejection.iter().all(|&p| (0.0..=1.0).contains(&p)));

    let svg = std::fs::read_to_string(dir.join("curve.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    assert!(svg.contains("stroke-dasharray")); // the delta reference line
    assert!(balanced_xml(&svg));
}

#[test]
fn size_monte_carlo_has_stderr_column() {
    let dir = tmpdir("size-mc");
    let out = run_in(
        &dir,
        &[
            "size", "--rho", "0.3", "--delta", "0.05", "--rule", "bootstrap", "--mc",
            "--reps", "4000", "--seed", "5", "--gamma", "-1,0,1", "--out", "mc.csv",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let rows = csv_rows(&dir.join("mc.csv"));
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!(row[2] > 0.0, "stderr column should be positive for MC");
    }
}

#[test]
fn maxsize_verdicts() {
    let dir = tmpdir("maxsize");
    // rho = 0: every rule has exactly nominal size
    let out = run_in(
        &dir,
        &[
            "maxsize", "--rho", "0", "--delta", "0.05", "--rule", "bootstrap",
            "--gamma-min", "-3", "--gamma-max", "3", "--gamma-step", "0.5", "--out", "r0.csv",
        ],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(stdout.contains("verdict: holds"), "{stdout}");

    // bootstrap at rho = 0.7 overshoots
    let out = run_in(
        &dir,
        &[
            "maxsize", "--rho", "0.7", "--delta", "0.05", "--rule", "bootstrap",
            "--gamma-min", "-4", "--gamma-max", "0", "--gamma-step", "0.25", "--out", "r1.csv",
        ],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(stdout.contains("verdict: overshoots"), "{stdout}");
    let rows = csv_rows(&dir.join("r1.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn grid_cache_hit_miss_and_corruption() {
    let dir = tmpdir("grid");
    let args = [
        "grid", "--rho", "0.4", "--delta", "0.05", "--rule", "bootstrap",
        "--gamma-min", "-1", "--gamma-max", "1", "--cache-dir", "cache",
    ];
    let first = run_in(&dir, &args);
    assert!(first.status.success());
    assert!(String::from_utf8_lossy(&first.stdout).contains("cache miss"));

    let second = run_in(&dir, &args);
    assert!(second.status.success());
    assert!(String::from_utf8_lossy(&second.stdout).contains("cache hit"));

    // flip a byte: checksum must reject the file and the grid is rebuilt
    let cache_file = std::fs::read_dir(dir.join("cache"))
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let mut bytes = std::fs::read(&cache_file).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x11;
    std::fs::write(&cache_file, bytes).unwrap();

    let third = run_in(&dir, &args);
    assert!(third.status.success());
    assert!(String::from_utf8_lossy(&third.stdout).contains("cache rejected, rebuilt"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tmpdir("config");
    std::fs::write(dir.join("run.conf"), "rho = 0\ndelta = 0.05\nrule = bootstrap\ngamma = 2\n").unwrap();
    let out = run_in(
        &dir,
        &["critval", "--config", "run.conf", "--delta", "0.1", "--out", "cv.csv"],
    );
    assert!(out.status.success());
    let rows = csv_rows(&dir.join("cv.csv"));
    // delta = 0.1 from the flag wins: Phi^{-1}(0.9) = 1.2816
    assert!((rows[0][2] - 1.2815515655446004).abs() <= 1e-6);
}

#[test]
fn cache_dir_from_environment() {
    let dir = tmpdir("envcache");
    let out = Command::new(bin())
        .args([
            "critval", "--rho", "0.4", "--delta", "0.1", "--rule", "bootstrap",
            "--gamma", "0", "--out", "cv.csv",
        ])
        .env("POSTSEL_CACHE_DIR", dir.join("envcache"))
        .current_dir(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let n = std::fs::read_dir(dir.join("envcache")).unwrap().count();
    assert!(n >= 1, "expected cache files in the env-pointed directory");
}

#[test]
fn verify_passes_at_default_parameters() {
    let dir = tmpdir("verify");
    let out = run_in(&dir, &["verify", "--reps", "20000", "--seed", "3"]);
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("0 failed"), "{stdout}");
    assert!(stdout.lines().filter(|l| l.contains(" PASS ")).count() >= 14);
}

#[test]
fn verify_skips_theorem_checks_outside_proven_range() {
    let dir = tmpdir("verify-skip");
    let out = run_in(
        &dir,
        &["verify", "--rho", "0.5", "--delta", "0.6", "--eta", "0.2", "--reps", "20000"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("SKIP"), "{stdout}");
    assert!(stdout.contains("outside the proven range"), "{stdout}");
}

#[test]
fn usage_errors_exit_with_code_2() {
    let dir = tmpdir("usage");
    // unknown rule name rejected by clap's value parser
    let out = run_in(&dir, &["critval", "--rule", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
    // domain-invalid rho rejected by the library
    let out = run_in(&dir, &["critval", "--rho", "1.5", "--gamma", "0"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

fn balanced_xml(s: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = s;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        let Some(end) = rest.find('>') else { return false };
        let tag = &rest[..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.ends_with('/') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name => {}
                _ => return false,
            }
        } else {
            stack.push(tag.chars().take_while(|c| !c.is_whitespace()).collect());
        }
    }
    stack.is_empty()
}
