use super::csv::{rule_from_parts, SizeCurve, SizeMethod};
use super::*;

fn params(rho: f64, c: f64) -> ModelParams {
    ModelParams::new(rho, c).unwrap()
}

fn resources(rule: CriticalValueRule, rho: f64, lo: f64, hi: f64) -> SizeResources {
    SizeResources::for_rule(params(rho, 1.96), rule, lo, hi).unwrap()
}

// Independent scipy oracle: bootstrap rejection probabilities at
// rho = 0.7, c = 1.96, delta = 0.05.
const BOOT_SIZE_AT_2: f64 = 0.0489883723;
const BOOT_SIZE_AT_GMAX: f64 = 0.0997611367;
const GAMMA_MAX: f64 = -2.7027212994;

#[test]
fn fixed_sup_size_is_delta_at_gamma_max() {
    let res = resources(CriticalValueRule::fixed_sup(0.05).unwrap(), 0.7, -3.5, -2.0);
    let g = res.sup().gamma_max;
    let size = rejection_prob_semianalytic(&res, g).unwrap();
    assert!((size - 0.05).abs() <= 1e-6, "size at gamma_max = {size}");
}

#[test]
fn fixed_sup_level_holds_on_sample_points() {
    let res = resources(CriticalValueRule::fixed_sup(0.05).unwrap(), 0.7, -6.0, 6.0);
    for &g in &[-6.0, -2.7, -1.0, 0.0, 2.5, 6.0] {
        let size = rejection_prob_semianalytic(&res, g).unwrap();
        assert!(size <= 0.05 + 1e-5, "size({g}) = {size}");
    }
}

#[test]
fn rho_zero_sizes_equal_nominal_levels() {
    let delta = 0.05;
    let eta = 0.01;
    let cases = [
        (CriticalValueRule::fixed_sup(delta).unwrap(), delta),
        (CriticalValueRule::bootstrap(delta).unwrap(), delta),
        (CriticalValueRule::loh(delta, eta).unwrap(), delta - eta),
        (CriticalValueRule::loh_star(delta, eta).unwrap(), delta),
        (CriticalValueRule::min_rule(delta, eta).unwrap(), delta),
        (
            CriticalValueRule::mccloskey(delta, &[eta, 2.0 * eta]).unwrap(),
            delta,
        ),
    ];
    for (rule, nominal) in cases {
        let res = resources(rule.clone(), 0.0, -1.0, 1.0);
        for &g in &[-1.0, 0.0, 0.7] {
            let size = rejection_prob_semianalytic(&res, g).unwrap();
            assert!(
                (size - nominal).abs() <= 1e-6,
                "{}({g}) = {size}, nominal {nominal}",
                rule.name()
            );
        }
    }
}

#[test]
fn bootstrap_size_matches_independent_oracle() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.7, -3.0, 2.5);
    let at_2 = rejection_prob_semianalytic(&res, 2.0).unwrap();
    assert!(
        (at_2 - BOOT_SIZE_AT_2).abs() <= 1e-5,
        "size(2.0) = {at_2}, oracle {BOOT_SIZE_AT_2}"
    );
    let at_gmax = rejection_prob_semianalytic(&res, GAMMA_MAX).unwrap();
    assert!(
        (at_gmax - BOOT_SIZE_AT_GMAX).abs() <= 1e-5,
        "size(gamma_max) = {at_gmax}, oracle {BOOT_SIZE_AT_GMAX}"
    );
    // the overshoot the bootstrap suffers at the least-favorable gamma
    assert!(at_gmax > 0.05 + 0.04);
}

#[test]
fn monte_carlo_is_deterministic_and_matches_semianalytic() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.7, -3.0, -2.5);
    let (p1, se) = rejection_prob_mc(&res, -2.7, 200_000, 31).unwrap();
    let (p2, _) = rejection_prob_mc(&res, -2.7, 200_000, 31).unwrap();
    assert_eq!(p1.to_bits(), p2.to_bits());
    let exact = rejection_prob_semianalytic(&res, -2.7).unwrap();
    assert!(
        (p1 - exact).abs() <= 3.0 * se,
        "mc {p1} vs exact {exact} (se {se})"
    );
}

#[test]
fn monte_carlo_fixed_sup_hits_delta() {
    let res = resources(CriticalValueRule::fixed_sup(0.05).unwrap(), 0.7, -3.5, -2.0);
    let g = res.sup().gamma_max;
    let (p, se) = rejection_prob_mc(&res, g, 100_000, 7).unwrap();
    assert!((p - 0.05).abs() <= 3.0 * se, "p = {p}, se = {se}");
}

#[test]
fn monte_carlo_rejects_zero_reps() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.3, -1.0, 1.0);
    assert!(rejection_prob_mc(&res, 0.0, 0, 1).is_err());
}

#[test]
fn prop1_fixed_sup_has_no_overshoot_term() {
    let res = resources(CriticalValueRule::fixed_sup(0.05).unwrap(), 0.7, -3.5, -2.0);
    let d = prop1_decomposition(&res).unwrap();
    assert!(d.overshoot_term.abs() <= 1e-8);
    assert!((d.total - 0.05).abs() <= 1e-6);
}

#[test]
fn prop1_bootstrap_overshoot_is_positive() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.7, -3.5, -2.0);
    let d = prop1_decomposition(&res).unwrap();
    assert!(d.overshoot_term > 0.01, "overshoot = {}", d.overshoot_term);
    let direct = rejection_prob_semianalytic(&res, res.sup().gamma_max).unwrap();
    assert!((d.total - direct).abs() <= 1e-6);
}

#[test]
fn prop1_rejects_rules_above_sup() {
    // the Loh rule uses (delta - eta)-level quantiles and rises above c_sup
    let res = resources(CriticalValueRule::loh(0.05, 0.01).unwrap(), 0.7, -3.5, -2.0);
    assert!(matches!(
        prop1_decomposition(&res),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn max_size_bootstrap_overshoots() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.7, -5.0, 0.0);
    let report = max_size(&res, -5.0, 0.0, 0.25).unwrap();
    assert_eq!(report.verdict, LevelVerdict::Overshoots);
    // the size maximizer need not coincide with the quantile maximizer;
    // the sup dominates the value there
    assert!(report.max_size >= BOOT_SIZE_AT_GMAX - 1e-4);
    assert!(report.argmax_gamma > -5.0 && report.argmax_gamma < 0.0);
    let at_quantile_max = rejection_prob_semianalytic(&res, GAMMA_MAX).unwrap();
    assert!(report.max_size >= at_quantile_max - 1e-6);
    assert!(report.margin > 3.0);
    assert!(report.min_size <= report.max_size);
}

#[test]
fn max_size_fixed_sup_holds() {
    let res = resources(CriticalValueRule::fixed_sup(0.05).unwrap(), 0.7, -5.0, 0.0);
    let report = max_size(&res, -5.0, 0.0, 0.25).unwrap();
    assert_eq!(report.verdict, LevelVerdict::Holds);
    assert!((report.max_size - 0.05).abs() <= 1e-5);
}

#[test]
fn max_size_loh_records_floor() {
    let res = resources(CriticalValueRule::loh(0.05, 0.01).unwrap(), 0.7, -4.0, -2.0);
    let report = max_size(&res, -4.0, -2.0, 0.25).unwrap();
    let floor = report.floor.expect("loh report carries floor diagnostics");
    assert!((floor.lower_bound - 0.04).abs() <= 1e-12);
    assert!(floor.size_at_gamma_star >= floor.lower_bound - 1e-5);
    assert!(report.verdict == LevelVerdict::Holds);
}

#[test]
fn min_rule_condition_examples() {
    let sup7 = compute_sup(params(0.7, 1.96), 0.05).unwrap();
    assert!(min_rule_condition_holds(&sup7, 0.05, 0.01).unwrap());
    // at rho = 0.3 the sup is 1.967; eta = 0.04 pushes the Loh tail level
    // to Phi^{-1}(0.99) = 2.326 above it
    let sup3 = compute_sup(params(0.3, 1.96), 0.05).unwrap();
    assert!(!min_rule_condition_holds(&sup3, 0.05, 0.04).unwrap());
}

#[test]
fn loh_monte_carlo_agrees_with_semianalytic_at_a_million_reps() {
    let res = resources(CriticalValueRule::loh(0.05, 0.01).unwrap(), 0.7, -3.0, 1.0);
    for &(g, seed) in &[(-2.6, 71u64), (0.8, 72)] {
        let exact = rejection_prob_semianalytic(&res, g).unwrap();
        let (mc, se) = rejection_prob_mc(&res, g, 1_000_000, seed).unwrap();
        assert!(
            (mc - exact).abs() <= 3.0 * se,
            "gamma={g}: mc {mc} vs exact {exact} (se {se})"
        );
    }
}

#[test]
fn tail_probability_decreases_in_threshold() {
    let d = crate::dist::Distribution::new(
        params(0.7, 1.96),
        crate::dist::Gamma::new(-2.7).unwrap(),
    );
    let c1 = 1.5;
    let c2 = 2.5;
    let tail1 = 1.0 - d.cdf(c1).unwrap();
    let tail2 = 1.0 - d.cdf(c2).unwrap();
    assert!(tail2 < tail1);
}

#[test]
fn n_invariance_audit_passes() {
    let rule = CriticalValueRule::bootstrap(0.05).unwrap();
    assert!(n_invariance_check(params(0.7, 1.96), &rule).unwrap());
}

#[test]
fn size_curve_csv_roundtrip() {
    let res = resources(CriticalValueRule::loh(0.05, 0.01).unwrap(), 0.7, -1.0, 1.0);
    let curve = SizeCurve::semianalytic(&res, -1.0, 1.0, 0.5).unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let back = SizeCurve::read_csv(&buf[..]).unwrap();
    assert_eq!(back.rule, curve.rule);
    assert_eq!(back.method, SizeMethod::SemiAnalytic);
    assert_eq!(back.gammas.len(), curve.gammas.len());
    for i in 0..curve.gammas.len() {
        assert!((back.gammas[i] - curve.gammas[i]).abs() <= 1e-9 * (1.0 + curve.gammas[i].abs()));
        assert!(
            (back.rejection[i] - curve.rejection[i]).abs()
                <= 1e-9 * (1.0 + curve.rejection[i].abs())
        );
    }
    assert_eq!(back.params, curve.params);
}

#[test]
fn mc_curve_csv_roundtrip() {
    let res = resources(CriticalValueRule::bootstrap(0.05).unwrap(), 0.3, -0.5, 0.5);
    let curve = SizeCurve::monte_carlo(&res, -0.5, 0.5, 0.5, 2_000, 17).unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let back = SizeCurve::read_csv(&buf[..]).unwrap();
    assert_eq!(back.method, SizeMethod::MonteCarlo);
    assert_eq!(back.reps, 2_000);
    assert_eq!(back.seed, 17);
    assert!(back.stderr.iter().all(|&s| s > 0.0));
}

#[test]
fn rule_from_parts_parses_and_validates() {
    assert!(rule_from_parts("sup", 0.05, &[]).is_ok());
    assert!(rule_from_parts("bootstrap", 0.05, &[]).is_ok());
    assert!(rule_from_parts("loh", 0.05, &[0.01]).is_ok());
    assert!(rule_from_parts("loh", 0.05, &[]).is_err());
    assert!(rule_from_parts("mccloskey", 0.05, &[0.01, 0.02]).is_ok());
    assert!(rule_from_parts("nope", 0.05, &[]).is_err());
}

#[test]
fn report_csv_has_fixed_schema() {
    let res = resources(CriticalValueRule::min_rule(0.05, 0.01).unwrap(), 0.7, -3.0, -2.5);
    let report = max_size(&res, -3.0, -2.5, 0.25).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("# columns: rule,delta,eta,max_size"));
    let data_line = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(data_line.split(',').count(), 11);
    assert!(data_line.starts_with("min,"));
}
