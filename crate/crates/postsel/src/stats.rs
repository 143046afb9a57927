//! Kolmogorov-Smirnov helpers shared by the verification suite.

/// Two-sided KS statistic given the model cdf evaluated at the *sorted*
/// sample: max over i of max(F_i - i/n, (i+1)/n - F_i).
pub fn ks_statistic(cdf_at_sorted: &[f64]) -> f64 {
    let n = cdf_at_sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &f) in cdf_at_sorted.iter().enumerate() {
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample KS statistic; both slices must be sorted ascending.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        // advance both samples past the current value so ties are counted once
        let x = a[i].min(b[j]);
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic Kolmogorov critical value at significance `alpha` for an
/// effective sample size `n_eff` (use n*m/(n+m) for two samples):
/// sqrt(-ln(alpha/2) / 2) / sqrt(n_eff).
pub fn ks_critical_value(n_eff: f64, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_fit_is_half_spacing() {
        // F_i exactly between i/n and (i+1)/n
        let n = 100;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&f);
        assert!((d - 0.5 / n as f64).abs() <= 1e-12);
    }

    #[test]
    fn ks_critical_value_matches_known_constant() {
        // sqrt(-ln(0.0005)/2) ~= 1.9495
        let c = ks_critical_value(1.0, 0.001);
        assert!((c - 1.9495).abs() < 1e-3, "{c}");
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    #[test]
    fn two_sample_disjoint_is_one() {
        let a = [1.0, 2.0];
        let b = [5.0, 6.0, 7.0];
        assert_eq!(ks_two_sample(&a, &b), 1.0);
    }
}
