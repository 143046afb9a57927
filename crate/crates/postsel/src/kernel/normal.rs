//! Standard normal density, cdf, quantile, and the band-mass window.
//!
//! The cdf is built on a rational-approximation complementary error function
//! (absolute error below 1e-15 across the real line); the quantile uses a
//! rational initializer polished by two Newton steps on the cdf, so that the
//! pair stays consistent to full double precision.

const INV_SQRT_2PI: f64 = 0.3989422804014326779399461;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Density of the standard normal distribution.
#[inline]
pub fn pdf(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Cumulative distribution function of the standard normal distribution.
///
/// Absolute error below 1e-15; underflows to 0 (resp. rounds to 1) in the
/// extreme tails.
#[inline]
pub fn cdf(u: f64) -> f64 {
    debug_assert!(!u.is_nan());
    0.5 * erfc(-u / SQRT_2)
}

/// Phi(a + b) - Phi(a - b): the (signed) standard normal mass of the band
/// centered at `a` with half-width `b`.
#[inline]
pub fn band_mass(center: f64, half_width: f64) -> f64 {
    cdf(center + half_width) - cdf(center - half_width)
}

/// Quantile (inverse cdf) of the standard normal distribution.
///
/// Requires 0 < p < 1; satisfies |cdf(result) - p| <= 1e-14 away from the
/// extreme tails.
pub fn quantile(p: f64) -> crate::Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(crate::Error::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    let mut x = quantile_estimate(p);
    // Newton polish on the cdf; skipped where pdf underflows.
    for _ in 0..2 {
        let d = pdf(x);
        if d < 1e-280 {
            break;
        }
        x -= (cdf(x) - p) / d;
    }
    Ok(x)
}

/// Rational initial estimate for the normal quantile (relative error ~1e-9).
fn quantile_estimate(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Complementary error function, rational Chebyshev approximation
/// (Cody-style three-branch evaluation, relative error ~1e-16 for x >= 0).
fn erfc(x: f64) -> f64 {
    const THRESH: f64 = 0.46875;
    const SQRPI: f64 = 5.6418958354775628695e-1;

    const PA: [f64; 5] = [
        3.16112374387056560e+00,
        1.13864154151050156e+02,
        3.77485237685302021e+02,
        3.20937758913846947e+03,
        1.85777706184603153e-01,
    ];
    const QA: [f64; 4] = [
        2.36012909523441209e+01,
        2.44024637934444173e+02,
        1.28261652607737228e+03,
        2.84423683343917062e+03,
    ];
    const PB: [f64; 9] = [
        5.64188496988670089e-01,
        8.88314979438837594e+00,
        6.61191906371416295e+01,
        2.98635138197400131e+02,
        8.81952221241769090e+02,
        1.71204761263407058e+03,
        2.05107837782607147e+03,
        1.23033935479799725e+03,
        2.15311535474403846e-08,
    ];
    const QB: [f64; 8] = [
        1.57449261107098347e+01,
        1.17693950891312499e+02,
        5.37181101862009858e+02,
        1.62138957456669019e+03,
        3.29079923573345963e+03,
        4.36261909014324716e+03,
        3.43936767414372164e+03,
        1.23033935480374942e+03,
    ];
    const PC: [f64; 6] = [
        3.05326634961232344e-01,
        3.60344899949804439e-01,
        1.25781726111229246e-01,
        1.60837851487422766e-02,
        6.58749161529837803e-04,
        1.63153871373020978e-02,
    ];
    const QC: [f64; 5] = [
        2.56852019228982242e+00,
        1.87295284992346047e+00,
        5.27905102951428412e-01,
        6.05183413124413191e-02,
        2.33520497626869185e-03,
    ];

    let y = x.abs();
    let result = if y <= THRESH {
        // erfc(x) = 1 - erf(x) with erf by the central rational approximation
        let ysq = y * y;
        let mut xnum = PA[4] * ysq;
        let mut xden = ysq;
        for i in 0..3 {
            xnum = (xnum + PA[i]) * ysq;
            xden = (xden + QA[i]) * ysq;
        }
        return 1.0 - x * (xnum + PA[3]) / (xden + QA[3]);
    } else if y <= 4.0 {
        let mut xnum = PB[8] * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + PB[i]) * y;
            xden = (xden + QB[i]) * y;
        }
        scaled_tail((xnum + PB[7]) / (xden + QB[7]), y)
    } else if y < 26.6 {
        let ysq = 1.0 / (y * y);
        let mut xnum = PC[5] * ysq;
        let mut xden = ysq;
        for i in 0..4 {
            xnum = (xnum + PC[i]) * ysq;
            xden = (xden + QC[i]) * ysq;
        }
        let r = ysq * (xnum + PC[4]) / (xden + QC[4]);
        scaled_tail((SQRPI - r) / y, y)
    } else {
        0.0
    };

    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Multiplies `r` by exp(-y^2), splitting the exponent to avoid the rounding
/// error of forming y*y directly.
#[inline]
fn scaled_tail(r: f64, y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * r
}
