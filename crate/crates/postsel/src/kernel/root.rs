//! Bracketed scalar root finding: bisection with secant/inverse-quadratic
//! acceleration (Brent's method). The bracket shrinks on every iteration.

use crate::error::{Error, Result};

/// An interval on which the target function changes sign.
#[derive(Clone, Copy, Debug)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!(
                "root bracket needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }
}

const MAX_ITER: usize = 300;

/// Finds a root of `f` inside `bracket`; the bracket width at termination is
/// at most `tol` (plus a machine-precision floor).
///
/// `f(lo)` and `f(hi)` must have opposite signs.
pub fn find_root<F: Fn(f64) -> f64>(f: F, bracket: &RootBracket, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain(format!(
            "root tolerance must be positive and finite, got {tol}"
        )));
    }
    let mut a = bracket.lo;
    let mut b = bracket.hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BadBracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // attempt secant / inverse quadratic interpolation
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let accept = 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs());
            if accept {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else if xm > 0.0 {
            tol1
        } else {
            -tol1
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }

    Err(Error::RootStalled { best: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::normal;

    #[test]
    fn linear() {
        let br = RootBracket::new(0.0, 5.0).unwrap();
        let x = find_root(|x| x - 2.0, &br, 1e-12).unwrap();
        assert!((x - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn normal_cdf_median() {
        let br = RootBracket::new(-3.0, 3.0).unwrap();
        let x = find_root(|x| normal::cdf(x) - 0.5, &br, 1e-10).unwrap();
        assert!(x.abs() <= 1e-10);
    }

    #[test]
    fn cubic() {
        let br = RootBracket::new(0.0, 4.0).unwrap();
        let x = find_root(|x| x * x * x - 8.0, &br, 1e-12).unwrap();
        assert!((x - 2.0).abs() <= 1e-11);
    }

    #[test]
    fn rejects_same_sign() {
        let br = RootBracket::new(3.0, 5.0).unwrap();
        match find_root(|x| x - 2.0, &br, 1e-10) {
            Err(Error::BadBracket { .. }) => {}
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_root() {
        let br = RootBracket::new(2.0, 5.0).unwrap();
        let x = find_root(|x| x - 2.0, &br, 1e-10).unwrap();
        assert_eq!(x, 2.0);
    }

    #[test]
    fn monotone_known_roots() {
        let cases: [(fn(f64) -> f64, f64, (f64, f64)); 3] = [
            (|x| x.exp() - 1.0, 0.0, (-2.0, 3.0)),
            (|x| x.tanh() - 0.5, 0.5493061443340549, (-4.0, 4.0)),
            (|x| x.powi(5) - 1.0, 1.0, (0.0, 2.0)),
        ];
        for (f, root, (lo, hi)) in cases {
            let br = RootBracket::new(lo, hi).unwrap();
            let x = find_root(f, &br, 1e-11).unwrap();
            assert!((x - root).abs() <= 1e-10, "root {root} got {x}");
        }
    }

    #[test]
    fn bracket_validation() {
        assert!(RootBracket::new(1.0, 1.0).is_err());
        assert!(RootBracket::new(2.0, 1.0).is_err());
        assert!(RootBracket::new(f64::NAN, 1.0).is_err());
    }
}
