//! Bracketing and Brent root finding for monotone increasing functions on an
//! MGF domain.

use crate::dist::MgfDomain;
use crate::error::{EivError, Result};

/// Bracket endpoints stay this far inside a finite domain boundary.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Expansion toward an infinite boundary gives up past this magnitude.
const MAX_REACH: f64 = 1e8;
const MAX_BRENT_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Finds an interval `[a, b]` with `f(a) <= 0 <= f(b)` for an increasing `f`,
/// starting at `start` and doubling the step toward the domain boundary on the
/// side where the root must lie.
pub fn bracket_increasing<F>(f: &mut F, start: f64, dom: MgfDomain) -> Result<(f64, f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(start)?;
    if f0 == 0.0 {
        return Ok((start, start, f0, f0));
    }
    // Root lies above start when f(start) < 0.
    let up = f0 < 0.0;
    let limit = if up {
        if dom.hi.is_finite() {
            dom.hi - BOUNDARY_MARGIN
        } else {
            MAX_REACH
        }
    } else if dom.lo.is_finite() {
        dom.lo + BOUNDARY_MARGIN
    } else {
        -MAX_REACH
    };

    let mut prev = (start, f0);
    let mut step = 1.0;
    loop {
        let cand = if up {
            (start + step).min(limit)
        } else {
            (start - step).max(limit)
        };
        let fc = f(cand)?;
        if (fc >= 0.0) == up {
            return Ok(if up {
                (prev.0, cand, prev.1, fc)
            } else {
                (cand, prev.0, fc, prev.1)
            });
        }
        if cand == limit {
            return Err(EivError::NoRoot(format!(
                "no sign change between {start} and {limit}"
            )));
        }
        prev = (cand, fc);
        step *= 2.0;
    }
}

/// Brent's method on a sign-changing bracket, stopping once `|f| <= ftol` or
/// the bracket can no longer shrink in double precision.
pub fn brent<F>(f: &mut F, a: f64, b: f64, fa: f64, fb: f64, ftol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(EivError::NoRoot(format!(
            "f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )));
    }

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=MAX_BRENT_ITER {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * f64::MIN_POSITIVE;
        let xm = 0.5 * (c - b);
        if fb.abs() <= ftol || xm.abs() <= tol1 {
            return Ok(Root {
                x: b,
                fx: fb,
                iterations: iter,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when a == c.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
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
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    Ok(Root {
        x: b,
        fx: fb,
        iterations: MAX_BRENT_ITER,
    })
}

/// Unique root of an increasing `f` on `dom`, searched outward from `start`.
pub fn solve_increasing<F>(mut f: F, start: f64, dom: MgfDomain, ftol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a, b, fa, fb) = bracket_increasing(&mut f, start, dom)?;
    brent(&mut f, a, b, fa, fb, ftol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_root_of_two() {
        let r =
            solve_increasing(|x| Ok(x * x * x - 2.0), 0.0, MgfDomain::REAL_LINE, 1e-14).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn brackets_below_start() {
        let r = solve_increasing(|x| Ok(x + 37.5), 0.0, MgfDomain::REAL_LINE, 1e-13).unwrap();
        assert!((r.x + 37.5).abs() < 1e-12);
    }

    #[test]
    fn respects_finite_boundary() {
        // 1/(1 - x) - 1e6 has its root just below the boundary at 1.
        let dom = MgfDomain {
            lo: f64::NEG_INFINITY,
            hi: 1.0,
        };
        let r = solve_increasing(|x| Ok(1.0 / (1.0 - x) - 1e6), 0.0, dom, 1e-12).unwrap();
        assert!((r.x - (1.0 - 1e-6)).abs() < 1e-13);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let dom = MgfDomain {
            lo: f64::NEG_INFINITY,
            hi: 2.0,
        };
        let err = solve_increasing(|x| Ok(x - 5.0), 0.0, dom, 1e-12).unwrap_err();
        assert!(matches!(err, EivError::NoRoot(_)));
        let err = solve_increasing(|x| Ok(x.atan() + 3.0), 0.0, MgfDomain::REAL_LINE, 1e-12);
        assert!(err.is_err());
    }

    #[test]
    fn root_at_start() {
        let r = solve_increasing(Ok, 0.0, MgfDomain::REAL_LINE, 1e-12).unwrap();
        assert_eq!(r.x, 0.0);
    }
}
