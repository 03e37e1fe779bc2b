//! One-dimensional maximisation and root bracketing.

use crate::error::Result;

const GOLDEN_TOLERANCE: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;

/// Maximiser and maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
) -> Result<(f64, f64)> {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - ratio * (b - a), a + ratio * (b - a));
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > GOLDEN_TOLERANCE {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Root of `f` on `[a, b]` where `f(a)` has sign `sign_a` and `f(b)` the
/// opposite; iterates until the bracket stops shrinking.
pub(crate) fn bisect<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    sign_a: f64,
) -> Result<f64> {
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == sign_a.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Central difference with step `h`, one-sided at the ends of `[0, 1]`.
pub(crate) fn unit_slope<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    let lo = (x - h).max(0.0);
    let hi = (x + h).min(1.0);
    Ok((f(hi)? - f(lo)?) / (hi - lo))
}
