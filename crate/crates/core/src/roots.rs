//! Scalar root finding: Newton's method safeguarded by a bisection bracket.

use crate::error::{Error, Result};

/// Default cap on iterations.
pub const MAX_ITER: usize = 60;

/// Find a root of `f` inside `[lo, hi]`, where `f(lo)` and `f(hi)` have
/// opposite signs. `f` returns `(value, derivative)`.
///
/// Newton steps are taken while they stay inside the current bracket and
/// shrink the residual fast enough; otherwise the step falls back to bisection.
pub fn safeguarded_newton<F>(mut f: F, lo: f64, hi: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} have the same sign"
        )));
    }
    // orient so that f(a) < 0 < f(b)
    let (mut a, mut b) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x)?;
    for _ in 0..MAX_ITER {
        if fx.abs() < ftol || fx == 0.0 {
            return Ok(x);
        }
        let newton_leaves = ((x - b) * dfx - fx) * ((x - a) * dfx - fx) > 0.0;
        let too_slow = (2.0 * fx).abs() > (dx_old * dfx).abs();
        dx_old = dx;
        if newton_leaves || too_slow || !dfx.is_finite() || dfx == 0.0 {
            dx = 0.5 * (b - a);
            x = a + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        let (nfx, ndfx) = f(x)?;
        fx = nfx;
        dfx = ndfx;
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300)
            || dx.abs() <= f64::EPSILON * x.abs().max(1e-300)
        {
            // bracket or step at rounding level: residual is as small as it gets
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        what: "safeguarded Newton",
        iterations: MAX_ITER,
        residual: fx.abs(),
    })
}

/// Plain bisection on a sign change; returns the midpoint once the bracket is
/// below `xtol` or `|f| < ftol`.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "f({lo}) = {flo:e} and f({hi}) = {fhi:e} have the same sign"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm.abs() < ftol || (b - a).abs() < xtol || m == a || m == b {
            return Ok(m);
        }
        if fm.signum() == flo.signum() {
            a = m;
            flo = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = safeguarded_newton(|x| Ok((x * x * x - 2.0, 3.0 * x * x)), 0.0, 3.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn falls_back_on_flat_derivative() {
        // Newton from the midpoint would jump far outside the bracket
        let r = safeguarded_newton(|x| Ok((x.atan(), 1.0 / (1.0 + x * x))), -1.0, 20.0, 1e-14).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn rejects_missing_sign_change() {
        assert!(matches!(
            safeguarded_newton(|x| Ok((x * x + 1.0, 2.0 * x)), -1.0, 1.0, 1e-12),
            Err(Error::Bracket(_))
        ));
        assert!(bisect(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 0.0).is_err());
    }

    #[test]
    fn bisection_converges() {
        let r = bisect(|x| Ok(x.cos() - x), 0.0, 1.0, 1e-15, 0.0).unwrap();
        assert!((r.cos() - r).abs() < 1e-14);
    }
}
