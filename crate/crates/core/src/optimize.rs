//! One-dimensional maximization helpers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<(f64, f64)> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::OptimizationFailure(format!("bad bracket [{a}, {b}]")));
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol * (1.0 + x1.abs().max(x2.abs())) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if !(b - a).is_finite() || (b - a).abs() > tol * (1.0 + x1.abs().max(x2.abs())) * 10.0 {
        return Err(Error::OptimizationFailure(format!(
            "golden section did not converge in {max_iter} iterations"
        )));
    }
    let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if !fx.is_finite() {
        return Err(Error::OptimizationFailure(format!("objective not finite at {x}")));
    }
    Ok((x, fx))
}

/// Maximizes `f(x)` over `x > 0` by golden section in `ln x`, after growing a
/// bracket `[x₀/e^k, x₀·e^k]` around `x₀` until the interior sample beats both
/// ends. Fails if the bracket runs past `[1e-300, 1e300]`.
pub fn maximize_positive<F: Fn(f64) -> f64>(f: F, x0: f64, tol: f64) -> Result<(f64, f64)> {
    let g = |s: f64| f(s.exp());
    let center = x0.ln();
    let mut width = 1.0;
    loop {
        let (lo, hi) = (center - width, center + width);
        if lo < -690.0 || hi > 690.0 {
            return Err(Error::OptimizationFailure(
                "no interior maximum found (bracket ran to the representable range)".into(),
            ));
        }
        let (fl, fc, fh) = (g(lo), g(center), g(hi));
        if fc >= fl && fc >= fh {
            let (s, v) = golden_max(g, lo, hi, tol, 400)?;
            return Ok((s.exp(), v));
        }
        width *= 2.0;
    }
}
