//! The special functions behind the sharp inequalities.
//!
//! `U` is the Poisson integral over `(0, ∞)` of the boundary data
//! `1 − ½|√t − 1/√t|`, pulled back to the slit half-plane through `L`;
//! below the real axis `U = 1 − |x|` and on the slit `U = 0`. Its scaled
//! version `U₁ᶜ(x, y) = U(cx, cy)/c` drives the `L¹` bound and the
//! piecewise quadratic `U₂` (with `U₂ᶜ = U₂(cx, cy)/c²`) drives the `L²` bound.

mod certificate;

pub use certificate::{certify_special_function, CertificateGrid, CertificateReport, PropertyCheck};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::map_l;
use crate::error::{domain, Error, Result};
use crate::quadrature::integrate;

/// Quadrature controls for the Poisson integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialFnConfig {
    abs_tol: f64,
    max_subdivisions: usize,
}

impl SpecialFnConfig {
    pub fn new(abs_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(1e-12..=1e-4).contains(&abs_tol) {
            return Err(Error::Config(format!("abs_tol {abs_tol:e} outside [1e-12, 1e-4]")));
        }
        if max_subdivisions < 64 {
            return Err(Error::Config(format!(
                "max_subdivisions {max_subdivisions} below 64"
            )));
        }
        Ok(Self {
            abs_tol,
            max_subdivisions,
        })
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn max_subdivisions(&self) -> usize {
        self.max_subdivisions
    }
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            max_subdivisions: 2000,
        }
    }
}

/// The four pieces of the Poisson integral after the substitutions
/// `t = s²` on `(0, 1)` and `t = 1/u²` on `(1, ∞)`:
///
/// * `mass_*`: `∫ dt/((α − t)² + β²)` over `(0, 1)` / `(1, ∞)`
/// * `abs_*`: `∫ |√t − 1/√t| dt/((α − t)² + β²)` over the same ranges
///
/// so that `𝒰(α, β) = (β/π)·(mass_lower + mass_upper − ½(abs_lower + abs_upper))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParts {
    pub mass_lower: f64,
    pub mass_upper: f64,
    pub abs_lower: f64,
    pub abs_upper: f64,
}

impl PoissonParts {
    pub fn value(&self, beta: f64) -> f64 {
        beta / PI
            * (self.mass_lower + self.mass_upper - 0.5 * (self.abs_lower + self.abs_upper))
    }

    /// Harmonic measure of `(0, ∞)` seen from `(α, β)`.
    pub fn harmonic_measure(&self, beta: f64) -> f64 {
        beta / PI * (self.mass_lower + self.mass_upper)
    }
}

const PART_REL_TOL: f64 = 1e-13;

fn breakpoints(peak: Option<f64>) -> Vec<f64> {
    match peak {
        Some(p) if p > 1e-6 && p < 1.0 - 1e-6 => vec![0.0, p, 1.0],
        _ => vec![0.0, 1.0],
    }
}

/// Evaluates the four substituted integrals, each to `tol`.
pub fn poisson_parts(alpha: f64, beta: f64, tol: f64, max_subdivisions: usize) -> Result<PoissonParts> {
    if !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(domain(format!("Poisson integral needs β > 0, got ({alpha}, {beta})")));
    }
    let b2 = beta * beta;
    // α − s² and αu² − 1 are factored around the peak so that the sharp
    // Lorentzian near the real axis is not drowned in cancellation noise
    let root = alpha.max(0.0).sqrt();
    let inv_root = if root > 0.0 { 1.0 / root } else { 0.0 };
    let lower_den = |s: f64| {
        let d = if root > 0.0 { (root - s) * (root + s) } else { alpha - s * s };
        d * d + b2
    };
    let upper_den = |u: f64| {
        let u2 = u * u;
        let d = if root > 0.0 { alpha * (u - inv_root) * (u + inv_root) } else { alpha * u2 - 1.0 };
        d * d + b2 * u2 * u2
    };
    // kernel peaks at t = α, i.e. s = √α or u = 1/√α
    let lower_pts = breakpoints((root > 0.0).then_some(root));
    let upper_pts = breakpoints((root > 0.0).then_some(inv_root));

    // close to the boundary of H the parts grow like 1/β while 𝒰 stays
    // bounded, so a relative floor keeps the requested absolute error on 𝒰
    let q = |f: &dyn Fn(f64) -> f64, pts: &[f64]| -> Result<f64> {
        integrate(f, pts, tol, PART_REL_TOL, max_subdivisions).map(|r| r.value)
    };
    Ok(PoissonParts {
        mass_lower: q(&|s| 2.0 * s / lower_den(s), &lower_pts)?,
        mass_upper: q(&|u| 2.0 * u / upper_den(u), &upper_pts)?,
        abs_lower: q(&|s| 2.0 * (1.0 - s * s) / lower_den(s), &lower_pts)?,
        abs_upper: q(&|u| 2.0 * (1.0 - u * u) / upper_den(u), &upper_pts)?,
    })
}

/// `𝒰(α, β) = (1/π) ∫₀^∞ β(1 − ½|√t − 1/√t|)/((α − t)² + β²) dt` for `β > 0`.
pub fn poisson_u(alpha: f64, beta: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    // the integrand is the sum of four parts; give each a quarter of the budget
    let tol = cfg.abs_tol * PI / (beta * 4.0 * 1.5);
    Ok(poisson_parts(alpha, beta, tol, cfg.max_subdivisions)?.value(beta))
}

/// `U(x, y)`: `1 − |x|` for `y ≤ 0`, `0` on the slit `{x = 0, y ≥ 1}`,
/// `𝒰(L(x + iy))` elsewhere.
pub fn u(x: f64, y: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    if y <= 0.0 {
        return Ok(1.0 - x.abs());
    }
    if x == 0.0 && y >= 1.0 {
        return Ok(0.0);
    }
    let z = map_l(Complex64::new(x, y));
    if !(z.im > 0.0) {
        // L lands on the boundary of H only for points on the slit
        return Ok(0.0);
    }
    poisson_u(z.re, z.im, cfg)
}

/// `P(c) = 1 − (2/π) arcsin c`.
pub fn p_closed(c: f64) -> Result<f64> {
    check_unit(c)?;
    Ok(1.0 - 2.0 / PI * c.asin())
}

/// `E(c) = (2/π) ln(1/c + √(1/c² − 1)) = (2/π) arcosh(1/c)`.
pub fn e_closed(c: f64) -> Result<f64> {
    check_unit(c)?;
    Ok(2.0 / PI * (1.0 / c).acosh())
}

/// `U(0, c) = P(c) − c·E(c)`.
pub fn u0c_closed(c: f64) -> Result<f64> {
    Ok(p_closed(c)? - c * e_closed(c)?)
}

fn check_unit(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(domain(format!("c = {c} outside (0, 1]")));
    }
    Ok(())
}

/// `U₁ᶜ(x, y) = U(cx, cy)/c`.
pub fn u1c(x: f64, y: f64, c: f64, cfg: &SpecialFnConfig) -> Result<f64> {
    check_unit(c)?;
    Ok(u(c * x, c * y, cfg)? / c)
}

/// A quadratic `a·x² + b·y² + d·y + e`, the shape of every piece of `U₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPiece {
    pub xx: f64,
    pub yy: f64,
    pub y: f64,
    pub constant: f64,
}

impl QuadraticPiece {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.xx * x * x + self.yy * y * y + self.y * y + self.constant
    }

    pub fn laplacian(&self) -> f64 {
        2.0 * (self.xx + self.yy)
    }

    pub fn second_x(&self) -> f64 {
        2.0 * self.xx
    }
}

/// The piece of `U₂` in force at height `y`:
/// `1 − x²` for `y ≤ 0`, `(1 − y)² − x²` for `0 < y ≤ 1`, `−x²` for `y > 1`.
pub fn u2_piece(y: f64) -> QuadraticPiece {
    if y <= 0.0 {
        QuadraticPiece { xx: -1.0, yy: 0.0, y: 0.0, constant: 1.0 }
    } else if y <= 1.0 {
        QuadraticPiece { xx: -1.0, yy: 1.0, y: -2.0, constant: 1.0 }
    } else {
        QuadraticPiece { xx: -1.0, yy: 0.0, y: 0.0, constant: 0.0 }
    }
}

pub fn u2(x: f64, y: f64) -> f64 {
    u2_piece(y).eval(x, y)
}

/// `U₂ᶜ(x, y) = U₂(cx, cy)/c²`.
pub fn u2c(x: f64, y: f64, c: f64) -> Result<f64> {
    check_unit(c)?;
    Ok(u2(c * x, c * y) / (c * c))
}

/// The minimizing `c` of `c ↦ c·x + U(0, c)`: the solution of `E(c) = x`,
/// `c = 2e^{πx/2}/(1 + e^{πx}) = 1/cosh(πx/2)`.
pub fn optimal_c_p1(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(domain(format!("norm {x} must be non-negative")));
    }
    let e = (-0.5 * PI * x).exp();
    Ok(2.0 * e / (1.0 + e * e))
}

/// `P(c)`, `E(c)` and `U(0, c)` for one `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormConstants {
    pub c: f64,
    pub p: f64,
    pub e: f64,
    pub u0c: f64,
}

pub fn closed_constants(c: f64) -> Result<ClosedFormConstants> {
    let p = p_closed(c)?;
    let e = e_closed(c)?;
    Ok(ClosedFormConstants { c, p, e, u0c: p - c * e })
}
