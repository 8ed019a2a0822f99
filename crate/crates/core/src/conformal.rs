//! Complex square root with the branch `arg ∈ (−π, π]` and the explicit
//! conformal maps between the unit disk, the upper half-plane `H`, the slit
//! half-plane `H ∖ {ai : a ≥ 1/c}` and the strip `{0 < Im < 1/c}`.
//!
//! None of the maps is ever evaluated at infinity. Points closer than
//! [`BOUNDARY_GUARD`] to the edge of an open domain are rejected.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type ComplexValue = Complex64;

/// Minimum accepted distance from the boundary of an open domain.
pub const BOUNDARY_GUARD: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn finite(z: Complex64, what: &str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(domain(format!("{what}: non-finite input {z}")))
    }
}

/// `√z = √r e^{iθ/2}` for `z = r e^{iθ}`, `θ ∈ (−π, π]`.
///
/// The negative real axis (including `−x − 0i`) takes `θ = π`, so
/// `sqrt_principal(−1) = i`.
pub fn sqrt_principal(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        return if z.re >= 0.0 {
            Complex64::new(z.re.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-z.re).sqrt())
        };
    }
    let r = z.norm();
    // avoid cancellation: compute the larger component first
    if z.re >= 0.0 {
        let a = (0.5 * (r + z.re)).sqrt();
        Complex64::new(a, z.im / (2.0 * a))
    } else {
        let b = (0.5 * (r - z.re)).sqrt().copysign(z.im);
        Complex64::new(z.im / (2.0 * b), b)
    }
}

/// `K(z) = (√z − 1/√z)/2`; maps `H` onto `H ∖ {ai : a ≥ 1}`.
pub fn map_k(z: Complex64) -> Result<Complex64> {
    let z = finite(z, "K")?;
    if z.norm() < BOUNDARY_GUARD {
        return Err(domain("K is singular at z = 0"));
    }
    let s = sqrt_principal(z);
    Ok(0.5 * (s - s.inv()))
}

/// `L(z) = 2z² + 1 + 2z√(z² + 1)`, the inverse of [`map_k`].
pub fn map_l(z: Complex64) -> Complex64 {
    let z2 = z * z;
    2.0 * z2 + 1.0 + 2.0 * z * sqrt_principal(z2 + 1.0)
}

/// `H ∖ {ai : a ≥ 1/c}` for `0 < c ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitDomainSpec {
    c: f64,
}

impl SlitDomainSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(domain(format!("slit parameter c = {c} outside (0, 1]")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Height of the slit tip, `1/c`.
    pub fn tip(&self) -> f64 {
        1.0 / self.c
    }

    pub fn contains(&self, w: Complex64) -> bool {
        w.im > 0.0 && !(w.re.abs() < BOUNDARY_GUARD && w.im >= self.tip() - BOUNDARY_GUARD)
    }
}

/// The strip `{0 < Im < 1/c}` for `0 < c < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    c: f64,
}

impl StripSpec {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(domain(format!("strip parameter c = {c} outside (0, 1)")));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn height(&self) -> f64 {
        1.0 / self.c
    }
}

/// `L(ci) = (1 − 2c², 2c√(1 − c²))`, the image of the starting point `(0, 1)`.
fn slit_center(c: f64) -> Result<Complex64> {
    let center = map_l(Complex64::new(0.0, c));
    if !(center.im > 0.0) {
        return Err(domain(format!("Im L(ci) = {} for c = {c}", center.im)));
    }
    Ok(center)
}

/// The homography `z ↦ −2((z − Re L(ci))/Im L(ci) + i)⁻¹ − i` from the closed
/// upper half-plane onto the closed unit disk; `L(ci) ↦ 0`.
pub fn halfplane_to_disk(z: Complex64, c: f64) -> Result<Complex64> {
    let z = finite(z, "half-plane to disk")?;
    if z.im < 0.0 {
        return Err(domain(format!("{z} lies below the real axis")));
    }
    let center = slit_center(c)?;
    let w = (z - center.re) / center.im + I;
    Ok(-2.0 * w.inv() - I)
}

/// Inverse homography, `ζ ↦ A + B(−2/(ζ + i) − i)` with `A + iB = L(ci)`.
pub fn disk_to_halfplane(zeta: Complex64, c: f64) -> Result<Complex64> {
    let zeta = finite(zeta, "disk to half-plane")?;
    if zeta.norm() > 1.0 {
        return Err(domain(format!("|ζ| = {} > 1", zeta.norm())));
    }
    let center = slit_center(c)?;
    let d = zeta + I;
    if d.norm() == 0.0 {
        return Err(domain("ζ = −i is the preimage of infinity"));
    }
    Ok(center.re + center.im * (-2.0 * d.inv() - I))
}

/// `w ↦ L(c·w)`, from the slit half-plane onto `H`. The real axis is part of
/// the accepted closure; the slit is not.
pub fn slit_uniformizer(w: Complex64, spec: SlitDomainSpec) -> Result<Complex64> {
    let w = finite(w, "slit uniformizer")?;
    if w.im < 0.0 {
        return Err(domain(format!("{w} lies below the real axis")));
    }
    if w.re.abs() < BOUNDARY_GUARD && w.im >= spec.tip() - BOUNDARY_GUARD {
        return Err(domain(format!("{w} lies on the slit")));
    }
    Ok(map_l(spec.c * w))
}

/// `z ↦ K(z)/c`, from `H` onto the slit half-plane.
pub fn slit_uniformizer_inverse(z: Complex64, spec: SlitDomainSpec) -> Result<Complex64> {
    Ok(map_k(z)? / spec.c)
}

/// `N`: the slit half-plane onto the unit disk with `N(i) = 0`.
pub fn slitdomain_to_disk(w: Complex64, spec: SlitDomainSpec) -> Result<Complex64> {
    halfplane_to_disk(slit_uniformizer(w, spec)?, spec.c)
}

/// `N⁻¹`: the unit disk onto the slit half-plane, `0 ↦ i`.
pub fn disk_to_slitdomain(zeta: Complex64, spec: SlitDomainSpec) -> Result<Complex64> {
    let zeta = finite(zeta, "disk to slit domain")?;
    if zeta.norm() > 1.0 - BOUNDARY_GUARD {
        return Err(domain(format!("|ζ| = {} is not inside the unit disk", zeta.norm())));
    }
    slit_uniformizer_inverse(disk_to_halfplane(zeta, spec.c)?, spec)
}

/// `e^{iπc}`, the half-plane image of `ζ = 0` under the strip's Möbius factor.
fn strip_anchor(c: f64) -> Complex64 {
    Complex64::from_polar(1.0, PI * c)
}

/// Disk onto `H` with `0 ↦ a = e^{iπc}` and `1 ↦ ∞`: `ζ ↦ (a − āζ)/(1 − ζ)`.
pub fn strip_mobius(zeta: Complex64, c: f64) -> Result<Complex64> {
    let d = 1.0 - zeta;
    if d.norm() == 0.0 {
        return Err(domain("ζ = 1 is the preimage of infinity"));
    }
    let a = strip_anchor(c);
    Ok((a - a.conj() * zeta) / d)
}

/// Disk onto the strip `{0 < Im < 1/c}`: the Möbius factor [`strip_mobius`]
/// followed by `z ↦ Log(z)/(πc)`; `0 ↦ i`.
///
/// The rotation of the Möbius factor is fixed by sending `ζ = 1` to the
/// half-plane point at infinity (the right end of the strip).
pub fn disk_to_strip(zeta: Complex64, spec: StripSpec) -> Result<Complex64> {
    let zeta = finite(zeta, "disk to strip")?;
    if zeta.norm() > 1.0 - BOUNDARY_GUARD {
        return Err(domain(format!("|ζ| = {} is not inside the unit disk", zeta.norm())));
    }
    let z = strip_mobius(zeta, spec.c)?;
    Ok(z.ln() / (PI * spec.c))
}

/// Inverse of [`disk_to_strip`].
pub fn strip_to_disk(w: Complex64, spec: StripSpec) -> Result<Complex64> {
    let w = finite(w, "strip to disk")?;
    if !(w.im > BOUNDARY_GUARD && w.im < spec.height() - BOUNDARY_GUARD) {
        return Err(domain(format!("{w} is not inside the strip")));
    }
    let z = (PI * spec.c * w).exp();
    let a = strip_anchor(spec.c);
    Ok((z - a) / (z - a.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn sqrt_branch() {
        assert_eq!(sqrt_principal(c(-1.0, 0.0)), c(0.0, 1.0));
        assert_eq!(sqrt_principal(c(-1.0, -0.0)), c(0.0, 1.0));
        assert_eq!(sqrt_principal(c(4.0, 0.0)), c(2.0, 0.0));
        assert!(close(sqrt_principal(c(0.0, 2.0)), c(1.0, 1.0), 1e-15));
        // just below the cut flips to the lower half
        assert!(sqrt_principal(c(-1.0, -1e-300)).im < 0.0);
        assert_eq!(sqrt_principal(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn k_examples() {
        assert!(close(map_k(c(1.0, 0.0)).unwrap(), c(0.0, 0.0), 1e-15));
        assert!(close(map_k(c(-1.0, 0.0)).unwrap(), c(0.0, 1.0), 1e-15));
        assert!(close(map_k(c(4.0, 0.0)).unwrap(), c(0.75, 0.0), 1e-15));
        assert!(map_k(c(0.0, 0.0)).is_err());
        assert!(map_k(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn l_examples() {
        assert!(close(map_l(c(0.0, 0.0)), c(1.0, 0.0), 1e-15));
        let half = map_l(c(0.0, 0.5));
        assert!(close(half, c(0.5, 3.0_f64.sqrt() / 2.0), 1e-15));
    }

    #[test]
    fn homography_centre_and_boundary() {
        let cc = 0.5;
        let center = map_l(c(0.0, cc));
        assert!(halfplane_to_disk(center, cc).unwrap().norm() < 1e-15);
        for x in [-50.0, -1.0, 0.0, 0.3, 7.0] {
            let z = halfplane_to_disk(c(x, 0.0), cc).unwrap();
            assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(halfplane_to_disk(c(0.0, 1.0), cc).unwrap().norm() < 1.0);
        assert!(halfplane_to_disk(c(0.0, -1.0), cc).is_err());
        assert!(halfplane_to_disk(c(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn slit_uniformizer_examples() {
        let spec = SlitDomainSpec::new(0.5).unwrap();
        let z = slit_uniformizer(c(0.0, 1.0), spec).unwrap();
        assert!(close(z, c(0.5, 3.0_f64.sqrt() / 2.0), 1e-15));
        for x in [-3.0, -0.5, 0.1, 2.0] {
            let z = slit_uniformizer(c(x, 0.0), spec).unwrap();
            assert!(z.re > 0.0 && z.im.abs() < 1e-14, "{x} -> {z}");
        }
        assert!(slit_uniformizer(c(0.0, 2.5), spec).is_err());
        assert!(slit_uniformizer(c(0.3, -0.1), spec).is_err());
        let w = c(0.7, 1.3);
        let back = slit_uniformizer_inverse(slit_uniformizer(w, spec).unwrap(), spec).unwrap();
        assert!(close(back, w, 1e-12));
    }

    #[test]
    fn disk_to_slitdomain_centre_and_guard() {
        let spec = SlitDomainSpec::new(0.5).unwrap();
        assert!(close(disk_to_slitdomain(c(0.0, 0.0), spec).unwrap(), c(0.0, 1.0), 1e-14));
        assert!(disk_to_slitdomain(c(1.0, 0.0), spec).is_err());
        assert!(disk_to_slitdomain(c(0.6, 0.8), spec).is_err());
        let degenerate = SlitDomainSpec::new(1.0).unwrap();
        assert!(disk_to_slitdomain(c(0.1, 0.0), degenerate).is_err());
    }

    #[test]
    fn disk_to_strip_centre() {
        let spec = StripSpec::new(0.5).unwrap();
        assert!(close(disk_to_strip(c(0.0, 0.0), spec).unwrap(), c(0.0, 1.0), 1e-15));
        let spec = StripSpec::new(0.3).unwrap();
        assert!(close(disk_to_strip(c(0.0, 0.0), spec).unwrap(), c(0.0, 1.0), 1e-14));
        assert!(disk_to_strip(c(0.0, 1.0), spec).is_err());
        assert!(StripSpec::new(1.0).is_err());
        assert!(SlitDomainSpec::new(0.0).is_err());
    }
}
