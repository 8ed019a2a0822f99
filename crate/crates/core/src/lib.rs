//! One-sided weak-type bounds for the conjugate function on the circle.
//!
//! The crate is organised bottom-up:
//!
//! * [`circle`]: uniform-grid circle functions, discrete Fourier analysis,
//!   the Hilbert transform (spectral multiplier and principal-value sum),
//!   norms and superlevel-set measures.
//! * [`conformal`]: principal square root and the explicit conformal maps
//!   between the disk, the upper half-plane, the slit half-plane and the strip.
//! * [`quadrature`]: adaptive Gauss–Kronrod integration.
//! * [`special`]: the Poisson-integral special function `U`, its scaled
//!   variants, the quadratic function `U₂`, closed forms and the numerical
//!   certificate of their majorization/concavity/superharmonicity properties.
//! * [`extremal`]: boundary functions built from the conformal maps that attain
//!   equality in the sharp inequalities.
//! * [`montecarlo`]: planar Brownian motion killed on the slit-domain or strip
//!   boundary, plus harmonic-measure oracles.
//! * [`verify`]: closed-form right-hand sides, weak-type constants and
//!   verification reports.

pub mod circle;
pub mod conformal;
pub mod error;
pub mod extremal;
pub mod montecarlo;
pub mod optimize;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use circle::{CircleFunction, CircleGrid, SpectralCoeffs};
pub use conformal::{ComplexValue, SlitDomainSpec, StripSpec};
pub use error::{Error, Result};
pub use extremal::{ExtremalKind, ExtremalPair};
pub use montecarlo::{SimDomain, SimResult, SimSpec};
pub use special::{ClosedFormConstants, SpecialFnConfig};
pub use verify::{VerificationEntry, VerificationReport, WeakTypeConstant};
