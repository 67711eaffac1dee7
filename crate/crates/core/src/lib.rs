//! Certified numerics for joint and double coboundaries of commuting circle
//! rotations.
//!
//! The crate is organised bottom-up:
//!
//! * [`interval`]: outward-rounded dyadic interval arithmetic.
//! * [`diophantine`]: quadratic surds, continued fractions and simultaneous
//!   approximation searches.
//! * [`fourier`]: sparse Fourier series and the rotation/small-divisor
//!   operators acting on them.
//! * [`certificate`]: chains of certified interval comparisons.
//! * [`constructions`]: certified joint-not-double coboundary examples and
//!   sufficient-condition checkers.
//! * [`spectral`]: atomic spectral measures and ergodic-rate diagnostics.
//! * [`shift`]: the two-parameter shift on `l_p(N^2)`.

pub mod certificate;
pub mod constructions;
pub mod diophantine;
pub mod error;
pub mod fourier;
pub mod interval;
pub mod shift;
pub mod spectral;

pub use error::{Error, Result};
pub use interval::{Enclosure, Interval};
