//! Numerical toolkit for long-range quasi-periodic operators on `Z^d`.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`lattice`]: elementary and generalized elementary regions, widths,
//!   boundaries and disjoint tilings;
//! * [`operator`]: covariant long-range kernels, trigonometric-polynomial
//!   potentials sampled along shift orbits, and finite-volume assembly;
//! * [`greens`]: finite-volume Green's functions, good / strongly good box
//!   classification, bad-set scans and the resolvent-identity and
//!   Combes-Thomas probes;
//! * [`dynamics`]: time evolution on a truncation box, position moments
//!   (instantaneous and time-averaged, by time quadrature or by the energy
//!   integral of the resolvent), growth-exponent fits and Lyapunov exponents;
//! * [`arithmetic`]: discrepancy of shift orbits, Diophantine checks and
//!   continued fractions.
//!
//! Dense linear algebra and quadrature live in [`linalg`] and [`quadrature`].

#![no_std]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arithmetic;
pub mod dynamics;
mod error;
pub mod fit;
pub mod greens;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Golden-mean frequency `(sqrt(5) - 1) / 2`.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_8;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
