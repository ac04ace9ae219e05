//! Numerical laboratory for the singular radial profiles of
//!
//! ```text
//!     -Δu = |x|^{-s} u^{2*(s)-1} - μ u^q     on B_1(0) \ {0}
//! ```
//!
//! with `n >= 3`, `0 < s < 2`, `q > 1`, `μ >= 0`. The change of variables
//! `v(t) = r^{(n-2)/2} u(r)`, `t = -ln r` turns the radial equation into a
//! near-autonomous second-order flow; this crate integrates that flow,
//! evaluates its conserved quantities and flux (Pohozaev-type) integrals,
//! computes every closed-form constant and threshold of the problem, and
//! classifies solution traces into the four singularity profiles
//! (removable, bounded-oscillation, multi-bump, non-differential).
//!
//! Modules:
//! - [`params`]: validated parameters, exponents, thresholds, recurrence
//!   constant
//! - [`numerics`]: root finding and adaptive quadrature kernels
//! - [`dynamics`]: the phase flow, its integrator, and closed-form orbits
//! - [`pohozaev`]: flux integrals, the two-radius identity, asymptotic limits
//! - [`classifier`]: trace analysis and the profile verdict
//! - [`cli`]: the command-line front end

// `!(x > 0.0)`-style guards are used deliberately so that NaN inputs fail
// validation; Kronrod node tables carry their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod classifier;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod params;
pub mod pohozaev;

pub use error::{Error, Result};
pub use params::{ExponentTable, ProblemParams, Regime, RegimeTag};
