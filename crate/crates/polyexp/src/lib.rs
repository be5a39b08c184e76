//! Polynomial exponential densities for univariate Gaussian mixtures.
//!
//! A polynomial exponential density (PED) has the form
//! `p(x) = exp(theta_1 x + theta_2 x^2 + ... + theta_D x^D - F(theta))`,
//! an exponential family whose log-density is a polynomial. This crate
//! converts Gaussian mixture models into PEDs by moment matching (maximum
//! likelihood in the PED family) and by score matching, and uses the pair of
//! converted densities to compute a fast, deterministic approximation of the
//! Jeffreys divergence between mixtures — no sampling, no quadrature in the
//! final formula. Monte Carlo estimators, exact single-Gaussian formulas,
//! Hyvarinen divergences, and a closed-form one-dimensional family are
//! provided as independent cross-checks.
//!
//! Modules:
//! - [`gmm`]: mixture type, exact raw moments, sampling, Gaussian products.
//! - [`ped`]: the density type, its quadrature-based normalization and moments.
//! - [`estimators`]: moment-matching and score-matching conversion routines.
//! - [`maxent`]: iterative moment-to-natural-parameter inversion.
//! - [`sampling`]: rejection sampling from unnormalized PEDs.
//! - [`divergences`]: Jeffreys/KL estimators, the fast approximation, and
//!   Hyvarinen score divergences; order selection.
//! - [`mef`]: the closed-form `exp(theta |x|^D)` family used as an oracle.
//! - [`numerics`]: quadrature, Hankel solves, root isolation, double-double.

// Validation guards are written `!(x > 0.0)` on purpose: the negation is
// true for NaN as well as for zero and negative values, where the
// "simpler" `x <= 0.0` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Indexed loops in the moment/matrix assembly code mirror the subscripts
// of the linear systems they build; iterator rewrites would obscure them.
#![allow(clippy::needless_range_loop)]

pub mod divergences;
pub mod error;
pub mod estimators;
pub mod gmm;
pub mod maxent;
pub mod mef;
pub mod numerics;
pub mod ped;
pub mod sampling;
#[cfg(test)]
mod testdata;

pub use error::{Error, ErrorKind, Result};
