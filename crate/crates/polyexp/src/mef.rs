//! The monomial exponential family `p(x) ∝ exp(θ xᴰ)` on the real line for
//! even order `D`: closed-form log-normalizer, its convex conjugate, dual
//! parameter maps, Kullback–Leibler divergence in three equivalent closed
//! forms, differential entropy, and the maximum-entropy upper bound it
//! induces on arbitrary densities with a matched `E[|x|ᴰ]` moment.
//!
//! Everything here is exact up to `ln Γ` evaluations: for `θ < 0` the
//! normalizer is `∫ exp(θ xᴰ) dx = 2 Γ(1/D) / (D (−θ)^{1/D})`, so the
//! log-normalizer, its gradient `η = E[xᴰ] = −1/(Dθ)`, and the conjugate
//! pair are all elementary. `D = 2` recovers the centered normal family,
//! which several tests use as an external check.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::gmm::Gmm;

/// Validates an even order `D ≥ 2`.
fn check_order(d: usize) -> Result<()> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "monomial exponential order must be a positive even integer, got {d}"
        )));
    }
    Ok(())
}

/// Validates a natural parameter `θ < 0`.
fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta >= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "monomial exponential natural parameter must be finite and negative, got {theta}"
        )));
    }
    Ok(())
}

/// Validates a moment parameter `η > 0`.
fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "monomial exponential moment parameter must be finite and positive, got {eta}"
        )));
    }
    Ok(())
}

/// `log(2 Γ(1/D) / D)`, the θ-independent part of the log-normalizer.
fn log_gamma_const(d: usize) -> f64 {
    let dd = d as f64;
    std::f64::consts::LN_2 + ln_gamma(1.0 / dd) - dd.ln()
}

/// Log-normalizer `F_D(θ) = log ∫ exp(θ xᴰ) dx = log(2Γ(1/D)/D) − (1/D) log(−θ)`.
///
/// # Errors
///
/// [`Error::InvalidParameter`] if `D` is odd or zero, or if `θ ≥ 0` (the
/// density is then not normalizable).
pub fn mef_f(theta: f64, d: usize) -> Result<f64> {
    check_order(d)?;
    check_theta(theta)?;
    Ok(log_gamma_const(d) - (-theta).ln() / d as f64)
}

/// Gradient of the log-normalizer: the mean power moment
/// `η = ∇F_D(θ) = E[xᴰ] = −1/(Dθ) > 0`.
pub fn mef_grad_f(theta: f64, d: usize) -> Result<f64> {
    check_order(d)?;
    check_theta(theta)?;
    Ok(-1.0 / (d as f64 * theta))
}

/// Convex conjugate `F*_D(η) = sup_θ { θη − F_D(θ) }
/// = −log(2Γ(1/D)/D) − (1/D)(1 + log(Dη))` for `η > 0`.
///
/// `−F*_D(η)` is the differential entropy of the family member with mean
/// power moment `η`, and an upper bound on the entropy of *any* density
/// with `E[|x|ᴰ] = η` (see [`maxent_entropy_bound`]).
pub fn mef_f_dual(eta: f64, d: usize) -> Result<f64> {
    check_order(d)?;
    check_eta(eta)?;
    let dd = d as f64;
    Ok(-log_gamma_const(d) - (1.0 + (dd * eta).ln()) / dd)
}

/// Gradient of the conjugate: the inverse parameter map `θ = −1/(Dη)`.
pub fn mef_grad_f_dual(eta: f64, d: usize) -> Result<f64> {
    check_order(d)?;
    check_eta(eta)?;
    Ok(-1.0 / (d as f64 * eta))
}

/// Itakura–Saito divergence `D_IS[p : q] = p/q − log(p/q) − 1` between two
/// positive scalars. Nonnegative, zero iff `p = q`, and scale-free:
/// `D_IS[λp : λq] = D_IS[p : q]`.
pub fn itakura_saito(p: f64, q: f64) -> Result<f64> {
    if !(p.is_finite() && q.is_finite()) || p <= 0.0 || q <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Itakura-Saito arguments must be finite and positive, got ({p}, {q})"
        )));
    }
    let r = p / q;
    Ok(r - r.ln() - 1.0)
}

/// Kullback–Leibler divergence between two members of the order-`D` family,
/// `KL[p_{θ1} : p_{θ2}] = (1/D) · D_IS[θ2 : θ1]`.
///
/// For `D = 2` this is the divergence between centered normals with
/// `θ = −1/(2σ²)`.
pub fn mef_kl(theta1: f64, theta2: f64, d: usize) -> Result<f64> {
    check_order(d)?;
    check_theta(theta1)?;
    check_theta(theta2)?;
    // D_IS depends only on the ratio of its arguments, so evaluating it on
    // the (positive) negated parameters leaves the value unchanged.
    Ok(itakura_saito(-theta2, -theta1)? / d as f64)
}

/// The same divergence as [`mef_kl`] written as the Bregman divergence of
/// the log-normalizer with swapped arguments,
/// `B_F(θ2 : θ1) = F(θ2) − F(θ1) − (θ2 − θ1) ∇F(θ1)`.
pub fn mef_kl_bregman(theta1: f64, theta2: f64, d: usize) -> Result<f64> {
    let f1 = mef_f(theta1, d)?;
    let f2 = mef_f(theta2, d)?;
    let eta1 = mef_grad_f(theta1, d)?;
    Ok(f2 - f1 - (theta2 - theta1) * eta1)
}

/// The same divergence as [`mef_kl`] written in the mixed
/// Legendre–Fenchel form `F(θ2) + F*(η1) − θ2 η1` with `η1 = ∇F(θ1)`.
pub fn mef_kl_fenchel(theta1: f64, theta2: f64, d: usize) -> Result<f64> {
    let f2 = mef_f(theta2, d)?;
    let eta1 = mef_grad_f(theta1, d)?;
    Ok(f2 + mef_f_dual(eta1, d)? - theta2 * eta1)
}

/// Differential entropy `h[p_θ] = −F*_D(∇F_D(θ)) = F_D(θ) − θ ∇F_D(θ)`.
///
/// For `D = 2, θ = −1/(2σ²)` this is the normal entropy `½ log(2πeσ²)`.
pub fn mef_entropy(theta: f64, d: usize) -> Result<f64> {
    let eta = mef_grad_f(theta, d)?;
    Ok(-mef_f_dual(eta, d)?)
}

/// Maximum-entropy upper bound induced by the order-`D` family: any density
/// `r` with `E_r[|x|ᴰ] = η` satisfies `h[r] ≤ −F*_D(η)`, with equality iff
/// `r` is the family member with that moment. Evaluates the bound at the
/// mixture's own moment (`|x|ᴰ = xᴰ` since `D` is even).
pub fn maxent_entropy_bound(m: &Gmm, d: usize) -> Result<f64> {
    check_order(d)?;
    let moment = m.raw_moments(d)?[d];
    Ok(-mef_f_dual(moment, d)?)
}
