//! Polynomial exponential densities.
//!
//! A density of order `D` is `p_theta(x) = exp(P(x) - F(theta))` with
//! `P(x) = theta_1 x + ... + theta_D x^D`. The log-partition `F` and the raw
//! moments have no closed form for `D >= 4`, so both are computed by adaptive
//! quadrature over a bracket derived from `P` itself: the window where `P`
//! stays within a fixed drop of its maximum. All evaluation is stabilized by
//! subtracting the maximum of `P` before exponentiating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::integrate::{adaptive_simpson, QuadratureSettings, WindowPolicy};
use crate::numerics::poly;

/// Where the density lives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Support {
    /// The whole real line.
    #[default]
    #[serde(rename = "real")]
    RealLine,
    /// A finite interval `(a, b)`.
    #[serde(rename = "interval")]
    Interval { a: f64, b: f64 },
}

impl Support {
    fn validate(&self) -> Result<()> {
        if let Support::Interval { a, b } = self {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidPed(format!(
                    "interval support [{a}, {b}] must be finite and increasing"
                )));
            }
        }
        Ok(())
    }
}

/// Serialized form of a [`PedNatural`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PedSchema {
    pub order: usize,
    pub theta: Vec<f64>,
    pub support: Support,
}

/// Natural parametrization: the coefficient vector `theta_1..theta_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PedSchema", into = "PedSchema")]
pub struct PedNatural {
    theta: Vec<f64>,
    support: Support,
}

impl TryFrom<PedSchema> for PedNatural {
    type Error = Error;
    fn try_from(schema: PedSchema) -> Result<Self> {
        if schema.order != schema.theta.len() {
            return Err(Error::InvalidPed(format!(
                "order field {} does not match {} coefficients",
                schema.order,
                schema.theta.len()
            )));
        }
        PedNatural::new(schema.theta, schema.support)
    }
}

impl From<PedNatural> for PedSchema {
    fn from(p: PedNatural) -> Self {
        PedSchema {
            order: p.theta.len(),
            theta: p.theta,
            support: p.support,
        }
    }
}

impl PedNatural {
    /// Build a model from natural coefficients.
    ///
    /// On the real line the order must be even (an odd-degree polynomial can
    /// never be integrable, so that is rejected structurally). The *sign* of
    /// the leading coefficient is not rejected here: score matching and the
    /// dot-product divergence approximations are normalization-free and
    /// legitimately produce and consume fits whose leading coefficient is
    /// non-negative. Such a "formal" fit is flagged by [`is_integrable`]
    /// returning false, and every operation that needs a finite normalizer
    /// ([`log_partition`], [`moments_numeric`], sampling) fails loudly with
    /// a divergent-partition error instead of silently truncating.
    ///
    /// [`is_integrable`]: PedNatural::is_integrable
    /// [`log_partition`]: PedNatural::log_partition
    /// [`moments_numeric`]: PedNatural::moments_numeric
    pub fn new(theta: Vec<f64>, support: Support) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidPed("order must be at least 1".into()));
        }
        if let Some(bad) = theta.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidPed(format!("non-finite coefficient {bad}")));
        }
        support.validate()?;
        if support == Support::RealLine && !theta.len().is_multiple_of(2) {
            return Err(Error::InvalidPed(format!(
                "odd order {} is not integrable on the real line",
                theta.len()
            )));
        }
        Ok(Self { theta, support })
    }

    /// Whether `exp(P)` has finite mass over the support: always true on a
    /// finite interval, and true on the real line exactly when the leading
    /// coefficient is strictly negative.
    pub fn is_integrable(&self) -> bool {
        match self.support {
            Support::Interval { .. } => true,
            Support::RealLine => self.theta[self.theta.len() - 1] < 0.0,
        }
    }

    /// Order `D`.
    pub fn order(&self) -> usize {
        self.theta.len()
    }

    /// Coefficients `theta_1..theta_D`.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// `P(x) = sum_i theta_i x^i`, by Horner's scheme.
    pub fn log_unnormalized(&self, x: f64) -> f64 {
        let mut acc = 0.0_f64;
        for &c in self.theta.iter().rev() {
            acc = acc.mul_add(x, c);
        }
        acc * x
    }

    /// `(log p)'(x) = sum_i i theta_i x^{i-1}`.
    pub fn score(&self, x: f64) -> f64 {
        let mut acc = 0.0_f64;
        for (i, &c) in self.theta.iter().enumerate().rev() {
            acc = acc.mul_add(x, (i + 1) as f64 * c);
        }
        acc
    }

    /// Stationary points of `P` inside the support, ascending.
    pub fn stationary_points(&self) -> Vec<f64> {
        let dcoeffs: Vec<f64> = self
            .theta
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1) as f64 * c)
            .collect();
        let roots = poly::real_roots(&dcoeffs);
        match self.support {
            Support::RealLine => roots,
            Support::Interval { a, b } => {
                roots.into_iter().filter(|r| (a..=b).contains(r)).collect()
            }
        }
    }

    /// Global maximizer and maximum of `P` over the support.
    pub fn peak(&self) -> (f64, f64) {
        let mut candidates = self.stationary_points();
        if let Support::Interval { a, b } = self.support {
            candidates.push(a);
            candidates.push(b);
        }
        if candidates.is_empty() {
            // Real line with no stationary point cannot happen for integrable
            // orders (the derivative has odd degree), but stay total.
            candidates.push(0.0);
        }
        candidates
            .into_iter()
            .map(|x| (x, self.log_unnormalized(x)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite polynomial values"))
            .expect("nonempty candidates")
    }

    /// Integration window: all `x` in the support with
    /// `P(x) >= max P - drop`, padded slightly for safety. On a finite
    /// interval the window is the interval itself.
    pub fn bracket(&self, drop: f64) -> (f64, f64) {
        match self.support {
            Support::Interval { a, b } => (a, b),
            Support::RealLine => {
                let (x_peak, p_max) = self.peak();
                // Roots of P(x) - (p_max - drop): the outermost pair brackets
                // the superlevel set because P tends to -inf on both sides.
                let mut shifted = vec![0.0; self.theta.len() + 1];
                shifted[0] = -(p_max - drop);
                shifted[1..].copy_from_slice(&self.theta);
                let roots = poly::real_roots(&shifted);
                let (mut lo, mut hi) = match (roots.first(), roots.last()) {
                    (Some(&lo), Some(&hi)) if lo < hi => (lo, hi),
                    // Degenerate fallback: widen around the peak.
                    _ => (x_peak - 1.0, x_peak + 1.0),
                };
                let pad = 1e-3 * (hi - lo).max(1e-6);
                lo -= pad;
                hi += pad;
                (lo, hi)
            }
        }
    }

    fn integrability_check(&self) -> Result<()> {
        if !self.is_integrable() {
            let d = self.theta.len();
            return Err(Error::DivergentPartition(format!(
                "exp of a degree-{d} polynomial with leading coefficient {} has infinite mass on the real line",
                self.theta[d - 1]
            )));
        }
        Ok(())
    }

    fn window(&self, settings: &QuadratureSettings) -> (f64, f64) {
        match settings.window {
            WindowPolicy::FixedClamp { a, b } => match self.support {
                Support::RealLine => (a, b),
                Support::Interval { a: sa, b: sb } => (a.max(sa), b.min(sb)),
            },
            WindowPolicy::PolynomialBracket { drop } => self.bracket(drop),
        }
    }

    /// `F(theta) = log int exp(P(x)) dx`, stabilized by subtracting `max P`
    /// over the integration window before exponentiating.
    pub fn log_partition(&self, settings: &QuadratureSettings) -> Result<f64> {
        self.integrability_check()?;
        let (lo, hi) = self.window(settings);
        let (_, p_max) = self.peak();
        let mass = adaptive_simpson(
            |x| (self.log_unnormalized(x) - p_max).exp(),
            lo,
            hi,
            settings,
        )?;
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DivergentPartition(format!(
                "stabilized mass integral evaluated to {mass}"
            )));
        }
        Ok(p_max + mass.ln())
    }

    /// Raw moments `mu_0..mu_{max_order}` of the normalized density.
    ///
    /// The window is widened beyond the plain density bracket so that the
    /// polynomially-growing factor `x^l` cannot push mass past the edge, and
    /// each order's quadrature tolerance is scaled to the peak magnitude of
    /// its integrand, keeping high-magnitude moments convergable.
    pub fn moments_numeric(
        &self,
        max_order: usize,
        settings: &QuadratureSettings,
    ) -> Result<Vec<f64>> {
        let log_f = self.log_partition(settings)?;
        let (lo0, hi0) = self.window(settings);
        let edge0 = lo0.abs().max(hi0.abs());
        let (lo, hi) = match (self.support, settings.window) {
            (Support::RealLine, WindowPolicy::PolynomialBracket { drop }) => {
                self.bracket(drop + max_order as f64 * (1.0 + edge0).ln())
            }
            _ => (lo0, hi0),
        };

        let mut out = Vec::with_capacity(max_order + 1);
        for l in 0..=max_order {
            let integrand = |x: f64| {
                let g = (self.log_unnormalized(x) - log_f).exp();
                if l == 0 {
                    g
                } else {
                    x.powi(l as i32) * g
                }
            };
            // Peak magnitude of |x^l exp(P - F)|: stationary where
            // l + x P'(x) = 0, i.e. roots of l + sum_i i theta_i x^i.
            let mut stat = vec![0.0; self.theta.len() + 1];
            stat[0] = l as f64;
            for (i, &c) in self.theta.iter().enumerate() {
                stat[i + 1] = (i + 1) as f64 * c;
            }
            let mut peak_mag = integrand(lo).abs().max(integrand(hi).abs());
            for r in poly::real_roots(&stat) {
                if (lo..=hi).contains(&r) {
                    peak_mag = peak_mag.max(integrand(r).abs());
                }
            }
            let scaled = QuadratureSettings {
                abs_tol: settings.abs_tol * peak_mag.max(1.0),
                ..*settings
            };
            out.push(adaptive_simpson(integrand, lo, hi, &scaled)?);
        }
        Ok(out)
    }
}

/// Moment (mean) parametrization: `eta_i = E[x^i]` for `i = 1..D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentParam {
    eta: Vec<f64>,
}

impl MomentParam {
    /// Build a moment vector, checking that the moments could come from a
    /// genuine density: the augmented Hankel matrix of the longest available
    /// even-length prefix, `Hankel(1, eta_1, ..., eta_{2 floor(D/2)})`, must
    /// be positive definite.
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidParameter(
                "moment vector must have at least one entry".into(),
            ));
        }
        if let Some(bad) = eta.iter().find(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite moment {bad}")));
        }
        let d = eta.len() / 2;
        if d >= 1 {
            let mut mu = Vec::with_capacity(2 * d + 1);
            mu.push(1.0);
            mu.extend_from_slice(&eta[..2 * d]);
            let hankel = crate::numerics::hankel_from_moments(&mu)?;
            if !hankel.is_positive_definite() {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(Self { eta })
    }

    pub fn order(&self) -> usize {
        self.eta.len()
    }

    /// Moments `eta_1..eta_D`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
}

/// A mixture converted both ways: score-matching natural parameters paired
/// with moment-matching mean parameters. The two halves describe different
/// densities of the same order; the divergence approximation consumes them
/// jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedPair {
    theta_sme: PedNatural,
    eta_mle: MomentParam,
}

impl PedPair {
    pub fn new(theta_sme: PedNatural, eta_mle: MomentParam) -> Result<Self> {
        if theta_sme.order() != eta_mle.order() {
            return Err(Error::OrderMismatch {
                left: theta_sme.order(),
                right: eta_mle.order(),
            });
        }
        Ok(Self { theta_sme, eta_mle })
    }

    pub fn order(&self) -> usize {
        self.theta_sme.order()
    }

    pub fn theta_sme(&self) -> &PedNatural {
        &self.theta_sme
    }

    pub fn eta_mle(&self) -> &MomentParam {
        &self.eta_mle
    }
}
