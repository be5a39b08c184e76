//! Acceptance-rejection sampling from unnormalized polynomial exponential
//! densities, and the Monte Carlo natural-to-moment conversion built on it.
//!
//! The target is used only through `exp(P(x))` — no normalizer needed. An
//! envelope constant `c` with `c·f(x) >= exp(P(x))` for the proposal density
//! `f` is found numerically by [`auto_envelope`]; the expected acceptance
//! rate is then `exp(F(theta))/c`.

use crate::error::{Error, Result};
use crate::gmm::{Gmm, GaussianComponent};
use crate::numerics::integrate::QuadratureSettings;
use crate::ped::{MomentParam, PedNatural, Support};
use rand::Rng;

/// Safety margin applied on top of the numerically located ratio maximum.
const ENVELOPE_MARGIN: f64 = 1e-3;
/// Grid resolution for the ratio search.
const ENVELOPE_GRID: usize = 4096;
/// Sampling aborts when fewer than this fraction of proposals are accepted...
const MIN_ACCEPT_RATE: f64 = 1e-4;
/// ...once at least this many proposals have been consumed.
const LOOSE_CHECK_AFTER: u64 = 100_000;

fn integrable_target(target: &PedNatural) -> Result<()> {
    if !target.is_integrable() {
        return Err(Error::DivergentPartition(
            "cannot sample from a model with infinite mass".into(),
        ));
    }
    Ok(())
}

/// Envelope constant for rejection sampling: `(1 + margin)` times the
/// largest target/proposal ratio, located on a dense grid over the target's
/// integration bracket and sharpened by golden-section search around the
/// best grid point.
pub fn auto_envelope(target: &PedNatural, proposal: &Gmm) -> Result<f64> {
    integrable_target(target)?;
    let (lo, hi) = target.bracket(60.0);
    let log_ratio = |x: f64| target.log_unnormalized(x) - proposal.log_pdf(x);

    let step = (hi - lo) / (ENVELOPE_GRID - 1) as f64;
    let values: Vec<f64> = (0..ENVELOPE_GRID)
        .map(|i| log_ratio(lo + step * i as f64))
        .collect();
    let edge_tol = 1e-9;
    if values[0] > values[1] + edge_tol
        || values[ENVELOPE_GRID - 1] > values[ENVELOPE_GRID - 2] + edge_tol
    {
        // The ratio keeps growing where the target has already dropped 60
        // nats below its peak: the proposal's tails decay faster than the
        // target's and no finite envelope exists.
        return Err(Error::ProposalTailsTooLight);
    }
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite log ratios"))
        .map(|(i, _)| i)
        .expect("nonempty grid");

    // Golden-section refinement on the bracketing neighbours.
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (log_ratio(x1), log_ratio(x2));
    for _ in 0..80 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = log_ratio(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = log_ratio(x1);
        }
    }
    let peak = values[best].max(f1).max(f2);
    let c = (1.0 + ENVELOPE_MARGIN) * peak.exp();
    if !c.is_finite() {
        // The ratio is bounded in theory but beyond floating-point range in
        // practice (a fit whose mass sits in a sharp spurious mode can push
        // the log ratio past 700): no usable envelope exists.
        return Err(Error::ProposalTailsTooLight);
    }
    Ok(c)
}

/// Draw `n` variates from the normalized version of `exp(P)` by rejection
/// with the given proposal and envelope constant. Returns the samples and
/// the observed acceptance rate.
///
/// Every proposal is spot-checked against the envelope; a draw where the
/// unnormalized target exceeds `c·f` is reported as an error rather than
/// silently accepted, since it means the sampler's distribution is wrong.
pub fn rejection_sample<R: Rng + ?Sized>(
    target: &PedNatural,
    proposal: &Gmm,
    c: f64,
    rng: &mut R,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    integrable_target(target)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "envelope constant must be positive and finite, got {c}"
        )));
    }
    let log_c = c.ln();
    let in_support = |x: f64| match target.support() {
        Support::RealLine => true,
        Support::Interval { a, b } => (a..=b).contains(&x),
    };

    let mut samples = Vec::with_capacity(n);
    let mut proposals: u64 = 0;
    while samples.len() < n {
        let x = proposal.sample(rng, 1)[0];
        let u: f64 = rng.random();
        proposals += 1;
        if in_support(x) {
            let log_q = target.log_unnormalized(x);
            let log_envelope = log_c + proposal.log_pdf(x);
            if log_q > log_envelope + 1e-12 {
                return Err(Error::EnvelopeViolated { x });
            }
            if u.ln() + log_envelope <= log_q {
                samples.push(x);
            }
        }
        if proposals >= LOOSE_CHECK_AFTER {
            let rate = samples.len() as f64 / proposals as f64;
            if rate < MIN_ACCEPT_RATE {
                return Err(Error::EnvelopeTooLoose { rate, proposals });
            }
        }
    }
    let rate = samples.len() as f64 / proposals as f64;
    Ok((samples, rate))
}

/// Monte Carlo natural-to-moment conversion: `eta_i` estimated as the sample
/// mean of `x^i` over rejection-sampled variates, `i = 1..D`.
pub fn theta_to_eta_mc<R: Rng + ?Sized>(
    target: &PedNatural,
    proposal: &Gmm,
    rng: &mut R,
    n: usize,
) -> Result<MomentParam> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let c = auto_envelope(target, proposal)?;
    let (samples, _) = rejection_sample(target, proposal, c, rng, n)?;
    let d = target.order();
    let mut eta = vec![0.0; d];
    for &x in &samples {
        let mut pow = 1.0;
        for e in eta.iter_mut() {
            pow *= x;
            *e += pow;
        }
    }
    for e in eta.iter_mut() {
        *e /= n as f64;
    }
    MomentParam::new(eta)
}

/// A serviceable generic proposal: two equal-weight Gaussians moment-matched
/// to the target's quadrature mean and standard deviation, offset one
/// standard deviation each way, with the component widths inflated so the
/// proposal's tails dominate the target's.
pub fn default_proposal(target: &PedNatural, q: &QuadratureSettings) -> Result<Gmm> {
    default_proposal_with(target, q, 1.5)
}

/// As [`default_proposal`] with an explicit width inflation factor (> 1).
pub fn default_proposal_with(
    target: &PedNatural,
    q: &QuadratureSettings,
    inflation: f64,
) -> Result<Gmm> {
    if !(inflation > 1.0) || !inflation.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "proposal width inflation must exceed 1, got {inflation}"
        )));
    }
    let mu = target.moments_numeric(2, q)?;
    let mean = mu[1];
    let var = mu[2] - mu[1] * mu[1];
    if !(var > 0.0) {
        return Err(Error::DivergentPartition(format!(
            "quadrature variance {var} is not positive"
        )));
    }
    let sd = var.sqrt();
    Gmm::new(
        vec![0.5, 0.5],
        vec![
            GaussianComponent::new(mean - sd, inflation * sd)?,
            GaussianComponent::new(mean + sd, inflation * sd)?,
        ],
    )
}
