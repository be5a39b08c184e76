//! Divergences between mixtures and polynomial exponential densities:
//! Monte Carlo estimators, the closed-form exponential-family Jeffreys
//! bilinear form, the fast dual-parameter Jeffreys approximations, Hyvärinen
//! divergences, and score-based order selection.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::estimators::{convert_pair, mle_convert, sme_convert_direct};
use crate::gmm::{gaussian_product, Gmm};
use crate::maxent::{eta_to_theta, IlsmConfig};
use crate::numerics::dd::Dd;
use crate::numerics::integrate::{adaptive_simpson, QuadratureSettings};
use crate::ped::{MomentParam, PedNatural};
use crate::sampling::{auto_envelope, default_proposal, rejection_sample};
use rand::Rng;
use serde::Serialize;

/// How a divergence value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DivergenceMethod {
    #[serde(rename = "MC")]
    Mc,
    PairHeuristic,
    MleVariant,
    SmeVariant,
    ClosedForm,
    Quadrature,
}

/// A divergence value together with how it was obtained. Stochastic methods
/// carry a standard error; deterministic ones do not.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub method: DivergenceMethod,
    pub stderr: Option<f64>,
    pub wall_time: Duration,
    pub meta: BTreeMap<String, String>,
}

impl DivergenceEstimate {
    fn finish(
        value: f64,
        method: DivergenceMethod,
        stderr: Option<f64>,
        started: Instant,
        meta: BTreeMap<String, String>,
    ) -> Self {
        DivergenceEstimate {
            value,
            method,
            stderr,
            wall_time: started.elapsed(),
            meta,
        }
    }
}

/// `KL(N(mu1, sigma1^2) : N(mu2, sigma2^2))` in closed form.
pub fn kl_gaussians(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> f64 {
    let r = sigma1 / sigma2;
    let d = (mu2 - mu1) / sigma2;
    0.5 * (r * r + d * d - 1.0) - r.ln()
}

/// Symmetrized KL divergence of two Gaussians in closed form.
pub fn jeffreys_gaussians(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> f64 {
    kl_gaussians(mu1, sigma1, mu2, sigma2) + kl_gaussians(mu2, sigma2, mu1, sigma1)
}

fn mean_and_stderr(terms: &[f64]) -> (f64, f64) {
    let n = terms.len() as f64;
    let mean = terms.iter().sum::<f64>() / n;
    if terms.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = terms.iter().map(|t| (t - mean) * (t - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// Monte Carlo Kullback-Leibler estimate from samples of the first mixture.
///
/// Each sample contributes `log(m/m') + m'/m - 1`, the pointwise scalar
/// divergence scaled by `1/m`, so every term is nonnegative and the estimate
/// is nonnegative for every seed.
pub fn kl_mc<R: Rng + ?Sized>(
    m: &Gmm,
    m2: &Gmm,
    rng: &mut R,
    s: usize,
) -> Result<DivergenceEstimate> {
    if s == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let started = Instant::now();
    let samples = m.sample(rng, s);
    let terms: Vec<f64> = samples
        .iter()
        .map(|&x| {
            let d = m2.log_pdf(x) - m.log_pdf(x);
            // exp(d) - 1 - d, evaluated so that the d -> 0 limit stays >= 0.
            d.exp_m1() - d
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&terms);
    let mut meta = BTreeMap::new();
    meta.insert("samples".into(), s.to_string());
    Ok(DivergenceEstimate::finish(
        mean,
        DivergenceMethod::Mc,
        Some(stderr),
        started,
        meta,
    ))
}

/// The uniform 50/50 merge of two mixtures, with components in a canonical
/// order so that both argument orders build the identical mixture (and hence
/// consume a seeded generator identically).
fn merged_mixture(m: &Gmm, m2: &Gmm) -> Result<Gmm> {
    let mut parts: Vec<(f64, crate::gmm::GaussianComponent)> = Vec::with_capacity(m.k() + m2.k());
    for source in [m, m2] {
        for (w, c) in source.weights().iter().zip(source.components()) {
            parts.push((0.5 * w, *c));
        }
    }
    parts.sort_by(|a, b| {
        a.1.mu
            .total_cmp(&b.1.mu)
            .then(a.1.sigma.total_cmp(&b.1.sigma))
            .then(a.0.total_cmp(&b.0))
    });
    let (weights, components) = parts.into_iter().unzip();
    Gmm::new(weights, components)
}

/// Monte Carlo Jeffreys divergence estimate from samples of the merged
/// mixture `(m + m2)/2`.
///
/// Each sample contributes `2 (m - m2) log(m/m2) / (m + m2)`, computed in
/// log space as `2 tanh(|t|/2) |t|` with `t` the log-density gap — termwise
/// nonnegative, immune to tail underflow, and bitwise symmetric in the two
/// arguments under a shared seed.
pub fn jeffreys_mc<R: Rng + ?Sized>(
    m: &Gmm,
    m2: &Gmm,
    rng: &mut R,
    s: usize,
) -> Result<DivergenceEstimate> {
    if s == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let started = Instant::now();
    let merged = merged_mixture(m, m2)?;
    let samples = merged.sample(rng, s);
    let terms: Vec<f64> = samples
        .iter()
        .map(|&x| {
            let t = (m.log_pdf(x) - m2.log_pdf(x)).abs();
            2.0 * (0.5 * t).tanh() * t
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&terms);
    let mut meta = BTreeMap::new();
    meta.insert("samples".into(), s.to_string());
    Ok(DivergenceEstimate::finish(
        mean,
        DivergenceMethod::Mc,
        Some(stderr),
        started,
        meta,
    ))
}

/// `sum_i (a2 - a1)_i (b2 - b1)_i` with exact differences and extended-
/// precision accumulation.
fn dd_dot_diff(a2: &[f64], a1: &[f64], b2: &[f64], b1: &[f64]) -> f64 {
    let mut acc = Dd::ZERO;
    for i in 0..a2.len() {
        let da = Dd::from_f64(a2[i]).add_f64(-a1[i]);
        let db = Dd::from_f64(b2[i]).add_f64(-b1[i]);
        acc = acc.add(da.mul(db));
    }
    acc.to_f64()
}

/// Jeffreys divergence inside an exponential family: the inner product of
/// the natural-parameter gap with the mean-parameter gap. Exact whenever
/// each `(theta_i, eta_i)` pair describes the same density.
pub fn jeffreys_ef_closed(
    theta1: &PedNatural,
    eta1: &MomentParam,
    theta2: &PedNatural,
    eta2: &MomentParam,
) -> Result<f64> {
    let d = theta1.order();
    for other in [eta1.order(), theta2.order(), eta2.order()] {
        if other != d {
            return Err(Error::OrderMismatch {
                left: d,
                right: other,
            });
        }
    }
    Ok(dd_dot_diff(
        theta2.theta(),
        theta1.theta(),
        eta2.eta(),
        eta1.eta(),
    ))
}

/// Default order for the pair heuristic: twice the smaller component count,
/// capped at 16 to keep the moment systems well conditioned.
pub fn default_heuristic_order(m: &Gmm, m2: &Gmm) -> usize {
    2 * m.k().min(m2.k()).min(8)
}

/// Fast deterministic Jeffreys approximation: convert each mixture once into
/// a (score-matched theta, moment-matched eta) pair and take the closed-form
/// inner product across mixtures.
///
/// The mixed pairs are not Legendre duals of one another, so the result can
/// come out negative for close mixtures; the sign is reported as-is and
/// flagged in `meta["negative"]` rather than clamped.
pub fn jeffreys_heuristic(m: &Gmm, m2: &Gmm, d: usize) -> Result<DivergenceEstimate> {
    let started = Instant::now();
    let pair1 = convert_pair(m, d)?;
    let pair2 = convert_pair(m2, d)?;
    let value = jeffreys_ef_closed(
        pair1.theta_sme(),
        pair1.eta_mle(),
        pair2.theta_sme(),
        pair2.eta_mle(),
    )?;
    let mut meta = BTreeMap::new();
    meta.insert("order".into(), d.to_string());
    if value < 0.0 {
        meta.insert("negative".into(), "true".into());
    }
    Ok(DivergenceEstimate::finish(
        value,
        DivergenceMethod::PairHeuristic,
        None,
        started,
        meta,
    ))
}

/// Jeffreys approximation through moment matching alone: the mean parameters
/// are the mixtures' exact moments and the paired natural parameters are
/// recovered by the iterative maximum-entropy solver (seeded from the score
/// matching fit).
pub fn jeffreys_mle_variant(
    m: &Gmm,
    m2: &Gmm,
    d: usize,
    cfg: &IlsmConfig,
) -> Result<DivergenceEstimate> {
    let started = Instant::now();
    let eta1 = mle_convert(m, d)?;
    let eta2 = mle_convert(m2, d)?;
    let (theta1, diag1) = eta_to_theta(&eta1, &sme_convert_direct(m, d)?, cfg)?;
    let (theta2, diag2) = eta_to_theta(&eta2, &sme_convert_direct(m2, d)?, cfg)?;
    let value = dd_dot_diff(theta2.theta(), theta1.theta(), eta2.eta(), eta1.eta());
    let mut meta = BTreeMap::new();
    meta.insert("order".into(), d.to_string());
    meta.insert("iterations_1".into(), diag1.iterations.to_string());
    meta.insert("iterations_2".into(), diag2.iterations.to_string());
    meta.insert("residual_1".into(), format!("{:e}", diag1.residual));
    meta.insert("residual_2".into(), format!("{:e}", diag2.residual));
    if value < 0.0 {
        meta.insert("negative".into(), "true".into());
    }
    Ok(DivergenceEstimate::finish(
        value,
        DivergenceMethod::MleVariant,
        None,
        started,
        meta,
    ))
}

fn sampled_moments<R: Rng + ?Sized>(
    target: &PedNatural,
    rng: &mut R,
    n: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let q = QuadratureSettings::default();
    let proposal = default_proposal(target, &q)?;
    let c = auto_envelope(target, &proposal)?;
    let (samples, rate) = rejection_sample(target, &proposal, c, rng, n)?;
    let d = target.order();
    let mut mean = vec![0.0; d];
    let mut powers = vec![vec![0.0; d]; n];
    for (row, &x) in powers.iter_mut().zip(&samples) {
        let mut p = 1.0;
        for (j, slot) in row.iter_mut().enumerate() {
            p *= x;
            *slot = p;
            mean[j] += p;
        }
    }
    for v in mean.iter_mut() {
        *v /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    if n > 1 {
        for row in &powers {
            for i in 0..d {
                let di = row[i] - mean[i];
                for j in i..d {
                    cov[i][j] += di * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= (n - 1) as f64;
                cov[j][i] = cov[i][j];
            }
        }
    }
    Ok((mean, cov, rate))
}

/// Jeffreys approximation through score matching alone: the natural
/// parameters are the score-matched fits and the paired mean parameters are
/// estimated by rejection sampling from those fits.
///
/// The standard error is propagated from the sample covariance of the power
/// statistics through the fixed natural-parameter gap.
pub fn jeffreys_sme_variant<R: Rng + ?Sized>(
    m: &Gmm,
    m2: &Gmm,
    d: usize,
    n: usize,
    rng: &mut R,
) -> Result<DivergenceEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let started = Instant::now();
    let theta1 = sme_convert_direct(m, d)?;
    let theta2 = sme_convert_direct(m2, d)?;
    let (eta1, cov1, rate1) = sampled_moments(&theta1, rng, n)?;
    let (eta2, cov2, rate2) = sampled_moments(&theta2, rng, n)?;
    let value = dd_dot_diff(theta2.theta(), theta1.theta(), &eta2, &eta1);
    let dtheta: Vec<f64> = theta2
        .theta()
        .iter()
        .zip(theta1.theta())
        .map(|(a, b)| a - b)
        .collect();
    let mut var = 0.0;
    for i in 0..d {
        for j in 0..d {
            var += dtheta[i] * dtheta[j] * (cov1[i][j] + cov2[i][j]);
        }
    }
    let stderr = (var.max(0.0) / n as f64).sqrt();
    let mut meta = BTreeMap::new();
    meta.insert("order".into(), d.to_string());
    meta.insert("samples".into(), n.to_string());
    meta.insert("acceptance_rate_1".into(), format!("{rate1:.4}"));
    meta.insert("acceptance_rate_2".into(), format!("{rate2:.4}"));
    if value < 0.0 {
        meta.insert("negative".into(), "true".into());
    }
    Ok(DivergenceEstimate::finish(
        value,
        DivergenceMethod::SmeVariant,
        Some(stderr),
        started,
        meta,
    ))
}

/// Raw moments 0..=lmax of a Gaussian in extended precision, by the
/// recursion `mu_l = mu mu_{l-1} + (l-1) sigma^2 mu_{l-2}`.
fn gaussian_raw_moments_dd(mu: f64, sigma: f64, lmax: usize) -> Vec<Dd> {
    let s2 = Dd::prod(sigma, sigma);
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(Dd::from_f64(1.0));
    if lmax >= 1 {
        out.push(Dd::from_f64(mu));
    }
    for l in 2..=lmax {
        let a = out[l - 1].mul_f64(mu);
        let b = out[l - 2].mul(s2).mul_f64((l - 1) as f64);
        out.push(a.add(b));
    }
    out
}

/// Second-order Hyvärinen divergence between a mixture and a polynomial
/// exponential density, in closed form:
///
/// `int (m'(x) - m(x) P'(x))^2 dx`
///
/// expanded over component pairs through the Gaussian product identity and
/// closed-form Gaussian moments. Depends on the density only through its
/// polynomial coefficients, so it is well defined (and nonnegative) even for
/// fits whose leading coefficient makes them non-normalizable.
pub fn hyvarinen2_gmm_ped(m: &Gmm, p: &PedNatural) -> f64 {
    let d = p.order();
    let theta = p.theta();
    let lmax = (2 * d).saturating_sub(2).max(d).max(2);

    let mut s0 = Dd::ZERO;
    let mut t1 = vec![Dd::ZERO; d];
    let mut t2 = vec![Dd::ZERO; 2 * d - 1];

    let weights = m.weights();
    let comps = m.components();
    for (a, ca) in comps.iter().enumerate() {
        let sa2 = Dd::prod(ca.sigma, ca.sigma);
        for (b, cb) in comps.iter().enumerate() {
            let gp = gaussian_product(ca, cb);
            let mom = gaussian_raw_moments_dd(gp.mu_ab, gp.sigma_ab, lmax + 1);
            let weight = Dd::prod(weights[a], weights[b]).mul_f64(gp.kappa);

            // (m')^2 term: integral of p_a' p_b'.
            let sb2 = Dd::prod(cb.sigma, cb.sigma);
            let quad = mom[2]
                .sub(mom[1].mul_f64(ca.mu + cb.mu))
                .add(Dd::prod(ca.mu, cb.mu));
            s0 = s0.add(weight.mul(quad).div(sa2.mul(sb2)));

            // m' m terms: integral of x^l p_a' p_b for l = 0..d.
            for (l, slot) in t1.iter_mut().enumerate() {
                let inner = mom[l + 1].sub(mom[l].mul_f64(ca.mu));
                *slot = slot.add(weight.mul(inner).div(sa2).neg());
            }

            // m^2 terms: integral of x^l p_a p_b for l = 0..2d-2.
            for (l, slot) in t2.iter_mut().enumerate() {
                *slot = slot.add(weight.mul(mom[l]));
            }
        }
    }

    let mut acc = s0;
    for (i, &th) in theta.iter().enumerate() {
        let coeff = -2.0 * (i + 1) as f64 * th;
        acc = acc.add(t1[i].mul_f64(coeff));
    }
    for (i, &ti) in theta.iter().enumerate() {
        for (j, &tj) in theta.iter().enumerate() {
            let coeff = Dd::prod(ti, tj).mul_f64(((i + 1) * (j + 1)) as f64);
            acc = acc.add(coeff.mul(t2[i + j]));
        }
    }
    acc.to_f64()
}

/// Second-order Hyvärinen divergence between two Gaussians in closed form.
///
/// This is the rational expression the defining integral evaluates to;
/// it agrees with [`hyvarinen2_gmm_ped`] on the matching one-component
/// mixture and quadratic density, and with direct quadrature.
pub fn hyvarinen2_gaussians(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64) -> f64 {
    let s12 = sigma1 * sigma1;
    let s22 = sigma2 * sigma2;
    let dv = s12 - s22;
    let dm = mu2 - mu1;
    (dv * dv + 2.0 * dm * dm * s12)
        / (4.0 * std::f64::consts::PI.sqrt() * s12 * sigma1 * s22 * s22)
}

/// Numerical Hyvärinen divergence of order `alpha`:
///
/// `int p(x)^alpha (score_p(x) - score_q(x))^2 dx`
///
/// over the given bracket. The second density enters only through its score,
/// which makes right-sided projectivity structural: rescaling that density
/// by any positive constant leaves its score — and hence the value —
/// unchanged.
pub fn hyvarinen_alpha_numeric(
    p_density: impl Fn(f64) -> f64,
    p_score: impl Fn(f64) -> f64,
    q_score: impl Fn(f64) -> f64,
    alpha: f64,
    bracket: (f64, f64),
    settings: &QuadratureSettings,
) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Hyvärinen order must be positive and finite, got {alpha}"
        )));
    }
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "integration bracket [{lo}, {hi}] is not a finite interval"
        )));
    }
    adaptive_simpson(
        |x| {
            let gap = p_score(x) - q_score(x);
            p_density(x).powf(alpha) * gap * gap
        },
        lo,
        hi,
        settings,
    )
}

/// Bracket covering every component out to `r` standard deviations.
fn gmm_bracket(m: &Gmm, r: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in m.components() {
        lo = lo.min(c.mu - r * c.sigma);
        hi = hi.max(c.mu + r * c.sigma);
    }
    (lo, hi)
}

/// Quadrature oracle for [`hyvarinen2_gmm_ped`]: the defining integral with
/// both scores evaluated exactly.
pub fn hyvarinen2_quadrature(
    m: &Gmm,
    p: &PedNatural,
    settings: &QuadratureSettings,
) -> Result<f64> {
    hyvarinen_alpha_numeric(
        |x| m.pdf(x),
        |x| m.pdf_derivative(x) / m.pdf(x),
        |x| p.score(x),
        2.0,
        gmm_bracket(m, 16.0),
        settings,
    )
}

/// Result of score-based order selection.
#[derive(Debug, Clone)]
pub struct OrderSelection {
    /// The selected order.
    pub best: usize,
    /// The Hyvärinen score of the selected order.
    pub best_score: f64,
    /// Per-candidate outcome, in ascending order of candidate.
    pub scores: Vec<(usize, std::result::Result<f64, String>)>,
    /// With a threshold: whether some candidate met it. `None` otherwise.
    pub epsilon_satisfied: Option<bool>,
}

/// Choose a fitting order by score matching each candidate and ranking the
/// fits with the closed-form second-order Hyvärinen divergence.
///
/// Without a threshold the argmin wins, with ties broken toward smaller
/// orders (a larger order must improve by more than a conditioning-aware
/// margin to displace the incumbent). With a threshold `epsilon`, the
/// smallest candidate scoring at or below it wins; if none does, the argmin
/// is returned with `epsilon_satisfied = Some(false)`.
pub fn select_order(m: &Gmm, candidates: &[usize], epsilon: Option<f64>) -> Result<OrderSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "order selection needs at least one candidate".into(),
        ));
    }
    let mut orders: Vec<usize> = candidates.to_vec();
    orders.sort_unstable();
    orders.dedup();

    let mut scores: Vec<(usize, std::result::Result<f64, String>)> = Vec::new();
    for &d in &orders {
        let outcome = sme_convert_direct(m, d).map(|ped| hyvarinen2_gmm_ped(m, &ped));
        scores.push((d, outcome.map_err(|e| e.to_string())));
    }

    let mut best: Option<(usize, f64)> = None;
    for (d, outcome) in &scores {
        if let Ok(score) = outcome {
            match best {
                None => best = Some((*d, *score)),
                Some((_, incumbent)) => {
                    let margin = (1e-9 * incumbent.abs()).max(1e-12);
                    if *score < incumbent - margin {
                        best = Some((*d, *score));
                    }
                }
            }
        }
    }
    let (argmin, argmin_score) = best.ok_or_else(|| {
        let detail: Vec<String> = scores
            .iter()
            .map(|(d, o)| format!("D={d}: {}", o.as_ref().expect_err("all failed")))
            .collect();
        Error::SelectionExhausted(detail.join("; "))
    })?;

    let (best, best_score, epsilon_satisfied) = match epsilon {
        None => (argmin, argmin_score, None),
        Some(eps) => {
            let hit = scores
                .iter()
                .find_map(|(d, o)| o.as_ref().ok().filter(|s| **s <= eps).map(|s| (*d, *s)));
            match hit {
                Some((d, s)) => (d, s, Some(true)),
                None => (argmin, argmin_score, Some(false)),
            }
        }
    };
    Ok(OrderSelection {
        best,
        best_score,
        scores,
        epsilon_satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::{m1, m2};
    use crate::gmm::{random_gmm, GaussianComponent};
    use crate::ped::Support;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n01() -> Gmm {
        Gmm::single(0.0, 1.0).unwrap()
    }

    #[test]
    fn kl_mc_identical_mixtures_is_exactly_zero() {
        let m = random_gmm(3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = kl_mc(&m, &m.clone(), &mut rng, 10_000).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, Some(0.0));
    }

    #[test]
    fn kl_mc_matches_translated_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = kl_mc(&n01(), &Gmm::single(1.0, 1.0).unwrap(), &mut rng, 200_000).unwrap();
        let se = est.stderr.unwrap();
        assert!(se > 0.0);
        assert!((est.value - 0.5).abs() < 5.0 * se, "{} vs 0.5", est.value);
    }

    #[test]
    fn kl_mc_matches_scaled_normal() {
        let expected = kl_gaussians(0.0, 1.0, 0.0, 2.0);
        assert!((expected - 0.318147).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = kl_mc(&n01(), &Gmm::single(0.0, 2.0).unwrap(), &mut rng, 200_000).unwrap();
        assert!(
            (est.value - expected).abs() < 5.0 * est.stderr.unwrap(),
            "{} vs {expected}",
            est.value
        );
    }

    #[test]
    fn kl_mc_is_nonnegative_for_every_seed() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_gmm(2, &mut rng).unwrap();
            let m2 = random_gmm(3, &mut rng).unwrap();
            let est = kl_mc(&m, &m2, &mut rng, 2_000).unwrap();
            assert!(est.value >= 0.0, "seed {seed}: {}", est.value);
        }
    }

    #[test]
    fn jeffreys_mc_identical_mixtures_is_exactly_zero() {
        let m = random_gmm(3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let est = jeffreys_mc(&m, &m.clone(), &mut rng, 10_000).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn jeffreys_mc_matches_translated_normal() {
        // Symmetric KL of N(0,1) and N(1,1) is exactly 1.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let est = jeffreys_mc(&n01(), &Gmm::single(1.0, 1.0).unwrap(), &mut rng, 200_000).unwrap();
        assert!(
            (est.value - 1.0).abs() < 5.0 * est.stderr.unwrap(),
            "{} vs 1",
            est.value
        );
    }

    #[test]
    fn jeffreys_mc_argument_order_is_bitwise_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_gmm(2, &mut rng).unwrap();
        let m2 = random_gmm(4, &mut rng).unwrap();
        let a = jeffreys_mc(&m, &m2, &mut ChaCha8Rng::seed_from_u64(9), 20_000).unwrap();
        let b = jeffreys_mc(&m2, &m, &mut ChaCha8Rng::seed_from_u64(9), 20_000).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.stderr, b.stderr);
        assert!(a.value >= 0.0);
    }

    #[test]
    fn jeffreys_mc_stderr_shrinks_as_root_s() {
        let m = m1();
        let m2 = m2();
        let stderr_at = |s: usize| {
            let mut rng = ChaCha8Rng::seed_from_u64(10);
            jeffreys_mc(&m, &m2, &mut rng, s).unwrap().stderr.unwrap()
        };
        let (s3, s4, s5) = (stderr_at(1_000), stderr_at(10_000), stderr_at(100_000));
        let root10 = 10.0_f64.sqrt();
        for ratio in [s3 / s4, s4 / s5] {
            assert!(
                ratio > root10 / 1.5 && ratio < root10 * 1.5,
                "stderr ratio {ratio} not compatible with 1/sqrt(s)"
            );
        }
    }

    #[test]
    fn jeffreys_mc_reference_pair_estimate() {
        let m = m1();
        let m2 = m2();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let est = jeffreys_mc(&m, &m2, &mut rng, 200_000).unwrap();
        assert!(
            (est.value - 0.26338216578112167).abs() < 5.0 * est.stderr.unwrap(),
            "{} vs 0.2634",
            est.value
        );
    }

    #[test]
    fn closed_form_on_dual_pairs_is_the_normal_jeffreys() {
        let theta1 = PedNatural::new(vec![0.0, -0.5], Support::RealLine).unwrap();
        let eta1 = MomentParam::new(vec![0.0, 1.0]).unwrap();
        let theta2 = PedNatural::new(vec![1.0, -0.5], Support::RealLine).unwrap();
        let eta2 = MomentParam::new(vec![1.0, 2.0]).unwrap();
        let v = jeffreys_ef_closed(&theta1, &eta1, &theta2, &eta2).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let zero = jeffreys_ef_closed(&theta1, &eta1, &theta1, &eta1).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn closed_form_matches_summed_kl_for_scaled_normals() {
        // N(0,1) vs N(0,sqrt 2): theta = (0,-1/2) vs (0,-1/4), eta = (0,1) vs (0,2).
        let theta1 = PedNatural::new(vec![0.0, -0.5], Support::RealLine).unwrap();
        let eta1 = MomentParam::new(vec![0.0, 1.0]).unwrap();
        let theta2 = PedNatural::new(vec![0.0, -0.25], Support::RealLine).unwrap();
        let eta2 = MomentParam::new(vec![0.0, 2.0]).unwrap();
        let v = jeffreys_ef_closed(&theta1, &eta1, &theta2, &eta2).unwrap();
        let expected = jeffreys_gaussians(0.0, 1.0, 0.0, 2.0_f64.sqrt());
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");

        let short = MomentParam::new(vec![0.0]).unwrap();
        assert!(matches!(
            jeffreys_ef_closed(&theta1, &short, &theta2, &eta2),
            Err(Error::OrderMismatch { .. })
        ));
    }

    #[test]
    fn heuristic_is_exact_for_single_gaussians() {
        let est = jeffreys_heuristic(&n01(), &Gmm::single(1.0, 1.0).unwrap(), 2).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12, "{}", est.value);
        assert!(est.stderr.is_none());
        assert_eq!(est.meta.get("order").unwrap(), "2");
    }

    #[test]
    fn heuristic_matches_closed_jeffreys_on_random_singletons() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let (mu1, s1) = (4.0 * rng.random::<f64>() - 2.0, 0.5 + 1.5 * rng.random::<f64>());
            let (mu2, s2) = (4.0 * rng.random::<f64>() - 2.0, 0.5 + 1.5 * rng.random::<f64>());
            let est = jeffreys_heuristic(
                &Gmm::single(mu1, s1).unwrap(),
                &Gmm::single(mu2, s2).unwrap(),
                2,
            )
            .unwrap();
            let exact = jeffreys_gaussians(mu1, s1, mu2, s2);
            assert!(
                (est.value - exact).abs() <= 1e-9,
                "({mu1},{s1}) vs ({mu2},{s2}): {} vs {exact}",
                est.value
            );
        }
    }

    #[test]
    fn heuristic_identical_mixtures_is_exactly_zero() {
        let m = random_gmm(3, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
        let est = jeffreys_heuristic(&m, &m.clone(), 6).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn heuristic_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = random_gmm(2, &mut rng).unwrap();
        let m2 = random_gmm(3, &mut rng).unwrap();
        let a = jeffreys_heuristic(&m, &m2, 4).unwrap().value;
        let b = jeffreys_heuristic(&m2, &m, 4).unwrap().value;
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn heuristic_reference_pair_at_order_eight() {
        let m = m1();
        let m2 = m2();
        let est = jeffreys_heuristic(&m, &m2, 8).unwrap();
        assert!(
            (est.value - 0.2618412909304468).abs() < 1e-6,
            "{}",
            est.value
        );
    }

    #[test]
    fn default_order_tracks_smaller_mixture() {
        let two = random_gmm(2, &mut ChaCha8Rng::seed_from_u64(15)).unwrap();
        let five = random_gmm(5, &mut ChaCha8Rng::seed_from_u64(16)).unwrap();
        let twelve = random_gmm(12, &mut ChaCha8Rng::seed_from_u64(17)).unwrap();
        assert_eq!(default_heuristic_order(&two, &five), 4);
        assert_eq!(default_heuristic_order(&five, &twelve), 10);
        assert_eq!(default_heuristic_order(&twelve, &twelve), 16);
    }

    #[test]
    fn mle_variant_is_exact_for_single_gaussians() {
        let est = jeffreys_mle_variant(
            &n01(),
            &Gmm::single(1.0, 1.0).unwrap(),
            2,
            &IlsmConfig::default(),
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "{}", est.value);
    }

    #[test]
    fn mle_variant_identical_mixtures_is_zero() {
        let m = random_gmm(2, &mut ChaCha8Rng::seed_from_u64(18)).unwrap();
        let est = jeffreys_mle_variant(&m, &m.clone(), 4, &IlsmConfig::default()).unwrap();
        assert!(est.value.abs() <= 1e-9, "{}", est.value);
    }

    #[test]
    fn sme_variant_recovers_translated_normal() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let est =
            jeffreys_sme_variant(&n01(), &Gmm::single(1.0, 1.0).unwrap(), 2, 30_000, &mut rng)
                .unwrap();
        let se = est.stderr.unwrap();
        assert!(se > 0.0);
        assert!((est.value - 1.0).abs() < 4.0 * se, "{} vs 1", est.value);
    }

    #[test]
    fn sme_variant_identical_mixtures_is_exactly_zero() {
        // Symmetric bimodal mixture: its quartic fit is normalizable, so
        // both halves sample; the natural-parameter gap is exactly zero.
        let m = Gmm::new(
            vec![0.5, 0.5],
            vec![
                GaussianComponent::new(-1.5, 1.0).unwrap(),
                GaussianComponent::new(1.5, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let est = jeffreys_sme_variant(&m, &m.clone(), 4, 5_000, &mut rng).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn sme_variant_fails_loudly_on_the_reference_pair_at_order_eight() {
        // The first mixture's order-8 fit hides a sharp spurious mode far
        // outside the data region (no representable envelope constant), and
        // the second mixture's fit has a positive leading coefficient (no
        // finite mass at all). Either way sampling must refuse.
        let m = m1();
        let m2 = m2();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        match jeffreys_sme_variant(&m, &m2, 8, 1_000, &mut rng) {
            Err(e) => assert_eq!(e.kind(), crate::error::ErrorKind::Numerical),
            Ok(est) => panic!("expected a sampling failure, got value {}", est.value),
        }
        let fit2 = sme_convert_direct(&m2, 8).unwrap();
        assert!(!fit2.is_integrable());
        assert!(matches!(
            default_proposal(&fit2, &QuadratureSettings::default()),
            Err(Error::DivergentPartition(_))
        ));
    }

    #[test]
    fn hyvarinen_perfect_fit_scores_zero() {
        let p = PedNatural::new(vec![0.0, -0.5], Support::RealLine).unwrap();
        let v = hyvarinen2_gmm_ped(&n01(), &p);
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn hyvarinen_gaussian_pair_closed_form_and_quadrature() {
        // N(0,1) against the quadratic density of N(0, sqrt 2).
        let p = PedNatural::new(vec![0.0, -0.25], Support::RealLine).unwrap();
        let v = hyvarinen2_gmm_ped(&n01(), &p);
        let expected = 1.0 / (16.0 * std::f64::consts::PI.sqrt());
        assert!((v - expected).abs() < 1e-12 * expected, "{v} vs {expected}");
        let q = hyvarinen2_quadrature(&n01(), &p, &QuadratureSettings::default()).unwrap();
        assert!((q - expected).abs() < 1e-9, "{q} vs {expected}");
    }

    #[test]
    fn hyvarinen_gaussians_closed_form_values() {
        assert_eq!(hyvarinen2_gaussians(0.7, 1.3, 0.7, 1.3), 0.0);
        let root2 = 2.0_f64.sqrt();
        let a = hyvarinen2_gaussians(0.0, 1.0, 0.0, root2);
        assert!((a - 1.0 / (16.0 * std::f64::consts::PI.sqrt())).abs() < 1e-15);
        let b = hyvarinen2_gaussians(0.0, 1.0, 1.0, 1.0);
        assert!((b - 1.0 / (2.0 * std::f64::consts::PI.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn hyvarinen_gaussians_agree_with_pair_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let (mu1, s1) = (2.0 * rng.random::<f64>() - 1.0, 0.6 + rng.random::<f64>());
            let (mu2, s2) = (2.0 * rng.random::<f64>() - 1.0, 0.6 + rng.random::<f64>());
            let closed = hyvarinen2_gaussians(mu1, s1, mu2, s2);
            let theta = vec![mu2 / (s2 * s2), -0.5 / (s2 * s2)];
            let p = PedNatural::new(theta, Support::RealLine).unwrap();
            let expanded = hyvarinen2_gmm_ped(&Gmm::single(mu1, s1).unwrap(), &p);
            assert!(
                (closed - expanded).abs() <= 1e-10 * closed.abs().max(1.0),
                "{closed} vs {expanded}"
            );
        }
    }

    #[test]
    fn hyvarinen_closed_form_matches_quadrature_on_random_fits() {
        let settings = QuadratureSettings::default();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let m = random_gmm(2, &mut rng).unwrap();
            let fit = sme_convert_direct(&m, 4).unwrap();
            let closed = hyvarinen2_gmm_ped(&m, &fit);
            let quad = hyvarinen2_quadrature(&m, &fit, &settings).unwrap();
            assert!(closed >= -1e-10, "seed {seed}: negative score {closed}");
            let tol = 1e-6 * closed.abs().max(quad.abs()) + 1e-12;
            assert!(
                (closed - quad).abs() <= tol,
                "seed {seed}: {closed} vs {quad}"
            );
        }
    }

    #[test]
    fn hyvarinen_score_is_nonnegative_even_for_formal_fits() {
        // Positive leading coefficient: not normalizable, still scoreable.
        let p = PedNatural::new(vec![0.1, -0.3, 0.0, 1e-4], Support::RealLine).unwrap();
        assert!(!p.is_integrable());
        let m = random_gmm(3, &mut ChaCha8Rng::seed_from_u64(24)).unwrap();
        let v = hyvarinen2_gmm_ped(&m, &p);
        assert!(v.is_finite() && v >= -1e-10, "{v}");
    }

    #[test]
    fn numeric_hyvarinen_identical_scores_is_zero() {
        let g = GaussianComponent::new(0.0, 1.0).unwrap();
        let score = |x: f64| -(x - g.mu) / (g.sigma * g.sigma);
        let v = hyvarinen_alpha_numeric(
            |x| n01().pdf(x),
            score,
            score,
            1.0,
            (-16.0, 16.0),
            &QuadratureSettings::default(),
        )
        .unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn numeric_hyvarinen_constant_score_gap_integrates_the_density() {
        // alpha = 1, N(0,1) vs N(1,1): the score gap is the constant 1.
        let v = hyvarinen_alpha_numeric(
            |x| n01().pdf(x),
            |x| -x,
            |x| -(x - 1.0),
            1.0,
            (-16.0, 16.0),
            &QuadratureSettings::default(),
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn numeric_hyvarinen_ignores_density_scale_of_second_argument() {
        let m = random_gmm(2, &mut ChaCha8Rng::seed_from_u64(25)).unwrap();
        let q = GaussianComponent::new(0.3, 1.2).unwrap();
        let settings = QuadratureSettings::default();
        let bracket = gmm_bracket(&m, 14.0);
        let value = |scale: f64| {
            hyvarinen_alpha_numeric(
                |x| m.pdf(x),
                |x| m.pdf_derivative(x) / m.pdf(x),
                |x| {
                    let density = scale * q.pdf(x);
                    let derivative = scale * (-(x - q.mu) / (q.sigma * q.sigma)) * q.pdf(x);
                    derivative / density
                },
                2.0,
                bracket,
                &settings,
            )
            .unwrap()
        };
        let (plain, scaled) = (value(1.0), value(7.3));
        assert!(
            (plain - scaled).abs() <= 1e-12,
            "{plain} vs {scaled} under rescaling"
        );
    }

    #[test]
    fn order_selection_prefers_the_minimal_sufficient_order() {
        let sel = select_order(&n01(), &[2, 4], None).unwrap();
        assert_eq!(sel.best, 2);
        assert!(sel.best_score.abs() < 1e-10);
        assert_eq!(sel.scores.len(), 2);
        assert!(sel.epsilon_satisfied.is_none());
    }

    #[test]
    fn order_selection_needs_quartic_for_bimodal() {
        let m = Gmm::new(
            vec![0.5, 0.5],
            vec![
                GaussianComponent::new(-1.5, 0.5).unwrap(),
                GaussianComponent::new(1.5, 0.5).unwrap(),
            ],
        )
        .unwrap();
        let sel = select_order(&m, &[2, 4], None).unwrap();
        assert_eq!(sel.best, 4);
        let d2 = sel.scores[0].1.as_ref().unwrap();
        let d4 = sel.scores[1].1.as_ref().unwrap();
        assert!(*d2 > 0.0 && d4 < d2, "D=2 score {d2}, D=4 score {d4}");
    }

    #[test]
    fn order_selection_threshold_modes() {
        let loose = select_order(&n01(), &[2, 4], Some(1.0)).unwrap();
        assert_eq!(loose.best, 2);
        assert_eq!(loose.epsilon_satisfied, Some(true));
        let impossible = select_order(&n01(), &[2, 4], Some(-1.0)).unwrap();
        assert_eq!(impossible.epsilon_satisfied, Some(false));
        assert_eq!(impossible.best, 2);
    }

    #[test]
    fn order_selection_reports_per_order_failures() {
        let m = n01();
        match select_order(&m, &[3], None) {
            Err(Error::SelectionExhausted(detail)) => assert!(detail.contains("D=3")),
            other => panic!("expected exhaustion, got {other:?}"),
        }
        let mixed = select_order(&m, &[3, 4], None).unwrap();
        assert_eq!(mixed.best, 4);
        assert!(mixed.scores[0].1.is_err());
    }

    #[test]
    fn order_selection_scores_full_candidate_table() {
        let m = m1();
        let candidates = [4, 8, 10, 12, 14, 16];
        let sel = select_order(&m, &candidates, None).unwrap();
        assert_eq!(sel.scores.len(), candidates.len());
        let mut best_by_scan = None;
        for (d, outcome) in &sel.scores {
            let score = outcome.as_ref().expect("all candidates fit");
            assert!(*score >= -1e-10);
            match best_by_scan {
                None => best_by_scan = Some((*d, *score)),
                Some((_, s)) if *score < s - 1e-12 => best_by_scan = Some((*d, *score)),
                _ => {}
            }
        }
        assert_eq!(sel.best, best_by_scan.unwrap().0);
    }
}
