//! Univariate Gaussian mixture models: evaluation, exact raw moments,
//! ancestral sampling, and the product-of-Gaussians identity.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::dd::Dd;

/// Highest supported raw-moment order; beyond this, double precision cannot
/// represent the graded moment magnitudes reliably.
pub const MOMENT_ORDER_CAP: usize = 64;

const LOG_2PI: f64 = 1.837877066409345483560659472811_f64;

/// One mixture component `N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianComponent {
    /// A component with finite location and strictly positive scale.
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidGmm(format!("component mean {mu} is not finite")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidGmm(format!(
                "component standard deviation {sigma} must be strictly positive and finite"
            )));
        }
        Ok(Self { mu, sigma })
    }

    /// Normal density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Log of the normal density at `x`.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - 0.5 * LOG_2PI
    }

    /// Gaussian log-normalizer `F(mu, sigma) = mu^2/(2 sigma^2) + log(2 pi sigma^2)/2`,
    /// the cumulant function of the Gaussian in its natural parametrization.
    fn log_normalizer(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.mu * self.mu / (2.0 * s2) + 0.5 * (LOG_2PI + s2.ln())
    }
}

/// Scale factor and parameters of the pointwise product of two Gaussian
/// densities: `p_a(x) p_b(x) = kappa * p_{mu_ab, sigma_ab}(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProduct {
    pub kappa: f64,
    pub mu_ab: f64,
    pub sigma_ab: f64,
}

/// Product identity for two Gaussians. The location is the precision-weighted
/// mean and the scale factor is computed through log-normalizers, so widely
/// separated components underflow gracefully instead of overflowing.
pub fn gaussian_product(a: &GaussianComponent, b: &GaussianComponent) -> GaussianProduct {
    let sa2 = a.sigma * a.sigma;
    let sb2 = b.sigma * b.sigma;
    let denom = sa2 + sb2;
    let mu_ab = (sb2 * a.mu + sa2 * b.mu) / denom;
    let sigma_ab = a.sigma * b.sigma / denom.sqrt();
    let product = GaussianComponent {
        mu: mu_ab,
        sigma: sigma_ab,
    };
    let log_kappa = product.log_normalizer() - a.log_normalizer() - b.log_normalizer();
    GaussianProduct {
        kappa: log_kappa.exp(),
        mu_ab,
        sigma_ab,
    }
}

/// Serialized form: a flat list of weighted components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmSchema {
    pub components: Vec<GmmSchemaComponent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmSchemaComponent {
    pub weight: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// A finite mixture of univariate Gaussians with strictly positive weights
/// summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GmmSchema", into = "GmmSchema")]
pub struct Gmm {
    weights: Vec<f64>,
    components: Vec<GaussianComponent>,
}

impl TryFrom<GmmSchema> for Gmm {
    type Error = Error;
    fn try_from(schema: GmmSchema) -> Result<Self> {
        let (weights, components) = split_schema(&schema)?;
        Gmm::new(weights, components)
    }
}

impl From<Gmm> for GmmSchema {
    fn from(gmm: Gmm) -> Self {
        GmmSchema {
            components: gmm
                .weights
                .iter()
                .zip(&gmm.components)
                .map(|(&weight, c)| GmmSchemaComponent {
                    weight,
                    mu: c.mu,
                    sigma: c.sigma,
                })
                .collect(),
        }
    }
}

fn split_schema(schema: &GmmSchema) -> Result<(Vec<f64>, Vec<GaussianComponent>)> {
    let mut weights = Vec::with_capacity(schema.components.len());
    let mut components = Vec::with_capacity(schema.components.len());
    for c in &schema.components {
        weights.push(c.weight);
        components.push(GaussianComponent::new(c.mu, c.sigma)?);
    }
    Ok((weights, components))
}

impl GmmSchema {
    /// Strict conversion: weights must already sum to one within 1e-12.
    pub fn into_gmm(self) -> Result<Gmm> {
        Gmm::try_from(self)
    }

    /// Lenient conversion that rescales the weights to sum to one. The flag
    /// reports whether a rescaling beyond the strict tolerance occurred.
    pub fn into_gmm_normalizing(self) -> Result<(Gmm, bool)> {
        let (weights, components) = split_schema(&self)?;
        Gmm::new_normalizing(weights, components)
    }
}

impl Gmm {
    /// Build a mixture, enforcing all invariants: at least one component,
    /// strictly positive finite weights summing to one within 1e-12.
    pub fn new(weights: Vec<f64>, components: Vec<GaussianComponent>) -> Result<Self> {
        validate_shape(&weights, &components)?;
        let sum = exact_weight_sum(&weights);
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGmm(format!(
                "weights sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    /// Build a mixture, rescaling the weights to sum to one. Returns the
    /// mixture and whether the rescaling exceeded the strict tolerance.
    pub fn new_normalizing(
        weights: Vec<f64>,
        components: Vec<GaussianComponent>,
    ) -> Result<(Self, bool)> {
        validate_shape(&weights, &components)?;
        let sum = exact_weight_sum(&weights);
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidGmm(format!("weight sum {sum} is not positive")));
        }
        let renormalized = (sum - 1.0).abs() > 1e-12;
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok((
            Self {
                weights,
                components,
            },
            renormalized,
        ))
    }

    /// A single Gaussian as a 1-component mixture.
    pub fn single(mu: f64, sigma: f64) -> Result<Self> {
        Ok(Self {
            weights: vec![1.0],
            components: vec![GaussianComponent::new(mu, sigma)?],
        })
    }

    /// Number of components.
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// Mixture density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.pdf(x))
            .sum()
    }

    /// Log-density at `x`, evaluated by log-sum-exp so far-tail points do not
    /// underflow to `log(0)` prematurely.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_pdf(x))
            .collect();
        let peak = terms.iter().fold(f64::NEG_INFINITY, |m, &t| m.max(t));
        if peak == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
    }

    /// Derivative of the mixture density at `x`.
    pub fn pdf_derivative(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| -w * ((x - c.mu) / (c.sigma * c.sigma)) * c.pdf(x))
            .sum()
    }

    /// Mixture mean.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * c.mu)
            .sum()
    }

    /// Mixture variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w * (c.mu * c.mu + c.sigma * c.sigma))
            .sum::<f64>()
            - mean * mean
    }

    /// Raw moment `E[x^l]` in closed form.
    pub fn raw_moment(&self, l: usize) -> Result<f64> {
        Ok(*self.raw_moments(l)?.last().expect("orders 0..=l inclusive"))
    }

    /// Raw moments of all orders `0..=max_order` in one pass. Each Gaussian
    /// moment is the even-term binomial sum with double-factorial scale
    /// coefficients; binomials come from one rolling Pascal row, so the whole
    /// batch costs `O(k * max_order^2)`. Accumulation is compensated to keep
    /// cancellation between odd powers of negative means under control.
    pub fn raw_moments(&self, max_order: usize) -> Result<Vec<f64>> {
        if max_order > MOMENT_ORDER_CAP {
            return Err(Error::OrderCap {
                requested: max_order,
                cap: MOMENT_ORDER_CAP,
            });
        }
        // double factorials (2j-1)!! for j = 0..=max_order/2
        let mut double_fact = vec![1.0_f64; max_order / 2 + 1];
        for j in 1..double_fact.len() {
            double_fact[j] = double_fact[j - 1] * (2 * j - 1) as f64;
        }

        let mut out = vec![Dd::ZERO; max_order + 1];
        for (w, c) in self.weights.iter().zip(&self.components) {
            let mut mu_pow = vec![1.0_f64; max_order + 1];
            let mut sig2_pow = vec![1.0_f64; max_order / 2 + 1];
            for t in 1..=max_order {
                mu_pow[t] = mu_pow[t - 1] * c.mu;
            }
            let s2 = c.sigma * c.sigma;
            for j in 1..sig2_pow.len() {
                sig2_pow[j] = sig2_pow[j - 1] * s2;
            }

            // Rolling Pascal row: binom[r] = C(l, r) for the current order l.
            let mut binom = vec![0.0_f64; max_order + 1];
            binom[0] = 1.0;
            for l in 0..=max_order {
                if l > 0 {
                    for r in (1..=l).rev() {
                        binom[r] += binom[r - 1];
                    }
                }
                let mut moment = Dd::ZERO;
                for j in 0..=(l / 2) {
                    let term = binom[2 * j] * double_fact[j] * mu_pow[l - 2 * j] * sig2_pow[j];
                    moment = moment.add_f64(term);
                }
                out[l] = out[l].add(moment.mul_f64(*w));
            }
        }
        let mut moments: Vec<f64> = out.into_iter().map(Dd::to_f64).collect();
        moments[0] = 1.0;
        Ok(moments)
    }

    /// Draw `n` iid variates: categorical component choice, then a normal draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let index = WeightedIndex::new(&self.weights).expect("positive weights");
        let normals: Vec<Normal<f64>> = self
            .components
            .iter()
            .map(|c| Normal::new(c.mu, c.sigma).expect("positive sigma"))
            .collect();
        (0..n)
            .map(|_| {
                let i = index.sample(rng);
                normals[i].sample(rng)
            })
            .collect()
    }
}

fn validate_shape(weights: &[f64], components: &[GaussianComponent]) -> Result<()> {
    if components.is_empty() {
        return Err(Error::InvalidGmm("mixture needs at least one component".into()));
    }
    if weights.len() != components.len() {
        return Err(Error::InvalidGmm(format!(
            "{} weights for {} components",
            weights.len(),
            components.len()
        )));
    }
    for c in components {
        // Re-validate in case the component was built with struct syntax.
        GaussianComponent::new(c.mu, c.sigma)?;
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidGmm(format!(
            "weight {w} must be strictly positive and finite"
        )));
    }
    Ok(())
}

/// Exact sum of the weight vector (error-free accumulation, then one rounding).
fn exact_weight_sum(weights: &[f64]) -> f64 {
    weights
        .iter()
        .fold(Dd::ZERO, |acc, &w| acc.add_f64(w))
        .to_f64()
}

/// Random mixture following a fixed generation protocol: weights proportional
/// to `U[0,1)`, means in `[-10, 0)`, standard deviations in `[1, 2)`.
pub fn random_gmm<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Gmm> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "random mixture needs at least one component".into(),
        ));
    }
    let mut weights = Vec::with_capacity(k);
    let mut components = Vec::with_capacity(k);
    for _ in 0..k {
        let mut w: f64 = rng.random();
        while w == 0.0 {
            w = rng.random();
        }
        let mu = -10.0 + 10.0 * rng.random::<f64>();
        let sigma = 1.0 + rng.random::<f64>();
        weights.push(w);
        components.push(GaussianComponent { mu, sigma });
    }
    Ok(Gmm::new_normalizing(weights, components)?.0)
}

/// Kernel density estimate: one component per data point, uniform weights,
/// shared caller-supplied bandwidth.
pub fn kde_from_data(xs: &[f64], sigma: f64) -> Result<Gmm> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = xs.len();
    let weights = vec![1.0 / k as f64; k];
    let components = xs
        .iter()
        .map(|&mu| GaussianComponent::new(mu, sigma))
        .collect::<Result<Vec<_>>>()?;
    Ok(Gmm::new_normalizing(weights, components)?.0)
}
