//! Moment-to-natural parameter conversion by Newton iteration.
//!
//! Given a target moment vector `eta`, find `theta` such that the normalized
//! density `p_theta` reproduces those moments. Working with the augmented
//! vector `lambda = (lambda_0, .., lambda_D)` for the unnormalized model
//! `exp(-sum_i lambda_i x^i)` (so `lambda_i = -theta_i` for `i >= 1`, and
//! `lambda_0` converges to the log-normalizer), each step solves one linear
//! system whose matrix is the (D+1)x(D+1) Hankel matrix of current moments:
//! the exact Jacobian of the moment map. Newton converges quadratically near
//! the fixed point; far from it the step is damped, with halving on residual
//! growth or on trial iterates that leave the integrable cone.
//!
//! The iteration always runs in standardized coordinates (target mean 0,
//! variance 1): raw moment systems at the orders and scales used here can be
//! numerically singular, while the standardized ones stay well conditioned.
//! The change of variables is exact on coefficients, so fixed points are
//! preserved.

use crate::error::{Error, Result};
use crate::numerics::dd::Dd;
use crate::numerics::hankel::hankel_from_moments;
use crate::numerics::integrate::QuadratureSettings;
use crate::numerics::poly::{binomial_table, compose_affine_back, compose_affine_forward};
use crate::ped::{MomentParam, PedNatural, Support};

/// Iteration controls for [`eta_to_theta`].
#[derive(Debug, Clone)]
pub struct IlsmConfig {
    pub max_iters: usize,
    /// Stop when the proposed update satisfies `||delta lambda||_inf <= step_tol` ...
    pub step_tol: f64,
    /// ... and the moment residual satisfies `||eta - K(lambda)||_inf <= residual_tol`.
    pub residual_tol: f64,
    /// Step fraction in (0, 1]; 1 is a full Newton step. Whatever the value,
    /// a step that increases the residual is halved up to five times before
    /// the iteration gives up.
    pub damping: f64,
    pub quadrature: QuadratureSettings,
}

impl Default for IlsmConfig {
    fn default() -> Self {
        IlsmConfig {
            max_iters: 50,
            step_tol: 1e-8,
            residual_tol: 1e-6,
            damping: 1.0,
            quadrature: QuadratureSettings::default(),
        }
    }
}

impl IlsmConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.step_tol > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive, got step_tol {} residual_tol {}",
                self.step_tol, self.residual_tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Augmented natural parameters `(lambda_0, .., lambda_D)` of the
/// unnormalized model `exp(-sum lambda_i x^i)`. At a fixed point `lambda_0`
/// equals the log-normalizer `F(theta)` and `lambda_i = -theta_i` otherwise.
#[derive(Debug, Clone)]
pub struct AugmentedNatural {
    lambda: Vec<f64>,
}

impl AugmentedNatural {
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Polynomial order `D` (the vector holds `D + 1` entries).
    pub fn order(&self) -> usize {
        self.lambda.len() - 1
    }

    /// The plain natural coefficients `theta_i = -lambda_i`, `i = 1..D`.
    pub fn theta(&self) -> Vec<f64> {
        self.lambda[1..].iter().map(|l| -l).collect()
    }
}

/// Convergence record for one [`eta_to_theta`] run.
#[derive(Debug, Clone)]
pub struct IlsmDiagnostics {
    /// Newton steps actually taken.
    pub iterations: usize,
    /// Final sup-norm moment residual (standardized coordinates).
    pub residual: f64,
    /// Residual after the initial state and after each accepted step.
    pub residual_history: Vec<f64>,
    /// The log-normalizer implied by the converged `lambda_0`, mapped back to
    /// the original coordinates; agrees with `log_partition` of the returned
    /// density to within the residual tolerance.
    pub log_normalizer: f64,
    /// Converged augmented vector in the original coordinates.
    pub lambda: AugmentedNatural,
}

/// Moments of a natural-parameter density by quadrature: the exact
/// natural-to-moment map, used both standalone and as the per-iteration
/// oracle inside [`eta_to_theta`].
pub fn theta_to_eta_quadrature(
    theta: &PedNatural,
    q: &QuadratureSettings,
) -> Result<MomentParam> {
    let mu = theta.moments_numeric(theta.order(), q)?;
    MomentParam::new(mu[1..].to_vec())
}

/// One fully evaluated iterate: unnormalized-model parameters plus
/// everything the Newton step and the stopping rule need.
struct IterState {
    lambda: Vec<f64>,
    /// Normalized moments mu_0..mu_{2D} of p_theta.
    mu: Vec<f64>,
    /// Total mass of the unnormalized model, exp(F(theta) - lambda_0).
    mass: f64,
    /// eta_i - K_i(lambda) for i = 0..D, with eta_0 = 1.
    resid: Vec<f64>,
    res_norm: f64,
}

fn eval_state(
    lambda: &[f64],
    eta_aug: &[f64],
    q: &QuadratureSettings,
) -> Result<IterState> {
    let d = lambda.len() - 1;
    let theta: Vec<f64> = lambda[1..].iter().map(|l| -l).collect();
    let ped = PedNatural::new(theta, Support::RealLine)?;
    let log_f = ped.log_partition(q)?;
    let mu = ped.moments_numeric(2 * d, q)?;
    let mass = (log_f - lambda[0]).exp();
    let resid: Vec<f64> = (0..=d).map(|i| eta_aug[i] - mass * mu[i]).collect();
    let res_norm = resid.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(IterState {
        lambda: lambda.to_vec(),
        mu,
        mass,
        resid,
        res_norm,
    })
}

/// Target moments rewritten for the standardized variable `z = (x - c)/s`:
/// `eta_z[l] = s^-l * sum_j C(l,j) (-c)^(l-j) eta[j]`, with `eta[0] = 1`.
/// Accumulated in double-double so the (large, alternating) binomial terms
/// cancel exactly.
fn standardized_moments(eta: &[f64], c: f64, s: f64) -> Vec<f64> {
    let d = eta.len();
    let binom = binomial_table(d);
    let mut neg_c_pow = vec![Dd::from_f64(1.0)];
    for _ in 0..d {
        neg_c_pow.push(neg_c_pow.last().unwrap().mul_f64(-c));
    }
    let s_dd = Dd::from_f64(s);
    let mut out = Vec::with_capacity(d + 1);
    for l in 0..=d {
        let mut acc = Dd::ZERO;
        for j in 0..=l {
            let eta_j = if j == 0 { 1.0 } else { eta[j - 1] };
            acc = acc.add(Dd::prod(binom[l][j], eta_j).mul(neg_c_pow[l - j]));
        }
        out.push(acc.div(s_dd.powi(l as u32)).to_f64());
    }
    out
}

/// Newton iteration from moment parameters to natural parameters.
///
/// `init` supplies the starting coefficients (a score-matching fit works
/// well). A formal (non-integrable) starting point is permitted: its
/// standardized leading coefficient is clamped negative before the first
/// step, since only the target moments determine the fixed point. Returns
/// the converged density together with diagnostics.
pub fn eta_to_theta(
    eta: &MomentParam,
    init: &PedNatural,
    cfg: &IlsmConfig,
) -> Result<(PedNatural, IlsmDiagnostics)> {
    cfg.validate()?;
    let d = eta.order();
    if init.order() != d {
        return Err(Error::OrderMismatch {
            left: init.order(),
            right: d,
        });
    }
    if init.support() != Support::RealLine {
        return Err(Error::InvalidParameter(
            "moment-to-natural conversion targets real-line densities".into(),
        ));
    }

    // Standardize: center/scale from the target's first two moments.
    let c = eta.eta()[0];
    let var = eta.eta()[1] - c * c;
    debug_assert!(var > 0.0, "enforced by the moment-matrix PD check");
    let s = var.sqrt();
    let eta_z = standardized_moments(eta.eta(), c, s);

    let mut theta_z = compose_affine_forward(init.theta(), c, s);
    if !(theta_z[d - 1] < 0.0) {
        // Formal starting fit: clamp into the integrable cone.
        theta_z[d - 1] = -theta_z[d - 1].abs().max(1e-3);
    }
    let init_z = PedNatural::new(theta_z.clone(), Support::RealLine)?;
    let lambda0 = init_z.log_partition(&cfg.quadrature)?;
    let mut lambda: Vec<f64> = Vec::with_capacity(d + 1);
    lambda.push(lambda0);
    lambda.extend(theta_z.iter().map(|t| -t));

    let mut state = eval_state(&lambda, &eta_z, &cfg.quadrature)?;
    let mut history = vec![state.res_norm];
    let mut converged = false;
    let mut steps = 0usize;

    for _ in 0..cfg.max_iters {
        // Exact Newton direction: the Jacobian of K is -mass * Hankel(mu),
        // so solve Hankel(mu) y = resid and step by -y / mass.
        let hankel = hankel_from_moments(&state.mu)?;
        let rhs: Vec<Dd> = state.resid.iter().map(|&r| Dd::from_f64(r)).collect();
        let report = hankel.solve_dd(&rhs)?;
        let direction: Vec<f64> = report.x.iter().map(|y| -y / state.mass).collect();

        let step_norm = direction
            .iter()
            .fold(0.0_f64, |m, v| m.max((cfg.damping * v).abs()));
        if step_norm <= cfg.step_tol && state.res_norm <= cfg.residual_tol {
            converged = true;
            break;
        }

        let mut alpha = cfg.damping;
        let mut accepted = None;
        for _ in 0..6 {
            let trial: Vec<f64> = state
                .lambda
                .iter()
                .zip(&direction)
                .map(|(l, dir)| l + alpha * dir)
                .collect();
            // Integrability guard: the unnormalized model needs lambda_D > 0.
            if !(trial[d] > 0.0) {
                alpha *= 0.5;
                continue;
            }
            match eval_state(&trial, &eta_z, &cfg.quadrature) {
                Ok(ts) if ts.res_norm <= state.res_norm || ts.res_norm <= cfg.residual_tol => {
                    accepted = Some(ts);
                    break;
                }
                // Residual grew, or the overshoot broke the quadrature:
                // shorten the step and retry.
                Ok(_) | Err(_) => alpha *= 0.5,
            }
        }
        match accepted {
            Some(next) => {
                state = next;
                steps += 1;
                history.push(state.res_norm);
            }
            None => {
                let theta_x = compose_affine_back(&AugmentedNatural {
                    lambda: state.lambda.clone(),
                }
                .theta(), c, s);
                return Err(Error::IlsmNonConvergence {
                    iterations: steps,
                    residual: state.res_norm,
                    last_theta: theta_x,
                });
            }
        }
    }

    if !converged {
        // Re-check: the loop may have run out of iterations exactly at
        // convergence without observing it.
        if !(state.res_norm <= cfg.residual_tol) {
            let theta_x = compose_affine_back(
                &AugmentedNatural {
                    lambda: state.lambda.clone(),
                }
                .theta(),
                c,
                s,
            );
            return Err(Error::IlsmNonConvergence {
                iterations: steps,
                residual: state.res_norm,
                last_theta: theta_x,
            });
        }
    }

    let theta_z_final: Vec<f64> = state.lambda[1..].iter().map(|l| -l).collect();
    let theta_x = compose_affine_back(&theta_z_final, c, s);
    let ped = PedNatural::new(theta_x, Support::RealLine)?;
    // F in original coordinates: F_x = ln(s) + P_x(c) + F_z, with F_z taken
    // from the converged lambda_0.
    let log_normalizer = s.ln() + ped.log_unnormalized(c) + state.lambda[0];
    let mut lambda_x = Vec::with_capacity(d + 1);
    lambda_x.push(log_normalizer);
    lambda_x.extend(ped.theta().iter().map(|t| -t));
    let diagnostics = IlsmDiagnostics {
        iterations: steps,
        residual: state.res_norm,
        residual_history: history,
        log_normalizer,
        lambda: AugmentedNatural { lambda: lambda_x },
    };
    Ok((ped, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{mle_convert, sme_convert_direct};
    use crate::gmm::{GaussianComponent, Gmm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eta(values: &[f64]) -> MomentParam {
        MomentParam::new(values.to_vec()).unwrap()
    }

    fn ped(theta: &[f64]) -> PedNatural {
        PedNatural::new(theta.to_vec(), Support::RealLine).unwrap()
    }

    #[test]
    fn standard_normal_fixed_point() {
        let cfg = IlsmConfig::default();
        let (p, diag) = eta_to_theta(&eta(&[0.0, 1.0]), &ped(&[0.1, -0.4]), &cfg).unwrap();
        assert!(p.theta()[0].abs() < 1e-6, "theta_1 = {}", p.theta()[0]);
        assert!((p.theta()[1] + 0.5).abs() < 1e-6, "theta_2 = {}", p.theta()[1]);
        assert!(diag.iterations <= 20, "took {} iterations", diag.iterations);
        assert!(diag.residual <= cfg.residual_tol);
    }

    #[test]
    fn shifted_normal_fixed_point() {
        // eta = (2, 5) is N(2, 1) in moment coordinates.
        let (p, _) = eta_to_theta(
            &eta(&[2.0, 5.0]),
            &ped(&[0.1, -0.4]),
            &IlsmConfig::default(),
        )
        .unwrap();
        assert!((p.theta()[0] - 2.0).abs() < 1e-6);
        assert!((p.theta()[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn self_consistency_from_gmm_moments() {
        let m = Gmm::new(
            vec![0.6, 0.4],
            vec![
                GaussianComponent::new(-0.3, 1.0).unwrap(),
                GaussianComponent::new(0.5, 1.3).unwrap(),
            ],
        )
        .unwrap();
        let target = mle_convert(&m, 4).unwrap();
        let init = sme_convert_direct(&m, 4).unwrap();
        let cfg = IlsmConfig {
            residual_tol: 1e-8,
            ..Default::default()
        };
        let (p, diag) = eta_to_theta(&target, &init, &cfg).unwrap();
        let back = theta_to_eta_quadrature(&p, &cfg.quadrature).unwrap();
        for (got, want) in back.eta().iter().zip(target.eta()) {
            assert!(
                (got - want).abs() <= 1e-6,
                "moment mismatch: {got} vs {want} (diag {diag:?})"
            );
        }
    }

    #[test]
    fn lambda_zero_matches_log_partition_at_fixed_point() {
        let (p, diag) = eta_to_theta(
            &eta(&[0.0, 1.0]),
            &ped(&[0.1, -0.4]),
            &IlsmConfig::default(),
        )
        .unwrap();
        let f = p.log_partition(&QuadratureSettings::default()).unwrap();
        assert!(
            (diag.log_normalizer - f).abs() < 1e-6,
            "{} vs {}",
            diag.log_normalizer,
            f
        );
        // The augmented vector is reported in original coordinates.
        assert_eq!(diag.lambda.order(), 2);
        assert_eq!(diag.lambda.theta(), p.theta());
        assert!((diag.lambda.lambda()[0] - f).abs() < 1e-6);
    }

    #[test]
    fn residual_tail_is_strictly_decreasing() {
        for (target, init, d) in [
            (eta(&[0.3, 1.4]), ped(&[0.4, -0.21]), 2usize),
            (
                eta(&[0.0, 0.6, 0.0, 1.0]),
                ped(&[0.0, -0.4, 0.0, -0.3]),
                4,
            ),
        ] {
            let cfg = IlsmConfig {
                residual_tol: 1e-9,
                ..Default::default()
            };
            let (_, diag) = eta_to_theta(&target, &init, &cfg).unwrap();
            let h = &diag.residual_history;
            assert!(h.len() >= 3, "too few iterations at D={d} to observe the tail");
            for w in h[h.len() - 3..].windows(2) {
                assert!(
                    w[1] < w[0],
                    "residual tail not strictly decreasing at D={d}: {h:?}"
                );
            }
        }
    }

    #[test]
    fn duality_round_trip_order_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cfg = IlsmConfig {
            step_tol: 1e-10,
            residual_tol: 1e-9,
            ..Default::default()
        };
        for _ in 0..20 {
            let theta2 = -(0.1 + 1.9 * rng.random::<f64>());
            let theta1 = -2.0 + 4.0 * rng.random::<f64>();
            let original = ped(&[theta1, theta2]);
            let moments = theta_to_eta_quadrature(&original, &cfg.quadrature).unwrap();
            let (back, _) = eta_to_theta(&moments, &ped(&[0.0, -0.25]), &cfg).unwrap();
            for (got, want) in back.theta().iter().zip(original.theta()) {
                assert!(
                    (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "round trip drifted: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn quadrature_moment_examples() {
        let q = QuadratureSettings::default();
        let m = theta_to_eta_quadrature(&ped(&[0.0, -0.5]), &q).unwrap();
        assert!(m.eta()[0].abs() < 1e-7);
        assert!((m.eta()[1] - 1.0).abs() < 1e-7);

        let m = theta_to_eta_quadrature(&ped(&[1.0, -0.5]), &q).unwrap();
        assert!((m.eta()[0] - 1.0).abs() < 1e-7);
        assert!((m.eta()[1] - 2.0).abs() < 1e-7);

        // Symmetric quartic: odd moments vanish; even ones agree with an
        // independent fixed-window quadrature scheme.
        let quartic = ped(&[0.0, 0.0, 0.0, -1.0]);
        let m = theta_to_eta_quadrature(&quartic, &q).unwrap();
        assert!(m.eta()[0].abs() < 1e-9);
        assert!(m.eta()[2].abs() < 1e-9);
        let fixed = QuadratureSettings {
            window: crate::numerics::integrate::WindowPolicy::FixedClamp { a: -8.0, b: 8.0 },
            ..Default::default()
        };
        let m2 = theta_to_eta_quadrature(&quartic, &fixed).unwrap();
        assert!((m.eta()[1] - m2.eta()[1]).abs() < 1e-8);
        assert!((m.eta()[3] - m2.eta()[3]).abs() < 1e-8);
    }

    #[test]
    fn config_validation() {
        let bad_iters = IlsmConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(matches!(
            eta_to_theta(&eta(&[0.0, 1.0]), &ped(&[0.0, -0.5]), &bad_iters),
            Err(Error::InvalidParameter(_))
        ));
        for cfg in [
            IlsmConfig {
                step_tol: 0.0,
                ..Default::default()
            },
            IlsmConfig {
                residual_tol: -1.0,
                ..Default::default()
            },
            IlsmConfig {
                damping: 0.0,
                ..Default::default()
            },
            IlsmConfig {
                damping: 1.5,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                eta_to_theta(&eta(&[0.0, 1.0]), &ped(&[0.0, -0.5]), &cfg),
                Err(Error::InvalidParameter(_))
            ));
        }
        assert!(matches!(
            eta_to_theta(&eta(&[0.0, 1.0, 0.0, 3.0]), &ped(&[0.0, -0.5]), &Default::default()),
            Err(Error::OrderMismatch { left: 2, right: 4 })
        ));
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        let cfg = IlsmConfig {
            max_iters: 1,
            step_tol: 1e-14,
            residual_tol: 1e-14,
            ..Default::default()
        };
        match eta_to_theta(&eta(&[0.0, 1.0]), &ped(&[1.5, -0.1]), &cfg) {
            Err(Error::IlsmNonConvergence {
                iterations,
                residual,
                last_theta,
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
                assert_eq!(last_theta.len(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn formal_init_is_repaired() {
        // Target: the moments of a genuine quartic model. Init: a formal
        // (non-integrable) fit with a positive leading coefficient.
        let q = QuadratureSettings::default();
        let truth = ped(&[0.3, -0.6, 0.01, -0.05]);
        let target = theta_to_eta_quadrature(&truth, &q).unwrap();
        let init = PedNatural::new(vec![0.0, -0.5, 0.0, 1e-8], Support::RealLine).unwrap();
        assert!(!init.is_integrable());
        let cfg = IlsmConfig {
            residual_tol: 1e-8,
            ..Default::default()
        };
        let (p, _) = eta_to_theta(&target, &init, &cfg).unwrap();
        let back = theta_to_eta_quadrature(&p, &q).unwrap();
        for (got, want) in back.eta().iter().zip(target.eta()) {
            assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
        }
    }
}
