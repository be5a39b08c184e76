//! Regression checks against the bundled reference mixture pair: the two
//! order-8 coefficient vectors, the order-8 and order-4 fast Jeffreys
//! values, and the relative error of the order-4 value against the
//! recorded Monte Carlo reference.

use std::time::{Duration, Instant};

use polyexp::divergences::jeffreys_heuristic;
use polyexp::estimators::sme_convert_direct;
use polyexp::gmm::Gmm;

use crate::error::{CliError, Result};

/// Bundled reference mixtures (10 and 11 components).
pub const M1_JSON: &str = include_str!("../fixtures/golden_m1.json");
pub const M2_JSON: &str = include_str!("../fixtures/golden_m2.json");

/// Reference order-8 score-matching coefficients for the first mixture.
pub const M1_THETA_D8: [f64; 8] = [
    -0.427070080652058,
    -0.1550659000258019,
    -0.011387815484428169,
    0.0013093778642312426,
    1.609814853908098e-4,
    4.97127592526588e-7,
    -2.1037139172837482e-7,
    -2.6728162063986965e-9,
];

/// Reference order-8 score-matching coefficients for the second mixture.
pub const M2_THETA_D8: [f64; 8] = [
    -0.8572007015061018,
    -0.13082046150595872,
    -0.009215306434221304,
    -0.0012216841345505935,
    6.151031668490958e-5,
    4.504153048723314e-5,
    4.319567125193681e-6,
    1.2196120465339543e-7,
];

/// Reference fast Jeffreys value at order 8.
pub const JD_D8: f64 = 0.2618412909304468;
/// Reference fast Jeffreys value at order 4.
pub const JD_D4: f64 = 0.2433048263139042;
/// Recorded Monte Carlo reference used for the order-4 error check.
pub const JD_MC_D4_REF: f64 = 0.26324227;
/// Recorded Monte Carlo reference for the order-8 listing.
pub const JD_MC_D8_REF: f64 = 0.26338216578112167;
/// Expected relative error of the order-4 value against [`JD_MC_D4_REF`].
pub const D4_REL_ERROR: f64 = 0.0757;

/// One comparison against a reference value.
#[derive(Debug, Clone)]
pub struct GoldenCheck {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    /// Whether `tolerance` is relative to `expected` (else absolute).
    pub relative: bool,
    pub pass: bool,
}

impl GoldenCheck {
    fn new(name: String, observed: f64, expected: f64, tolerance: f64, relative: bool) -> Self {
        let scale = if relative { expected.abs() } else { 1.0 };
        let pass = (observed - expected).abs() <= tolerance * scale;
        Self {
            name,
            observed,
            expected,
            tolerance,
            relative,
            pass,
        }
    }
}

/// Outcome of the full regression run.
#[derive(Debug)]
pub struct GoldenReport {
    pub checks: Vec<GoldenCheck>,
    /// Wall time of the order-8 recomputation (both fits plus the
    /// divergence value).
    pub elapsed_d8: Duration,
}

impl GoldenReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// One line per check, `ok`/`FAIL` first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let kind = if c.relative { "rel" } else { "abs" };
            out.push_str(&format!(
                "{} {} observed {} expected {} ({} tol {})\n",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.observed,
                c.expected,
                kind,
                c.tolerance
            ));
        }
        out.push_str(&format!(
            "order-8 recomputation took {:?}\n",
            self.elapsed_d8
        ));
        out
    }
}

/// Load the bundled reference mixtures.
pub fn reference_mixtures() -> Result<(Gmm, Gmm)> {
    let parse = |name: &str, text: &str| -> Result<Gmm> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: name.into(),
            message: e.to_string(),
        })
    };
    Ok((
        parse("golden_m1.json", M1_JSON)?,
        parse("golden_m2.json", M2_JSON)?,
    ))
}

/// Recompute the reference quantities and compare them against the
/// recorded constants.
pub fn run_golden() -> Result<GoldenReport> {
    let (m1, m2) = reference_mixtures()?;
    let mut checks = Vec::new();

    let started = Instant::now();
    let fit1 = sme_convert_direct(&m1, 8)?;
    let fit2 = sme_convert_direct(&m2, 8)?;
    let jd8 = jeffreys_heuristic(&m1, &m2, 8)?.value;
    let elapsed_d8 = started.elapsed();

    for (i, (&got, &want)) in fit1.theta().iter().zip(&M1_THETA_D8).enumerate() {
        checks.push(GoldenCheck::new(
            format!("m1 D=8 theta[{}]", i + 1),
            got,
            want,
            1e-6,
            true,
        ));
    }
    for (i, (&got, &want)) in fit2.theta().iter().zip(&M2_THETA_D8).enumerate() {
        checks.push(GoldenCheck::new(
            format!("m2 D=8 theta[{}]", i + 1),
            got,
            want,
            1e-6,
            true,
        ));
    }
    checks.push(GoldenCheck::new(
        "Jeffreys heuristic D=8".into(),
        jd8,
        JD_D8,
        1e-6,
        false,
    ));

    let jd4 = jeffreys_heuristic(&m1, &m2, 4)?.value;
    checks.push(GoldenCheck::new(
        "Jeffreys heuristic D=4".into(),
        jd4,
        JD_D4,
        1e-6,
        false,
    ));
    checks.push(GoldenCheck::new(
        "D=4 relative error vs recorded MC".into(),
        (JD_MC_D4_REF - jd4).abs() / JD_MC_D4_REF,
        D4_REL_ERROR,
        2e-3,
        false,
    ));

    Ok(GoldenReport { checks, elapsed_d8 })
}
