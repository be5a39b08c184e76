//! Dense univariate polynomials over `f64`, coefficients in ascending order.
//!
//! Provides Horner evaluation, differentiation, and a real-root finder based
//! on derivative recursion: between consecutive stationary points a polynomial
//! is strictly monotone, so every real root is isolated by the (recursively
//! computed) roots of the derivative plus a Cauchy bound on the outer
//! intervals, then polished by bisection. Robust for the moderate degrees
//! (<= 64) used here; no complex roots are reported.

use super::dd::Dd;

/// Evaluate `sum c[i] x^i` by Horner's scheme.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0_f64;
    for &c in coeffs.iter().rev() {
        acc = acc.mul_add(x, c);
    }
    acc
}

/// Coefficients of the derivative polynomial.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    if coeffs.len() <= 1 {
        return vec![0.0];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Drop trailing coefficients that are negligible relative to the largest.
fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return &coeffs[..1.min(coeffs.len())];
    }
    let mut end = coeffs.len();
    while end > 1 && coeffs[end - 1].abs() <= scale * 1e-300 {
        end -= 1;
    }
    &coeffs[..end]
}

/// Cauchy bound: all real roots lie in `[-b, b]`.
fn root_bound(coeffs: &[f64]) -> f64 {
    let lead = coeffs[coeffs.len() - 1];
    let m = coeffs[..coeffs.len() - 1]
        .iter()
        .fold(0.0_f64, |m, c| m.max((c / lead).abs()));
    1.0 + m
}

/// Bisection on a bracketing interval; assumes a sign change.
fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval(coeffs, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots of the polynomial, ascending. Multiple roots where the
/// polynomial touches zero without a sign change are missed by design; the
/// callers (mode finding, integration brackets) only need sign-change roots.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let coeffs = trim(coeffs);
    let degree = coeffs.len() - 1;
    match degree {
        0 => Vec::new(),
        1 => vec![-coeffs[0] / coeffs[1]],
        _ => {
            let stationary = real_roots(&derivative(coeffs));
            let bound = root_bound(coeffs);
            let mut cuts = Vec::with_capacity(stationary.len() + 2);
            cuts.push(-bound);
            cuts.extend(stationary.iter().copied().filter(|s| s.abs() < bound));
            cuts.push(bound);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

            let mut roots = Vec::new();
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi <= lo {
                    continue;
                }
                let flo = eval(coeffs, lo);
                let fhi = eval(coeffs, hi);
                if flo == 0.0 {
                    push_root(&mut roots, lo);
                } else if (flo > 0.0) != (fhi >= 0.0) {
                    push_root(&mut roots, bisect(coeffs, lo, hi));
                }
            }
            let fhi = eval(coeffs, bound);
            if fhi == 0.0 {
                push_root(&mut roots, bound);
            }
            roots
        }
    }
}

/// Pascal's triangle up to row `n`: `binom[j][i] = C(j, i)`.
pub(crate) fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    rows.push(vec![1.0]);
    for j in 1..=n {
        let prev = &rows[j - 1];
        let mut row = vec![1.0; j + 1];
        for i in 1..j {
            row[i] = prev[i - 1] + prev[i];
        }
        rows.push(row);
    }
    rows
}

/// Coefficients (degrees `1..=D`) of `P(c + s*z)` as a polynomial in `z`,
/// where `P(x) = sum_{j=1}^D theta[j-1] x^j`. The constant term is dropped
/// (it is absorbed by a log-partition). Terms alternate in sign for negative
/// `c`, so accumulation runs in double-double precision.
pub(crate) fn compose_affine_forward(theta: &[f64], c: f64, s: f64) -> Vec<f64> {
    let d = theta.len();
    let binom = binomial_table(d);
    let mut c_pow = vec![Dd::from_f64(1.0); d + 1];
    let mut s_pow = vec![Dd::from_f64(1.0); d + 1];
    for t in 1..=d {
        c_pow[t] = c_pow[t - 1].mul_f64(c);
        s_pow[t] = s_pow[t - 1].mul_f64(s);
    }
    (1..=d)
        .map(|i| {
            let mut acc = Dd::ZERO;
            for j in i..=d {
                let term = Dd::prod(theta[j - 1], binom[j][i]).mul(c_pow[j - i]);
                acc = acc.add(term);
            }
            acc.mul(s_pow[i]).to_f64()
        })
        .collect()
}

/// Inverse of [`compose_affine_forward`]: coefficients (degrees `1..=D`) of
/// `Q((x - c)/s)` as a polynomial in `x`, constant term dropped.
pub(crate) fn compose_affine_back(theta_z: &[f64], c: f64, s: f64) -> Vec<f64> {
    let d = theta_z.len();
    let binom = binomial_table(d);
    let mut neg_c_pow = vec![Dd::from_f64(1.0); d + 1];
    let mut s_inv_pow = vec![Dd::from_f64(1.0); d + 1];
    for t in 1..=d {
        neg_c_pow[t] = neg_c_pow[t - 1].mul_f64(-c);
        s_inv_pow[t] = s_inv_pow[t - 1].div_f64(s);
    }
    (1..=d)
        .map(|j| {
            let mut acc = Dd::ZERO;
            for i in j..=d {
                let term = Dd::prod(theta_z[i - 1], binom[i][j])
                    .mul(neg_c_pow[i - j])
                    .mul(s_inv_pow[i]);
                acc = acc.add(term);
            }
            acc.to_f64()
        })
        .collect()
}

fn push_root(roots: &mut Vec<f64>, r: f64) {
    if roots
        .last()
        .is_some_and(|&last| (last - r).abs() <= 1e-12 * (1.0 + r.abs()))
    {
        return;
    }
    roots.push(r);
}
