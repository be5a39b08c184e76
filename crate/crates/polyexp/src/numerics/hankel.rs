//! Hankel matrices built from raw moment sequences.
//!
//! A moment sequence `μ_0..μ_{2d}` defines the symmetric `(d+1)x(d+1)` matrix
//! with entry `(i, j) = μ_{i+j}` (zero-based). For moments of a genuine
//! non-degenerate density these matrices are positive definite, so solves go
//! through a Cholesky factorization, followed by double-double iterative
//! refinement to survive the severe grading of high-order moment systems.

use nalgebra::DMatrix;

use super::dd::Dd;
use super::linalg::{
    condition_estimate, refine_in_place, residual_dd, CONDITION_WARN, RESIDUAL_TOL,
};
pub use super::linalg::SolveReport;
use crate::error::{Error, Result};

/// A symmetric Hankel matrix stored as its defining moment sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMoments {
    half_order: usize,
    coeffs: Vec<f64>,
}

/// Build a Hankel matrix from `μ_0..μ_{2d}`; the length must be odd.
pub fn hankel_from_moments(mu: &[f64]) -> Result<HankelMoments> {
    if mu.len().is_multiple_of(2) || mu.is_empty() {
        return Err(Error::EvenHankelLength(mu.len()));
    }
    if let Some(bad) = mu.iter().find(|m| !m.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "non-finite moment {bad} in Hankel coefficients"
        )));
    }
    Ok(HankelMoments {
        half_order: (mu.len() - 1) / 2,
        coeffs: mu.to_vec(),
    })
}

impl HankelMoments {
    /// `d`, where the matrix is `(d+1) x (d+1)`.
    pub fn half_order(&self) -> usize {
        self.half_order
    }

    /// The moment sequence `μ_0..μ_{2d}`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Materialize the dense symmetric matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.half_order + 1;
        DMatrix::from_fn(n, n, |i, j| self.coeffs[i + j])
    }

    fn dense_dd(&self) -> Vec<Vec<Dd>> {
        let n = self.half_order + 1;
        (0..n)
            .map(|i| (0..n).map(|j| Dd::from_f64(self.coeffs[i + j])).collect())
            .collect()
    }

    /// True iff the matrix factorizes with strictly positive pivots.
    pub fn is_positive_definite(&self) -> bool {
        cholesky(&self.dense()).is_some()
    }

    /// Solve `H x = b` with a conditioning report. The residual satisfies
    /// `||Hx - b||_inf <= 1e-9 * (1 + ||b||_inf)` on success.
    pub fn solve(&self, b: &[f64]) -> Result<SolveReport> {
        let b_dd: Vec<Dd> = b.iter().map(|&v| Dd::from_f64(v)).collect();
        self.solve_dd(&b_dd)
    }

    /// As [`solve`](Self::solve), with an extended-precision right-hand side:
    /// the refinement target is the dd values, not their roundings.
    pub(crate) fn solve_dd(&self, b: &[Dd]) -> Result<SolveReport> {
        let n = self.half_order + 1;
        if b.len() != n {
            return Err(Error::InvalidParameter(format!(
                "right-hand side has length {}, matrix is {n} x {n}",
                b.len()
            )));
        }
        let dense = self.dense();
        let factor = cholesky(&dense).ok_or(Error::NotPositiveDefinite)?;
        let condition = condition_estimate(&dense);
        let a_dd = self.dense_dd();

        let solve = |rhs: &[f64]| -> Option<Vec<f64>> {
            let x = chol_solve(&factor, rhs);
            x.iter().all(|t| t.is_finite()).then_some(x)
        };
        let b_f: Vec<f64> = b.iter().map(|v| v.to_f64()).collect();
        let mut x = solve(&b_f).ok_or(Error::NotPositiveDefinite)?;
        let steps = refine_in_place(&a_dd, b, &mut x, solve);

        let bn = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rn = residual_dd(&a_dd, b, &x)
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));
        if rn > RESIDUAL_TOL * (1.0 + bn) {
            return Err(Error::NotPositiveDefinite);
        }
        let warning = (condition > CONDITION_WARN).then(|| {
            format!(
                "ill-conditioned moment system: condition estimate {condition:.3e} exceeds {CONDITION_WARN:e}"
            )
        });
        Ok(SolveReport {
            x,
            condition,
            warning,
            steps,
        })
    }
}

/// Lower-triangular Cholesky factor, or `None` when a pivot is not strictly
/// positive (i.e. the matrix is numerically indefinite or singular).
fn cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let root = diag.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

/// Solve `L L^T x = b` by forward and back substitution.
fn chol_solve(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
