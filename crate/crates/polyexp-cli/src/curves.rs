//! Plot-data emission: evaluate named models over a grid and render a CSV
//! with one `x` column plus one column per model.

use polyexp::gmm::Gmm;
use polyexp::ped::PedNatural;

use crate::error::{CliError, Result};

/// A model that can be evaluated pointwise for plotting.
#[derive(Debug, Clone)]
pub enum CurveModel {
    /// Mixture density.
    Mixture(Gmm),
    /// Unnormalized polynomial exponential density `exp(P(x))`.
    Density(PedNatural),
}

impl CurveModel {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CurveModel::Mixture(m) => m.pdf(x),
            CurveModel::Density(p) => p.log_unnormalized(x).exp(),
        }
    }
}

/// Evenly spaced grid of `points` values covering `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(CliError::Usage(format!(
            "grid range [{lo}, {hi}] is not a finite increasing interval"
        )));
    }
    if points < 2 {
        return Err(CliError::Usage("grid needs at least two points".into()));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|i| lo + step * i as f64).collect())
}

/// Render the models over the grid as CSV (`x,<name>,...`). An empty model
/// list yields a header-only file.
pub fn emit_curves(models: &[(String, CurveModel)], grid: &[f64]) -> Result<String> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Usage("grid must be strictly increasing".into()));
    }
    let mut out = String::from("x");
    for (name, _) in models {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    if models.is_empty() {
        return Ok(out);
    }
    for &x in grid {
        out.push_str(&format!("{x}"));
        for (_, model) in models {
            out.push_str(&format!(",{}", model.eval(x)));
        }
        out.push('\n');
    }
    Ok(out)
}
