//! Model and data file I/O.
//!
//! Mixtures travel as JSON `{"components":[{"weight","mu","sigma"},...]}`;
//! weights may arrive unnormalized, in which case the loader rescales them
//! and reports it. Fitted densities travel as JSON
//! `{"order","theta":[...],"support":{"type":"real"}|{"type":"interval","a","b"}}`.
//! Datasets are plain text, one real per line, `#` starting a comment line.

use std::path::Path;

use polyexp::gmm::{GaussianComponent, Gmm, GmmSchema};
use polyexp::ped::PedNatural;

use crate::error::{io_err, CliError, Result};

/// A loaded mixture plus a warning when the stored weights needed rescaling.
pub struct LoadedGmm {
    pub gmm: Gmm,
    pub warning: Option<String>,
}

/// Load a mixture, normalizing its weights if they do not sum to one.
pub fn load_gmm(path: &Path) -> Result<LoadedGmm> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let schema: GmmSchema = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let sum: f64 = schema.components.iter().map(|c| c.weight).sum();
    let mut weights = Vec::with_capacity(schema.components.len());
    let mut components = Vec::with_capacity(schema.components.len());
    for c in &schema.components {
        weights.push(c.weight);
        components.push(GaussianComponent::new(c.mu, c.sigma)?);
    }
    let (gmm, renormalized) = Gmm::new_normalizing(weights, components)?;
    let warning = renormalized.then(|| {
        format!(
            "{}: weights summed to {sum}; rescaled to total mass one",
            path.display()
        )
    });
    Ok(LoadedGmm { gmm, warning })
}

/// Load a fitted density from its JSON form.
pub fn load_ped(path: &Path) -> Result<PedNatural> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Serialize any model to pretty JSON with a trailing newline.
pub fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse {
        path: "<serialize>".into(),
        message: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

/// Write text to a file, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Parse a dataset: one real per line, blank lines and `#` comments skipped.
pub fn parse_data(text: &str, origin: &str) -> Result<Vec<f64>> {
    let mut xs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| CliError::Parse {
            path: origin.to_string(),
            message: format!("line {}: not a real number: {line:?}", lineno + 1),
        })?;
        if !x.is_finite() {
            return Err(CliError::Parse {
                path: origin.to_string(),
                message: format!("line {}: non-finite value {x}", lineno + 1),
            });
        }
        xs.push(x);
    }
    if xs.is_empty() {
        return Err(CliError::Parse {
            path: origin.to_string(),
            message: "dataset contains no values".into(),
        });
    }
    Ok(xs)
}

/// Load a dataset file.
pub fn load_data(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_data(&text, &path.display().to_string())
}
