//! Run configuration for the study commands: JSON file plus flag
//! overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gluing::validate_deltas;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::config(
                "format",
                format!("unknown format `{other}` (csv, json or both)"),
            )),
        }
    }
}

/// Configuration of a study run. All fields are optional in the JSON
/// file; unknown fields are rejected by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Half-width `L` of the box `[−L,L]³`.
    pub box_half_width: f64,
    /// Grid points per axis (odd, ≥ 9).
    pub grid_n: usize,
    /// Strictly decreasing gauge radii.
    pub deltas: Vec<f64>,
    /// Deformation tensor expression.
    pub phi: String,
    /// Curvature match at the origin; computed from `phi` when absent.
    pub r0: Option<f64>,
    /// Optimizer relative-decrease tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Output base path (extensions appended per format).
    pub out: String,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            box_half_width: 1.0,
            grid_n: 33,
            deltas: vec![0.4, 0.2, 0.1, 0.05],
            phi: "0.1*(x^2+y^2) + 0.05i*x*y".to_string(),
            r0: None,
            tol: 1e-8,
            max_iter: 5000,
            seed: 7,
            out: "study".to_string(),
            format: OutputFormat::Both,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config("config", e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.box_half_width <= 0.0 {
            return Err(Error::config("box_half_width", "must be positive"));
        }
        if self.grid_n < 9 || self.grid_n % 2 == 0 {
            return Err(Error::config("grid_n", "must be odd and at least 9"));
        }
        validate_deltas(&self.deltas)?;
        if self.tol <= 0.0 {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be positive"));
        }
        if self.phi.trim().is_empty() {
            return Err(Error::config("phi", "must be non-empty"));
        }
        Ok(())
    }
}
