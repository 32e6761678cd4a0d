//! Command-line front end: expression parsing, run configuration,
//! verification suites and report emission.

mod config;
mod parser;
pub mod verify;

pub use config::{OutputFormat, RunConfig};
pub use parser::parse_field;

use std::path::{Path, PathBuf};

use crate::gluing::{convergence_study, ConvergenceReport};
use crate::hgroup::HPoint;
use crate::phcalc::{default_probes, scalar_curvature, DeformationTensor};
use crate::yamabe::{lambda_comparison_study, BoxGrid, MinimizeOpts, YamabeReport};
use crate::{Error, Result};

/// Builds the deformation tensor of a run: parses `phi` and probe-checks
/// it on the configured box.
pub fn tensor_from_config(cfg: &RunConfig) -> Result<DeformationTensor> {
    let phi = parse_field(&cfg.phi)?;
    DeformationTensor::new(phi, default_probes(cfg.box_half_width))
}

/// Curvature match at the origin: configured `r0` or the curvature of the
/// base structure.
pub fn r0_from_config(cfg: &RunConfig, tensor: &DeformationTensor) -> Result<f64> {
    match cfg.r0 {
        Some(v) => Ok(v),
        None => scalar_curvature(tensor, HPoint::ORIGIN),
    }
}

/// Runs the gluing convergence study for a configuration.
pub fn run_glue_study(cfg: &RunConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let tensor = tensor_from_config(cfg)?;
    let r0 = r0_from_config(cfg, &tensor)?;
    let grid = BoxGrid::new(cfg.box_half_width, cfg.grid_n)?;
    convergence_study(&tensor, r0, &cfg.deltas, &grid.points())
}

/// Runs the λ comparison study for a configuration.
pub fn run_yamabe_study(cfg: &RunConfig) -> Result<YamabeReport> {
    cfg.validate()?;
    let tensor = tensor_from_config(cfg)?;
    let r0 = r0_from_config(cfg, &tensor)?;
    let grid = BoxGrid::new(cfg.box_half_width, cfg.grid_n)?;
    let opts = MinimizeOpts {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        initial: None,
    };
    lambda_comparison_study(&tensor, r0, &cfg.deltas, grid, &opts)
}

/// Writes the CSV/JSON outputs of a report next to `base`, returning the
/// paths written. CSV uses a header row, `,` separators, `.` decimals and
/// LF line endings; JSON is UTF-8 with a `schema_version` field.
pub fn write_outputs(
    base: &Path,
    format: OutputFormat,
    csv: &str,
    json: &serde_json::Value,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = base.with_extension("csv");
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = base.with_extension("json");
        std::fs::write(&path, format!("{:#}\n", json))?;
        written.push(path);
    }
    Ok(written)
}

/// Parses a `x,y,z` triple.
pub fn parse_point(src: &str) -> Result<HPoint> {
    let parts: Vec<&str> = src.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::config("point", "expected three comma-separated coordinates"));
    }
    let mut vals = [0.0; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::config("point", format!("`{part}` is not a number")))?;
    }
    Ok(HPoint::new(vals[0], vals[1], vals[2]))
}
