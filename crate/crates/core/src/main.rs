//! `webster` — pseudohermitian calculus and gluing studies on the
//! Heisenberg chart.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use webster::cli::{
    self, parse_field, parse_point, run_glue_study, run_yamabe_study, verify, RunConfig,
};
use webster::phcalc::{
    curvature_via_structure_eq, default_probes, scalar_curvature, conformal_curvature,
    DeformationTensor,
};
use webster::Error;

#[derive(Parser)]
#[command(
    name = "webster",
    version,
    about = "Tanaka-Webster calculus, cutoff gluing and Yamabe-quotient studies on the Heisenberg chart"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every verification suite and exit nonzero on any failure.
    Verify {
        /// Emit machine-readable results.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the Tanaka-Webster scalar curvature at a point.
    Curvature {
        /// Deformation tensor expression.
        #[arg(long)]
        phi: String,
        /// Evaluation point `x,y,z`.
        #[arg(long)]
        point: String,
        /// Conformal factor expression; uses the contact form w²Θ.
        #[arg(long)]
        w: Option<String>,
        /// Also print the structure-equation estimate and the gap.
        #[arg(long)]
        oracle: bool,
        /// Finite-difference step for the oracle.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Run the gluing C⁰ convergence study and write its report.
    GlueStudy {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the Yamabe-quotient comparison study and write its report.
    YamabeStudy {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exit 0 even when some optimizer runs did not converge.
        #[arg(long)]
        allow_nonconverged: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    phi: Option<String>,
    /// Curvature match at the origin (default: computed from phi).
    #[arg(long)]
    r0: Option<f64>,
    /// Comma-separated strictly decreasing gauge radii.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Grid points per axis (odd, ≥ 9).
    #[arg(long)]
    grid: Option<usize>,
    /// Box half-width L.
    #[arg(long = "box")]
    box_half_width: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output base path (extension appended per format).
    #[arg(long)]
    out: Option<String>,
    /// csv, json or both.
    #[arg(long)]
    format: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self, default_out: &str) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig {
                out: default_out.to_string(),
                ..RunConfig::default()
            },
        };
        if let Some(v) = &self.phi {
            cfg.phi = v.clone();
        }
        if self.r0.is_some() {
            cfg.r0 = self.r0;
        }
        if let Some(v) = &self.deltas {
            cfg.deltas = v.clone();
        }
        if let Some(v) = self.grid {
            cfg.grid_n = v;
        }
        if let Some(v) = self.box_half_width {
            cfg.box_half_width = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Syntax { .. } | Error::Config { .. } | Error::Range { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run() -> Result<ExitCode, Error> {
    match Cli::parse().cmd {
        Cmd::Verify { json } => {
            let suites = verify::run_all_suites();
            if json {
                println!("{:#}", verify::suites_to_json(&suites));
            } else {
                for s in &suites {
                    println!(
                        "{} {:<20} max residual {:>12.3e}  {}",
                        if s.passed { "PASS" } else { "FAIL" },
                        s.name,
                        s.max_residual,
                        s.detail
                    );
                }
            }
            let all = suites.iter().all(|s| s.passed);
            if !json {
                println!(
                    "{}: {}/{} suites passed",
                    if all { "ok" } else { "FAILED" },
                    suites.iter().filter(|s| s.passed).count(),
                    suites.len()
                );
            }
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Curvature {
            phi,
            point,
            w,
            oracle,
            step,
        } => {
            let p = parse_point(&point)?;
            let half_width = p.x.abs().max(p.y.abs()).max(p.z.abs()).max(1.0);
            let tensor =
                DeformationTensor::new(parse_field(&phi)?, default_probes(half_width))?;
            let r = match &w {
                Some(src) => conformal_curvature(&tensor, &parse_field(src)?, p)?,
                None => scalar_curvature(&tensor, p)?,
            };
            println!("{r:.11e}");
            if oracle {
                if w.is_some() {
                    eprintln!("note: --oracle applies to the uncontracted structure (no --w)");
                }
                let est = curvature_via_structure_eq(&tensor, p, step)?;
                let exact = scalar_curvature(&tensor, p)?;
                println!("structure-eq {est:.11e}");
                println!("gap {:.3e}", (exact - est).abs());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::GlueStudy { cfg } => {
            let cfg = cfg.resolve("glue_study")?;
            let report = run_glue_study(&cfg)?;
            for row in &report.rows {
                println!(
                    "delta {:>7}: sup|phi^d - phi| {:.3e}  sup|v^d - 1| {:.3e}  sup|R^d - R| {:.3e}",
                    row.delta, row.sup_phi_err, row.sup_v_err, row.sup_r_err
                );
            }
            println!("fitted curvature-error slope: {:.3}", report.slope);
            let paths = cli::write_outputs(
                std::path::Path::new(&cfg.out),
                cfg.format,
                &report.to_csv(),
                &report.to_json(),
            )?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::YamabeStudy {
            cfg,
            allow_nonconverged,
        } => {
            let cfg = cfg.resolve("yamabe_study")?;
            let report = run_yamabe_study(&cfg)?;
            println!("lambda_base = {:.9}", report.lambda_base);
            let mut any_nonconverged = false;
            for row in &report.rows {
                println!(
                    "delta {:>7}: lambda {:.9}  rel gap {:.3e}  iters {:>5}{}",
                    row.delta,
                    row.lambda_delta,
                    row.lambda_gap_rel,
                    row.iterations,
                    if row.converged { "" } else { "  [NONCONVERGED]" }
                );
                any_nonconverged |= !row.converged;
            }
            let paths = cli::write_outputs(
                std::path::Path::new(&cfg.out),
                cfg.format,
                &report.to_csv(),
                &report.to_json(),
            )?;
            for p in paths {
                println!("wrote {}", p.display());
            }
            if any_nonconverged && !allow_nonconverged {
                eprintln!("error: optimizer did not converge on some rows (see report)");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
