//! lhk: verification suites and small utilities for the Laguerre hypergroup.
//!
//! Exit codes: 0 when every toleranced metric passes, 1 on a failed metric or a
//! suite error, 2 on a usage or configuration error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use lhk_core::atoms::validate_atom;
use lhk_core::multipliers::apply_multiplier;
use lhk_core::quadrature::GridFunction;
use lhk_core::report::{EstimateReport, Metric};
use lhk_core::transform::forward;

use lhk_harness::catalog;
use lhk_harness::config::{Config, MultiplierEntry};
use lhk_harness::emit::{grid_csv, render, spectral_csv, write_file, Format};
use lhk_harness::run::{run_suite, select, summary, threads_from_env, with_threads, write_outputs};
use lhk_harness::suites::common::{default_atom, label, new_report};
use lhk_harness::suites::core::profile_grids;

#[derive(Parser)]
#[command(name = "lhk", version, about = "Fourier-Laguerre analysis on the Laguerre hypergroup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites: core, hp, multiplier or all.
    Verify {
        suite: String,
        #[arg(long)]
        config: PathBuf,
        /// directory for report files; reports go to stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
    },
    /// Build or validate the configured atoms.
    Atom {
        #[command(subcommand)]
        action: AtomAction,
    },
    /// Forward transform of a catalog profile, written as lambda,m,re,im.
    Transform {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// defaults to the first configured alpha
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Spectral multipliers from the catalog.
    Multiplier {
        #[command(subcommand)]
        action: MultiplierAction,
    },
}

#[derive(Subcommand)]
enum AtomAction {
    /// Write every atom of the hp radius sweep as x,t,re,im.
    Make {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment, size, support and L^p checks for every atom of the sweep.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "json")]
        format: Format,
    },
}

#[derive(Subcommand)]
enum MultiplierAction {
    /// T_M f for a catalog profile f, written as x,t,re,im.
    Apply {
        #[arg(long)]
        name: String,
        /// JSON object of numeric parameters, e.g. {"s": 1}
        #[arg(long, default_value = "{}")]
        params: String,
        /// f for radial_f_of_N, phi for laplace_of_phi
        #[arg(long)]
        function: Option<String>,
        #[arg(long, default_value = "gaussian")]
        profile: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<lhk_core::LhkError> for Failure {
    fn from(e: lhk_core::LhkError) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load(path: &Path) -> Result<Config, Failure> {
    let c = Config::load(path).map_err(|e| Failure::Usage(e.to_string()))?;
    for w in c.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(c)
}

fn alpha_of(config: &Config, alpha: Option<f64>) -> Result<f64, Failure> {
    match alpha {
        Some(a) if a >= 0.0 && a.is_finite() => Ok(a),
        Some(a) => Err(Failure::Usage(format!("alpha must be finite and >= 0, got {a}"))),
        None => Ok(config.alphas()[0]),
    }
}

fn verify(suite: &str, config: &Path, out: Option<PathBuf>, format: Format) -> Result<bool, Failure> {
    let config = load(config)?;
    let suites = select(&config, suite).map_err(Failure::Usage)?;
    let dir = out.or_else(|| config.out_dir.clone());
    let mut ok = true;
    for s in suites {
        let output = run_suite(&config, s)?;
        ok &= output.all_pass();
        match &dir {
            Some(d) => {
                for p in write_outputs(d, &output, format)? {
                    println!("wrote {}", p.display());
                }
                println!("{}", summary(&output));
            }
            None => {
                print!("{}", render(&output.reports, format));
                eprintln!("{}", summary(&output));
            }
        }
    }
    Ok(ok)
}

fn atom_make(config: &Path, out: Option<PathBuf>) -> Result<bool, Failure> {
    let config = load(config)?;
    let dir = out.or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    for alpha in config.alphas() {
        for &p in &config.hp.p {
            for &r in &config.hp.radii {
                let (atom, grid) = default_atom(&config, alpha, p, r, config.hp.atom_n)?;
                let path = dir.join(format!("atom_alpha{}_p{}_r{}.csv", label(alpha), label(p), label(r)));
                write_file(&path, &grid_csv(&GridFunction::sample(grid, &atom)))?;
                println!(
                    "wrote {} (moments up to degree {}, gram condition {:.3e})",
                    path.display(),
                    atom.spec.s,
                    atom.gram_condition
                );
            }
        }
    }
    Ok(true)
}

fn atom_validate(config: &Path, format: Format) -> Result<bool, Failure> {
    let config = load(config)?;
    let mut reports: Vec<EstimateReport> = Vec::new();
    for alpha in config.alphas() {
        let mut r = new_report("atoms", &config, alpha);
        for &p in &config.hp.p {
            for &rad in &config.hp.radii {
                let (atom, _) = default_atom(&config, alpha, p, rad, config.hp.atom_n)?;
                for m in validate_atom(&atom, &atom.spec, alpha).metrics {
                    r.push(Metric { name: format!("{}[p={},r={}]", m.name, label(p), label(rad)), ..m });
                }
            }
        }
        reports.push(r);
    }
    print!("{}", render(&reports, format));
    Ok(reports.iter().all(|r| r.all_pass()))
}

fn transform(profile: &str, config: &Path, out: &Path, alpha: Option<f64>) -> Result<bool, Failure> {
    let config = load(config)?;
    let alpha = alpha_of(&config, alpha)?;
    let f = catalog::profile(profile).map_err(|e| Failure::Usage(e.to_string()))?;
    let grids = profile_grids(&config, alpha, f.as_ref())?;
    let fhat = forward(&GridFunction::sample(grids.phys, f.as_ref()), &grids.spec)?;
    write_file(out, &spectral_csv(&fhat))?;
    println!("wrote {}", out.display());
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn multiplier_apply(
    name: String,
    params: &str,
    function: Option<String>,
    profile: &str,
    config: Option<PathBuf>,
    alpha: Option<f64>,
    out: Option<PathBuf>,
) -> Result<bool, Failure> {
    let config = match config {
        Some(p) => load(&p)?,
        None => Config::default(),
    };
    let alpha = alpha_of(&config, alpha)?;
    let params: BTreeMap<String, f64> = serde_json::from_str(params)
        .map_err(|e| Failure::Usage(format!("--params must be a JSON object of numbers: {e}")))?;
    let entry = MultiplierEntry { name, params, function };
    let m = catalog::multiplier(&entry).map_err(|e| Failure::Usage(e.to_string()))?;
    let f = catalog::profile(profile).map_err(|e| Failure::Usage(e.to_string()))?;
    let grids = profile_grids(&config, alpha, f.as_ref())?;
    let phys = Arc::clone(&grids.phys);
    let tf = apply_multiplier(&m, &GridFunction::sample(grids.phys, f.as_ref()), &grids.spec, &phys)?;
    let text = grid_csv(&tf);
    match out {
        Some(path) => {
            write_file(&path, &text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify { suite, config, out, format } => verify(&suite, &config, out, format),
        Command::Atom { action: AtomAction::Make { config, out } } => atom_make(&config, out),
        Command::Atom { action: AtomAction::Validate { config, format } } => atom_validate(&config, format),
        Command::Transform { profile, config, out, alpha } => transform(&profile, &config, &out, alpha),
        Command::Multiplier {
            action: MultiplierAction::Apply { name, params, function, profile, config, alpha, out },
        } => multiplier_apply(name, &params, function, &profile, config, alpha, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = with_threads(threads, || dispatch(cli)).unwrap_or_else(|e| Err(Failure::Run(e.to_string())));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
