//! Command-line front end for convergence studies.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::analysis::{run_study, ConvergenceReport, StudyOptions};
use crate::assembly::{assemble_eliminated, assemble_mixed, BilinearFormConfig, FormKind, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::femspace::DgSpace;
use crate::hessian::FluxChoice;
use crate::linalg::{PreconditionerKind, SolverOptions};
use crate::mesh::Mesh;
use crate::problems::ProblemId;

/// Exit code for a completed run.
pub const EXIT_OK: i32 = 0;
/// Exit code when a linear solve failed to converge.
pub const EXIT_SOLVER_FAILURE: i32 = 1;
/// Exit code for invalid arguments.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

fn parse_sigma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("sigma must be positive (got {s})"))
    }
}

fn parse_theta(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v == 1.0 || v == -1.0 => Ok(v),
        _ => Err(format!("theta must be -1 or 1 (got {s})")),
    }
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("tolerance must lie in (0, 1) (got {s})")),
    }
}

/// Nonvariational DG solver for -A : D²u = f on the unit square.
///
/// Runs a uniform-refinement study on criss-cross meshes (128 elements at the
/// first level) and prints errors with experimental orders of convergence.
///
/// Exit codes: 0 success, 1 solver failure (partial table written),
/// 2 invalid arguments.
#[derive(Debug, Parser)]
#[command(name = "nvdg", version, arg_required_else_help = true)]
pub struct Cli {
    /// Benchmark problem: 1, 2, 3a or 3b.
    #[arg(long = "test", value_parser = ["1", "2", "3a", "3b"])]
    pub test: String,

    /// Polynomial degree.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub degree: u8,

    /// Number of refinement levels.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(1..=8))]
    pub levels: u8,

    /// Interior penalty parameter.
    #[arg(long, default_value_t = DEFAULT_SIGMA, value_parser = parse_sigma)]
    pub sigma: f64,

    /// Penalty weight: uniform σ/h, or σ λ_max(A)/h per face.
    #[arg(long, default_value = "coefficient", value_parser = ["uniform", "coefficient"])]
    pub penalty_scaling: String,

    /// Flux parameter (+1 symmetric, -1 nonsymmetric).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true, value_parser = parse_theta)]
    pub theta: f64,

    /// Eliminated (compact) or mixed system.
    #[arg(long, default_value = "eliminated", value_parser = ["eliminated", "mixed"])]
    pub form: String,

    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = 1e-12, value_parser = parse_tol)]
    pub tol: f64,

    /// Preconditioner.
    #[arg(long, default_value = "ilu0", value_parser = ["ilu0", "jacobi", "none"])]
    pub precond: String,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write the first-level system matrix in MatrixMarket format.
    #[arg(long)]
    pub dump_matrix: bool,

    /// Write the first-level mesh in OFF format.
    #[arg(long)]
    pub dump_mesh: bool,

    /// Worker threads (falls back to NVDG_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub test: ProblemId,
    pub study: StudyOptions,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub dump_matrix: bool,
    pub dump_mesh: bool,
    pub threads: Option<usize>,
}

impl TryFrom<Cli> for RunConfig {
    type Error = Error;

    fn try_from(c: Cli) -> Result<Self> {
        let form = BilinearFormConfig {
            sigma: c.sigma,
            penalty_scaling: c.penalty_scaling.parse()?,
            flux: FluxChoice::new(c.theta)?,
            quad_degree: None,
            form: c.form.parse()?,
        };
        form.validate()?;
        let mut study = StudyOptions::new(c.degree as usize, c.levels as usize);
        study.form = form;
        study.solver = SolverOptions { tol: c.tol, max_iter: None, precond: c.precond.parse::<PreconditionerKind>()? };
        let threads = match c.threads {
            Some(t) => Some(t),
            None => std::env::var("NVDG_THREADS").ok().and_then(|s| s.parse().ok()),
        };
        Ok(Self {
            test: c.test.parse()?,
            study,
            format: c.format,
            out: c.out,
            dump_matrix: c.dump_matrix,
            dump_mesh: c.dump_mesh,
            threads: threads.filter(|&t| t > 0),
        })
    }
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    RunConfig::try_from(cli).map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

fn dump_path(cfg: &RunConfig, ext: &str) -> PathBuf {
    let dir = cfg.out.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
    dir.join(format!("nvdg_{}_k{}_level0.{ext}", cfg.test, cfg.study.degree))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_dumps(cfg: &RunConfig) -> Result<()> {
    let mesh = Mesh::build_criss_cross(cfg.study.base_n)?;
    if cfg.dump_mesh {
        let p = dump_path(cfg, "off");
        let mut w = create(&p)?;
        mesh.write_off(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&p, e))?;
        log::info!("mesh written to {}", p.display());
    }
    if cfg.dump_matrix {
        let problem = cfg.test.problem();
        let space = DgSpace::new(mesh, cfg.study.degree)?;
        let f = |x| problem.forcing(x);
        let sys = match cfg.study.form.form {
            FormKind::Eliminated => assemble_eliminated(&space, &problem.coefficient, f, &cfg.study.form)?,
            FormKind::Mixed => assemble_mixed(&space, &problem.coefficient, f, &cfg.study.form)?.stacked(),
        };
        let p = dump_path(cfg, "mtx");
        let mut w = create(&p)?;
        sys.matrix.write_matrix_market(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&p, e))?;
        log::info!("matrix written to {}", p.display());
    }
    Ok(())
}

pub fn render(report: &ConvergenceReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Markdown => report.to_markdown(),
    }
}

/// Runs the study and writes the table; returns the process exit code.
pub fn execute(cfg: &RunConfig) -> Result<i32> {
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
    write_dumps(cfg)?;
    let report = run_study(&cfg.test.problem(), &cfg.study)?;
    let text = render(&report, cfg.format);
    match &cfg.out {
        Some(p) => std::fs::write(p, &text).map_err(|e| Error::io(p, e))?,
        None => print!("{text}"),
    }
    Ok(if report.is_complete() { EXIT_OK } else { EXIT_SOLVER_FAILURE })
}
