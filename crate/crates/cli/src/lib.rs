//! Command-line front end: argument parsing, run orchestration, iteration
//! logging and result export.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use igatopt_core::io::{format_log_line, write_csv, write_pgm, write_vtk, LogEntry};
use igatopt_core::{run_optimization, IgaError, OptimizationResult, ShearModulus};

pub use config::{parse_config_text, parse_shear, Exports, Problem, RunConfig};

pub const LOG_FILE: &str = "iterations.log";
pub const CSV_FILE: &str = "density.csv";
pub const PGM_FILE: &str = "density.pgm";
pub const VTK_FILE: &str = "density.vtk";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(IgaError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 1,
        }
    }
}

impl From<IgaError> for CliError {
    fn from(e: IgaError) -> Self {
        match e {
            IgaError::Io(io) => CliError::Io(io),
            e if e.is_numerical() => CliError::Numerical(e),
            e => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "igatopt",
    version,
    about = "Isogeometric topology optimization (SIMP, quadratic B-splines)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShearArg {
    Reference,
    Isotropic,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory for the log and exported fields.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Young's modulus of solid material.
    #[arg(long, value_name = "V")]
    e0: Option<f64>,
    /// Young's modulus of void material.
    #[arg(long, value_name = "V")]
    emin: Option<f64>,
    /// Poisson's ratio.
    #[arg(long, value_name = "V")]
    nu: Option<f64>,
    /// Iteration cap.
    #[arg(long, value_name = "N", default_value_t = 1000)]
    max_iter: usize,
    /// Shear terms of the 3D constitutive matrix.
    #[arg(long, value_enum)]
    shear: Option<ShearArg>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Half MBB beam on an nelx × nely mesh.
    #[command(name = "2d")]
    TwoD {
        nelx: usize,
        nely: usize,
        volfrac: f64,
        penal: f64,
        rmin: f64,
        #[command(flatten)]
        common: Common,
        /// Write the densities as CSV.
        #[arg(long)]
        csv: bool,
        /// Write the densities as a PGM image.
        #[arg(long)]
        pgm: bool,
    },
    /// Cantilever on an nelx × nely × nelz mesh.
    #[command(name = "3d")]
    ThreeD {
        nelx: usize,
        nely: usize,
        nelz: usize,
        volfrac: f64,
        penal: f64,
        rmin: f64,
        #[command(flatten)]
        common: Common,
        /// Write the densities as legacy VTK (the default for 3D runs).
        #[arg(long)]
        vtk: bool,
        /// Display threshold recorded in the VTK file.
        #[arg(long, value_name = "T", default_value_t = 0.5)]
        threshold: f64,
        /// Add a thresholded 0/1 field to the VTK file.
        #[arg(long)]
        solid: bool,
    },
    /// Run from a key=value configuration file.
    Run {
        file: PathBuf,
        /// Overrides the output directory of the file.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn apply_common(cfg: &mut RunConfig, c: Common) {
    cfg.out_dir = c.out;
    cfg.max_iter = c.max_iter;
    if let Some(v) = c.e0 {
        cfg.e0 = v;
    }
    if let Some(v) = c.emin {
        cfg.emin = v;
    }
    if let Some(v) = c.nu {
        cfg.nu = v;
    }
    if let Some(s) = c.shear {
        cfg.shear = match s {
            ShearArg::Reference => ShearModulus::Reference,
            ShearArg::Isotropic => ShearModulus::Isotropic,
        };
    }
}

/// What `parse_cli` asks the caller to do.
#[derive(Debug)]
pub enum Invocation {
    Run(Box<RunConfig>),
    /// Help or version text to print before exiting successfully.
    Print(String),
}

/// Parses the full argument vector (program name first) and validates the
/// resulting configuration. With neither `--csv` nor `--pgm` a 2D run
/// writes both; a 3D run always writes VTK.
pub fn parse_cli<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Ok(Invocation::Print(e.to_string()))
                }
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    let cfg = match cli.command {
        Command::TwoD {
            nelx,
            nely,
            volfrac,
            penal,
            rmin,
            common,
            csv,
            pgm,
        } => {
            let mut cfg = RunConfig::new(Problem::Mbb2d, vec![nelx, nely], volfrac, penal, rmin);
            apply_common(&mut cfg, common);
            let both = !csv && !pgm;
            cfg.exports.csv = csv || both;
            cfg.exports.pgm = pgm || both;
            cfg
        }
        Command::ThreeD {
            nelx,
            nely,
            nelz,
            volfrac,
            penal,
            rmin,
            common,
            vtk: _,
            threshold,
            solid,
        } => {
            let mut cfg = RunConfig::new(
                Problem::Cantilever3d,
                vec![nelx, nely, nelz],
                volfrac,
                penal,
                rmin,
            );
            apply_common(&mut cfg, common);
            cfg.exports.vtk = true;
            cfg.exports.threshold = threshold;
            cfg.exports.solid = solid;
            cfg
        }
        Command::Run { file, out } => {
            let text = fs::read_to_string(&file)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
            let mut cfg = parse_config_text(&text)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            cfg
        }
    };
    cfg.validate()?;
    Ok(Invocation::Run(Box::new(cfg)))
}

/// Runs the optimization, echoing each log line to `sink` and to the log
/// file in the output directory, then writes the requested exports.
pub fn execute(cfg: &RunConfig, sink: &mut dyn Write) -> Result<OptimizationResult, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mesh = cfg.mesh()?;
    let boundary = cfg.boundary(&mesh)?;
    let mut log = std::io::BufWriter::new(fs::File::create(cfg.out_dir.join(LOG_FILE))?);
    let mut io_error = None;
    let result = run_optimization(&cfg.optimization()?, &cfg.material(), boundary, |r| {
        let line = format_log_line(&LogEntry::from(r));
        let written = writeln!(sink, "{line}")
            .and_then(|_| sink.flush())
            .and_then(|_| writeln!(log, "{line}"));
        if let (Err(e), None) = (written, &io_error) {
            io_error = Some(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    log.flush()?;
    export(cfg, &result, &cfg.out_dir)?;
    Ok(result)
}

fn export(cfg: &RunConfig, result: &OptimizationResult, dir: &Path) -> Result<(), CliError> {
    let e = &cfg.exports;
    if e.csv {
        write_csv(&result.density, &dir.join(CSV_FILE))?;
    }
    if e.pgm {
        write_pgm(&result.density, &dir.join(PGM_FILE))?;
    }
    if e.vtk {
        write_vtk(&result.density, &dir.join(VTK_FILE), e.threshold, e.solid)?;
    }
    Ok(())
}

/// Exit status of a finished run: 0 converged, 2 iteration cap reached.
pub fn exit_code(result: &OptimizationResult) -> i32 {
    if result.converged {
        0
    } else {
        2
    }
}
