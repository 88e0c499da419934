//! `plds`: analysis, return maps, phase portraits and parameter scans of
//! piecewise linear Lienard systems.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 cycle
//! bound violated.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "plds", version, about = "Limit cycles and bifurcations of piecewise linear Lienard systems")]
struct Cli {
    /// System and command settings (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "PLDS_THREADS")]
    threads: Option<usize>,
    /// Auto-seeds per singular point for portraits.
    #[arg(long, global = true, default_value_t = 6)]
    seed_density: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Below,
    Above,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Singular points, center condition, discriminant lines and limit cycles.
    Analyze,
    /// Phase portrait as SVG.
    Portrait {
        /// Also write the sampled trajectories as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Return map samples of one section as CSV.
    Map {
        #[arg(long)]
        corner: Option<usize>,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        range: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Parameter-plane scan as CSV, checked against the cycle bound.
    Scan {
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        alpha: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        beta: Option<Vec<f64>>,
        #[arg(long)]
        na: Option<usize>,
        #[arg(long)]
        nb: Option<usize>,
        /// Where to write the verify report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Checks a scan CSV (or a fresh scan of the configured system) against
    /// the cycle bound and writes the report as JSON.
    Verify {
        diagram: Option<PathBuf>,
        /// Number of dropping sections; taken from the configuration if omitted.
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerics(String),
    Bound(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerics(_) => 3,
            Failure::Bound(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerics(m) => write!(f, "numerical failure: {m}"),
            Failure::Bound(m) => write!(f, "cycle bound violated: {m}"),
        }
    }
}

impl From<plds_core::Error> for Failure {
    fn from(e: plds_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerics(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// standard output.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Config(format!("write: {e}"));
    match path {
        None => std::io::stdout().lock().write_all(bytes).map_err(io),
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut builder = tempfile::Builder::new();
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                builder.permissions(std::fs::Permissions::from_mode(0o644));
            }
            let mut tmp = builder.tempfile_in(dir).map_err(io)?;
            tmp.write_all(bytes).map_err(io)?;
            tmp.as_file().sync_all().map_err(io)?;
            tmp.persist(p).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let config = cli.config.as_deref().map(config::RunConfig::load).transpose()?;
    let need = |c: Option<config::RunConfig>| c.ok_or_else(|| Failure::Config("--config is required".into()));
    let out = cli.out.as_deref();
    match cli.command {
        Command::Analyze => commands::analyze(&need(config)?, out),
        Command::Portrait { csv } => commands::portrait(&need(config)?, cli.seed_density, out, csv.as_deref()),
        Command::Map { corner, side, range, samples } => {
            let mut cfg = need(config)?;
            if let Some(c) = corner {
                cfg.map.corner = c;
            }
            if let Some(s) = side {
                cfg.map.side = match s {
                    SideArg::Below => plds_core::sewing::Side::Below,
                    SideArg::Above => plds_core::sewing::Side::Above,
                };
            }
            if let Some(r) = range {
                cfg.map.range = Some((r[0], r[1]));
            }
            if let Some(n) = samples {
                cfg.map.samples = n;
            }
            commands::map(&cfg, out)
        }
        Command::Scan { alpha, beta, na, nb, report } => {
            let mut cfg = need(config)?;
            if let Some(a) = alpha {
                cfg.scan.alpha_range = (a[0], a[1]);
            }
            if let Some(b) = beta {
                cfg.scan.beta_range = (b[0], b[1]);
            }
            cfg.scan.na = na.unwrap_or(cfg.scan.na);
            cfg.scan.nb = nb.unwrap_or(cfg.scan.nb);
            commands::scan(&cfg, out, report.as_deref())
        }
        Command::Verify { diagram, k } => commands::verify(config.as_ref(), diagram.as_deref(), k, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("plds: {f}");
            ExitCode::from(f.code())
        }
    }
}
