//! `toric`: batch interface over the toric-kahler library.
//!
//! Exit codes: 0 on success, 1 when a check or domain evaluation fails,
//! 2 on input errors (unreadable file, parse failure, invalid spec,
//! bad flags). Set TORIC_LOG=debug for progress logging.

mod check;
mod commands;
mod jsonfmt;
mod specfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CmdError, CmdResult, GridArgs};

#[derive(Parser)]
#[command(
    name = "toric",
    about = "Validate toric spec files, enumerate face strata, and evaluate the explicit Kähler potentials on the moment polytope",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a spec: interior, minimality, primitivity, span, boundedness
    Validate {
        /// Spec file (JSON)
        spec: PathBuf,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every open face with its stratum classification
    Faces {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate dual potential, h, gradient and metric at one point
    Eval {
        spec: PathBuf,
        /// Comma-separated moment coordinates (chart coordinates with --face)
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        point: String,
        /// Evaluate the projective-reduction potentials at scale R
        #[arg(long, value_name = "R")]
        projective: Option<f64>,
        /// Evaluate on the face with this active set (comma-separated 0-based facet indices)
        #[arg(long, value_name = "I", value_delimiter = ',', num_args = 1..)]
        face: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a grid over the interior; CSV rows plus a JSON metadata sidecar
    Grid {
        spec: PathBuf,
        /// Points per axis (one value, or one per axis comma-separated)
        #[arg(long, default_value = "16")]
        resolution: String,
        /// Sampling box "lo..hi,lo..hi,..." (defaults to the polytope's box, 2% inset)
        #[arg(long, value_name = "RANGES", allow_hyphen_values = true)]
        r#box: Option<String>,
        /// Fields to emit (dual, h, min_eig)
        #[arg(long, default_value = "dual,h,min_eig", value_delimiter = ',')]
        fields: Vec<String>,
        #[arg(long, value_name = "R")]
        projective: Option<f64>,
        /// CSV path; metadata goes to <path>.meta.json (stdout/stderr otherwise)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded property suites (duality, h-consistency, level set,
    /// positivity, finite differences)
    Check {
        spec: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Sampling box for unbounded polytopes
        #[arg(long, value_name = "RANGES", allow_hyphen_values = true)]
        r#box: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_point(text: &str) -> Result<Vec<f64>, CmdError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| CmdError::Input(format!("bad coordinate {part:?}: {e}")))
        })
        .collect()
}

fn parse_box(text: &str) -> Result<Vec<(f64, f64)>, CmdError> {
    text.split(',')
        .map(|range| {
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| CmdError::Input(format!("bad range {range:?}, expected lo..hi")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|e| CmdError::Input(format!("bad bound {lo:?}: {e}")))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|e| CmdError::Input(format!("bad bound {hi:?}: {e}")))?;
            if lo >= hi {
                return Err(CmdError::Input(format!("empty range {range:?}")));
            }
            Ok((lo, hi))
        })
        .collect()
}

fn parse_resolution(text: &str) -> Result<Vec<usize>, CmdError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| CmdError::Input(format!("bad resolution {part:?}: {e}")))
        })
        .collect()
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { spec, out } => {
            let loaded = specfile::load(&spec).map_err(CmdError::Input)?;
            commands::cmd_validate(&loaded, out.as_deref())
        }
        Command::Faces { spec, out } => {
            let loaded = specfile::load(&spec).map_err(CmdError::Input)?;
            commands::cmd_faces(&loaded, out.as_deref())
        }
        Command::Eval {
            spec,
            point,
            projective,
            face,
            out,
        } => {
            let loaded = specfile::load(&spec).map_err(CmdError::Input)?;
            let point = parse_point(&point)?;
            commands::cmd_eval(&loaded, &point, projective, face.as_deref(), out.as_deref())
        }
        Command::Grid {
            spec,
            resolution,
            r#box,
            fields,
            projective,
            out,
        } => {
            let loaded = specfile::load(&spec).map_err(CmdError::Input)?;
            let args = GridArgs {
                resolution: parse_resolution(&resolution)?,
                bbox: r#box.as_deref().map(parse_box).transpose()?,
                fields,
                projective,
                out,
            };
            commands::cmd_grid(&loaded, &args)
        }
        Command::Check {
            spec,
            samples,
            seed,
            r#box,
            out,
        } => {
            let loaded = specfile::load(&spec).map_err(CmdError::Input)?;
            let args = check::CheckArgs {
                samples,
                seed,
                bbox: r#box.as_deref().map(parse_box).transpose()?,
            };
            check::cmd_check(&loaded, &args, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TORIC_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
