//! Batch front end for the prescribed-curvature solver. Every invocation
//! prints exactly one JSON document to stdout; warnings and progress notes
//! go to stderr; the exit code classifies the outcome (0 success, 2 bad
//! arguments or config, 3 I/O, 4 mesh validation, 5 nonnegative target,
//! 6 non-convergence, 7 genus guard).

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::RunConfig;
use run::{cmd_check, cmd_generate, cmd_solve, cmd_uniformize, Failure, Output};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "prescurv",
    version,
    about = "Prescribe strictly negative Gaussian curvature on closed triangulated surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a closed genus-g test surface and write it as an OBJ file.
    Generate {
        /// Number of handles; must be at least 1.
        #[arg(long)]
        genus: usize,
        /// Lattice segments per unit cell edge; faces grow with its square.
        #[arg(long)]
        resolution: usize,
        /// Output OBJ path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a mesh file and report topology and quality measures.
    Check {
        /// Mesh to inspect (OBJ).
        mesh: PathBuf,
    },
    /// Run a solve described by a JSON config file.
    Solve {
        /// Path to the run configuration (JSON).
        config: PathBuf,
        /// Proceed on surfaces of genus 0 or 1, where a solution is not
        /// guaranteed to exist, instead of refusing.
        #[arg(long)]
        allow_any_genus: bool,
    },
    /// Solve for the constant-curvature K = -1 metric on a mesh.
    Uniformize {
        /// Mesh to uniformize (OBJ).
        mesh: PathBuf,
        /// Directory for the report, sigma CSV, and annotated OBJ.
        #[arg(long)]
        out: PathBuf,
        /// Proceed on surfaces of genus 0 or 1 instead of refusing.
        #[arg(long)]
        allow_any_genus: bool,
    },
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: &'a str,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are ordinary terminal interactions,
            // not run outcomes; print them as clap intends.
            if err.use_stderr() {
                let failure = Failure::invalid(err.to_string());
                eprint!("{err}");
                emit_failure(&failure);
                std::process::exit(failure.code);
            }
            err.exit();
        }
    };

    let result = match cli.command {
        Command::Generate { genus, resolution, out } => cmd_generate(genus, resolution, &out),
        Command::Check { mesh } => cmd_check(&mesh),
        Command::Solve { config, allow_any_genus } => {
            load_config(&config).and_then(|config| cmd_solve(config, allow_any_genus))
        }
        Command::Uniformize { mesh, out, allow_any_genus } => {
            cmd_uniformize(&mesh, &out, allow_any_genus)
        }
    };

    match result {
        Ok(Output { body, code }) => {
            println!("{body}");
            std::process::exit(code);
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            emit_failure(&failure);
            std::process::exit(failure.code);
        }
    }
}

fn emit_failure(failure: &Failure) {
    let body = ErrorBody {
        error: ErrorDetail { kind: failure.kind, message: &failure.message },
    };
    println!("{}", run::to_json(&body));
}

fn load_config(path: &PathBuf) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("failed to read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}
