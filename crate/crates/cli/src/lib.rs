//! Command-line front end for `cknet-core`.

pub mod config;
pub mod obj;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use run::Command;

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVARIANT: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERIC: u8 = 3;
}

#[derive(Debug, Parser)]
#[command(name = "cknet", version, about = "Discrete pseudospherical rc-nets and their Bäcklund transforms")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// INI or JSON job file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `--section.key value` overrides.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    pub overrides: Vec<String>,
}

/// Run a parsed command line, printing to stdout/stderr; returns the exit status.
pub fn main_with(cli: Cli) -> u8 {
    let cfg = if cli.command == Command::Check && cli.config.is_none() && cli.overrides.is_empty() {
        None
    } else {
        match config::load(cli.config.as_deref(), &cli.overrides) {
            Ok(c) => Some(c),
            Err(e) => {
                eprintln!("{}", serde_json::json!({ "stage": "config", "error": e.0 }));
                return exit::CONFIG;
            }
        }
    };
    let outcome = match &cfg {
        Some(cfg) => run::run(cli.command, cfg),
        None => Ok(run::check(Default::default())),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "stage": e.stage, "error": e.error.to_string() }));
            return exit::NUMERIC;
        }
    };
    let output = cfg.map(|c| c.output).unwrap_or_default();
    if let (Some(path), Some(mesh)) = (&output.mesh, &outcome.mesh) {
        if let Err(e) = obj::export_obj(mesh, path) {
            eprintln!("{}", serde_json::json!({ "stage": "output", "error": format!("{}: {e}", path.display()) }));
            return exit::NUMERIC;
        }
    }
    match &output.report {
        Some(path) => {
            if let Err(e) = outcome.report.write(path) {
                eprintln!("{}", serde_json::json!({ "stage": "output", "error": format!("{}: {e}", path.display()) }));
                return exit::NUMERIC;
            }
        }
        None => print!("{}", outcome.report.to_json()),
    }
    for c in &outcome.report.checks {
        eprintln!(
            "{:<28} {:<4} {:>12} (tol {:.0e})",
            c.name,
            if c.pass { "ok" } else { "FAIL" },
            c.max_residual.map_or("-".into(), |r| format!("{r:.3e}")),
            c.tolerance
        );
    }
    if outcome.report.pass {
        exit::OK
    } else {
        exit::INVARIANT
    }
}
