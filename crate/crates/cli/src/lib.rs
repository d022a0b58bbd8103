//! Command-line front end: runs the handoff, coverage and frequency-planning
//! experiments from flat `key = value` configs and writes CSV, SVG and a
//! run manifest.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod svg;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::RunConfig;
use manifest::{now_unix, RunManifest};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "uavcomp", version, about = "UAV CoMP handoff and coverage experiments")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical and analytic handoff probabilities.
    Handoff { config: Option<PathBuf> },
    /// Empirical and analytic coverage probabilities.
    Coverage { config: Option<PathBuf> },
    /// Interference radius, reuse factor, band plan and circle-count table.
    Freqplan { config: Option<PathBuf> },
    /// Regenerate a bundled figure or table preset.
    Reproduce {
        /// One of fig7, fig8, fig9, fig10, fig11, fig12, table1.
        id: String,
        /// Override the preset's trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn load(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::defaults()),
    }
}

pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let started = now_unix();
    match &cli.command {
        Command::Handoff { config } => {
            let c = load(config)?;
            let f = commands::handoff_files(&c, "handoff")?;
            commands::emit(&cli.out, "handoff", &[&c], f, started)
        }
        Command::Coverage { config } => {
            let c = load(config)?;
            let f = commands::coverage_files(&c, "coverage")?;
            commands::emit(&cli.out, "coverage", &[&c], f, started)
        }
        Command::Freqplan { config } => {
            let c = load(config)?;
            let f = commands::freqplan_files(&c, "freqplan")?;
            let m = commands::emit(&cli.out, "freqplan", &[&c], f, started)?;
            let summary = std::fs::read_to_string(cli.out.join("freqplan_summary.csv"))?;
            print!("{summary}");
            Ok(m)
        }
        Command::Reproduce { id, trials } => {
            if !commands::FIGURES.contains(&id.as_str()) {
                anyhow::bail!("unknown figure id '{id}' (expected one of {})", commands::FIGURES.join(", "));
            }
            let (cs, f) = commands::reproduce_files(id, *trials)?;
            let refs: Vec<&RunConfig> = cs.iter().collect();
            commands::emit(&cli.out, &format!("reproduce {id}"), &refs, f, started)
        }
    }
}

/// Exit code for a failed run: 3 for numerical or geometric failures, 2 otherwise.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    use uavcomp_core::Error as E;
    for cause in e.chain() {
        if let Some(ce) = cause.downcast_ref::<E>() {
            return match ce {
                E::Numeric { .. } | E::Geometry(_) | E::OutOfRegion { .. } => 3,
                _ => 2,
            };
        }
    }
    2
}

/// Parse, run and report; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(m) => {
            eprintln!("wrote {} files to {} (config {})", m.outputs.len(), cli.out.display(), &m.config_hash[..12]);
            0
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
