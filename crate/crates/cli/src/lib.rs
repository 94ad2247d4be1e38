//! Command-line front end for the group formation simulator.
//!
//! A run is described by flags, a TOML scenario file, or both (flags win).
//! Scenario keys holding lists are swept as a Cartesian product; every
//! combination runs in its own world and writes its own directory.

pub mod output;
pub mod scenario;

use std::path::PathBuf;

use dgroups::analysis::AnalysisError;
use dgroups::simulator::{self, SimError};
use dgroups::RunMetrics;
use rayon::prelude::*;

pub use scenario::{resolve, Cell, Overrides, Plan, ScenarioFile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("scenario file: {0}")]
    Parse(String),
    #[error("run {run}: {message}")]
    Rejected { run: String, message: String },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("run {0} failed: {1}")]
    Simulation(String, SimError),
    #[error("run {0}: {1}")]
    Analysis(String, AnalysisError),
    #[error("{} run(s) did not converge: {}", .0.len(), .0.join(", "))]
    NonConvergence(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Simulation(..) | CliError::Analysis(..) => 1,
            CliError::Io { .. } => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

#[derive(Debug)]
pub struct Report {
    pub runs: Vec<(Cell, RunMetrics)>,
    pub dirs: Vec<PathBuf>,
    pub comparison: PathBuf,
}

impl Report {
    pub fn nonconverged(&self) -> Vec<String> {
        self.runs
            .iter()
            .filter(|(_, m)| !m.converged)
            .map(|(c, _)| c.name.clone())
            .collect()
    }
}

pub fn simulate(cell: &Cell) -> Result<RunMetrics, CliError> {
    simulator::run(&cell.config).map_err(|e| CliError::Simulation(cell.name.clone(), e))
}

/// Runs every cell (in parallel), writes per-run outputs and the combined
/// comparison file.
pub fn execute(plan: &Plan) -> Result<Report, CliError> {
    let results: Vec<(Cell, RunMetrics, PathBuf)> = plan
        .cells
        .par_iter()
        .map(|cell| {
            let metrics = simulate(cell)?;
            let dir = output::emit_run(&plan.out, cell, &metrics, plan.buckets)?;
            Ok((cell.clone(), metrics, dir))
        })
        .collect::<Result<_, CliError>>()?;
    let mut runs = Vec::with_capacity(results.len());
    let mut dirs = Vec::with_capacity(results.len());
    for (cell, metrics, dir) in results {
        runs.push((cell, metrics));
        dirs.push(dir);
    }
    let comparison = output::emit_comparison(&plan.out, &runs)?;
    Ok(Report { runs, dirs, comparison })
}

/// Resolves, runs, and applies the convergence policy.
pub fn run(flags: &Overrides) -> Result<Report, CliError> {
    let file = match &flags.scenario {
        Some(path) => ScenarioFile::load(path)?,
        None => ScenarioFile::default(),
    };
    let plan = resolve(file, flags)?;
    let report = execute(&plan)?;
    let stuck = report.nonconverged();
    if !stuck.is_empty() && !plan.allow_nonconverged {
        return Err(CliError::NonConvergence(stuck));
    }
    Ok(report)
}
