//! Executing a configured experiment.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use semilinear::driver::{SolveFailure, SolveOutcome};
use semilinear::problems::initial_guess;
use semilinear::{adaptive_solve, Action, FeFunction, IterationRecord, Mesh, StepRule, TerminationReason};

use crate::output::{solution_dump, write_records, RunSummary};
use crate::{CliConfig, CliError, EXIT_BUDGET, EXIT_SOLVER, EXIT_TOLERANCE};

#[derive(Debug)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
    /// Final mesh and solution, absent after a solver failure.
    pub solution: Option<(Mesh, FeFunction)>,
    pub exit_code: i32,
}

pub(crate) fn solve(config: &CliConfig) -> Result<Result<SolveOutcome, SolveFailure>, CliError> {
    let problem = config.problem()?;
    let mesh = config.initial_mesh()?;
    let run_config = config.run_config()?;
    let u0 = initial_guess(&config.initial_guess, &mesh, &problem)?;
    Ok(adaptive_solve(&problem, &mesh, &u0, &run_config))
}

/// Runs the experiment. Solver failures are reported in the returned
/// summary; only configuration problems are errors.
pub fn execute(config: &CliConfig) -> Result<RunReport, CliError> {
    let result = solve(config)?;
    let strategy = match config.strategy {
        StepRule::Simple => "simple",
        StepRule::Improved => "improved",
    };
    let (records, termination, linear_solves, error, solution) = match result {
        Ok(out) => (out.records, out.termination.as_str(), Some(out.linear_solves), None, Some((out.mesh, out.solution))),
        Err(fail) => (fail.records, "solver failure", None, Some(fail.error.to_string()), None),
    };
    let exit_code = match termination {
        t if t == TerminationReason::Tolerance.as_str() => EXIT_TOLERANCE,
        "solver failure" => EXIT_SOLVER,
        _ => EXIT_BUDGET,
    };
    let last = records.last();
    let summary = RunSummary {
        problem: config.problem.name().to_string(),
        epsilon: config.epsilon,
        strategy: strategy.to_string(),
        termination: termination.to_string(),
        final_estimate: last.map(|r| r.estimate_total),
        final_dofs: last.map(|r| r.dofs),
        records: records.len(),
        newton_steps: RunSummary::count(&records, Action::Newton),
        refinements: RunSummary::count(&records, Action::Refine),
        linear_solves,
        error,
    };
    Ok(RunReport { records, summary, solution, exit_code })
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_error(path))?;
    }
    fs::File::create(path).map_err(io_error(path))
}

pub fn write_outputs(config: &CliConfig, report: &RunReport) -> Result<(), CliError> {
    write_records(BufWriter::new(create(&config.records_csv)?), &report.records)?;
    let mut json = serde_json::to_string_pretty(&report.summary)?;
    json.push('\n');
    create(&config.summary_json)?.write_all(json.as_bytes()).map_err(io_error(&config.summary_json))?;
    if let (Some(path), Some((mesh, u))) = (&config.solution_dump, &report.solution) {
        create(path)?.write_all(solution_dump(mesh, u)?.as_bytes()).map_err(io_error(path))?;
    }
    Ok(())
}
