//! Efficiency indices across a sweep of perturbation parameters.

use std::io::Write;

use semilinear::{Action, IterationRecord};

use crate::run::solve;
use crate::{CliConfig, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRun {
    pub epsilon: f64,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub epsilon: f64,
    /// Position of the record within its run.
    pub index: usize,
    pub action: Action,
    pub dofs: usize,
    pub estimate_total: f64,
    pub true_error: f64,
    /// `estimate_total / true_error`.
    pub efficiency: f64,
}

/// One row per record and run. Fails when a record carries no true error.
pub fn efficiency_table(runs: &[EpsilonRun]) -> Result<Vec<EfficiencyRow>, CliError> {
    let mut rows = Vec::new();
    for run in runs {
        for (index, r) in run.records.iter().enumerate() {
            let true_error = r.true_error.ok_or_else(|| {
                CliError::NoExactSolution(format!("record {index} of the run at epsilon {} has no true error", run.epsilon))
            })?;
            rows.push(EfficiencyRow {
                epsilon: run.epsilon,
                index,
                action: r.action,
                dofs: r.dofs,
                estimate_total: r.estimate_total,
                true_error,
                efficiency: r.estimate_total / true_error,
            });
        }
    }
    Ok(rows)
}

/// Reruns `config` once per value of `epsilons`.
pub fn efficiency_sweep(config: &CliConfig, epsilons: &[f64]) -> Result<Vec<EfficiencyRow>, CliError> {
    let problem = config.problem()?;
    if problem.exact().is_none() {
        return Err(CliError::NoExactSolution(format!("problem `{}`", config.problem.name())));
    }
    let mut runs = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let config = CliConfig { epsilon, ..config.clone() };
        let records = match solve(&config)? {
            Ok(out) => out.records,
            Err(fail) => return Err(fail.error.into()),
        };
        runs.push(EpsilonRun { epsilon, records });
    }
    efficiency_table(&runs)
}

pub fn write_table<W: Write>(writer: W, rows: &[EfficiencyRow]) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["epsilon", "index", "action", "dofs", "estimate_total", "true_error", "efficiency"])?;
    for r in rows {
        csv.write_record([
            format!("{:.16e}", r.epsilon),
            r.index.to_string(),
            r.action.as_str().to_string(),
            r.dofs.to_string(),
            format!("{:.16e}", r.estimate_total),
            format!("{:.16e}", r.true_error),
            format!("{:.16e}", r.efficiency),
        ])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}
