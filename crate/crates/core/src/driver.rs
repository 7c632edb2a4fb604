//! The adaptive Newton-Galerkin loop.
//!
//! Each pass predicts a step size on the current mesh, takes the damped
//! Galerkin step and evaluates the indicators. When the linearisation error
//! `δ_Ω` is dominated by the discretisation error the mesh is refined and the
//! same Newton index is retried on the new mesh; otherwise the iterate
//! advances.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::estimator::element_indicators;
use crate::fespace::{energy_error, prolongate, shifted_iterate, FeFunction};
use crate::mesh::Mesh;
use crate::newton::{newton_step, StepSizeStrategy, TransformSolver};
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Newton,
    Refine,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Newton => "NEWTON",
            Action::Refine => "REFINE",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    Tolerance,
    DofBudget,
    IterationBudget,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Tolerance => "tolerance",
            TerminationReason::DofBudget => "dof budget",
            TerminationReason::IterationBudget => "iteration budget",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Interplay parameter: refine iff `δ_Ω² ≤ θ Σ η²`.
    pub theta: f64,
    /// Dörfler bulk fraction.
    pub theta_mark: f64,
    pub strategy: StepSizeStrategy,
    pub stop_tolerance: f64,
    /// Refinement stops once the number of free nodes reaches this value.
    pub max_dof: usize,
    pub max_iterations: usize,
    /// Quadrature degree for the true error when an exact solution is known.
    pub error_quadrature_degree: usize,
}

impl RunConfig {
    pub fn new(strategy: StepSizeStrategy) -> RunConfig {
        RunConfig {
            theta: 0.5,
            theta_mark: 0.5,
            strategy,
            stop_tolerance: 1e-6,
            max_dof: 10_000,
            max_iterations: 200,
            error_quadrature_degree: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return invalid(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.theta_mark > 0.0 && self.theta_mark < 1.0) {
            return invalid(format!("theta_mark must lie in (0, 1), got {}", self.theta_mark));
        }
        if self.stop_tolerance.is_nan() || self.stop_tolerance < 0.0 {
            return invalid(format!("stop_tolerance must be nonnegative, got {}", self.stop_tolerance));
        }
        if self.max_dof == 0 {
            return invalid("max_dof must be at least 1");
        }
        if self.max_iterations == 0 {
            return invalid("max_iterations must be at least 1");
        }
        Ok(())
    }
}

/// Telemetry of one pass through the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Newton index `n`.
    pub iter: usize,
    pub action: Action,
    /// Free nodes of the mesh the pass ran on.
    pub dofs: usize,
    /// Step size, present on NEWTON records.
    pub step: Option<f64>,
    pub delta_omega: f64,
    pub eta_total: f64,
    pub estimate_total: f64,
    pub true_error: Option<f64>,
    pub efficiency: Option<f64>,
}

/// `Refine` iff `δ_Ω² ≤ θ Σ η²`.
pub fn interplay_test(delta_omega_sq: f64, eta_sum_sq: f64, theta: f64) -> Action {
    if delta_omega_sq <= theta * eta_sum_sq {
        Action::Refine
    } else {
        Action::Newton
    }
}

/// Smallest set of elements carrying a `theta_mark` fraction of `Σ η²`,
/// chosen greedily by decreasing indicator and lower index on ties.
/// Returned in ascending index order. All-zero indicators mark everything.
pub fn dorfler_mark(eta_sq: &[f64], theta_mark: f64) -> Vec<usize> {
    let total: f64 = eta_sq.iter().sum();
    if total <= 0.0 {
        return (0..eta_sq.len()).collect();
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    let target = theta_mark * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for e in order {
        marked.push(e);
        sum += eta_sq[e];
        if sum >= target {
            break;
        }
    }
    marked.sort_unstable();
    marked
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// The last Galerkin iterate, on `mesh`.
    pub solution: FeFunction,
    pub mesh: Mesh,
    pub records: Vec<IterationRecord>,
    /// Mesh generation of every record.
    pub generations: Vec<u64>,
    pub termination: TerminationReason,
    pub linear_solves: usize,
}

/// A failed run with the telemetry gathered up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("adaptive solve failed after {} records: {error}", records.len())]
pub struct SolveFailure {
    pub error: Error,
    pub records: Vec<IterationRecord>,
    pub generations: Vec<u64>,
}

pub fn adaptive_solve(
    problem: &Problem,
    mesh: &Mesh,
    initial: &FeFunction,
    config: &RunConfig,
) -> std::result::Result<SolveOutcome, SolveFailure> {
    let mut records = Vec::new();
    let mut generations = Vec::new();
    match run(problem, mesh, initial, config, &mut records, &mut generations) {
        Ok((solution, mesh, termination, linear_solves)) => {
            Ok(SolveOutcome { solution, mesh, records, generations, termination, linear_solves })
        }
        Err(error) => Err(SolveFailure { error, records, generations }),
    }
}

fn run(
    problem: &Problem,
    initial_mesh: &Mesh,
    initial: &FeFunction,
    config: &RunConfig,
    records: &mut Vec<IterationRecord>,
    generations: &mut Vec<u64>,
) -> Result<(FeFunction, Mesh, TerminationReason, usize)> {
    config.validate()?;
    if problem.domain().dim() != initial_mesh.dim() {
        return Err(Error::DimensionMismatch(format!(
            "problem is {}d, mesh is {}d",
            problem.domain().dim(),
            initial_mesh.dim()
        )));
    }
    initial.check(initial_mesh)?;

    let mut mesh = initial_mesh.clone();
    let mut u_n = initial.clone();
    let mut strategy = config.strategy.clone();
    let mut n = 0;
    let mut linear_solves = 0;
    loop {
        let solver = TransformSolver::new(&mesh, problem);
        let state = newton_step(&solver, &strategy, &u_n);
        linear_solves += solver.solves();
        let state = state?;
        let k = state.step;
        let u_next = state.iterate;
        let ind = element_indicators(&mesh, problem, &u_n, &u_next, k)?;

        let estimate_total = ind.total();
        let true_error = match problem.exact() {
            Some(exact) => {
                let w = shifted_iterate(&mesh, &u_n, &u_next, k)?;
                Some(energy_error(&mesh, exact, &w, problem.eps(), config.error_quadrature_degree)?)
            }
            None => None,
        };
        let dofs = mesh.num_free();
        let action = match interplay_test(ind.delta_omega_sq, ind.eta_sum_sq, config.theta) {
            Action::Refine if dofs < config.max_dof => Action::Refine,
            _ => Action::Newton,
        };
        records.push(IterationRecord {
            iter: n,
            action,
            dofs,
            step: (action == Action::Newton).then_some(k),
            delta_omega: ind.delta_omega(),
            eta_total: ind.eta_total(),
            estimate_total,
            true_error,
            efficiency: true_error.filter(|&e| e > 0.0).map(|e| estimate_total / e),
        });
        generations.push(mesh.generation());

        let termination = if estimate_total <= config.stop_tolerance {
            Some(TerminationReason::Tolerance)
        } else if dofs > config.max_dof {
            Some(TerminationReason::DofBudget)
        } else if records.len() >= config.max_iterations {
            Some(TerminationReason::IterationBudget)
        } else {
            None
        };
        if let Some(reason) = termination {
            return Ok((u_next, mesh, reason, linear_solves));
        }

        match action {
            Action::Newton => {
                strategy.accept(k);
                u_n = u_next;
                n += 1;
            }
            Action::Refine => {
                let marked = dorfler_mark(&ind.eta_sq, config.theta_mark);
                let (fine, map) = mesh.refine(&marked)?;
                let mut values = prolongate(&u_n, &map)?.into_values();
                for node in fine.boundary_nodes() {
                    values[node] = problem.dirichlet(fine.node(node));
                }
                u_n = FeFunction::new(&fine, values)?;
                mesh = fine;
            }
        }
    }
}
