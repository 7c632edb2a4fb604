//! Discrete Newton-Raphson transform and adaptive step-size prediction.
//!
//! Damped Newton `u_{n+1} = u_n + k_n N(u_n)` is read as a forward Euler step
//! of `u' = N(u)`, with `N(u) = −F'(u)⁻¹ F(u)`. The step size is chosen so
//! that the Euler step stays within `τ` of the continuous trajectory, using
//! either a second-order estimate (`Simple`) or a difference quotient of the
//! transform along the Newton direction (`Improved`). All norms are the
//! energy norm `|||·|||_ε`.

use std::cell::Cell;

use crate::error::{invalid, Result};
use crate::fespace::{energy_norm, FeFunction, Linearization};
use crate::linsolve::factor_solve;
use crate::mesh::Mesh;
use crate::problems::Problem;

/// Below this, `‖N(u + hN(u)) − N(u)‖` is treated as zero.
pub const CURVATURE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    Simple,
    Improved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeStrategy {
    rule: StepRule,
    tau: f64,
    gamma: f64,
    prev_k: Option<f64>,
}

impl StepSizeStrategy {
    pub fn simple(tau: f64) -> Result<Self> {
        Self::new(StepRule::Simple, tau, 0.5)
    }

    pub fn improved(tau: f64, gamma: f64) -> Result<Self> {
        Self::new(StepRule::Improved, tau, gamma)
    }

    pub fn new(rule: StepRule, tau: f64, gamma: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau must be positive, got {tau}"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return invalid(format!("gamma must be positive, got {gamma}"));
        }
        Ok(StepSizeStrategy { rule, tau, gamma, prev_k: None })
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Last accepted step size, if any.
    pub fn previous_step(&self) -> Option<f64> {
        self.prev_k
    }

    /// Remembers an accepted Newton step.
    pub fn accept(&mut self, k: f64) {
        debug_assert!(k > 0.0 && k <= 1.0);
        self.prev_k = Some(k);
    }

    /// Step size at `u_n`, given its transform `delta` and `|||delta|||`.
    pub fn predict(&self, solver: &TransformSolver<'_>, u_n: &FeFunction, delta: &FeFunction, delta_norm: f64) -> Result<f64> {
        match self.rule {
            StepRule::Simple => Ok(simple_step_size(self.tau, delta_norm)),
            StepRule::Improved => {
                if delta_norm == 0.0 {
                    return Ok(1.0);
                }
                let kappa = self.prev_k.unwrap_or_else(|| simple_step_size(self.tau, delta_norm));
                let h = self.gamma * kappa / (delta_norm * delta_norm);
                let shifted = u_n.add_scaled(h, delta)?;
                let eta = solver.transform(&shifted)?.add_scaled(-1.0, delta)?;
                let eta_norm = solver.norm(&eta)?;
                Ok(curvature_step_size(self.tau, h, eta_norm))
            }
        }
    }
}

/// `min(√(2τ / ‖N(u)‖), 1)`; a vanishing transform gives 1.
pub fn simple_step_size(tau: f64, transform_norm: f64) -> f64 {
    if transform_norm <= 0.0 {
        return 1.0;
    }
    (2.0 * tau / transform_norm).sqrt().min(1.0)
}

/// `min(√(2τh / ‖η_h‖), 1)` with `η_h = N(u + hN(u)) − N(u)`.
pub fn curvature_step_size(tau: f64, h: f64, eta_norm: f64) -> f64 {
    if eta_norm <= CURVATURE_FLOOR {
        return 1.0;
    }
    (2.0 * tau * h / eta_norm).sqrt().min(1.0)
}

/// Evaluates Newton transforms on a fixed mesh and counts the linear solves.
pub struct TransformSolver<'a> {
    mesh: &'a Mesh,
    problem: &'a Problem,
    solves: Cell<usize>,
}

impl<'a> TransformSolver<'a> {
    pub fn new(mesh: &'a Mesh, problem: &'a Problem) -> Self {
        TransformSolver { mesh, problem, solves: Cell::new(0) }
    }

    /// `δ` with `a_ε(u; δ, v) = −ℓ_ε(u; v)` for all discrete `v`, `δ = 0` on
    /// the boundary.
    pub fn transform(&self, u: &FeFunction) -> Result<FeFunction> {
        let lin = Linearization::assemble(self.mesh, self.problem, u)?;
        let rhs: Vec<f64> = lin.residual.iter().map(|r| -r).collect();
        self.solves.set(self.solves.get() + 1);
        let x = factor_solve(&lin.matrix, &rhs)?;
        Ok(lin.expand_homogeneous(&x))
    }

    pub fn norm(&self, v: &FeFunction) -> Result<f64> {
        energy_norm(self.mesh, v, self.problem.eps())
    }

    /// Linear solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves.get()
    }
}

/// One damped Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonState {
    /// `u_n + k_n δ_n`.
    pub iterate: FeFunction,
    pub transform: FeFunction,
    pub transform_norm: f64,
    pub step: f64,
}

/// Computes `N(u_n)`, predicts `k_n` and takes the damped step.
pub fn newton_step(solver: &TransformSolver<'_>, strategy: &StepSizeStrategy, u_n: &FeFunction) -> Result<NewtonState> {
    let transform = solver.transform(u_n)?;
    let transform_norm = solver.norm(&transform)?;
    let step = strategy.predict(solver, u_n, &transform, transform_norm)?;
    Ok(NewtonState { iterate: u_n.add_scaled(step, &transform)?, transform, transform_norm, step })
}

pub fn newton_transform(mesh: &Mesh, problem: &Problem, u_n: &FeFunction) -> Result<FeFunction> {
    TransformSolver::new(mesh, problem).transform(u_n)
}

pub fn improved_step_size(
    strategy: &StepSizeStrategy,
    mesh: &Mesh,
    problem: &Problem,
    u_n: &FeFunction,
    delta: &FeFunction,
) -> Result<f64> {
    if strategy.rule() != StepRule::Improved {
        return invalid("improved_step_size needs an improved strategy");
    }
    let solver = TransformSolver::new(mesh, problem);
    let norm = solver.norm(delta)?;
    strategy.predict(&solver, u_n, delta, norm)
}
