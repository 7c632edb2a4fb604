//! Continuous piecewise-linear finite elements: nodal functions, assembly of
//! the linearised Newton system, energy norms and transfer between meshes.

use crate::error::{Error, Result};
use crate::linsolve::{factor_solve, SparseMatrix};
use crate::mesh::{Mesh, Point, Prolongation};
use crate::problems::{ExactSolution, Problem};
use crate::quadrature::QuadRule;

/// Polynomial degree integrated exactly when evaluating nonlinear terms.
pub const NONLINEAR_QUADRATURE_DEGREE: usize = 5;

/// Nodal coefficients of a P1 function on one mesh generation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    generation: u64,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<FeFunction> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "{} nodal values for a mesh with {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(FeFunction { generation: mesh.generation(), values })
    }

    pub fn zeros(mesh: &Mesh) -> FeFunction {
        FeFunction { generation: mesh.generation(), values: vec![0.0; mesh.num_nodes()] }
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate(mesh: &Mesh, g: impl Fn(Point) -> f64) -> FeFunction {
        FeFunction {
            generation: mesh.generation(),
            values: mesh.nodes().iter().map(|&p| g(p)).collect(),
        }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fails unless `self` lives on `mesh`.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        if self.generation != mesh.generation() {
            return Err(Error::GenerationMismatch { expected: mesh.generation(), found: self.generation });
        }
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::DimensionMismatch(format!(
                "function has {} values, mesh has {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(())
    }

    fn same_generation(&self, other: &FeFunction) -> Result<()> {
        if self.generation != other.generation || self.values.len() != other.values.len() {
            return Err(Error::GenerationMismatch { expected: self.generation, found: other.generation });
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &FeFunction) -> Result<FeFunction> {
        self.same_generation(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Ok(FeFunction { generation: self.generation, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at barycentric coordinates `bary` of element `e`.
    pub(crate) fn at(&self, mesh: &Mesh, e: usize, bary: &[f64; 3]) -> f64 {
        mesh.element(e).iter().zip(bary).map(|(&v, l)| l * self.values[v]).sum()
    }

    pub fn evaluate(&self, mesh: &Mesh, p: Point) -> Result<f64> {
        self.check(mesh)?;
        let (e, bary) = mesh.locate(p).ok_or(Error::OutsideDomain { point: p })?;
        Ok(self.at(mesh, e, &bary))
    }

    /// Constant gradient on element `e`.
    pub fn gradient(&self, mesh: &Mesh, e: usize) -> Result<[f64; 2]> {
        self.check(mesh)?;
        Ok(self.element_gradient(mesh, e))
    }

    pub(crate) fn element_gradient(&self, mesh: &Mesh, e: usize) -> [f64; 2] {
        let geo = mesh.geometry(e);
        let mut g = [0.0; 2];
        for (k, &v) in mesh.element(e).iter().enumerate() {
            g[0] += self.values[v] * geo.grads[k][0];
            g[1] += self.values[v] * geo.grads[k][1];
        }
        g
    }
}

/// The linearised system `a_ε(u_n; u, φ_i) = a_ε(u_n; u_n, φ_i) − t ℓ_ε(u_n; φ_i)`
/// restricted to free nodes, with Dirichlet values moved to the right-hand
/// side.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    free: Vec<usize>,
    boundary_values: Vec<f64>,
    generation: u64,
}

impl LinearSystem {
    /// Node index of each unknown.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// Solves the system and returns the full nodal vector, including the
    /// prescribed boundary values.
    pub fn solve(&self) -> Result<FeFunction> {
        let x = factor_solve(&self.matrix, &self.rhs)?;
        let mut values = self.boundary_values.clone();
        for (k, &node) in self.free.iter().enumerate() {
            values[node] = x[k];
        }
        Ok(FeFunction { generation: self.generation, values })
    }
}

/// Jacobian and residual of the discrete problem at `u`.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// `a_ε(u; φ_j, φ_i)` over free nodes.
    pub matrix: SparseMatrix,
    /// `ℓ_ε(u; φ_i)` over free nodes.
    pub residual: Vec<f64>,
    /// `a_ε(u; u, φ_i)` minus the Dirichlet lift.
    lifted: Vec<f64>,
    free: Vec<usize>,
    boundary_values: Vec<f64>,
    generation: u64,
}

impl Linearization {
    pub fn assemble(mesh: &Mesh, problem: &Problem, u: &FeFunction) -> Result<Linearization> {
        u.check(mesh)?;
        let eps = problem.eps();
        let rule = QuadRule::simplex(mesh.dim(), NONLINEAR_QUADRATURE_DEGREE);
        let mut free_index = vec![usize::MAX; mesh.num_nodes()];
        let free = mesh.free_nodes();
        for (k, &node) in free.iter().enumerate() {
            free_index[node] = k;
        }
        let boundary_values: Vec<f64> = (0..mesh.num_nodes())
            .map(|i| if mesh.is_boundary(i) { problem.dirichlet(mesh.node(i)) } else { 0.0 })
            .collect();
        let mut triplets = Vec::with_capacity(mesh.num_elements() * (mesh.dim() + 1).pow(2));
        let mut residual = vec![0.0; free.len()];
        let mut lifted = vec![0.0; free.len()];
        let nloc = mesh.dim() + 1;
        for e in 0..mesh.num_elements() {
            let el = mesh.element(e);
            let geo = mesh.geometry(e);
            let grad_u = u.element_gradient(mesh, e);
            let mut local_a = [[0.0; 3]; 3];
            let mut local_l = [0.0; 3];
            for i in 0..nloc {
                let gi = geo.grads[i];
                local_l[i] = eps * geo.measure * (grad_u[0] * gi[0] + grad_u[1] * gi[1]);
                for j in 0..nloc {
                    let gj = geo.grads[j];
                    local_a[i][j] = eps * geo.measure * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
            for (bary, w) in rule.points.iter().zip(&rule.weights) {
                let uq = u.at(mesh, e, bary);
                let (fq, dfq) = (problem.f(uq), problem.df(uq));
                if !(fq.is_finite() && dfq.is_finite()) {
                    return Err(Error::NonFinite { element: e });
                }
                let wq = w * geo.measure;
                for i in 0..nloc {
                    local_l[i] -= wq * fq * bary[i];
                    for j in 0..nloc {
                        local_a[i][j] -= wq * dfq * bary[i] * bary[j];
                    }
                }
            }
            for i in 0..nloc {
                let fi = free_index[el[i]];
                if fi == usize::MAX {
                    continue;
                }
                residual[fi] += local_l[i];
                for j in 0..nloc {
                    let node = el[j];
                    lifted[fi] += local_a[i][j] * u.values[node];
                    match free_index[node] {
                        usize::MAX => lifted[fi] -= local_a[i][j] * boundary_values[node],
                        fj => triplets.push((fi, fj, local_a[i][j])),
                    }
                }
            }
        }
        Ok(Linearization {
            matrix: SparseMatrix::from_triplets(free.len(), triplets)?,
            residual,
            lifted,
            free,
            boundary_values,
            generation: mesh.generation(),
        })
    }

    /// Right-hand side for step size `t`.
    pub fn rhs(&self, t: f64) -> Vec<f64> {
        self.lifted.iter().zip(&self.residual).map(|(a, l)| a - t * l).collect()
    }

    pub fn into_system(self, t: f64) -> LinearSystem {
        let rhs = self.rhs(t);
        LinearSystem {
            matrix: self.matrix,
            rhs,
            free: self.free,
            boundary_values: self.boundary_values,
            generation: self.generation,
        }
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// Scatters a vector over free nodes into a nodal function that vanishes
    /// on the boundary.
    pub fn expand_homogeneous(&self, x: &[f64]) -> FeFunction {
        let mut values = vec![0.0; self.boundary_values.len()];
        for (k, &node) in self.free.iter().enumerate() {
            values[node] = x[k];
        }
        FeFunction { generation: self.generation, values }
    }
}

/// Assembles the finite element Newton step with step size `t`.
pub fn assemble_newton_system(mesh: &Mesh, problem: &Problem, u_n: &FeFunction, t: f64) -> Result<LinearSystem> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("step size must lie in (0, 1], got {t}")));
    }
    Ok(Linearization::assemble(mesh, problem, u_n)?.into_system(t))
}

/// `ℓ_ε(u; φ_i)` at the free nodes.
pub fn discrete_residual(mesh: &Mesh, problem: &Problem, u: &FeFunction) -> Result<Vec<f64>> {
    Ok(Linearization::assemble(mesh, problem, u)?.residual)
}

/// `u_next − (1 − t) u_n` at every node, so boundary nodes carry `t g`.
///
/// This is the function satisfying `ε(∇w, ∇v) = (f^t, v)` for all discrete
/// test functions `v`.
pub fn galerkin_shift(mesh: &Mesh, u_n: &FeFunction, u_next: &FeFunction, t: f64) -> Result<FeFunction> {
    u_n.check(mesh)?;
    u_next.check(mesh)?;
    u_next.add_scaled(t - 1.0, u_n)
}

/// `u_next − (1 − t) u_n` at free nodes; boundary values of `u_next` are kept.
pub fn shifted_iterate(mesh: &Mesh, u_n: &FeFunction, u_next: &FeFunction, t: f64) -> Result<FeFunction> {
    u_n.check(mesh)?;
    u_next.check(mesh)?;
    let values = (0..mesh.num_nodes())
        .map(|i| {
            if mesh.is_boundary(i) {
                u_next.values[i]
            } else {
                u_next.values[i] - (1.0 - t) * u_n.values[i]
            }
        })
        .collect();
    Ok(FeFunction { generation: u_n.generation, values })
}

/// `|||v|||_ε = (ε‖∇v‖² + ‖v‖²)^½`, integrated exactly.
pub fn energy_norm(mesh: &Mesh, v: &FeFunction, eps: f64) -> Result<f64> {
    v.check(mesh)?;
    let d = mesh.dim() as f64;
    let mass_scale = 1.0 / ((d + 1.0) * (d + 2.0));
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let g = v.element_gradient(mesh, e);
        let (mut sq, mut s) = (0.0, 0.0);
        for &node in mesh.element(e) {
            sq += v.values[node] * v.values[node];
            s += v.values[node];
        }
        sum += geo.measure * (eps * (g[0] * g[0] + g[1] * g[1]) + mass_scale * (sq + s * s));
    }
    Ok(sum.sqrt())
}

/// Energy norm of a P1 function with an elementwise quadrature rule exact to
/// the given polynomial degree (degree ≥ 2 reproduces [`energy_norm`]).
pub fn energy_norm_quadrature(mesh: &Mesh, v: &FeFunction, eps: f64, degree: usize) -> Result<f64> {
    v.check(mesh)?;
    let rule = QuadRule::simplex(mesh.dim(), degree);
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let g = v.element_gradient(mesh, e);
        let mut local = eps * (g[0] * g[0] + g[1] * g[1]);
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let val = v.at(mesh, e, bary);
            local += w * val * val;
        }
        sum += geo.measure * local;
    }
    Ok(sum.sqrt())
}

/// `|||u − v|||_ε` for a known solution `u`, by elementwise quadrature.
pub fn energy_error(mesh: &Mesh, exact: &ExactSolution, v: &FeFunction, eps: f64, degree: usize) -> Result<f64> {
    v.check(mesh)?;
    let rule = QuadRule::simplex(mesh.dim(), degree);
    let mut sum = 0.0;
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let g = v.element_gradient(mesh, e);
        let mut local = 0.0;
        for (bary, w) in rule.points.iter().zip(&rule.weights) {
            let p = mesh.point_at(e, bary);
            let du = exact.gradient(p);
            let d = exact.value(p) - v.at(mesh, e, bary);
            let (gx, gy) = (du[0] - g[0], du[1] - g[1]);
            local += w * (eps * (gx * gx + gy * gy) + d * d);
        }
        sum += geo.measure * local;
    }
    Ok(sum.sqrt())
}

/// Transfers `v` to the refined mesh by midpoint interpolation.
pub fn prolongate(v: &FeFunction, map: &Prolongation) -> Result<FeFunction> {
    if v.generation != map.source_generation() {
        return Err(Error::GenerationMismatch { expected: map.source_generation(), found: v.generation });
    }
    Ok(FeFunction { generation: map.target_generation(), values: map.apply(&v.values)? })
}
