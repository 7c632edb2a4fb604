//! Residual a posteriori error indicators, robust in the perturbation
//! parameter.
//!
//! For a Newton iterate `u_n`, the next Galerkin iterate `u_next` and step
//! size `t`, the estimator works with the shifted iterate
//! `u^(t,h) = u_next − (1 − t) u_n` and the linearised source
//! `f^t = t f(u_n) + f'(u_n)(u_next − u_n)`. Element indicators `η_T` measure
//! the discretisation error, `δ_T` the linearisation error.

use crate::error::{Error, Result};
use crate::fespace::{galerkin_shift, FeFunction, NONLINEAR_QUADRATURE_DEGREE};
use crate::mesh::{Mesh, Point};
use crate::problems::Problem;
use crate::quadrature::QuadRule;

/// Scaling weights `α = min(1, ε^(-1/2) h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub element: Vec<f64>,
    /// One entry per interior facet, in mesh order.
    pub facet: Vec<f64>,
}

pub fn weights(mesh: &Mesh, eps: f64) -> Result<Weights> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {eps}")));
    }
    let sizes = mesh.size_data();
    let s = eps.sqrt();
    let alpha = |h: f64| (h / s).min(1.0);
    Ok(Weights {
        element: sizes.element.into_iter().map(alpha).collect(),
        facet: sizes.facet.into_iter().map(alpha).collect(),
    })
}

/// `t f(u_n) + f'(u_n)(u_next − u_n)` for point values.
pub fn f_shift_value(problem: &Problem, u_n: f64, u_next: f64, t: f64) -> f64 {
    t * problem.f(u_n) + problem.df(u_n) * (u_next - u_n)
}

/// `f^t(u_next)` evaluated at a point of the domain.
pub fn f_shift(problem: &Problem, mesh: &Mesh, u_n: &FeFunction, u_next: &FeFunction, t: f64, p: Point) -> Result<f64> {
    u_n.check(mesh)?;
    u_next.check(mesh)?;
    let (e, bary) = mesh.locate(p).ok_or(Error::OutsideDomain { point: p })?;
    let v = f_shift_value(problem, u_n.at(mesh, e, &bary), u_next.at(mesh, e, &bary), t);
    if !v.is_finite() {
        return Err(Error::NonFinite { element: e });
    }
    Ok(v)
}

/// Squared indicators per element together with their global sums.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub eta_sq: Vec<f64>,
    pub delta_sq: Vec<f64>,
    /// `‖f^t − P_h f^t‖²_T`, diagnostic only.
    pub oscillation_sq: Vec<f64>,
    pub delta_omega_sq: f64,
    pub eta_sum_sq: f64,
    pub total_sq: f64,
}

impl IndicatorSet {
    pub fn from_parts(eta_sq: Vec<f64>, delta_sq: Vec<f64>, oscillation_sq: Vec<f64>) -> Result<IndicatorSet> {
        if eta_sq.len() != delta_sq.len() || eta_sq.len() != oscillation_sq.len() {
            return Err(Error::DimensionMismatch("indicator vectors differ in length".into()));
        }
        if let Some(e) = (0..eta_sq.len()).find(|&e| {
            [eta_sq[e], delta_sq[e], oscillation_sq[e]].iter().any(|v| !(v.is_finite() && *v >= 0.0))
        }) {
            return Err(Error::NonFinite { element: e });
        }
        let delta_omega_sq: f64 = delta_sq.iter().sum();
        let eta_sum_sq: f64 = eta_sq.iter().sum();
        Ok(IndicatorSet { eta_sq, delta_sq, oscillation_sq, delta_omega_sq, eta_sum_sq, total_sq: delta_omega_sq + eta_sum_sq })
    }

    pub fn len(&self) -> usize {
        self.eta_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_sq.is_empty()
    }

    /// `δ_Ω`.
    pub fn delta_omega(&self) -> f64 {
        self.delta_omega_sq.sqrt()
    }

    /// `(Σ η²_T)^½`.
    pub fn eta_total(&self) -> f64 {
        self.eta_sum_sq.sqrt()
    }

    pub fn total(&self) -> f64 {
        self.total_sq.sqrt()
    }
}

pub fn total_estimate(ind: &IndicatorSet) -> f64 {
    ind.total()
}

pub fn element_indicators(
    mesh: &Mesh,
    problem: &Problem,
    u_n: &FeFunction,
    u_next: &FeFunction,
    t: f64,
) -> Result<IndicatorSet> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidInput(format!("step size must lie in (0, 1], got {t}")));
    }
    let w = galerkin_shift(mesh, u_n, u_next, t)?;
    let eps = problem.eps();
    let alpha = weights(mesh, eps)?;
    let rule = QuadRule::simplex(mesh.dim(), NONLINEAR_QUADRATURE_DEGREE);
    let nloc = mesh.dim() + 1;
    let ne = mesh.num_elements();

    let mut eta_sq = vec![0.0; ne];
    let mut delta_sq = vec![0.0; ne];
    let mut oscillation_sq = vec![0.0; ne];
    let mut ft = vec![0.0; rule.len()];
    for e in 0..ne {
        let measure = mesh.geometry(e).measure;
        // Elementwise Laplacian of a P1 function.
        let laplacian = 0.0;
        let (mut interior, mut delta, mut moments) = (0.0, 0.0, [0.0; 3]);
        for (q, (bary, wq)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let un = u_n.at(mesh, e, bary);
            ft[q] = f_shift_value(problem, un, u_next.at(mesh, e, bary), t);
            let r = ft[q] + eps * laplacian;
            let d = ft[q] - problem.f(w.at(mesh, e, bary));
            interior += wq * r * r;
            delta += wq * d * d;
            for k in 0..nloc {
                moments[k] += wq * ft[q] * bary[k];
            }
        }
        // Local L² projection: the P1 mass matrix is c(I + 11ᵀ) with
        // c = 1 / ((d + 1)(d + 2)) relative to |T|.
        let c = 1.0 / (nloc * (nloc + 1)) as f64;
        let msum: f64 = moments[..nloc].iter().sum();
        let coef: Vec<f64> = (0..nloc).map(|k| (moments[k] - msum / (nloc as f64 + 1.0)) / c).collect();
        let mut osc = 0.0;
        for (q, (bary, wq)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let p: f64 = (0..nloc).map(|k| coef[k] * bary[k]).sum();
            osc += wq * (ft[q] - p) * (ft[q] - p);
        }
        eta_sq[e] = alpha.element[e] * alpha.element[e] * measure * interior;
        delta_sq[e] = measure * delta;
        oscillation_sq[e] = measure * osc;
        if !(eta_sq[e].is_finite() && delta_sq[e].is_finite() && oscillation_sq[e].is_finite()) {
            return Err(Error::NonFinite { element: e });
        }
    }

    let scale = eps.powf(-0.5);
    for (f, facet) in mesh.interior_facets().iter().enumerate() {
        let [a, b] = facet.elements;
        let (ga, gb) = (w.element_gradient(mesh, a), w.element_gradient(mesh, b));
        let (jump_sq, length) = if mesh.dim() == 1 {
            ((ga[0] - gb[0]).powi(2), 1.0)
        } else {
            let (p, q) = (mesh.node(facet.nodes[0]), mesh.node(facet.nodes[1]));
            let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            let n = [(q[1] - p[1]) / len, (p[0] - q[0]) / len];
            let j = (ga[0] - gb[0]) * n[0] + (ga[1] - gb[1]) * n[1];
            (j * j, len)
        };
        let term = scale * alpha.facet[f] * eps * eps * jump_sq * length;
        eta_sq[a] += 0.5 * term;
        eta_sq[b] += 0.5 * term;
        if !term.is_finite() {
            return Err(Error::NonFinite { element: a });
        }
    }
    IndicatorSet::from_parts(eta_sq, delta_sq, oscillation_sq)
}
