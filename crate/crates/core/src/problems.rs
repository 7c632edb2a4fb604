//! Problem descriptions `-ε Δu = f(u)` with Dirichlet data, plus the built-in
//! benchmark problems and initial guesses.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fespace::FeFunction;
use crate::mesh::{Mesh, Point};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    UnitSquare,
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::UnitSquare => 2,
        }
    }

    /// Uniform starting mesh: `n` elements on an interval, an `n × n` grid
    /// of split squares on the unit square.
    pub fn uniform_mesh(&self, n: usize) -> Result<Mesh> {
        match *self {
            Domain::Interval { a, b } => Mesh::uniform_interval(a, b, n),
            Domain::UnitSquare => Mesh::uniform_square(n),
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::UnitSquare => 1.0,
        }
    }
}

/// A known solution, used to measure the true energy error.
#[derive(Clone)]
pub struct ExactSolution {
    value: FieldFn,
    gradient: GradientFn,
}

impl ExactSolution {
    pub fn new(value: FieldFn, gradient: GradientFn) -> Self {
        ExactSolution { value, gradient }
    }

    pub fn value(&self, p: Point) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        (self.gradient)(p)
    }
}

/// `-ε Δu = f(u)` in the domain, `u = g` on its boundary.
#[derive(Clone)]
pub struct Problem {
    name: String,
    eps: f64,
    domain: Domain,
    f: ScalarFn,
    df: ScalarFn,
    dirichlet: FieldFn,
    exact: Option<ExactSolution>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("eps", &self.eps)
            .field("domain", &self.domain)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    /// A custom problem with homogeneous Dirichlet data. `df` must be the
    /// derivative of `f`.
    pub fn new(name: impl Into<String>, eps: f64, domain: Domain, f: ScalarFn, df: ScalarFn) -> Result<Problem> {
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("epsilon must be positive and finite, got {eps}"));
        }
        if let Domain::Interval { a, b } = domain {
            if !(a < b) {
                return invalid(format!("interval requires a < b, got ({a}, {b})"));
            }
        }
        Ok(Problem {
            name: name.into(),
            eps,
            domain,
            f,
            df,
            dirichlet: Arc::new(|_| 0.0),
            exact: None,
        })
    }

    pub fn with_dirichlet(mut self, g: FieldFn) -> Problem {
        self.dirichlet = g;
        self
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Problem {
        self.exact = Some(exact);
        self
    }

    /// `-ε u'' + u = 1` on (0, 1) with zero boundary values.
    pub fn linear_reaction(eps: f64) -> Result<Problem> {
        let problem = Problem::new(
            "linear",
            eps,
            Domain::Interval { a: 0.0, b: 1.0 },
            Arc::new(|u| 1.0 - u),
            Arc::new(|_| -1.0),
        )?;
        let scale = eps.sqrt();
        let half_width = 0.5 / scale;
        // cosh(s)/cosh(S) and sinh(s)/cosh(S), written to stay finite for tiny ε.
        let ratio = move |s: f64| {
            let a = s.abs();
            let e = (a - half_width).exp() / (1.0 + (-2.0 * half_width).exp());
            (e * (1.0 + (-2.0 * a).exp()), s.signum() * e * (1.0 - (-2.0 * a).exp()))
        };
        let exact = ExactSolution::new(
            Arc::new(move |p: Point| 1.0 - ratio((p[0] - 0.5) / scale).0),
            Arc::new(move |p: Point| [-ratio((p[0] - 0.5) / scale).1 / scale, 0.0]),
        );
        Ok(problem.with_exact(exact))
    }

    /// Fisher's equation `ε u'' + u - u² = 0` on (0, 1), `u(0) = α`, `u(1) = β`.
    pub fn fisher(eps: f64, alpha: f64, beta: f64) -> Result<Problem> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return invalid("boundary values must be finite");
        }
        let problem = Problem::new(
            "fisher",
            eps,
            Domain::Interval { a: 0.0, b: 1.0 },
            Arc::new(|u| u - u * u),
            Arc::new(|u| 1.0 - 2.0 * u),
        )?;
        Ok(problem.with_dirichlet(Arc::new(move |p: Point| if p[0] < 0.5 { alpha } else { beta })))
    }

    /// Ginzburg-Landau `ε Δu - u³ + u = 0` on the unit square, zero on the
    /// boundary.
    pub fn ginzburg_landau(eps: f64) -> Result<Problem> {
        Problem::new(
            "ginzburg_landau",
            eps,
            Domain::UnitSquare,
            Arc::new(|u| u - u * u * u),
            Arc::new(|u| 1.0 - 3.0 * u * u),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn dirichlet(&self, p: Point) -> f64 {
        (self.dirichlet)(p)
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    /// Compares `df` with central differences of `f` at the given points.
    pub fn check_derivative(&self, samples: &[f64], rel_tol: f64) -> Result<()> {
        for &u in samples {
            let h = 1e-6 * (1.0 + u.abs());
            let fd = (self.f(u + h) - self.f(u - h)) / (2.0 * h);
            let df = self.df(u);
            if (fd - df).abs() > rel_tol * df.abs().max(1.0) {
                return invalid(format!(
                    "derivative mismatch for problem `{}` at u = {u}: f' = {df}, difference quotient {fd}",
                    self.name
                ));
            }
        }
        Ok(())
    }
}

/// First integral `ε y² − ⅔ x³ + x²` of Fisher's equation, constant along
/// smooth solutions `(x, y) = (u, u')`.
pub fn fisher_first_integral(eps: f64, u: f64, du: f64) -> f64 {
    eps * du * du - 2.0 / 3.0 * u * u * u + u * u
}

/// A train of unit-height tent bumps on (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    pub centers: Vec<f64>,
    pub half_width: f64,
}

impl SpikeTrain {
    /// `count` bumps centred at `k / (count + 1)`.
    pub fn evenly(count: usize, half_width: f64) -> SpikeTrain {
        SpikeTrain {
            centers: (1..=count).map(|k| k as f64 / (count + 1) as f64).collect(),
            half_width,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .map(|c| (1.0 - (x - c).abs() / self.half_width).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Spike(SpikeTrain),
    /// `sign(x₂ − ½)` on the unit square.
    SignX2,
    Const(f64),
}

/// Nodal interpolant of the initial guess, with boundary nodes overwritten by
/// the Dirichlet data.
pub fn initial_guess(guess: &InitialGuess, mesh: &Mesh, problem: &Problem) -> Result<FeFunction> {
    let needs = match guess {
        InitialGuess::Spike(_) => Some(1),
        InitialGuess::SignX2 => Some(2),
        InitialGuess::Const(_) => None,
    };
    if let Some(dim) = needs {
        if mesh.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "initial guess {guess:?} needs a {dim}d mesh, got {}d",
                mesh.dim()
            )));
        }
    }
    let values = mesh
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if mesh.is_boundary(i) {
                return problem.dirichlet(p);
            }
            match guess {
                InitialGuess::Spike(train) => train.value(p[0]),
                InitialGuess::SignX2 => {
                    let s = p[1] - 0.5;
                    if s > 0.0 {
                        1.0
                    } else if s < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                InitialGuess::Const(c) => *c,
            }
        })
        .collect();
    FeFunction::new(mesh, values)
}
