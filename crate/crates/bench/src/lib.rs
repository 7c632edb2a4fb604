//! Fixtures shared by the benchmarks.

use semilinear::newton::newton_transform;
use semilinear::problems::initial_guess;
use semilinear::{FeFunction, InitialGuess, Mesh, Problem, SpikeTrain};

pub struct Fixture {
    pub problem: Problem,
    pub mesh: Mesh,
    /// A boundary-consistent iterate.
    pub u_n: FeFunction,
    /// `u_n` plus one full Newton transform.
    pub u_next: FeFunction,
}

impl Fixture {
    fn new(problem: Problem, mesh: Mesh, guess: InitialGuess) -> Fixture {
        let u_n = initial_guess(&guess, &mesh, &problem).expect("initial guess");
        let delta = newton_transform(&mesh, &problem, &u_n).expect("transform");
        let u_next = u_n.add_scaled(1.0, &delta).expect("update");
        Fixture { problem, mesh, u_n, u_next }
    }
}

/// Fisher problem on an interval mesh refined towards x = 0.
pub fn fisher_interval(n: usize, rounds: usize) -> Fixture {
    let mut mesh = Mesh::uniform_interval(0.0, 1.0, n).expect("mesh");
    for _ in 0..rounds {
        mesh = mesh.refine(&[0, 1]).expect("refine").0;
    }
    let problem = Problem::fisher(1e-3, -0.4, 0.5).expect("problem");
    Fixture::new(problem, mesh, InitialGuess::Spike(SpikeTrain::evenly(3, 0.2)))
}

/// Ginzburg-Landau problem on a square mesh refined along the line y = 1/2.
pub fn ginzburg_landau_square(n: usize, rounds: usize) -> Fixture {
    let mut mesh = Mesh::uniform_square(n).expect("mesh");
    for _ in 0..rounds {
        let h = 1.0 / n as f64;
        let marked: Vec<usize> = (0..mesh.num_elements())
            .filter(|&e| {
                let y = mesh.element(e).iter().map(|&v| mesh.node(v)[1]).sum::<f64>() / 3.0;
                (y - 0.5).abs() < h
            })
            .collect();
        mesh = mesh.refine(&marked).expect("refine").0;
    }
    let problem = Problem::ginzburg_landau(1e-3).expect("problem");
    Fixture::new(problem, mesh, InitialGuess::SignX2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        for f in [fisher_interval(32, 4), ginzburg_landau_square(8, 3)] {
            f.u_n.check(&f.mesh).unwrap();
            f.u_next.check(&f.mesh).unwrap();
            assert!(f.mesh.num_free() > 0);
        }
    }
}
