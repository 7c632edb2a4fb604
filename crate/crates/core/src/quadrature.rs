//! Quadrature rules on the reference simplex, stored in barycentric form.

/// A rule whose weights sum to one, so `∫_T g ≈ |T| Σ w_q g(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Rule exact for polynomials of total degree `degree` on a `dim`-simplex.
    pub fn simplex(dim: usize, degree: usize) -> QuadRule {
        match dim {
            1 => QuadRule::interval(degree),
            _ => QuadRule::triangle(degree),
        }
    }

    /// Gauss-Legendre on the unit interval.
    pub fn interval(degree: usize) -> QuadRule {
        let n = degree / 2 + 1;
        let (xs, ws) = gauss_legendre_unit(n);
        QuadRule {
            points: xs.iter().map(|&x| [1.0 - x, x, 0.0]).collect(),
            weights: ws,
        }
    }

    /// Seven-point degree-5 rule up to degree 5, collapsed Gauss products
    /// beyond that.
    pub fn triangle(degree: usize) -> QuadRule {
        if degree <= 5 {
            return triangle_degree5();
        }
        let n = (degree + 3) / 2;
        let (xs, ws) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &xi) in xs.iter().enumerate() {
            for (j, &eta) in xs.iter().enumerate() {
                let x = xi;
                let y = eta * (1.0 - xi);
                points.push([1.0 - x - y, x, y]);
                weights.push(2.0 * ws[i] * ws[j] * (1.0 - xi));
            }
        }
        QuadRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn triangle_degree5() -> QuadRule {
    let s15 = 15f64.sqrt();
    let a1 = (6.0 - s15) / 21.0;
    let a2 = (6.0 + s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let w2 = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    let mut points = vec![[third, third, third]];
    let mut weights = vec![9.0 / 40.0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        points.extend_from_slice(&[[b, a, a], [a, b, a], [a, a, b]]);
        weights.extend_from_slice(&[w, w, w]);
    }
    QuadRule { points, weights }
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]` (weights sum to 1).
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-type initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = 0.5 * (1.0 - x);
        ws[i] = 0.5 * w;
    }
    (xs, ws)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // ∫_T λ0^a λ1^b λ2^c = 2|T| a! b! c! / (a+b+c+2)!, normalised by |T|.
    fn monomial_2d(a: usize, b: usize, c: usize) -> f64 {
        2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    fn apply(rule: &QuadRule, g: impl Fn(&[f64; 3]) -> f64) -> f64 {
        rule.points.iter().zip(&rule.weights).map(|(p, w)| w * g(p)).sum()
    }

    #[test]
    fn interval_rules_integrate_monomials() {
        for degree in 0..12 {
            let rule = QuadRule::interval(degree);
            for k in 0..=degree {
                let got = apply(&rule, |p| p[1].powi(k as i32));
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "deg {degree}, k {k}");
            }
        }
        assert_eq!(QuadRule::interval(5).len(), 3);
    }

    #[test]
    fn triangle_rules_integrate_monomials() {
        for degree in [5, 6, 9, 12] {
            let rule = QuadRule::triangle(degree);
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let c = degree - a - b;
                    let got = apply(&rule, |p| p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32));
                    let exact = monomial_2d(a, b, c);
                    assert!((got - exact).abs() < 1e-13 * exact.max(1e-3), "{a} {b} {c}: {got} vs {exact}");
                }
            }
        }
        assert_eq!(QuadRule::triangle(5).len(), 7);
    }
}
