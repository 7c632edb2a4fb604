use std::process::ExitCode;
use std::time::{Duration, Instant};

use semilinear::estimator::element_indicators;
use semilinear::fespace::{discrete_residual, energy_norm, Linearization};
use semilinear::newton::{
    curvature_step_size, improved_step_size, newton_transform, simple_step_size, StepSizeStrategy, TransformSolver,
};
use semilinear::problems::initial_guess;
use semilinear::{adaptive_solve, Action, FeFunction, InitialGuess, Mesh, Problem, RunConfig, SpikeTrain, TerminationReason};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*seed >> 11) as f64 / (1u64 << 53) as f64
}

fn graded_mesh(n: usize, seed: u64) -> Mesh {
    let mut s = seed;
    let mut xs: Vec<f64> = (1..n).map(|_| lcg(&mut s)).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    Mesh::interval_from_nodes(xs).unwrap()
}

fn one_step_newton() -> Check {
    let start = Instant::now();
    let mut meshes: Vec<Mesh> = [1, 2, 5, 17, 64, 400].iter().map(|&n| Mesh::uniform_interval(0.0, 1.0, n).unwrap()).collect();
    meshes.extend((0..6).map(|k| graded_mesh(10 + 37 * k, 11 + k as u64)));
    let (mut worst_delta, mut worst_res) = (0.0f64, 0.0f64);
    for eps in [1.0, 1e-2, 1e-5] {
        let p = Problem::linear_reaction(eps).unwrap();
        for (m, mesh) in meshes.iter().enumerate() {
            let mut seed = 7 + m as u64;
            let mut u0: Vec<f64> = (0..mesh.num_nodes()).map(|_| 2.0 * lcg(&mut seed) - 1.0).collect();
            for node in mesh.boundary_nodes() {
                u0[node] = 0.0;
            }
            let u0 = FeFunction::new(mesh, u0).unwrap();
            let u1 = u0.add_scaled(1.0, &newton_transform(mesh, &p, &u0).unwrap()).unwrap();
            let ind = element_indicators(mesh, &p, &u0, &u1, 1.0).unwrap();
            let res = discrete_residual(mesh, &p, &u1).unwrap();
            worst_delta = worst_delta.max(ind.delta_omega());
            worst_res = res.iter().fold(worst_res, |w, r| w.max(r.abs()));
        }
    }
    ensure(worst_delta <= 1e-12, || format!("delta_omega {worst_delta:.3e} > 1e-12"))?;
    ensure(worst_res <= 1e-10, || format!("residual {worst_res:.3e} > 1e-10"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max delta_omega {worst_delta:.1e}, max residual {worst_res:.1e}"))
}

fn linear_run(eps: f64) -> semilinear::driver::SolveOutcome {
    let p = Problem::linear_reaction(eps).unwrap();
    let mesh = Mesh::uniform_interval(0.0, 1.0, 10).unwrap();
    let config = RunConfig {
        theta: 0.5,
        stop_tolerance: 0.0,
        max_dof: 10_000,
        max_iterations: 500,
        ..RunConfig::new(StepSizeStrategy::simple(0.1).unwrap())
    };
    adaptive_solve(&p, &mesh, &FeFunction::zeros(&mesh), &config).unwrap()
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn first_order_convergence() -> Check {
    let start = Instant::now();
    let out = linear_run(1e-5);
    let refines: Vec<_> = out.records.iter().filter(|r| r.action == Action::Refine).collect();
    ensure(refines.len() >= 5, || format!("only {} refinements", refines.len()))?;
    let tail: Vec<(f64, f64)> =
        refines[refines.len() - 5..].iter().map(|r| ((r.dofs as f64).ln(), r.estimate_total.ln())).collect();
    let slope = least_squares_slope(&tail);
    ensure((slope + 1.0).abs() <= 0.2, || format!("slope {slope:.3}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("slope {slope:.3} up to {} dofs", out.records.last().unwrap().dofs))
}

fn robust_efficiency() -> Check {
    let start = Instant::now();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for eps in [1e0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let out = linear_run(eps);
        let third = out
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.action == Action::Refine)
            .nth(2)
            .map(|(i, _)| i)
            .ok_or_else(|| format!("eps {eps}: fewer than three refinements"))?;
        for r in &out.records[third + 1..] {
            let e = r.efficiency.ok_or_else(|| format!("eps {eps}: missing efficiency"))?;
            ensure(e.is_finite() && e > 0.0, || format!("eps {eps}: efficiency {e}"))?;
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    ensure(hi / lo <= 10.0, || format!("efficiency range [{lo:.3}, {hi:.3}], ratio {:.2}", hi / lo))?;
    within(start.elapsed(), Duration::from_secs(180))?;
    Ok(format!("efficiency in [{lo:.3}, {hi:.3}], ratio {:.2}", hi / lo))
}

fn jacobian_check() -> Check {
    let start = Instant::now();
    let p = Problem::fisher(0.01, 0.0, 0.0).unwrap();
    let mesh = Mesh::uniform_interval(0.0, 1.0, 9).unwrap();
    let free = mesh.free_nodes();
    ensure(free.len() == 8, || format!("{} free nodes", free.len()))?;
    let mut seed = 2024;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut values: Vec<f64> = (0..mesh.num_nodes()).map(|_| -0.5 + 1.5 * lcg(&mut seed)).collect();
        for node in mesh.boundary_nodes() {
            values[node] = 0.0;
        }
        let u = FeFunction::new(&mesh, values.clone()).unwrap();
        let jac = Linearization::assemble(&mesh, &p, &u).unwrap().matrix;
        let scale = jac.max_abs();
        for (j, &node) in free.iter().enumerate() {
            let h = 1e-6;
            let mut plus = values.clone();
            let mut minus = values.clone();
            plus[node] += h;
            minus[node] -= h;
            let rp = discrete_residual(&mesh, &p, &FeFunction::new(&mesh, plus).unwrap()).unwrap();
            let rm = discrete_residual(&mesh, &p, &FeFunction::new(&mesh, minus).unwrap()).unwrap();
            for i in 0..free.len() {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                let a = jac.get(i, j);
                let rel = (a - fd).abs() / a.abs().max(1e-3 * scale);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-5, || format!("relative error {worst:.3e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max relative error {worst:.1e} over 50 samples"))
}

/// Number of maximal runs of sorted 1d nodes where `u > level`.
fn bumps_above(mesh: &Mesh, u: &FeFunction, level: f64) -> usize {
    let mut pv: Vec<(f64, f64)> = mesh.nodes().iter().zip(u.values()).map(|(p, v)| (p[0], *v)).collect();
    pv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut above = false;
    let mut count = 0;
    for (_, v) in pv {
        let now = v > level;
        if now && !above {
            count += 1;
        }
        above = now;
    }
    count
}

fn fisher_attractor() -> Check {
    let start = Instant::now();
    let p = Problem::fisher(2.5e-4, -0.4, 0.5).unwrap();
    let mesh = Mesh::uniform_interval(0.0, 1.0, 99).unwrap();
    let u0 = initial_guess(&InitialGuess::Spike(SpikeTrain::evenly(3, 0.2)), &mesh, &p).unwrap();
    let config = RunConfig {
        theta: 0.5,
        stop_tolerance: 1e-3,
        max_dof: 5_000,
        max_iterations: 500,
        ..RunConfig::new(StepSizeStrategy::improved(0.1, 0.5).unwrap())
    };
    let out = adaptive_solve(&p, &mesh, &u0, &config).map_err(|e| format!("solver failure: {e}"))?;
    ensure(
        matches!(out.termination, TerminationReason::Tolerance | TerminationReason::DofBudget),
        || format!("terminated by {}", out.termination),
    )?;
    let v = out.solution.values();
    let (mn, mx) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    ensure(mn >= -0.6 && mx <= 1.1, || format!("values in [{mn:.4}, {mx:.4}]"))?;
    let (before, after) = (bumps_above(&mesh, &u0, 0.5), bumps_above(&out.mesh, &out.solution, 0.5));
    ensure(before == 3 && after == before, || format!("bumps above 0.5: {before} -> {after}"))?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "{} after {} records, values in [{mn:.3}, {mx:.3}], bumps {before} -> {after}",
        out.termination,
        out.records.len()
    ))
}

fn ginzburg_landau_run(guess: InitialGuess) -> std::result::Result<semilinear::driver::SolveOutcome, String> {
    let p = Problem::ginzburg_landau(1e-3).unwrap();
    let mesh = Mesh::uniform_square(16).unwrap();
    let u0 = initial_guess(&guess, &mesh, &p).unwrap();
    let config = RunConfig {
        theta: 0.75,
        stop_tolerance: GL_TOLERANCE,
        max_dof: 20_000,
        max_iterations: 300,
        ..RunConfig::new(StepSizeStrategy::simple(0.1).unwrap())
    };
    adaptive_solve(&p, &mesh, &u0, &config).map_err(|e| format!("solver failure: {e}"))
}

const GL_TOLERANCE: f64 = 0.06;

fn ginzburg_landau() -> Check {
    let start = Instant::now();
    let out = ginzburg_landau_run(InitialGuess::Const(-1.0))?;
    let last = out.records.last().unwrap();
    ensure(out.termination == TerminationReason::Tolerance, || format!("constant guess: {}", out.termination))?;
    ensure(last.dofs <= 20_000, || format!("constant guess: {} dofs", last.dofs))?;
    ensure(last.delta_omega <= GL_TOLERANCE, || format!("delta_omega {:.3e}", last.delta_omega))?;
    let v = out.solution.values();
    let (mn, mx) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let interior_min = (0..out.mesh.num_nodes())
        .filter(|&i| !out.mesh.is_boundary(i))
        .map(|i| v[i])
        .fold(f64::INFINITY, f64::min);
    ensure(interior_min <= -0.9, || format!("interior minimum {interior_min:.4}"))?;
    ensure(mn >= -1.01 && mx <= 0.01, || format!("values in [{mn:.4}, {mx:.4}]"))?;

    let signed = ginzburg_landau_run(InitialGuess::SignX2)?;
    let slast = signed.records.last().unwrap();
    ensure(signed.termination == TerminationReason::Tolerance, || format!("sign guess: {}", signed.termination))?;
    ensure(slast.dofs <= 20_000, || format!("sign guess: {} dofs", slast.dofs))?;
    ensure(slast.delta_omega <= GL_TOLERANCE, || format!("sign guess delta_omega {:.3e}", slast.delta_omega))?;
    let probe = |i: usize, j: usize| {
        let pt = [(i + 1) as f64 / 6.0, (j + 1) as f64 / 6.0];
        signed.solution.evaluate(&signed.mesh, pt).unwrap()
    };
    for i in 0..5 {
        let below = [probe(i, 0), probe(i, 1)];
        let above = [probe(i, 3), probe(i, 4)];
        ensure(below.iter().all(|&v| v < 0.0) && above.iter().all(|&v| v > 0.0), || {
            format!("column {i}: below {below:?}, above {above:?}")
        })?;
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!(
        "constant guess: min {mn:.4} at {} dofs; sign guess changes sign across x2 = 1/2 at {} dofs",
        last.dofs, slast.dofs
    ))
}

fn step_size_rules() -> Check {
    let start = Instant::now();
    ensure((simple_step_size(0.1, 3.2) - 0.25).abs() < 1e-15, || "simple rule, capped value".into())?;
    ensure(simple_step_size(0.1, 0.05) == 1.0, || "simple rule cap".into())?;
    ensure(simple_step_size(0.1, 0.0) == 1.0, || "simple rule, zero transform".into())?;
    ensure(curvature_step_size(0.1, 1.0, 0.0) == 1.0, || "improved rule, flat transform".into())?;

    let p = Problem::linear_reaction(1e-2).unwrap();
    let mut worst = 0.0f64;
    for n in [8, 20, 57] {
        let mesh = Mesh::uniform_interval(0.0, 1.0, n).unwrap();
        let u = FeFunction::interpolate(&mesh, |x| x[0] * (1.0 - x[0]) * (3.0 * x[0]).cos());
        let solver = TransformSolver::new(&mesh, &p);
        let d = solver.transform(&u).unwrap();
        let norm = energy_norm(&mesh, &d, p.eps()).unwrap();
        for tau in [1e-3, 1e-2, 0.1] {
            for prev in [None, Some(0.3), Some(1.0)] {
                let mut strategy = StepSizeStrategy::improved(tau, 0.5).unwrap();
                if let Some(k) = prev {
                    strategy.accept(k);
                }
                let improved = improved_step_size(&strategy, &mesh, &p, &u, &d).unwrap();
                worst = worst.max((improved - simple_step_size(tau, norm)).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("improved vs simple differ by {worst:.3e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("improved and simple rules agree to {worst:.1e} on an affine residual"))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn quadratic_tail() -> Check {
    let start = Instant::now();
    let p = Problem::fisher(0.01, 0.0, 0.0).unwrap();
    let mesh = Mesh::uniform_interval(0.0, 1.0, 199).unwrap();
    let u0 = initial_guess(&InitialGuess::Const(0.5), &mesh, &p).unwrap();
    let norm = |r: Vec<f64>| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut residuals = vec![norm(discrete_residual(&mesh, &p, &u0).unwrap())];
    let mut steps = Vec::new();
    const FLOOR: f64 = 1e-13;
    for m in 1..=15 {
        let config = RunConfig {
            stop_tolerance: 0.0,
            max_dof: mesh.num_free(),
            max_iterations: m,
            ..RunConfig::new(StepSizeStrategy::simple(0.1).unwrap())
        };
        let out = adaptive_solve(&p, &mesh, &u0, &config).map_err(|e| e.to_string())?;
        ensure(out.mesh.generation() == mesh.generation(), || "mesh was refined".into())?;
        let last = out.records.last().unwrap();
        steps.push(last.step.ok_or("refinement record")?);
        let r = norm(discrete_residual(&out.mesh, &p, &out.solution).unwrap());
        residuals.push(r);
        if r < FLOOR {
            break;
        }
    }
    // Pairs (r_n, r_{n+1}) taken with a full step and above the roundoff floor.
    let ratios: Vec<f64> = (0..steps.len())
        .filter(|&n| steps[n] == 1.0 && residuals[n + 1] >= FLOOR)
        .map(|n| residuals[n + 1] / residuals[n].powi(2))
        .collect();
    ensure(ratios.len() >= 2, || format!("only {} full steps above the floor: {}", ratios.len(), sci(&residuals)))?;
    let fitted = ratios.windows(2).map(|w| w[0].max(w[1])).fold(f64::INFINITY, f64::min);
    ensure(fitted <= 1e3, || format!("C = {fitted:.3e}, ratios {}", sci(&ratios)))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("C = {fitted:.2e}, residuals {}", sci(&residuals)))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 linear problem converges in one Newton step", one_step_newton),
        ("2 first-order convergence of the estimate", first_order_convergence),
        ("3 efficiency indices robust in epsilon", robust_efficiency),
        ("4 Newton matrix matches finite differences", jacobian_check),
        ("5 Fisher spikes stay in their attractor", fisher_attractor),
        ("6 Ginzburg-Landau solution structure", ginzburg_landau),
        ("7 step-size rules", step_size_rules),
        ("8 quadratic convergence tail", quadratic_tail),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({secs:.2} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.2} s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
