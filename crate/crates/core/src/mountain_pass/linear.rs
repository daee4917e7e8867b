//! Direct solvers for the linear exponents: the torsion problem `Δu + 1 = 0`
//! for `p = 1` and the principal Dirichlet eigenpair for `p = 2`.

use std::sync::Arc;

use super::{History, ProblemSpec, SolveReport, SolveStatus};
use crate::error::{Error, Result};
use crate::field::NodalField;
use crate::mesh_fem::pcg;
use crate::space::Discretization;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_p(spec: &ProblemSpec, p: f64) -> Result<()> {
    spec.validate()?;
    if spec.p != p {
        return Err(Error::UnsupportedExponent {
            p: spec.p,
            reason: format!("this solver handles p = {p} only"),
        });
    }
    Ok(())
}

/// Torsion function: `K d = ∫N_i`. `Λ = 1 / max u`.
pub fn solve_torsion_p1(spec: &ProblemSpec) -> Result<SolveReport> {
    require_p(spec, 1.0)?;
    let space = Arc::new(spec.domain.discretize()?);
    let ones = NodalField::from(vec![1.0; space.num_nodes()]);
    let rhs = space.restrict(&space.power_load(&ones, 0.0)?);
    let k = space.reduced_stiffness();
    let sol = pcg(k, &rhs, None, spec.linear_tol, 10 * k.dim().max(1))?;
    let u = space.embed(&sol.x);
    let peak = space.peak(&u);
    if !(peak > 0.0) {
        return Err(Error::DegenerateInput(
            "torsion solution is not positive".into(),
        ));
    }
    SolveReport::finish(
        *spec,
        space,
        u,
        1.0 / peak,
        History::default(),
        sol.residual,
        sol.iterations,
        SolveStatus::Converged,
    )
}

/// Principal eigenpair of `K d = λ M d` by inverse iteration. The returned
/// solution has unit `L²` norm and `Λ = λ`.
pub fn solve_eigen_p2(spec: &ProblemSpec) -> Result<SolveReport> {
    require_p(spec, 2.0)?;
    let space = Arc::new(spec.domain.discretize()?);
    let (d, lambda, residual, iterations, status) = inverse_iteration(&space, spec)?;
    let mut u = space.embed(&d);
    let mass_norm = space.mass().quad_form(&u).sqrt();
    u.iter_mut().for_each(|x| *x /= mass_norm);
    SolveReport::finish(
        *spec,
        space,
        u,
        lambda,
        History::default(),
        residual,
        iterations,
        status,
    )
}

fn inverse_iteration(
    space: &Discretization,
    spec: &ProblemSpec,
) -> Result<(Vec<f64>, f64, f64, usize, SolveStatus)> {
    let k = space.reduced_stiffness();
    let m = space.mass().restrict(space.free_nodes());
    let cap = 10 * k.dim().max(1);
    let mut d = space.restrict(&space.initial_guess());
    let n0 = norm(&d);
    if !(n0 > 0.0) {
        return Err(Error::DegenerateInput("mesh has no interior nodes".into()));
    }
    d.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = k.quad_form(&d) / m.quad_form(&d);
    let mut residual = f64::INFINITY;
    for it in 1..=spec.max_iters {
        let y = m.mul_vec(&d);
        let start: Vec<f64> = d.iter().map(|x| x / lambda).collect();
        let x = pcg(k, &y, Some(&start), spec.linear_tol, cap)?.x;
        let nx = norm(&x);
        d = x.iter().map(|v| v / nx).collect();
        let kd = k.mul_vec(&d);
        let md = m.mul_vec(&d);
        lambda = d.iter().zip(&kd).map(|(a, b)| a * b).sum::<f64>()
            / d.iter().zip(&md).map(|(a, b)| a * b).sum::<f64>();
        let r: Vec<f64> = kd.iter().zip(&md).map(|(a, b)| a - lambda * b).collect();
        residual = norm(&r);
        if residual <= spec.eigen_tol {
            orient(&mut d);
            return Ok((d, lambda, residual, it, SolveStatus::Converged));
        }
    }
    orient(&mut d);
    Ok((
        d,
        lambda,
        residual,
        spec.max_iters,
        SolveStatus::MaxIterations,
    ))
}

/// Flip the sign so the largest-magnitude entry is positive.
fn orient(d: &mut [f64]) {
    let big = d
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        d.iter_mut().for_each(|x| *x = -*x);
    }
}
