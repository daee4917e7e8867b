//! Minimax iteration for positive solutions of `Δu + u^(p−1) = 0`, `p > 2`.
//!
//! Each step solves a Poisson problem for the Sobolev gradient of
//! `I(u) = ½∫|∇u|² − (1/p)∫|u|^p`, moves along the normalized descent
//! direction and projects back onto the Nehari manifold
//! `{∫|∇u|² = ∫|u|^p}`. A step is accepted only if it lowers `I`;
//! otherwise the direction is halved. The linear exponents `p = 1` and
//! `p = 2` are handled by direct solvers in [`linear`].

mod linear;

pub use linear::{solve_eigen_p2, solve_torsion_p1};

use std::sync::Arc;

use crate::analysis::{compute_cp, normalize_sup};
use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::space::{Discretization, Domain};
use crate::verify::{rescale_lambda, residual_report, ResidualReport, DEFAULT_TEST_FUNCTIONS};

/// Exponents in `(2, 2 + PROJECTION_GAP)` make the projection exponent
/// `1/(p−2)` numerically meaningless.
pub const PROJECTION_GAP: f64 = 1e-6;

/// Everything needed to run one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub p: f64,
    /// Stop once `2λ` (the slope of `I` along the descent direction) is at
    /// most this.
    pub descent_tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Relative residual for the inner linear solves.
    pub linear_tol: f64,
    /// Relative eigen-residual target for `p = 2`.
    pub eigen_tol: f64,
    /// Bound on the mean normalized weak residual for a solve to count as
    /// converged.
    pub residual_tol: f64,
    pub test_functions: usize,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(domain: Domain, p: f64) -> Self {
        Self {
            domain,
            p,
            descent_tol: 1e-6,
            max_iters: 500,
            max_halvings: 30,
            linear_tol: 1e-10,
            eigen_tol: 1e-8,
            residual_tol: 1e-6,
            test_functions: DEFAULT_TEST_FUNCTIONS,
            seed: 0,
        }
    }

    /// Check the exponent range and the numeric settings.
    pub fn validate(&self) -> Result<()> {
        let p = self.p;
        if !p.is_finite() || p < 1.0 {
            return Err(Error::UnsupportedExponent {
                p,
                reason: "exponents must satisfy p >= 1".into(),
            });
        }
        if p > 1.0 && p < 2.0 {
            return Err(Error::UnsupportedExponent {
                p,
                reason: "the sublinear range 1 < p < 2 is not supported; the minimax iteration fails there".into(),
            });
        }
        if p > 2.0 && p < 2.0 + PROJECTION_GAP {
            return Err(Error::UnsupportedExponent {
                p,
                reason: "p is too close to 2 for the Nehari projection".into(),
            });
        }
        if let Domain::Ball { n, .. } = self.domain {
            if n >= 3 {
                let critical = 2.0 * n as f64 / (n as f64 - 2.0);
                if p >= critical {
                    return Err(Error::UnsupportedExponent {
                        p,
                        reason: format!(
                            "p must be below the critical exponent {critical} for n = {n}"
                        ),
                    });
                }
            }
        }
        let positive = [
            self.descent_tol,
            self.linear_tol,
            self.eigen_tol,
            self.residual_tol,
        ];
        if positive.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if self.test_functions == 0 {
            return Err(invalid("at least one test function is required"));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// Every halving failed to lower the energy.
    Stalled,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub spec: ProblemSpec,
    pub space: Arc<Discretization>,
    /// Solution of the problem with `Λ = 1` (unit right side for `p = 1`,
    /// unit Euclidean norm for `p = 2`).
    pub solution: NodalField,
    /// Sup-normalized extremal.
    pub normalized: NodalField,
    /// Maximum of `solution`.
    pub peak: f64,
    /// Multiplier for the normalized extremal.
    pub lambda: f64,
    pub cp: f64,
    /// `I(u_k)` after each accepted step, starting with the projected guess.
    pub energy_history: Vec<f64>,
    /// `I(u_(k+1)) − I(u_k)` for each accepted step.
    pub energy_changes: Vec<f64>,
    /// Halvings used by each accepted step.
    pub halvings: Vec<usize>,
    /// Final `2λ` for the minimax iteration; final relative linear or
    /// eigen residual for the linear exponents.
    pub descent_norm: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub residuals: ResidualReport,
    /// Status is converged and the weak residual test passed.
    pub converged: bool,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct History {
    pub energies: Vec<f64>,
    pub changes: Vec<f64>,
    pub halvings: Vec<usize>,
}

impl SolveReport {
    pub(crate) fn finish(
        spec: ProblemSpec,
        space: Arc<Discretization>,
        solution: NodalField,
        lambda: f64,
        history: History,
        descent_norm: f64,
        iterations: usize,
        status: SolveStatus,
    ) -> Result<Self> {
        let normalized = normalize_sup(&space, &solution)?;
        let cp = compute_cp(&space, &solution, spec.p)?;
        let residuals = residual_report(
            &space,
            &normalized.field,
            lambda,
            spec.p,
            spec.seed,
            spec.test_functions,
        )?;
        let converged =
            status == SolveStatus::Converged && residuals.mean_abs_normalized <= spec.residual_tol;
        Ok(Self {
            spec,
            space,
            solution,
            normalized: normalized.field,
            peak: normalized.peak,
            lambda,
            cp,
            energy_history: history.energies,
            energy_changes: history.changes,
            halvings: history.halvings,
            descent_norm,
            iterations,
            status,
            residuals,
            converged,
        })
    }
}

/// `I(u) = ½∫|∇u|² − (1/p)∫|u|^p`.
pub fn energy(space: &Discretization, u: &[f64], p: f64) -> Result<f64> {
    space.check_field(u)?;
    if !(p >= 1.0) {
        return Err(invalid(format!("energy needs p >= 1, got {p}")));
    }
    Ok(0.5 * space.dirichlet_energy(u) - space.p_norm_power(u, p)? / p)
}

/// `I(w) − I(u)`, evaluated from `w − u` so that small changes are not
/// lost to cancellation.
pub fn energy_change(space: &Discretization, u: &[f64], w: &[f64], p: f64) -> Result<f64> {
    space.check_field(u)?;
    space.check_field(w)?;
    let d: Vec<f64> = w.iter().zip(u).map(|(a, b)| a - b).collect();
    let sum: Vec<f64> = w.iter().zip(u).map(|(a, b)| a + b).collect();
    let grad = 0.5 * space.stiffness().bilinear(&d, &sum);
    Ok(grad - space.p_norm_power_change(u, &d, p)? / p)
}

/// Scale `u` onto the Nehari manifold: `(∫|∇u|² / ∫|u|^p)^(1/(p−2)) u`.
pub fn nehari_project(space: &Discretization, u: &[f64], p: f64) -> Result<NodalField> {
    space.check_field(u)?;
    if !(p > 2.0) {
        return Err(Error::UnsupportedExponent {
            p,
            reason: "the Nehari projection needs p > 2".into(),
        });
    }
    let grad = space.dirichlet_energy(u);
    let lp = space.p_norm_power(u, p)?;
    if !(grad > 0.0 && lp > 0.0) {
        return Err(Error::DegenerateInput(
            "cannot project a field with vanishing energy or p-norm".into(),
        ));
    }
    let t = (grad / lp).powf(1.0 / (p - 2.0));
    Ok(NodalField::from(
        u.iter().map(|v| t * v).collect::<Vec<_>>(),
    ))
}

/// Relative Nehari defect `|∫|∇u|² − ∫|u|^p| / ∫|∇u|²`.
pub fn nehari_defect(space: &Discretization, u: &[f64], p: f64) -> Result<f64> {
    let grad = space.dirichlet_energy(u);
    let lp = space.p_norm_power(u, p)?;
    Ok((grad - lp).abs() / grad)
}

/// Steepest descent direction at `u`.
#[derive(Debug, Clone)]
pub struct Descent {
    /// `v` with `∫|∇v|² = 1`, or zero at a discrete solution.
    pub direction: NodalField,
    /// `λ >= 0`; the slope of `I` along `v` is `−2λ`.
    pub lambda: f64,
    /// Solution `v̄` of `Δv̄ = −u^(p−1)`, so that `2λ v = v̄ − u`.
    pub poisson: NodalField,
}

impl Descent {
    pub fn slope(&self) -> f64 {
        2.0 * self.lambda
    }
}

/// Solve `Δv̄ = −u^(p−1)` with zero boundary values and set
/// `v = (v̄ − u) / 2λ` with `2λ = ‖∇(v̄ − u)‖`.
///
/// The difference `g = v̄ − u` is solved for directly from the residual
/// `u^(p−1) − Ku`, so it stays accurate when it is tiny compared with `u`.
pub fn descent_direction(
    space: &Discretization,
    u: &[f64],
    p: f64,
    linear_tol: f64,
) -> Result<Descent> {
    space.check_field(u)?;
    let load = space.power_load(u, p - 1.0)?;
    let ku = space.stiffness().mul_vec(u);
    let residual: Vec<f64> = load.iter().zip(&ku).map(|(f, k)| f - k).collect();
    let mut g = NodalField::zeros(u.len());
    if space.restrict(&residual).iter().any(|r| *r != 0.0) {
        g = space.solve_dirichlet(&residual, linear_tol, None)?;
    }
    let poisson = NodalField::from(u.to_vec()).add_scaled(1.0, &g);
    let two_lambda = space.dirichlet_energy(&g).max(0.0).sqrt();
    if two_lambda == 0.0 {
        return Ok(Descent {
            direction: NodalField::zeros(u.len()),
            lambda: 0.0,
            poisson,
        });
    }
    Ok(Descent {
        direction: g.scaled(1.0 / two_lambda),
        lambda: 0.5 * two_lambda,
        poisson,
    })
}

/// Discrete Fréchet derivative `I′(u)(v) = ∫∇u·∇v − ∫u^(p−1) v`.
pub fn derivative(space: &Discretization, u: &[f64], v: &[f64], p: f64) -> Result<f64> {
    let load = space.power_load(u, p - 1.0)?;
    Ok(space.stiffness().bilinear(v, u) - load.dot(v))
}

/// Current iterate of the minimax loop.
#[derive(Debug, Clone)]
pub struct IterationState {
    /// Iterate on the Nehari manifold.
    pub u: NodalField,
    /// `I(u_1)` plus the accumulated accepted changes.
    pub energy: f64,
    /// Last descent direction.
    pub direction: Option<NodalField>,
    /// Last `λ`.
    pub lambda: f64,
    /// Halvings used by the last accepted step.
    pub halvings: usize,
    /// `I(u_k) − I(u_(k−1))` for the last accepted step.
    pub change: f64,
}

/// Result of one pass through the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Converged,
    Accepted { halvings: usize },
    Stalled,
}

/// The minimax iteration on a fixed discretization.
#[derive(Debug, Clone)]
pub struct MountainPass<'a> {
    space: &'a Discretization,
    p: f64,
    descent_tol: f64,
    max_halvings: usize,
    linear_tol: f64,
}

impl<'a> MountainPass<'a> {
    pub fn new(space: &'a Discretization, spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        if spec.p <= 2.0 {
            return Err(Error::UnsupportedExponent {
                p: spec.p,
                reason: "the minimax iteration needs p > 2; use the linear solvers".into(),
            });
        }
        Ok(Self {
            space,
            p: spec.p,
            descent_tol: spec.descent_tol,
            max_halvings: spec.max_halvings,
            linear_tol: spec.linear_tol,
        })
    }

    /// `u_1 = P(u_guess)`.
    pub fn start(&self, guess: &[f64]) -> Result<IterationState> {
        let u = nehari_project(self.space, guess, self.p)?;
        let energy = energy(self.space, &u, self.p)?;
        Ok(IterationState {
            u,
            energy,
            direction: None,
            lambda: f64::INFINITY,
            halvings: 0,
            change: 0.0,
        })
    }

    /// Compute the descent direction, stop if `2λ` is small enough, and
    /// otherwise take the first of `v, v/2, v/4, …` whose projection lowers
    /// the energy.
    pub fn step(&self, state: &mut IterationState) -> Result<StepOutcome> {
        let descent = descent_direction(self.space, &state.u, self.p, self.linear_tol)?;
        state.lambda = descent.lambda;
        if descent.slope() <= self.descent_tol {
            state.direction = Some(descent.direction);
            return Ok(StepOutcome::Converged);
        }
        let mut step = 1.0;
        for halvings in 0..=self.max_halvings {
            let trial = state.u.add_scaled(step, &descent.direction);
            if let Ok(candidate) = nehari_project(self.space, &trial, self.p) {
                let change = energy_change(self.space, &state.u, &candidate, self.p)?;
                if change < 0.0 {
                    state.u = candidate;
                    state.energy += change;
                    state.change = change;
                    state.halvings = halvings;
                    state.direction = Some(descent.direction);
                    return Ok(StepOutcome::Accepted { halvings });
                }
            }
            step *= 0.5;
        }
        state.direction = Some(descent.direction);
        Ok(StepOutcome::Stalled)
    }
}

/// Run the minimax iteration from `u_guess`, then test the result against
/// the weak form.
pub fn mountain_pass_solve(spec: &ProblemSpec, u_guess: &[f64]) -> Result<SolveReport> {
    spec.validate()?;
    let space = Arc::new(spec.domain.discretize()?);
    mountain_pass_on(spec, space, u_guess)
}

pub(crate) fn mountain_pass_on(
    spec: &ProblemSpec,
    space: Arc<Discretization>,
    u_guess: &[f64],
) -> Result<SolveReport> {
    let solver = MountainPass::new(&space, spec)?;
    let mut state = solver.start(u_guess)?;
    let mut history = History {
        energies: vec![state.energy],
        ..History::default()
    };
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    while iterations < spec.max_iters {
        iterations += 1;
        match solver.step(&mut state)? {
            StepOutcome::Converged => {
                status = SolveStatus::Converged;
                break;
            }
            StepOutcome::Accepted { halvings: h } => {
                history.energies.push(state.energy);
                history.changes.push(state.change);
                history.halvings.push(h);
            }
            StepOutcome::Stalled => {
                status = SolveStatus::Stalled;
                break;
            }
        }
    }
    if status == SolveStatus::MaxIterations {
        // slope at the final iterate
        state.lambda = descent_direction(&space, &state.u, spec.p, spec.linear_tol)?.lambda;
        if 2.0 * state.lambda <= spec.descent_tol {
            status = SolveStatus::Converged;
        }
    }
    let peak = space.peak(&state.u);
    let lambda = rescale_lambda(1.0 / peak, spec.p)?;
    SolveReport::finish(
        *spec,
        space,
        state.u,
        lambda,
        history,
        2.0 * state.lambda,
        iterations,
        status,
    )
}

/// Solve with the default starting guess, dispatching on the exponent.
pub fn solve(spec: &ProblemSpec) -> Result<SolveReport> {
    spec.validate()?;
    if spec.p == 1.0 {
        solve_torsion_p1(spec)
    } else if spec.p == 2.0 {
        solve_eigen_p2(spec)
    } else {
        let space = Arc::new(spec.domain.discretize()?);
        let guess = space.initial_guess();
        mountain_pass_on(spec, space, &guess)
    }
}
