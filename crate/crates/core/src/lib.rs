//! Finite element computation of extremal functions for the Sobolev
//! embedding `W₀^{1,2}(Ω) ⊂ L^p(Ω)` and of their distribution functions.
//!
//! Planar rectangles use biquadratic Q9 elements; balls in `ℝⁿ` are reduced
//! to the radial profile with quadratic elements. Positive solutions of
//! `Δu + Λu^(p−1) = 0` for `p > 2` come from a Nehari-projected steepest
//! descent, while `p = 1` and `p = 2` are solved directly.

pub mod analysis;
pub mod error;
pub mod field;
pub mod mesh_fem;
pub mod mountain_pass;
pub mod radial_fem;
pub mod space;
pub mod verify;

pub use analysis::{
    compute_cp, compute_lambda, constants, default_t_grid, distribution, monotonicity_report,
    normalize_sup, ConstantsReport, DistributionCurve, MonotonicityReport, Verdict,
};
pub use error::{Error, Result};
pub use field::NodalField;
pub use mountain_pass::{
    mountain_pass_solve, solve, solve_eigen_p2, solve_torsion_p1, ProblemSpec, SolveReport,
    SolveStatus,
};
pub use space::{Discretization, Domain, NodePoint};
pub use verify::{rescale_lambda, residual_report, weak_residual, ResidualReport};
