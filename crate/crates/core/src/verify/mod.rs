//! Weak-form residual tests for candidate solutions, the Λ rescaling that
//! accompanies sup-normalization, and closed-form reference profiles.

mod bessel;

use bessel::gamma_plus_one;
pub use bessel::{bessel_j, first_positive_zero};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::mesh_fem::clamped_pow;
use crate::space::{Discretization, Domain, NodePoint, PlanarSpace, RadialSpace};

/// Number of random test functions per residual report.
pub const DEFAULT_TEST_FUNCTIONS: usize = 20;

/// Statistics of `WT_w(u)` over a family of seeded test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Seed of the first test function; the `i`-th uses `seed + i`.
    pub seed: u64,
    pub values: Vec<f64>,
    /// `WT_w(u) / ‖w‖_{W^{1,2}}`.
    pub normalized: Vec<f64>,
    pub mean_abs: f64,
    pub max_abs: f64,
    pub mean_abs_normalized: f64,
    pub max_abs_normalized: f64,
}

impl ResidualReport {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    fn from_values(seed: u64, values: Vec<f64>, normalized: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() / n;
        let max = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            seed,
            mean_abs: mean(&values),
            max_abs: max(&values),
            mean_abs_normalized: mean(&normalized),
            max_abs_normalized: max(&normalized),
            values,
            normalized,
        }
    }
}

fn check_same_len(u: &[f64], w: &[f64], nodes: usize) -> Result<()> {
    if u.len() != nodes || w.len() != nodes {
        return Err(invalid(format!(
            "fields of length {} and {} do not match the {nodes}-node mesh",
            u.len(),
            w.len()
        )));
    }
    Ok(())
}

/// `∫_Ω [−∇u·∇w + Λ w u^(p−1)] dx` by Gauss quadrature on the Q9 mesh.
pub fn weak_residual_planar(
    space: &PlanarSpace,
    u: &[f64],
    lambda: f64,
    p: f64,
    w: &[f64],
) -> Result<f64> {
    let mesh = &space.mesh;
    let reference = &space.reference;
    check_same_len(u, w, mesh.num_nodes())?;
    let (hx, hy) = mesh.element_size();
    let (sx, sy) = (2.0 / hx, 2.0 / hy);
    let det = mesh.jacobian_det();
    let mut total = 0.0;
    for el in &mesh.elements {
        for q in 0..reference.num_points() {
            let n = &reference.shape_values[q];
            let g = &reference.shape_grads[q];
            let (mut uh, mut wh) = (0.0, 0.0);
            let (mut ux, mut uy, mut wx, mut wy) = (0.0, 0.0, 0.0, 0.0);
            for a in 0..9 {
                let (ua, wa) = (u[el[a]], w[el[a]]);
                uh += n[a] * ua;
                wh += n[a] * wa;
                ux += g[a][0] * sx * ua;
                uy += g[a][1] * sy * ua;
                wx += g[a][0] * sx * wa;
                wy += g[a][1] * sy * wa;
            }
            let integrand = -(ux * wx + uy * wy) + lambda * wh * clamped_pow(uh, p - 1.0);
            total += reference.quad_weights[q] * det * integrand;
        }
    }
    Ok(total)
}

/// Radial weak residual with the `r^(n−1)` weight, in physical units of
/// the ball.
pub fn weak_residual_radial(
    space: &RadialSpace,
    u: &[f64],
    lambda: f64,
    p: f64,
    w: &[f64],
) -> Result<f64> {
    let mesh = &space.mesh;
    check_same_len(u, w, mesh.num_nodes())?;
    let (mut grad, mut load) = (0.0, 0.0);
    for (e, el) in mesh.elements.iter().enumerate() {
        for (n, dn, wq) in mesh.quad_data(e) {
            let (mut uh, mut wh, mut du, mut dw) = (0.0, 0.0, 0.0, 0.0);
            for a in 0..3 {
                uh += n[a] * u[el[a]];
                wh += n[a] * w[el[a]];
                du += dn[a] * u[el[a]];
                dw += dn[a] * w[el[a]];
            }
            grad += wq * du * dw;
            load += wq * wh * clamped_pow(uh, p - 1.0);
        }
    }
    Ok(-space.stiffness_scale() * grad + lambda * space.mass_scale() * load)
}

/// Weak residual `WT_w(u)` on either kind of domain.
pub fn weak_residual(
    space: &Discretization,
    u: &[f64],
    lambda: f64,
    p: f64,
    w: &[f64],
) -> Result<f64> {
    match space {
        Discretization::Planar(s) => weak_residual_planar(s, u, lambda, p, w),
        Discretization::Radial(s) => weak_residual_radial(s, u, lambda, p, w),
    }
}

/// `‖w‖_{W^{1,2}} = (∫|∇w|² + ∫w²)^{1/2}`.
pub fn sobolev_norm(space: &Discretization, w: &[f64]) -> f64 {
    (space.stiffness().quad_form(w) + space.mass().quad_form(w)).sqrt()
}

/// Test function with i.i.d. uniform `[−1, 1]` values on the free nodes
/// and zeros on the boundary.
pub fn random_test_function(space: &Discretization, seed: u64) -> NodalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = NodalField::zeros(space.num_nodes());
    for &i in space.free_nodes() {
        w[i] = rng.random_range(-1.0..=1.0);
    }
    w
}

/// Evaluate `WT_w(u)` for `count` test functions seeded `seed, seed+1, …`.
pub fn residual_report(
    space: &Discretization,
    u: &[f64],
    lambda: f64,
    p: f64,
    seed: u64,
    count: usize,
) -> Result<ResidualReport> {
    if count == 0 {
        return Err(invalid("at least one test function is required"));
    }
    space.check_field(u)?;
    let mut values = Vec::with_capacity(count);
    let mut normalized = Vec::with_capacity(count);
    for i in 0..count {
        let w = random_test_function(space, seed.wrapping_add(i as u64));
        let wt = weak_residual(space, u, lambda, p, &w)?;
        let norm = sobolev_norm(space, &w);
        values.push(wt);
        normalized.push(if norm > 0.0 { wt / norm } else { 0.0 });
    }
    Ok(ResidualReport::from_values(seed, values, normalized))
}

/// Multiplier of Λ when a solution of `Δu + Λu^(p−1) = 0` is multiplied by
/// `a`: `a^(2−p)`.
pub fn rescale_lambda(a: f64, p: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid(format!(
            "normalization factor must be positive, got {a}"
        )));
    }
    Ok(a.powf(2.0 - p))
}

/// Closed-form sup-normalized extremals for the linear exponents.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticProfile {
    /// `1 − (r/R)²`
    BallTorsion { radius: f64 },
    /// `(r/R)^(−ν) J_ν(j_ν r/R)` divided by its value at the centre.
    BallEigen {
        radius: f64,
        nu: f64,
        zero: f64,
        centre: f64,
    },
    /// `sin(πx/W) sin(πy/H)`
    RectangleEigen { width: f64, height: f64 },
    /// Torsion function of the rectangle as a truncated sine series in `x`.
    RectangleTorsion {
        width: f64,
        height: f64,
        modes: usize,
        centre: f64,
    },
}

/// Odd modes in the rectangle torsion series.
pub const TORSION_SERIES_MODES: usize = 400;

/// `x(W−x)/2 − (4W²/π³) Σ sin(mπx/W) cosh(mπ(y−H/2)/W) / (m³ cosh(mπH/2W))`
/// over odd `m`.
fn rectangle_torsion_raw(width: f64, height: f64, modes: usize, x: f64, y: f64) -> f64 {
    let b = PI * height / (2.0 * width);
    let a = PI * (y - 0.5 * height) / width;
    let mut s = 0.0;
    for i in (0..modes).rev() {
        let m = (2 * i + 1) as f64;
        let ratio = ((m * (a - b)).exp() + (-m * (a + b)).exp()) / (1.0 + (-2.0 * m * b).exp());
        s += (m * PI * x / width).sin() * ratio / (m * m * m);
    }
    0.5 * x * (width - x) - 4.0 * width * width / PI.powi(3) * s
}

pub fn analytic_extremal(domain: &Domain, p: f64) -> Result<AnalyticProfile> {
    match (*domain, p) {
        (Domain::Ball { radius, .. }, 1.0) => Ok(AnalyticProfile::BallTorsion { radius }),
        (Domain::Ball { n, radius, .. }, 2.0) => {
            let nu = (n as f64 - 2.0) / 2.0;
            let zero = first_positive_zero(nu)?;
            let centre = (0.5 * zero).powf(nu) / gamma_plus_one(nu);
            Ok(AnalyticProfile::BallEigen {
                radius,
                nu,
                zero,
                centre,
            })
        }
        (Domain::Rectangle { width, height, .. }, 2.0) => {
            Ok(AnalyticProfile::RectangleEigen { width, height })
        }
        (Domain::Rectangle { width, height, .. }, 1.0) => {
            let modes = TORSION_SERIES_MODES;
            let centre = rectangle_torsion_raw(width, height, modes, 0.5 * width, 0.5 * height);
            Ok(AnalyticProfile::RectangleTorsion {
                width,
                height,
                modes,
                centre,
            })
        }
        _ => Err(Error::UnsupportedExponent {
            p,
            reason: "closed-form extremals exist only for p = 1 and p = 2".into(),
        }),
    }
}

impl AnalyticProfile {
    /// Profile value at a physical point; radial profiles need
    /// [`NodePoint::Radial`], planar ones [`NodePoint::Planar`].
    pub fn value(&self, point: NodePoint) -> Result<f64> {
        match (self, point) {
            (AnalyticProfile::BallTorsion { radius }, NodePoint::Radial { r }) => {
                let s = r / radius;
                Ok(1.0 - s * s)
            }
            (
                AnalyticProfile::BallEigen {
                    radius,
                    nu,
                    zero,
                    centre,
                },
                NodePoint::Radial { r },
            ) => {
                let s = r / radius;
                if s == 0.0 {
                    return Ok(1.0);
                }
                Ok(s.powf(-nu) * bessel_j(*nu, zero * s)? / centre)
            }
            (AnalyticProfile::RectangleEigen { width, height }, NodePoint::Planar { x, y }) => {
                Ok((PI * x / width).sin() * (PI * y / height).sin())
            }
            (
                AnalyticProfile::RectangleTorsion {
                    width,
                    height,
                    modes,
                    centre,
                },
                NodePoint::Planar { x, y },
            ) => Ok(rectangle_torsion_raw(*width, *height, *modes, x, y) / centre),
            _ => Err(invalid("point kind does not match the profile's domain")),
        }
    }

    /// Nodal interpolant on a discretization of the same domain.
    pub fn interpolate(&self, space: &Discretization) -> Result<NodalField> {
        let mut out = NodalField::zeros(space.num_nodes());
        for i in 0..space.num_nodes() {
            if !space.is_constrained(i) {
                out[i] = self.value(space.node_point(i))?;
            }
        }
        Ok(out)
    }
}
