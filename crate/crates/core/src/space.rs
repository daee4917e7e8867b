//! Discretized domains: a rectangle meshed with Q9 elements, or an
//! `n`-ball reduced to its radial profile. Every integral exposed here is
//! the physical one over the domain, so the solvers never need to know
//! which kind of domain they are working on.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::field::NodalField;
use crate::mesh_fem::{
    assemble_mass_with, assemble_power_load_with, assemble_stiffness_with, build_rect_mesh, embed,
    integrate_field_with, p_norm_power_change, pcg, q9_shape, reference_q9, FieldIntegral,
    QuadMesh, ReferenceElement, SparseSymMatrix, DEFAULT_QUAD_ORDER,
};
use crate::radial_fem::{
    assemble_radial_mass, assemble_radial_power_load, assemble_radial_stiffness, build_radial_mesh,
    radial_dirichlet_energy, radial_p_norm_power, radial_p_norm_power_change,
    radial_value_and_measure, unit_ball_volume, RadialMesh,
};

/// Sample cells per element side used for superlevel-set measures.
pub const SUBCELLS_PER_SIDE: usize = 8;
/// Sample points per element side used when locating the maximum.
pub const PEAK_SAMPLES_PER_SIDE: usize = 5;

/// Domain descriptor together with its mesh resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Rectangle {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
    },
    Ball {
        n: usize,
        radius: f64,
        nr: usize,
    },
}

impl Domain {
    pub fn unit_square(cells: usize) -> Self {
        Domain::Rectangle {
            width: 1.0,
            height: 1.0,
            nx: cells,
            ny: cells,
        }
    }

    pub fn unit_ball(n: usize, nr: usize) -> Self {
        Domain::Ball { n, radius: 1.0, nr }
    }

    /// Ambient dimension.
    pub fn dimension(&self) -> usize {
        match *self {
            Domain::Rectangle { .. } => 2,
            Domain::Ball { n, .. } => n,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Rectangle { width, height, .. } => width * height,
            Domain::Ball { n, radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
        }
    }

    pub fn discretize(&self) -> Result<Discretization> {
        Ok(match *self {
            Domain::Rectangle {
                width,
                height,
                nx,
                ny,
            } => Discretization::Planar(PlanarSpace::new(width, height, nx, ny)?),
            Domain::Ball { n, radius, nr } => {
                Discretization::Radial(RadialSpace::new(n, radius, nr)?)
            }
        })
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain::Rectangle {
                width,
                height,
                nx,
                ny,
            } => write!(f, "rectangle width={width} height={height} nx={nx} ny={ny}"),
            Domain::Ball { n, radius, nr } => write!(f, "ball n={n} radius={radius} nr={nr}"),
        }
    }
}

/// Parses the [`Display`](fmt::Display) form, e.g. `ball n=4 radius=1 nr=64`.
impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| invalid("empty domain description"))?;
        let mut fields = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got {w:?}")))?;
            fields.insert(k, v);
        }
        let take = |k: &str| -> Result<&str> {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| invalid(format!("domain is missing {k}")))
        };
        let real = |k: &str| -> Result<f64> {
            take(k)?
                .parse()
                .map_err(|_| invalid(format!("bad value for {k}")))
        };
        let count = |k: &str| -> Result<usize> {
            take(k)?
                .parse()
                .map_err(|_| invalid(format!("bad value for {k}")))
        };
        let (domain, keys) = match kind {
            "rectangle" => (
                Domain::Rectangle {
                    width: real("width")?,
                    height: real("height")?,
                    nx: count("nx")?,
                    ny: count("ny")?,
                },
                4,
            ),
            "ball" => (
                Domain::Ball {
                    n: count("n")?,
                    radius: real("radius")?,
                    nr: count("nr")?,
                },
                3,
            ),
            other => return Err(invalid(format!("unknown domain kind {other:?}"))),
        };
        if fields.len() != keys {
            return Err(invalid(format!("unexpected keys in domain {s:?}")));
        }
        Ok(domain)
    }
}

#[derive(Debug, Clone)]
pub struct PlanarSpace {
    pub mesh: QuadMesh,
    pub reference: ReferenceElement,
    stiffness: SparseSymMatrix,
    mass: SparseSymMatrix,
    free: Vec<usize>,
    reduced_stiffness: SparseSymMatrix,
}

impl PlanarSpace {
    pub fn new(width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        let mesh = build_rect_mesh(width, height, nx, ny)?;
        let reference = reference_q9(DEFAULT_QUAD_ORDER)?;
        let stiffness = assemble_stiffness_with(&mesh, &reference);
        let mass = assemble_mass_with(&mesh, &reference);
        let free: Vec<usize> = (0..mesh.num_nodes())
            .filter(|&i| !mesh.is_boundary(i))
            .collect();
        let reduced_stiffness = stiffness.restrict(&free);
        Ok(Self {
            mesh,
            reference,
            stiffness,
            mass,
            free,
            reduced_stiffness,
        })
    }
}

/// Radial profile space for a ball of radius `radius` in `R^n`.
///
/// Matrices are the unit-interval ones scaled to physical integrals:
/// stiffness by `n ω_n R^(n-2)` and mass/load by `n ω_n R^n`.
#[derive(Debug, Clone)]
pub struct RadialSpace {
    pub mesh: RadialMesh,
    pub radius: f64,
    stiffness_scale: f64,
    mass_scale: f64,
    stiffness: SparseSymMatrix,
    mass: SparseSymMatrix,
    free: Vec<usize>,
    reduced_stiffness: SparseSymMatrix,
}

impl RadialSpace {
    pub fn new(n: usize, radius: f64, nr: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        let mesh = build_radial_mesh(n, nr)?;
        let sphere = n as f64 * unit_ball_volume(n);
        let stiffness_scale = sphere * radius.powi(n as i32 - 2);
        let mass_scale = sphere * radius.powi(n as i32);
        let stiffness = assemble_radial_stiffness(&mesh).scaled(stiffness_scale);
        let mass = assemble_radial_mass(&mesh).scaled(mass_scale);
        let free: Vec<usize> = (0..mesh.boundary_node()).collect();
        let reduced_stiffness = stiffness.restrict(&free);
        Ok(Self {
            mesh,
            radius,
            stiffness_scale,
            mass_scale,
            stiffness,
            mass,
            free,
            reduced_stiffness,
        })
    }

    pub fn stiffness_scale(&self) -> f64 {
        self.stiffness_scale
    }

    pub fn mass_scale(&self) -> f64 {
        self.mass_scale
    }
}

/// Physical position of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodePoint {
    Planar { x: f64, y: f64 },
    Radial { r: f64 },
}

#[derive(Debug, Clone)]
pub enum Discretization {
    Planar(PlanarSpace),
    Radial(RadialSpace),
}

impl Discretization {
    pub fn domain(&self) -> Domain {
        match self {
            Discretization::Planar(s) => Domain::Rectangle {
                width: s.mesh.width,
                height: s.mesh.height,
                nx: s.mesh.nx,
                ny: s.mesh.ny,
            },
            Discretization::Radial(s) => Domain::Ball {
                n: s.mesh.n,
                radius: s.radius,
                nr: s.mesh.nr,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.domain().dimension()
    }

    pub fn volume(&self) -> f64 {
        self.domain().volume()
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            Discretization::Planar(s) => s.mesh.num_nodes(),
            Discretization::Radial(s) => s.mesh.num_nodes(),
        }
    }

    /// Unconstrained node indices, ascending.
    pub fn free_nodes(&self) -> &[usize] {
        match self {
            Discretization::Planar(s) => &s.free,
            Discretization::Radial(s) => &s.free,
        }
    }

    pub fn is_constrained(&self, node: usize) -> bool {
        match self {
            Discretization::Planar(s) => s.mesh.is_boundary(node),
            Discretization::Radial(s) => node == s.mesh.boundary_node(),
        }
    }

    pub fn node_point(&self, node: usize) -> NodePoint {
        match self {
            Discretization::Planar(s) => {
                let c = s.mesh.node_coords[node];
                NodePoint::Planar { x: c[0], y: c[1] }
            }
            Discretization::Radial(s) => NodePoint::Radial {
                r: s.radius * s.mesh.node_coords[node],
            },
        }
    }

    pub fn stiffness(&self) -> &SparseSymMatrix {
        match self {
            Discretization::Planar(s) => &s.stiffness,
            Discretization::Radial(s) => &s.stiffness,
        }
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        match self {
            Discretization::Planar(s) => &s.mass,
            Discretization::Radial(s) => &s.mass,
        }
    }

    /// Stiffness restricted to the free nodes.
    pub fn reduced_stiffness(&self) -> &SparseSymMatrix {
        match self {
            Discretization::Planar(s) => &s.reduced_stiffness,
            Discretization::Radial(s) => &s.reduced_stiffness,
        }
    }

    pub fn check_field(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.num_nodes() {
            return Err(invalid(format!(
                "field has {} values, discretization has {} nodes",
                u.len(),
                self.num_nodes()
            )));
        }
        Ok(())
    }

    /// `∫ |∇u|²`, as `uᵀ K u`.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.stiffness().quad_form(u)
    }

    /// `∫ |∇u|²` by direct quadrature of the gradient.
    pub fn dirichlet_energy_quadrature(&self, u: &[f64]) -> Result<f64> {
        match self {
            Discretization::Planar(s) => {
                integrate_field_with(&s.mesh, &s.reference, u, FieldIntegral::DirichletEnergy)
            }
            Discretization::Radial(s) => {
                Ok(s.stiffness_scale * radial_dirichlet_energy(&s.mesh, u)?)
            }
        }
    }

    /// `∫ |u|^p`.
    pub fn p_norm_power(&self, u: &[f64], p: f64) -> Result<f64> {
        match self {
            Discretization::Planar(s) => {
                integrate_field_with(&s.mesh, &s.reference, u, FieldIntegral::PNormPower(p))
            }
            Discretization::Radial(s) => Ok(s.mass_scale * radial_p_norm_power(&s.mesh, u, p)?),
        }
    }

    /// `∫ |u + d|^p − |u|^p`.
    pub fn p_norm_power_change(&self, u: &[f64], d: &[f64], p: f64) -> Result<f64> {
        match self {
            Discretization::Planar(s) => p_norm_power_change(&s.mesh, &s.reference, u, d, p),
            Discretization::Radial(s) => {
                Ok(s.mass_scale * radial_p_norm_power_change(&s.mesh, u, d, p)?)
            }
        }
    }

    /// `∫ N_i max(u, 0)^q`.
    pub fn power_load(&self, u: &[f64], q: f64) -> Result<NodalField> {
        match self {
            Discretization::Planar(s) => assemble_power_load_with(&s.mesh, &s.reference, u, q),
            Discretization::Radial(s) => {
                Ok(assemble_radial_power_load(&s.mesh, u, q)?.scaled(s.mass_scale))
            }
        }
    }

    /// Values on the free nodes.
    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.free_nodes().iter().map(|&i| u[i]).collect()
    }

    /// Full field from free-node values, zero on the boundary.
    pub fn embed(&self, reduced: &[f64]) -> NodalField {
        embed(self.num_nodes(), self.free_nodes(), reduced)
    }

    /// Solve `K v = rhs` with homogeneous Dirichlet data, optionally warm
    /// started from `guess`.
    pub fn solve_dirichlet(
        &self,
        rhs: &[f64],
        tol: f64,
        guess: Option<&[f64]>,
    ) -> Result<NodalField> {
        self.check_field(rhs)?;
        let f = self.restrict(rhs);
        let x0 = guess.map(|g| self.restrict(g));
        let k = self.reduced_stiffness();
        let sol = pcg(k, &f, x0.as_deref(), tol, 10 * k.dim().max(1))?;
        Ok(self.embed(&sol.x))
    }

    /// Maximum of the finite element function over nodes and a
    /// `5 x 5` (planar) or `5`-point (radial) sample grid per element.
    pub fn peak(&self, u: &[f64]) -> f64 {
        let s = PEAK_SAMPLES_PER_SIDE;
        let refs: Vec<f64> = (0..s)
            .map(|i| -1.0 + 2.0 * i as f64 / (s - 1) as f64)
            .collect();
        let mut max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self {
            Discretization::Planar(sp) => {
                for e in 0..sp.mesh.num_elements() {
                    for &eta in &refs {
                        for &xi in &refs {
                            max = max.max(sp.mesh.eval_in_element(u, e, xi, eta));
                        }
                    }
                }
            }
            Discretization::Radial(sp) => {
                for e in 0..sp.mesh.nr {
                    for &xi in &refs {
                        max = max.max(sp.mesh.eval_in_element(u, e, xi));
                    }
                }
            }
        }
        max
    }

    /// Superlevel-set measures `|{u > t}|` for each level.
    ///
    /// Planar fields are sampled at the centres of an `8 x 8` grid of
    /// sub-cells per element; radial fields use the exact superlevel
    /// radius of the quadratic interpolant.
    pub fn superlevel_measures(&self, u: &[f64], levels: &[f64]) -> Result<Vec<f64>> {
        self.check_field(u)?;
        match self {
            Discretization::Planar(sp) => {
                let s = SUBCELLS_PER_SIDE;
                let cell = sp.mesh.area() / (sp.mesh.num_elements() * s * s) as f64;
                let centres: Vec<f64> = (0..s)
                    .map(|i| -1.0 + (2 * i + 1) as f64 / s as f64)
                    .collect();
                let shapes: Vec<[f64; 9]> = centres
                    .iter()
                    .flat_map(|&eta| centres.iter().map(move |&xi| q9_shape(xi, eta)))
                    .collect();
                let mut samples = Vec::with_capacity(sp.mesh.num_elements() * s * s);
                for el in &sp.mesh.elements {
                    for n in &shapes {
                        samples.push((0..9).map(|a| n[a] * u[el[a]]).sum::<f64>());
                    }
                }
                samples.sort_by(|a, b| a.total_cmp(b));
                Ok(levels
                    .iter()
                    .map(|&t| {
                        let above = samples.len() - samples.partition_point(|&v| v <= t);
                        above as f64 * cell
                    })
                    .collect())
            }
            Discretization::Radial(sp) => levels
                .iter()
                .map(|&t| {
                    radial_value_and_measure(&sp.mesh, u, t)
                        .map(|s| s.measure * sp.radius.powi(sp.mesh.n as i32))
                })
                .collect(),
        }
    }

    /// Positive interior starting guess vanishing on the boundary:
    /// `sin(πx/W) sin(πy/H)` on rectangles and `1 - (r/R)²` on balls.
    pub fn initial_guess(&self) -> NodalField {
        match self {
            Discretization::Planar(sp) => {
                let (w, h) = (sp.mesh.width, sp.mesh.height);
                sp.mesh
                    .interpolate_dirichlet(|x, y| (PI * x / w).sin() * (PI * y / h).sin())
            }
            Discretization::Radial(sp) => {
                let mut u = sp.mesh.interpolate(|s| 1.0 - s * s);
                u[sp.mesh.boundary_node()] = 0.0;
                u
            }
        }
    }

    /// Nodal interpolant of a function of the physical node position,
    /// zeroed on constrained nodes.
    pub fn interpolate(&self, f: impl Fn(NodePoint) -> f64) -> NodalField {
        let mut u: NodalField = (0..self.num_nodes())
            .map(|i| f(self.node_point(i)))
            .collect::<Vec<_>>()
            .into();
        for i in 0..self.num_nodes() {
            if self.is_constrained(i) {
                u[i] = 0.0;
            }
        }
        u
    }
}
