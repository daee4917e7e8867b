//! Structured nine-node quadrilateral meshes on rectangles and the planar
//! finite element machinery built on them.
//!
//! A `nx x ny` mesh of `[0, width] x [0, height]` has a `(2nx+1) x (2ny+1)`
//! grid of nodes; node `(i, j)` has global index `j * (2nx+1) + i`. Every
//! element is the same axis-aligned rectangle, so the Jacobian is a single
//! constant diagonal map.

mod quadrature;
mod sparse;

pub use quadrature::{
    gauss_legendre, lagrange3, lagrange3_deriv, q9_shape, q9_shape_grad, reference_q9,
    ReferenceElement, Q9_NODES,
};
pub use sparse::{pcg, solve_spd, CgSolution, SparseSymMatrix, DEFAULT_LINEAR_TOL};

use crate::error::{invalid, Result};
use crate::field::NodalField;

/// Default tensor Gauss order per direction.
pub const DEFAULT_QUAD_ORDER: usize = 3;

#[derive(Debug, Clone)]
pub struct QuadMesh {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub node_coords: Vec<[f64; 2]>,
    /// Gather map: global node index of each local node.
    pub elements: Vec<[usize; 9]>,
    /// Sorted indices of nodes on the boundary.
    pub boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
}

pub fn build_rect_mesh(width: f64, height: f64, nx: usize, ny: usize) -> Result<QuadMesh> {
    if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
        return Err(invalid(format!(
            "rectangle sides must be positive, got {width} x {height}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(invalid("element counts must be at least 1"));
    }
    let (gx, gy) = (2 * nx + 1, 2 * ny + 1);
    let mut node_coords = Vec::with_capacity(gx * gy);
    let mut is_boundary = Vec::with_capacity(gx * gy);
    for j in 0..gy {
        // exact endpoints: j = 0 -> 0, j = gy-1 -> height
        let y = if j == gy - 1 {
            height
        } else {
            height * j as f64 / (gy - 1) as f64
        };
        for i in 0..gx {
            let x = if i == gx - 1 {
                width
            } else {
                width * i as f64 / (gx - 1) as f64
            };
            node_coords.push([x, y]);
            is_boundary.push(i == 0 || j == 0 || i == gx - 1 || j == gy - 1);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for ey in 0..ny {
        for ex in 0..nx {
            let mut el = [0usize; 9];
            for b in 0..3 {
                for a in 0..3 {
                    el[3 * b + a] = (2 * ey + b) * gx + (2 * ex + a);
                }
            }
            elements.push(el);
        }
    }
    let boundary_nodes = (0..is_boundary.len()).filter(|&i| is_boundary[i]).collect();
    Ok(QuadMesh {
        width,
        height,
        nx,
        ny,
        node_coords,
        elements,
        boundary_nodes,
        is_boundary,
    })
}

impl QuadMesh {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.is_boundary
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Element side lengths `(hx, hy)`.
    pub fn element_size(&self) -> (f64, f64) {
        (self.width / self.nx as f64, self.height / self.ny as f64)
    }

    /// Jacobian determinant of the reference-to-element map.
    pub fn jacobian_det(&self) -> f64 {
        let (hx, hy) = self.element_size();
        0.25 * hx * hy
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        self.node_coords[self.elements[e][0]]
    }

    /// Map reference coordinates of element `e` to physical coordinates.
    pub fn to_physical(&self, e: usize, xi: f64, eta: f64) -> [f64; 2] {
        let o = self.element_origin(e);
        let (hx, hy) = self.element_size();
        [o[0] + 0.5 * (xi + 1.0) * hx, o[1] + 0.5 * (eta + 1.0) * hy]
    }

    /// Nodal interpolant of a function of `(x, y)`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> NodalField {
        NodalField::from(
            self.node_coords
                .iter()
                .map(|c| f(c[0], c[1]))
                .collect::<Vec<_>>(),
        )
    }

    /// Interpolant with boundary values forced to zero.
    pub fn interpolate_dirichlet(&self, f: impl Fn(f64, f64) -> f64) -> NodalField {
        let mut u = self.interpolate(f);
        for &b in &self.boundary_nodes {
            u[b] = 0.0;
        }
        u
    }

    /// Value of the finite element function `u` at reference point
    /// `(xi, eta)` of element `e`.
    pub fn eval_in_element(&self, u: &[f64], e: usize, xi: f64, eta: f64) -> f64 {
        let n = q9_shape(xi, eta);
        self.elements[e]
            .iter()
            .zip(n.iter())
            .map(|(&g, &ni)| u[g] * ni)
            .sum()
    }

    fn check_field(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.num_nodes() {
            return Err(invalid(format!(
                "field has {} values but mesh has {} nodes",
                u.len(),
                self.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Physical gradients of the shape functions at every quadrature point.
fn physical_grads(mesh: &QuadMesh, reference: &ReferenceElement) -> Vec<[[f64; 2]; 9]> {
    let (hx, hy) = mesh.element_size();
    let (sx, sy) = (2.0 / hx, 2.0 / hy);
    reference
        .shape_grads
        .iter()
        .map(|g| {
            let mut out = [[0.0; 2]; 9];
            for i in 0..9 {
                out[i] = [g[i][0] * sx, g[i][1] * sy];
            }
            out
        })
        .collect()
}

fn element_stiffness(mesh: &QuadMesh, reference: &ReferenceElement) -> [[f64; 9]; 9] {
    let det = mesh.jacobian_det();
    let grads = physical_grads(mesh, reference);
    let mut ke = [[0.0; 9]; 9];
    for a in 0..9 {
        for b in a..9 {
            let mut s = 0.0;
            for (q, g) in grads.iter().enumerate() {
                s += reference.quad_weights[q] * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
            ke[a][b] = s * det;
            ke[b][a] = ke[a][b];
        }
    }
    ke
}

fn element_mass(mesh: &QuadMesh, reference: &ReferenceElement) -> [[f64; 9]; 9] {
    let det = mesh.jacobian_det();
    let mut me = [[0.0; 9]; 9];
    for a in 0..9 {
        for b in a..9 {
            let mut s = 0.0;
            for (q, n) in reference.shape_values.iter().enumerate() {
                s += reference.quad_weights[q] * n[a] * n[b];
            }
            me[a][b] = s * det;
            me[b][a] = me[a][b];
        }
    }
    me
}

fn assemble_uniform(mesh: &QuadMesh, ke: &[[f64; 9]; 9]) -> SparseSymMatrix {
    let mut trip = Vec::with_capacity(81 * mesh.num_elements());
    for el in &mesh.elements {
        for a in 0..9 {
            for b in 0..9 {
                trip.push((el[a], el[b], ke[a][b]));
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.num_nodes(), &trip)
}

/// Global stiffness `K = Σ_e Lᵉᵀ Kᵉ Lᵉ` with `Kᵉ = ∫ Bᵀ B`.
pub fn assemble_stiffness(mesh: &QuadMesh) -> SparseSymMatrix {
    let reference = reference_q9(DEFAULT_QUAD_ORDER).expect("default order is valid");
    assemble_stiffness_with(mesh, &reference)
}

pub fn assemble_stiffness_with(mesh: &QuadMesh, reference: &ReferenceElement) -> SparseSymMatrix {
    assemble_uniform(mesh, &element_stiffness(mesh, reference))
}

/// Consistent mass matrix `M_ij = ∫ N_i N_j`.
pub fn assemble_mass(mesh: &QuadMesh) -> SparseSymMatrix {
    let reference = reference_q9(DEFAULT_QUAD_ORDER).expect("default order is valid");
    assemble_mass_with(mesh, &reference)
}

pub fn assemble_mass_with(mesh: &QuadMesh, reference: &ReferenceElement) -> SparseSymMatrix {
    assemble_uniform(mesh, &element_mass(mesh, reference))
}

/// Nonlinear load `f_i = ∫ N_i (N d)^q`.
///
/// Negative interpolated values are clamped to zero before exponentiation,
/// so `q = 0` yields `∫ N_i` for any `u`.
pub fn assemble_power_load(mesh: &QuadMesh, u: &[f64], q: f64) -> Result<NodalField> {
    let reference = reference_q9(DEFAULT_QUAD_ORDER)?;
    assemble_power_load_with(mesh, &reference, u, q)
}

pub fn assemble_power_load_with(
    mesh: &QuadMesh,
    reference: &ReferenceElement,
    u: &[f64],
    q: f64,
) -> Result<NodalField> {
    mesh.check_field(u)?;
    if !(q >= 0.0) || !q.is_finite() {
        return Err(invalid(format!("load exponent must be >= 0, got {q}")));
    }
    let det = mesh.jacobian_det();
    let mut f = vec![0.0; mesh.num_nodes()];
    for el in &mesh.elements {
        let mut fe = [0.0; 9];
        for (qp, n) in reference.shape_values.iter().enumerate() {
            let uh: f64 = (0..9).map(|a| n[a] * u[el[a]]).sum();
            let s = reference.quad_weights[qp] * det * clamped_pow(uh, q);
            for a in 0..9 {
                fe[a] += n[a] * s;
            }
        }
        for a in 0..9 {
            f[el[a]] += fe[a];
        }
    }
    Ok(NodalField::from(f))
}

#[inline]
pub(crate) fn clamped_pow(u: f64, q: f64) -> f64 {
    let u = u.max(0.0);
    if q == 0.0 {
        1.0
    } else if q == 1.0 {
        u
    } else {
        u.powf(q)
    }
}

/// Which integral [`integrate_field`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldIntegral {
    /// `∫ |∇u|²`
    DirichletEnergy,
    /// `∫ |u|^p`
    PNormPower(f64),
}

/// Quadrature evaluation of `∫|∇u|²` or `∫|u|^p` over the mesh.
pub fn integrate_field(mesh: &QuadMesh, u: &[f64], kind: FieldIntegral) -> Result<f64> {
    let reference = reference_q9(DEFAULT_QUAD_ORDER)?;
    integrate_field_with(mesh, &reference, u, kind)
}

pub fn integrate_field_with(
    mesh: &QuadMesh,
    reference: &ReferenceElement,
    u: &[f64],
    kind: FieldIntegral,
) -> Result<f64> {
    mesh.check_field(u)?;
    let det = mesh.jacobian_det();
    let mut total = 0.0;
    match kind {
        FieldIntegral::DirichletEnergy => {
            let grads = physical_grads(mesh, reference);
            for el in &mesh.elements {
                for (qp, g) in grads.iter().enumerate() {
                    let (mut gx, mut gy) = (0.0, 0.0);
                    for a in 0..9 {
                        gx += g[a][0] * u[el[a]];
                        gy += g[a][1] * u[el[a]];
                    }
                    total += reference.quad_weights[qp] * det * (gx * gx + gy * gy);
                }
            }
        }
        FieldIntegral::PNormPower(p) => {
            if !(p >= 1.0) {
                return Err(invalid(format!("p-norm exponent must be >= 1, got {p}")));
            }
            for el in &mesh.elements {
                for (qp, n) in reference.shape_values.iter().enumerate() {
                    let uh: f64 = (0..9).map(|a| n[a] * u[el[a]]).sum();
                    total += reference.quad_weights[qp] * det * uh.abs().powf(p);
                }
            }
        }
    }
    Ok(total)
}

/// `|a + d|^p − |a|^p` without cancellation when `d` is small next to `a`.
pub(crate) fn power_difference(a: f64, d: f64, p: f64) -> f64 {
    let ratio = d / a;
    if a != 0.0 && ratio > -1.0 && ratio.is_finite() {
        a.abs().powf(p) * (p * ratio.ln_1p()).exp_m1()
    } else {
        (a + d).abs().powf(p) - a.abs().powf(p)
    }
}

/// `∫ |u + d|^p − |u|^p`, accurate when `d` is small next to `u`.
pub fn p_norm_power_change(
    mesh: &QuadMesh,
    reference: &ReferenceElement,
    u: &[f64],
    d: &[f64],
    p: f64,
) -> Result<f64> {
    mesh.check_field(u)?;
    mesh.check_field(d)?;
    if !(p >= 1.0) {
        return Err(invalid(format!("p-norm exponent must be >= 1, got {p}")));
    }
    let det = mesh.jacobian_det();
    let mut total = 0.0;
    for el in &mesh.elements {
        for (qp, n) in reference.shape_values.iter().enumerate() {
            let uh: f64 = (0..9).map(|a| n[a] * u[el[a]]).sum();
            let dh: f64 = (0..9).map(|a| n[a] * d[el[a]]).sum();
            total += reference.quad_weights[qp] * det * power_difference(uh, dh, p);
        }
    }
    Ok(total)
}

/// Linear system restricted to the unconstrained nodes.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: SparseSymMatrix,
    pub rhs: Vec<f64>,
    /// Full-system index of each reduced unknown.
    pub free: Vec<usize>,
    pub full_dim: usize,
}

impl ReducedSystem {
    /// Re-embed a reduced solution, writing zeros on constrained nodes.
    pub fn embed(&self, reduced: &[f64]) -> NodalField {
        embed(self.full_dim, &self.free, reduced)
    }
}

pub(crate) fn embed(full_dim: usize, free: &[usize], reduced: &[f64]) -> NodalField {
    let mut out = vec![0.0; full_dim];
    for (&g, &v) in free.iter().zip(reduced) {
        out[g] = v;
    }
    NodalField::from(out)
}

pub(crate) fn reduce_system(
    k: &SparseSymMatrix,
    f: &[f64],
    constrained: &[bool],
) -> Result<ReducedSystem> {
    if k.dim() != f.len() || k.dim() != constrained.len() {
        return Err(invalid("inconsistent system dimensions"));
    }
    let free: Vec<usize> = (0..k.dim()).filter(|&i| !constrained[i]).collect();
    Ok(ReducedSystem {
        matrix: k.restrict(&free),
        rhs: free.iter().map(|&i| f[i]).collect(),
        free,
        full_dim: k.dim(),
    })
}

/// Eliminate homogeneous Dirichlet rows and columns.
pub fn apply_dirichlet(k: &SparseSymMatrix, f: &[f64], mesh: &QuadMesh) -> Result<ReducedSystem> {
    reduce_system(k, f, mesh.boundary_mask())
}
