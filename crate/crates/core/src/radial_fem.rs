//! Quadratic finite elements on `[0, 1]` with the volume weight `r^(n-1)`
//! of an `n`-dimensional ball, for radially symmetric problems.
//!
//! Integrals here omit the sphere-area factor `n ω_n`; see
//! [`crate::space::RadialSpace`] for the physically scaled versions.

use crate::error::{invalid, Result};
use crate::field::NodalField;
use crate::mesh_fem::{
    clamped_pow, gauss_legendre, lagrange3, lagrange3_deriv, power_difference, SparseSymMatrix,
};

/// Gauss points per radial element; exact for polynomial integrands up to
/// degree 9 (quadratic-by-quadratic products against `r^(n-1)`, `n <= 6`).
pub const RADIAL_GAUSS_POINTS: usize = 5;

#[derive(Debug, Clone)]
pub struct RadialMesh {
    /// Ambient dimension.
    pub n: usize,
    pub nr: usize,
    pub node_coords: Vec<f64>,
    pub elements: Vec<[usize; 3]>,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
}

/// Uniform mesh of `nr` quadratic elements on `[0, 1]`.
pub fn build_radial_mesh(n: usize, nr: usize) -> Result<RadialMesh> {
    if n < 2 {
        return Err(invalid(format!("ball dimension must be >= 2, got {n}")));
    }
    if nr == 0 {
        return Err(invalid("radial element count must be at least 1"));
    }
    let nn = 2 * nr + 1;
    let node_coords = (0..nn)
        .map(|i| {
            if i == nn - 1 {
                1.0
            } else {
                i as f64 / (nn - 1) as f64
            }
        })
        .collect();
    let elements = (0..nr).map(|e| [2 * e, 2 * e + 1, 2 * e + 2]).collect();
    let (quad_points, quad_weights) = gauss_legendre(RADIAL_GAUSS_POINTS)?;
    Ok(RadialMesh {
        n,
        nr,
        node_coords,
        elements,
        quad_points,
        quad_weights,
    })
}

impl RadialMesh {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    /// Index of the single constrained node, `r = 1`.
    pub fn boundary_node(&self) -> usize {
        self.num_nodes() - 1
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.num_nodes()];
        m[self.boundary_node()] = true;
        m
    }

    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> NodalField {
        NodalField::from(self.node_coords.iter().map(|&r| f(r)).collect::<Vec<_>>())
    }

    fn element_span(&self, e: usize) -> (f64, f64) {
        let el = self.elements[e];
        let a = self.node_coords[el[0]];
        (a, self.node_coords[el[2]] - a)
    }

    /// Value of `u` at reference coordinate `xi` of element `e`.
    pub fn eval_in_element(&self, u: &[f64], e: usize, xi: f64) -> f64 {
        let l = lagrange3(xi);
        let el = self.elements[e];
        l[0] * u[el[0]] + l[1] * u[el[1]] + l[2] * u[el[2]]
    }

    /// Value of `u` at radius `r ∈ [0, 1]`.
    pub fn eval(&self, u: &[f64], r: f64) -> f64 {
        let r = r.clamp(0.0, 1.0);
        let e = ((r * self.nr as f64) as usize).min(self.nr - 1);
        let (a, h) = self.element_span(e);
        self.eval_in_element(u, e, 2.0 * (r - a) / h - 1.0)
    }

    /// Quadrature points of element `e`: `(N, dN/dr, weight · r^(n-1))`.
    pub(crate) fn quad_data(
        &self,
        e: usize,
    ) -> impl Iterator<Item = ([f64; 3], [f64; 3], f64)> + '_ {
        let (a, h) = self.element_span(e);
        let pow = (self.n - 1) as i32;
        self.quad_points
            .iter()
            .zip(&self.quad_weights)
            .map(move |(&xi, &w)| {
                let r = a + 0.5 * (xi + 1.0) * h;
                let d = lagrange3_deriv(xi);
                let dr = [d[0] * 2.0 / h, d[1] * 2.0 / h, d[2] * 2.0 / h];
                (lagrange3(xi), dr, w * 0.5 * h * r.powi(pow))
            })
    }

    fn check_field(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.num_nodes() {
            return Err(invalid(format!(
                "field has {} values but radial mesh has {} nodes",
                u.len(),
                self.num_nodes()
            )));
        }
        Ok(())
    }
}

fn assemble_radial_matrix(mesh: &RadialMesh, stiffness: bool) -> SparseSymMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.nr);
    for (e, el) in mesh.elements.iter().enumerate() {
        let mut ke = [[0.0; 3]; 3];
        for (n, dn, w) in mesh.quad_data(e) {
            let basis = if stiffness { dn } else { n };
            for a in 0..3 {
                for b in a..3 {
                    ke[a][b] += w * basis[a] * basis[b];
                }
            }
        }
        for a in 0..3 {
            for b in 0..a {
                ke[a][b] = ke[b][a];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                trip.push((el[a], el[b], ke[a][b]));
            }
        }
    }
    SparseSymMatrix::from_triplets(mesh.num_nodes(), &trip)
}

/// `K_ij = ∫₀¹ N_i' N_j' r^(n-1) dr`.
pub fn assemble_radial_stiffness(mesh: &RadialMesh) -> SparseSymMatrix {
    assemble_radial_matrix(mesh, true)
}

/// `M_ij = ∫₀¹ N_i N_j r^(n-1) dr`.
pub fn assemble_radial_mass(mesh: &RadialMesh) -> SparseSymMatrix {
    assemble_radial_matrix(mesh, false)
}

/// `f_i = ∫₀¹ N_i max(u, 0)^q r^(n-1) dr`.
pub fn assemble_radial_power_load(mesh: &RadialMesh, u: &[f64], q: f64) -> Result<NodalField> {
    mesh.check_field(u)?;
    if !(q >= 0.0) || !q.is_finite() {
        return Err(invalid(format!("load exponent must be >= 0, got {q}")));
    }
    let mut f = vec![0.0; mesh.num_nodes()];
    for (e, el) in mesh.elements.iter().enumerate() {
        let mut fe = [0.0; 3];
        for (n, _, w) in mesh.quad_data(e) {
            let uh = n[0] * u[el[0]] + n[1] * u[el[1]] + n[2] * u[el[2]];
            let s = w * clamped_pow(uh, q);
            for a in 0..3 {
                fe[a] += n[a] * s;
            }
        }
        for a in 0..3 {
            f[el[a]] += fe[a];
        }
    }
    Ok(NodalField::from(f))
}

/// `∫₀¹ |u|^p r^(n-1) dr` by quadrature.
pub fn radial_p_norm_power(mesh: &RadialMesh, u: &[f64], p: f64) -> Result<f64> {
    mesh.check_field(u)?;
    if !(p >= 1.0) {
        return Err(invalid(format!("p-norm exponent must be >= 1, got {p}")));
    }
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for (n, _, w) in mesh.quad_data(e) {
            let uh = n[0] * u[el[0]] + n[1] * u[el[1]] + n[2] * u[el[2]];
            total += w * uh.abs().powf(p);
        }
    }
    Ok(total)
}

/// `∫₀¹ (|u + d|^p − |u|^p) r^(n-1) dr`, accurate when `d` is small.
pub fn radial_p_norm_power_change(mesh: &RadialMesh, u: &[f64], d: &[f64], p: f64) -> Result<f64> {
    mesh.check_field(u)?;
    mesh.check_field(d)?;
    if !(p >= 1.0) {
        return Err(invalid(format!("p-norm exponent must be >= 1, got {p}")));
    }
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for (n, _, w) in mesh.quad_data(e) {
            let uh = n[0] * u[el[0]] + n[1] * u[el[1]] + n[2] * u[el[2]];
            let dh = n[0] * d[el[0]] + n[1] * d[el[1]] + n[2] * d[el[2]];
            total += w * power_difference(uh, dh, p);
        }
    }
    Ok(total)
}

/// `∫₀¹ u'² r^(n-1) dr` by quadrature.
pub fn radial_dirichlet_energy(mesh: &RadialMesh, u: &[f64]) -> Result<f64> {
    mesh.check_field(u)?;
    let mut total = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        for (_, dn, w) in mesh.quad_data(e) {
            let du = dn[0] * u[el[0]] + dn[1] * u[el[1]] + dn[2] * u[el[2]];
            total += w * du * du;
        }
    }
    Ok(total)
}

/// Volume of the unit ball in `R^n`, by `ω_n = 2π/n · ω_(n-2)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut w = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if n.is_multiple_of(2) { 2 } else { 3 };
    while k <= n {
        w *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    w
}

/// Radius of the superlevel set `{u > t}` on the unit ball and its volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperlevelBall {
    pub radius: f64,
    pub measure: f64,
}

/// Largest `r` with `u(r) > t`, found by scanning elements inward and
/// bisecting inside the outermost element that exceeds `t`.
pub fn radial_value_and_measure(mesh: &RadialMesh, u: &[f64], t: f64) -> Result<SuperlevelBall> {
    mesh.check_field(u)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!("level must lie in (0, 1), got {t}")));
    }
    let mut radius = 0.0;
    for e in (0..mesh.nr).rev() {
        let el = mesh.elements[e];
        let (u0, u1, u2) = (u[el[0]], u[el[1]], u[el[2]]);
        // u(ξ) = u1 + b ξ + c ξ²
        let b = 0.5 * (u2 - u0);
        let c = 0.5 * (u0 - 2.0 * u1 + u2);
        let mut xi_max = if u0 >= u2 { -1.0 } else { 1.0 };
        let mut max = u0.max(u2);
        if c < 0.0 {
            let v = -b / (2.0 * c);
            if v > -1.0 && v < 1.0 {
                let uv = u1 + b * v + c * v * v;
                if uv > max {
                    max = uv;
                    xi_max = v;
                }
            }
        }
        if max <= t {
            continue;
        }
        let (mut lo, mut hi) = (xi_max, 1.0);
        if mesh.eval_in_element(u, e, hi) > t {
            lo = hi;
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mesh.eval_in_element(u, e, mid) > t {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
        }
        let (a, h) = mesh.element_span(e);
        radius = a + 0.5 * (lo + 1.0) * h;
        break;
    }
    Ok(SuperlevelBall {
        radius,
        measure: unit_ball_volume(mesh.n) * radius.powi(mesh.n as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fem::pcg;
    use std::f64::consts::PI;

    #[test]
    fn node_counts() {
        assert_eq!(build_radial_mesh(4, 10).unwrap().num_nodes(), 21);
        let m = build_radial_mesh(2, 1).unwrap();
        assert_eq!(m.num_nodes(), 3);
        assert_eq!(m.boundary_mask(), vec![false, false, true]);
        assert_eq!(build_radial_mesh(3, 64).unwrap().num_nodes(), 129);
        assert!(build_radial_mesh(1, 4).is_err());
        assert!(build_radial_mesh(3, 0).is_err());
        let m = build_radial_mesh(3, 7).unwrap();
        assert_eq!(m.node_coords[0], 0.0);
        assert_eq!(*m.node_coords.last().unwrap(), 1.0);
        assert!(m.node_coords.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_integrals() {
        let m = build_radial_mesh(2, 5).unwrap();
        let k = assemble_radial_stiffness(&m);
        let ones = vec![1.0; m.num_nodes()];
        assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
        assert!((assemble_radial_mass(&m).total() - 0.5).abs() < 1e-14);

        // ∫₀¹ (2r)² r³ dr = 2/3
        let m = build_radial_mesh(4, 6).unwrap();
        let u = m.interpolate(|r| 1.0 - r * r);
        let k = assemble_radial_stiffness(&m);
        assert!(k.is_symmetric());
        assert!((k.quad_form(&u) - 2.0 / 3.0).abs() < 1e-12);
        // ∫₀¹ (1-r²)² r³ dr = 1/24
        let mm = assemble_radial_mass(&m);
        assert!((mm.quad_form(&u) - 1.0 / 24.0).abs() < 1e-12);
        assert!((radial_p_norm_power(&m, &u, 2.0).unwrap() - 1.0 / 24.0).abs() < 1e-12);
        // ∫₀¹ (1-r²) r³ dr = 1/12
        let f = assemble_radial_power_load(&m, &u, 0.0).unwrap();
        assert!((f.dot(&u) - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn torsion_profile_is_reproduced() {
        for n in [2usize, 3, 4] {
            let m = build_radial_mesh(n, 64).unwrap();
            let k = assemble_radial_stiffness(&m);
            let f = assemble_radial_power_load(&m, &vec![0.0; m.num_nodes()], 0.0).unwrap();
            let free: Vec<usize> = (0..m.num_nodes() - 1).collect();
            let kr = k.restrict(&free);
            let fr: Vec<f64> = free.iter().map(|&i| f[i]).collect();
            let d = pcg(&kr, &fr, None, 1e-11, 20 * free.len()).unwrap().x;
            let peak = d[0];
            for (i, &r) in m.node_coords[..m.num_nodes() - 1].iter().enumerate() {
                assert!((d[i] / peak - (1.0 - r * r)).abs() < 1e-8, "n={n} r={r}");
            }
            // Δu = -1 in n dimensions gives u(0) = 1/(2n)
            assert!((peak - 0.5 / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn superlevel_radius() {
        let m = build_radial_mesh(2, 16).unwrap();
        let u = m.interpolate(|r| 1.0 - r * r);
        let s = radial_value_and_measure(&m, &u, 0.75).unwrap();
        assert!((s.radius - 0.5).abs() < 1e-12);
        assert!((s.measure - PI / 4.0).abs() < 1e-12);
        let lo = radial_value_and_measure(&m, &u, 1e-9).unwrap();
        assert!((lo.measure - PI).abs() < 1e-7);
        let hi = radial_value_and_measure(&m, &u, 1.0 - 1e-12).unwrap();
        assert!(hi.measure < 1e-10);
        assert!(radial_value_and_measure(&m, &u, 0.0).is_err());
        assert!(radial_value_and_measure(&m, &u, 1.0).is_err());
    }
}
