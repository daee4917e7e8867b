//! Gauss–Legendre rules and the tabulated nine-node reference element.

use crate::error::{invalid, Result};

/// Gauss–Legendre points and weights on [-1, 1], ascending.
///
/// Nodes come from Newton iteration on the Legendre polynomial, which is
/// accurate to machine precision for the small orders used here.
pub fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 1 {
        return Err(invalid("quadrature order must be at least 1"));
    }
    let n = order;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok((points, weights))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Quadratic Lagrange basis on the nodes -1, 0, 1.
#[inline]
pub fn lagrange3(s: f64) -> [f64; 3] {
    [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)]
}

#[inline]
pub fn lagrange3_deriv(s: f64) -> [f64; 3] {
    [s - 0.5, -2.0 * s, s + 0.5]
}

/// Reference coordinates of the nine nodes. Local node `3 * b + a` sits at
/// `(-1 + a, -1 + b)`, i.e. nodes are numbered row by row from the
/// bottom-left corner.
pub const Q9_NODES: [[f64; 2]; 9] = [
    [-1.0, -1.0],
    [0.0, -1.0],
    [1.0, -1.0],
    [-1.0, 0.0],
    [0.0, 0.0],
    [1.0, 0.0],
    [-1.0, 1.0],
    [0.0, 1.0],
    [1.0, 1.0],
];

/// Biquadratic shape function values at `(xi, eta)`.
pub fn q9_shape(xi: f64, eta: f64) -> [f64; 9] {
    let lx = lagrange3(xi);
    let ly = lagrange3(eta);
    let mut n = [0.0; 9];
    for b in 0..3 {
        for a in 0..3 {
            n[3 * b + a] = lx[a] * ly[b];
        }
    }
    n
}

/// Reference gradients `(dN/dxi, dN/deta)` at `(xi, eta)`.
pub fn q9_shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 9] {
    let lx = lagrange3(xi);
    let ly = lagrange3(eta);
    let dx = lagrange3_deriv(xi);
    let dy = lagrange3_deriv(eta);
    let mut g = [[0.0; 2]; 9];
    for b in 0..3 {
        for a in 0..3 {
            g[3 * b + a] = [dx[a] * ly[b], lx[a] * dy[b]];
        }
    }
    g
}

/// Nine-node element tabulated at a tensor Gauss rule.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub order: usize,
    pub quad_points: Vec<[f64; 2]>,
    pub quad_weights: Vec<f64>,
    pub shape_values: Vec<[f64; 9]>,
    pub shape_grads: Vec<[[f64; 2]; 9]>,
}

/// Tabulate the Q9 element on an `order x order` Gauss rule.
pub fn reference_q9(order: usize) -> Result<ReferenceElement> {
    let (pts, wts) = gauss_legendre(order)?;
    let mut quad_points = Vec::with_capacity(order * order);
    let mut quad_weights = Vec::with_capacity(order * order);
    for (j, &eta) in pts.iter().enumerate() {
        for (i, &xi) in pts.iter().enumerate() {
            quad_points.push([xi, eta]);
            quad_weights.push(wts[i] * wts[j]);
        }
    }
    let shape_values = quad_points.iter().map(|q| q9_shape(q[0], q[1])).collect();
    let shape_grads = quad_points
        .iter()
        .map(|q| q9_shape_grad(q[0], q[1]))
        .collect();
    Ok(ReferenceElement {
        order,
        quad_points,
        quad_weights,
        shape_values,
        shape_grads,
    })
}

impl ReferenceElement {
    pub fn num_points(&self) -> usize {
        self.quad_weights.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_monomials() {
        for order in 1..=8 {
            let (x, w) = gauss_legendre(order).unwrap();
            for deg in 0..(2 * order) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((approx - exact).abs() < 1e-14, "order {order} degree {deg}");
            }
        }
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn kronecker_property() {
        for (j, node) in Q9_NODES.iter().enumerate() {
            let n = q9_shape(node[0], node[1]);
            for (i, v) in n.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(*v, expect);
            }
        }
        assert_eq!(q9_shape(0.0, 0.0)[4], 1.0);
    }

    #[test]
    fn partition_of_unity() {
        let s: f64 = q9_shape(0.3, -0.7).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        let el = reference_q9(3).unwrap();
        for n in &el.shape_values {
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        for g in &el.shape_grads {
            let sx: f64 = g.iter().map(|d| d[0]).sum();
            let sy: f64 = g.iter().map(|d| d[1]).sum();
            assert!(sx.abs() < 1e-14 && sy.abs() < 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_reference_area() {
        let el = reference_q9(3).unwrap();
        assert_eq!(el.num_points(), 9);
        assert!((el.quad_weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (xi, eta, h) = (0.21, -0.43, 1e-6);
        let g = q9_shape_grad(xi, eta);
        let (xp, xm) = (q9_shape(xi + h, eta), q9_shape(xi - h, eta));
        let (yp, ym) = (q9_shape(xi, eta + h), q9_shape(xi, eta - h));
        for i in 0..9 {
            assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-8);
            assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-8);
        }
    }
}
