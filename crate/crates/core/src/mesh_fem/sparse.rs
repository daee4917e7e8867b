//! Compressed sparse row storage for symmetric matrices and a Jacobi
//! preconditioned conjugate gradient solver.

use crate::error::{invalid, Error, Result};

/// Default relative residual for [`solve_spd`].
pub const DEFAULT_LINEAR_TOL: f64 = 1e-10;

/// Symmetric matrix stored in full CSR form (both triangles).
///
/// Entries are summed in insertion order, so two assemblies from the same
/// element loop produce bit-identical matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed in the
    /// order they appear.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: duplicates keep insertion order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 4);
        let mut values = Vec::with_capacity(triplets.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            debug_assert!(r < dim && c < dim);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let trip: Vec<_> = diag.iter().enumerate().map(|(i, &d)| (i, i, d)).collect();
        Self::from_triplets(diag.len(), &trip)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries `(col, value)` of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let mut total = 0.0;
        for r in 0..self.dim {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * y[self.col_idx[k]];
            }
            total += x[r] * s;
        }
        total
    }

    /// Sum of all stored entries.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Multiply every entry by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Exact entrywise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Principal submatrix on the listed (ascending) indices.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old in keep {
            for (c, v) in self.row(old) {
                if map[c] != usize::MAX {
                    col_idx.push(map[c]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Result of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖f − Kx‖ / ‖f‖` of the returned iterate.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `K x = f` for SPD `K` to relative residual `tol`, with the default
/// iteration cap of ten times the dimension.
pub fn solve_spd(k: &SparseSymMatrix, f: &[f64], tol: f64) -> Result<Vec<f64>> {
    pcg(k, f, None, tol, 10 * k.dim().max(1)).map(|s| s.x)
}

/// Jacobi-preconditioned conjugate gradients with an optional starting
/// iterate. The returned residual is recomputed from scratch, and the
/// iteration restarts if the recursive residual has drifted.
pub fn pcg(
    k: &SparseSymMatrix,
    f: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = k.dim();
    if f.len() != n {
        return Err(invalid(format!("rhs length {} != dimension {n}", f.len())));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let f_norm = norm(f);
    if f_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = k
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let mut kp = vec![0.0; n];
    let mut iterations = 0;

    loop {
        // (re)start from the true residual
        k.mul_vec_into(&x, &mut kp);
        let mut r: Vec<f64> = f.iter().zip(&kp).map(|(f, a)| f - a).collect();
        let true_res = norm(&r) / f_norm;
        if true_res <= tol {
            return Ok(CgSolution {
                x,
                iterations,
                residual: true_res,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: true_res,
            });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            k.mul_vec_into(&p, &mut kp);
            let pkp = dot(&p, &kp);
            if !(pkp > 0.0) {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: norm(&r) / f_norm,
                });
            }
            let alpha = rz / pkp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            if norm(&r) / f_norm <= 0.5 * tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicates_sum_and_rows_sorted() {
        let m = SparseSymMatrix::from_triplets(
            3,
            &[
                (2, 0, 1.0),
                (0, 0, 1.0),
                (0, 2, 1.0),
                (0, 0, 2.0),
                (1, 1, 5.0),
            ],
        );
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(2, 1), 0.0);
        assert!(m.is_symmetric());
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 5.0, 1.0]);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let k = SparseSymMatrix::from_diagonal(&[2.0, 3.0]);
        assert_eq!(solve_spd(&k, &[0.0, 0.0], 1e-10).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn diagonal_solve() {
        let k = SparseSymMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        let x = solve_spd(&k, &[1.0, 1.0, 1.0], 1e-12).unwrap();
        for (xi, want) in x.iter().zip([0.5, 0.25, 0.125]) {
            assert!((xi - want).abs() < 1e-14);
        }
    }

    #[test]
    fn random_spd_recovers_known_solution() {
        // K = AᵀA + n I is SPD; construct f := K d* and solve
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| a[k][i] * a[k][j]).sum();
                if i == j {
                    s += n as f64;
                }
                trip.push((i, j, s));
            }
        }
        let k = SparseSymMatrix::from_triplets(n, &trip);
        let d_star: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = k.mul_vec(&d_star);
        let sol = pcg(&k, &f, None, 1e-12, 500).unwrap();
        assert!(sol.residual <= 1e-12);
        let err = d_star
            .iter()
            .zip(&sol.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let n = 30;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let k = SparseSymMatrix::from_triplets(n, &trip);
        let f = vec![1.0; n];
        match pcg(&k, &f, None, 1e-14, 2) {
            Err(Error::NoConvergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("expected no-convergence, got {other:?}"),
        }
    }

    #[test]
    fn restriction_keeps_principal_block() {
        let k = SparseSymMatrix::from_triplets(
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 0, 2.0),
                (1, 1, 3.0),
                (2, 2, 4.0),
                (1, 2, 5.0),
                (2, 1, 5.0),
            ],
        );
        let r = k.restrict(&[1, 2]);
        assert_eq!(r.dim(), 2);
        assert_eq!(r.get(0, 0), 3.0);
        assert_eq!(r.get(0, 1), 5.0);
        assert_eq!(r.get(1, 1), 4.0);
    }
}
