//! Lagrange nodal basis of total degree `k` on the reference triangle.
//!
//! Nodes are the lattice points `(i/k, j/k)`: vertices first, then edge nodes
//! (edges 0→1, 1→2, 2→0), then interior nodes. The basis is obtained by
//! inverting the monomial Vandermonde matrix, so any `k` works the same way;
//! the solver is exercised with `k = 1, 2`. Degree 0 is the constant
//! function, used only for piecewise-constant projections.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Highest degree accepted by [`ReferenceBasis::new`].
pub const MAX_DEGREE: usize = 3;

pub type Gradient = [f64; 2];
pub type Hessian = [[f64; 2]; 2];

#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// `coeffs[m * n + j]`: coefficient of monomial `m` in shape function `j`.
    coeffs: Vec<f64>,
}

/// Basis tables at a list of points, point-major: entry `[q * n_loc + i]`.
#[derive(Debug, Clone)]
pub struct BasisTables {
    pub n_points: usize,
    pub n_loc: usize,
    pub values: Vec<f64>,
    /// Empty unless derivatives of order >= 1 were requested.
    pub gradients: Vec<Gradient>,
    /// Empty unless derivatives of order 2 were requested.
    pub hessians: Vec<Hessian>,
}

impl BasisTables {
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n_loc + i]
    }

    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_loc..(q + 1) * self.n_loc]
    }

    pub fn gradients_at(&self, q: usize) -> &[Gradient] {
        &self.gradients[q * self.n_loc..(q + 1) * self.n_loc]
    }

    pub fn hessians_at(&self, q: usize) -> &[Hessian] {
        &self.hessians[q * self.n_loc..(q + 1) * self.n_loc]
    }
}

pub fn n_loc(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

fn lattice_nodes(k: usize) -> Vec<[f64; 2]> {
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    let kf = k as f64;
    let p = |i: usize, j: usize| [i as f64 / kf, j as f64 / kf];
    let mut nodes = vec![p(0, 0), p(k, 0), p(0, k)];
    nodes.extend((1..k).map(|t| p(t, 0)));
    nodes.extend((1..k).map(|t| p(k - t, t)));
    nodes.extend((1..k).map(|t| p(0, k - t)));
    for j in 1..k {
        for i in 1..k - j {
            nodes.push(p(i, j));
        }
    }
    nodes
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let nodes = lattice_nodes(degree);
        let exponents: Vec<(i32, i32)> =
            (0..=degree as i32).flat_map(|d| (0..=d).map(move |b| (d - b, b))).collect();
        let n = nodes.len();
        debug_assert_eq!(n, exponents.len());
        let mut v = DenseMatrix::zeros(n);
        for (i, x) in nodes.iter().enumerate() {
            for (m, &(a, b)) in exponents.iter().enumerate() {
                v[(i, m)] = x[0].powi(a) * x[1].powi(b);
            }
        }
        // V C = I, column j of C holds shape function j
        let lu = v.lu()?;
        let mut coeffs = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            lu.solve_in_place(&mut e);
            for m in 0..n {
                coeffs[m * n + j] = e[m];
            }
        }
        Ok(Self { degree, nodes, exponents, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_loc(&self) -> usize {
        self.nodes.len()
    }

    /// Interpolation nodes on the reference triangle.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Values and derivatives up to `deriv_order` (0, 1 or 2) at `points`.
    pub fn eval(&self, points: &[[f64; 2]], deriv_order: usize) -> BasisTables {
        let n = self.n_loc();
        let np = points.len();
        let mut values = vec![0.0; np * n];
        let mut gradients = if deriv_order >= 1 { vec![[0.0; 2]; np * n] } else { Vec::new() };
        let mut hessians = if deriv_order >= 2 { vec![[[0.0; 2]; 2]; np * n] } else { Vec::new() };
        let pw = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
        for (q, x) in points.iter().enumerate() {
            for (m, &(a, b)) in self.exponents.iter().enumerate() {
                let (af, bf) = (a as f64, b as f64);
                let val = pw(x[0], a) * pw(x[1], b);
                let dx = af * pw(x[0], a - 1) * pw(x[1], b);
                let dy = bf * pw(x[0], a) * pw(x[1], b - 1);
                let dxx = af * (af - 1.0) * pw(x[0], a - 2) * pw(x[1], b);
                let dxy = af * bf * pw(x[0], a - 1) * pw(x[1], b - 1);
                let dyy = bf * (bf - 1.0) * pw(x[0], a) * pw(x[1], b - 2);
                for j in 0..n {
                    let c = self.coeffs[m * n + j];
                    if c == 0.0 {
                        continue;
                    }
                    values[q * n + j] += c * val;
                    if deriv_order >= 1 {
                        let g = &mut gradients[q * n + j];
                        g[0] += c * dx;
                        g[1] += c * dy;
                    }
                    if deriv_order >= 2 {
                        let h = &mut hessians[q * n + j];
                        h[0][0] += c * dxx;
                        h[0][1] += c * dxy;
                        h[1][0] += c * dxy;
                        h[1][1] += c * dyy;
                    }
                }
            }
        }
        BasisTables { n_points: np, n_loc: n, values, gradients, hessians }
    }
}

/// Tables for degree `k` at `points`; `k` must be 1 or 2.
pub fn eval_basis(k: usize, points: &[[f64; 2]], deriv_order: usize) -> Result<BasisTables> {
    if !(1..=2).contains(&k) {
        return Err(Error::UnsupportedDegree(k));
    }
    Ok(ReferenceBasis::new(k)?.eval(points, deriv_order))
}
