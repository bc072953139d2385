//! Small dense matrices and a partially pivoted LU factorization.
//!
//! Used for the element-local mass systems (at most a few dozen unknowns),
//! so everything here is row-major `Vec<f64>` without any blocking.

use crate::error::{Error, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "dense matrix data has wrong length");
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|v| v * factor).collect() }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.data.chunks_exact(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn lu(&self) -> Result<LuFactors> {
        LuFactors::factor(self)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `P A = L U` with unit-diagonal `L`, both stored in one array.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        let n = m.n;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= 1e-14 * scale {
                return Err(Error::SingularMatrix { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / d;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves `M X = B` for every column of `B` (each right-hand side is one `Vec`).
pub fn dense_solve(m: &DenseMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if let Some(bad) = rhs.iter().find(|b| b.len() != m.dim()) {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: bad.len() });
    }
    let lu = m.lu()?;
    Ok(rhs.iter().map(|b| lu.solve(b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_returns_rhs() {
        let x = dense_solve(&DenseMatrix::identity(3), &[vec![1.0, -2.0, 3.5]]).unwrap();
        assert_eq!(x[0], vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn permutation_needs_pivoting() {
        let m = DenseMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]);
        let x = dense_solve(&m, &[vec![1.0, 2.0]]).unwrap();
        assert!((x[0][0] - 2.0).abs() < 1e-15 && (x[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_rejected() {
        let m = DenseMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(m.lu(), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn random_spd_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        let g: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (0..n).map(|k| g[i * n + k] * g[j * n + k]).sum::<f64>();
            }
            m[(i, i)] += 1.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = &dense_solve(&m, &[b.clone()]).unwrap()[0];
        let r = m.matvec(x);
        let res = r.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-12 * bn, "residual {res}");
    }
}
