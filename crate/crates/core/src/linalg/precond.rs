use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Which preconditioner BiCGSTAB applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    #[default]
    Ilu0,
    Jacobi,
    None,
}

impl std::str::FromStr for PreconditionerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ilu0" => Ok(Self::Ilu0),
            "jacobi" => Ok(Self::Jacobi),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidConfig(format!("unknown preconditioner '{other}'"))),
        }
    }
}

pub trait Preconditioner {
    /// `z = M^{-1} r`
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Incomplete LU with zero fill-in. `L` (unit diagonal) and `U` overwrite a copy
/// of the matrix values, so both factors live on the pattern of `A`.
pub struct Ilu0 {
    factors: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let mut f = a.clone();
        let row_ptr = f.row_ptr().to_vec();
        let col_idx = f.col_idx().to_vec();
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            match cols.binary_search(&i) {
                Ok(p) => diag_pos.push(row_ptr[i] + p),
                Err(_) => return Err(Error::SingularMatrix { pivot: i }),
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        // marker[j] = position of column j in the current row, or usize::MAX
        let mut marker = vec![usize::MAX; n];
        let vals = f.values_mut();
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                marker[col_idx[p]] = p;
            }
            for p in start..end {
                let k = col_idx[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag_pos[k]];
                let lik = vals[p] / pivot;
                vals[p] = lik;
                for q in diag_pos[k] + 1..row_ptr[k + 1] {
                    let m = marker[col_idx[q]];
                    if m != usize::MAX {
                        vals[m] -= lik * vals[q];
                    }
                }
            }
            if vals[diag_pos[i]].abs() <= 1e-14 * scale {
                return Err(Error::SingularMatrix { pivot: i });
            }
            for p in start..end {
                marker[col_idx[p]] = usize::MAX;
            }
        }
        Ok(Self { factors: f, diag_pos })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let rp = self.factors.row_ptr();
        let ci = self.factors.col_idx();
        let v = self.factors.values();
        for i in 0..n {
            let mut s = r[i];
            for p in rp[i]..self.diag_pos[i] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag_pos[i] + 1..rp[i + 1] {
                s -= v[p] * z[ci[p]];
            }
            z[i] = s / v[self.diag_pos[i]];
        }
    }
}
