//! Right-preconditioned BiCGSTAB.

use crate::error::Result;
use crate::linalg::precond::{Identity, Ilu0, Jacobi, Preconditioner, PreconditionerKind};
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// `None` means `10 * n`.
    pub max_iter: Option<usize>,
    pub precond: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: None, precond: PreconditionerKind::Ilu0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    /// Preconditioner actually used (ILU(0) may fall back to Jacobi).
    pub precond: PreconditionerKind,
    /// Converged at the rounding floor `‖b − Ax‖ ≈ ε‖|A||x|‖` rather than at `tol`.
    pub at_rounding_floor: bool,
}

/// Recursive residuals beyond this multiple of `‖b‖` count as divergence.
const DIVERGENCE_FACTOR: f64 = 1e10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Smallest residual norm resolvable in double precision for this iterate:
/// `16 ε ‖ |A| |x| ‖₂`.
pub fn rounding_floor(a: &CsrMatrix, x: &[f64]) -> f64 {
    let s: f64 = (0..a.nrows())
        .map(|i| {
            let (c, v) = a.row(i);
            let r: f64 = c.iter().zip(v).map(|(&j, aij)| (aij * x[j]).abs()).sum();
            r * r
        })
        .sum();
    16.0 * f64::EPSILON * s.sqrt()
}

pub fn true_relative_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    let bn = norm(b);
    if bn == 0.0 {
        r
    } else {
        r / bn
    }
}

/// Solves `A x = b` starting from zero.
///
/// Stops when `‖b − Ax‖ ≤ tol ‖b‖`, checked on the true residual. If that
/// target lies below the rounding floor of the iterate (see [`rounding_floor`])
/// the solve is accepted at the floor and flagged in the report.
/// Gives up early once the recursive residual exceeds `1e10 ‖b‖`.
pub fn bicgstab(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolverReport)> {
    let n = a.nrows();
    if b.len() != n || a.ncols() != n {
        return Err(crate::Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if !(opts.tol > 0.0) {
        return Err(crate::Error::InvalidConfig(format!("solver tolerance must be positive (got {})", opts.tol)));
    }
    let (pc, used): (Box<dyn Preconditioner + Sync>, _) = match opts.precond {
        PreconditionerKind::None => (Box::new(Identity), PreconditionerKind::None),
        PreconditionerKind::Jacobi => (Box::new(Jacobi::new(a)), PreconditionerKind::Jacobi),
        PreconditionerKind::Ilu0 => match Ilu0::factor(a) {
            Ok(f) => (Box::new(f), PreconditionerKind::Ilu0),
            Err(e) => {
                log::warn!("ILU(0) failed ({e}); falling back to Jacobi");
                (Box::new(Jacobi::new(a)), PreconditionerKind::Jacobi)
            }
        },
    };
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, SolverReport { iterations: 0, relative_residual: 0.0, converged: true, precond: used, at_rounding_floor: false }));
    }

    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut iterations = 0;
    let mut restarts = 0;

    while iterations < max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // breakdown: restart from the true residual once, otherwise give up
            if restarts >= 3 {
                break;
            }
            restarts += 1;
            let ax = a.matvec(&x);
            r.iter_mut().zip(b).zip(&ax).for_each(|((ri, bi), ai)| *ri = bi - ai);
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pc.apply(&p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for i in 0..n {
            x[i] += alpha * p_hat[i];
            r[i] -= alpha * v[i];
        }
        if norm(&r) <= opts.tol * bnorm {
            if let Some(floor) = check(a, b, &mut x, &mut r, &mut r_hat, bnorm, opts.tol) {
                let res = true_relative_residual(a, b, &x);
                return Ok((x, SolverReport { iterations, relative_residual: res, converged: true, precond: used, at_rounding_floor: floor }));
            }
        }
        let rn = norm(&r);
        if !rn.is_finite() || rn > DIVERGENCE_FACTOR * bnorm {
            log::debug!("BiCGSTAB diverged after {iterations} iterations");
            break;
        }
        pc.apply(&r, &mut s_hat);
        a.matvec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &r) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        if norm(&r) <= opts.tol * bnorm {
            if let Some(floor) = check(a, b, &mut x, &mut r, &mut r_hat, bnorm, opts.tol) {
                let res = true_relative_residual(a, b, &x);
                return Ok((x, SolverReport { iterations, relative_residual: res, converged: true, precond: used, at_rounding_floor: floor }));
            }
        }
    }
    let res = true_relative_residual(a, b, &x);
    let at_floor = res > opts.tol && res * bnorm <= rounding_floor(a, &x);
    let converged = res <= opts.tol || at_floor;
    Ok((x, SolverReport { iterations, relative_residual: res, converged, precond: used, at_rounding_floor: at_floor }))
}

/// Confirms convergence with the true residual; `Some(at_floor)` on success.
/// On a false alarm the recursive residual is replaced by the true one and
/// the shadow vector is reset.
fn check(a: &CsrMatrix, b: &[f64], x: &mut [f64], r: &mut [f64], r_hat: &mut [f64], bnorm: f64, tol: f64) -> Option<bool> {
    let ax = a.matvec(x);
    r.iter_mut().zip(b).zip(&ax).for_each(|((ri, bi), ai)| *ri = bi - ai);
    let rn = norm(r);
    if rn <= tol * bnorm {
        return Some(false);
    }
    if rn <= rounding_floor(a, x) {
        return Some(true);
    }
    r_hat.copy_from_slice(r);
    None
}
