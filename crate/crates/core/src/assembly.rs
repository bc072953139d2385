//! Global sparse systems for `-A : D²u = f` with weak Dirichlet conditions.
//!
//! Two interchangeable forms:
//!
//! * **eliminated** — `H` is removed with the elementwise projection
//!   `Φ = Π(ψ A)`, leaving a compact-stencil system in `u` only:
//!
//!   ```text
//!   B(u, ψ) = ∫ ∇_h u · div_h Φ − θ ∫_{E∪∂Ω} ⟦u⟧·{div_h Φ} − ∫_{E∪∂Ω} {∇_h u}·⟦Φ⟧ + σ ∫_{E∪∂Ω} h⁻¹ ⟦u⟧·⟦ψ⟧
//!   ```
//!
//! * **mixed** — the four Hessian components are kept as unknowns and
//!   coupled to `u` through the weak Hessian identity.

use std::str::FromStr;

use rayon::prelude::*;

use crate::blocks::{block_csr, BlockRow};
use crate::error::{Error, Result};
use crate::femspace::DgSpace;
use crate::hessian::{FluxChoice, HessianOperator, COMPONENTS};
use crate::linalg::{bicgstab, CsrMatrix, DenseMatrix, SolverOptions, SolverReport};
use crate::mesh::Point;
use crate::problems::{frobenius, CoefficientField, Matrix2};
use crate::projection::LocalProjector;

pub const DEFAULT_SIGMA: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormKind {
    #[default]
    Eliminated,
    Mixed,
}

impl FromStr for FormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eliminated" | "compact" => Ok(Self::Eliminated),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::InvalidConfig(format!("unknown form '{other}' (expected eliminated|mixed)"))),
        }
    }
}

/// Face weight of the jump penalty `σ h⁻¹ ⟦u⟧·⟦ψ⟧`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyScaling {
    /// `σ / h_e`.
    Uniform,
    /// `σ λ_e / h_e` with `λ_e` the largest eigenvalue of `sym(A)` over the
    /// face's quadrature points. Keeps the form coercive when `|A|` is large.
    #[default]
    Coefficient,
}

impl FromStr for PenaltyScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "coefficient" => Ok(Self::Coefficient),
            other => Err(Error::InvalidConfig(format!("unknown penalty scaling '{other}' (expected uniform|coefficient)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearFormConfig {
    pub sigma: f64,
    pub penalty_scaling: PenaltyScaling,
    pub flux: FluxChoice,
    /// Degree of the rule used for projections of `ψ A` and for the load
    /// vector; `None` uses the space's element rule.
    pub quad_degree: Option<usize>,
    pub form: FormKind,
}

impl Default for BilinearFormConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            penalty_scaling: PenaltyScaling::default(),
            flux: FluxChoice::default(),
            quad_degree: None,
            form: FormKind::Eliminated,
        }
    }
}

impl BilinearFormConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidSigma(self.sigma));
        }
        Ok(())
    }

    /// `σ h⁻¹`, weighted by `A` sampled at the face points when requested.
    fn penalty(&self, a: &CoefficientField, length: f64, points: &[Point]) -> f64 {
        let scale = match self.penalty_scaling {
            PenaltyScaling::Uniform => 1.0,
            PenaltyScaling::Coefficient => points.iter().map(|&x| max_eigenvalue(a.eval(x))).fold(0.0, f64::max),
        };
        self.sigma * scale / length
    }

    fn projector(&self, space: &DgSpace) -> Result<LocalProjector> {
        match self.quad_degree {
            Some(q) => LocalProjector::new(space.degree(), q),
            None => LocalProjector::for_space(space),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityStats {
    pub nnz: usize,
    /// `max |i - j|` over stored entries.
    pub max_bandwidth: usize,
    /// Largest number of distinct element blocks in one row.
    pub max_blocks_per_row: usize,
}

impl SparsityStats {
    /// `block` is the number of unknowns per element.
    pub fn compute(m: &CsrMatrix, block: usize) -> Self {
        let mut max_bandwidth = 0;
        let mut max_blocks_per_row = 0;
        for i in 0..m.nrows() {
            let (cols, _) = m.row(i);
            let mut blocks = 0;
            let mut last = usize::MAX;
            for &j in cols {
                max_bandwidth = max_bandwidth.max(i.abs_diff(j));
                if j / block != last {
                    blocks += 1;
                    last = j / block;
                }
            }
            max_blocks_per_row = max_blocks_per_row.max(blocks);
        }
        Self { nnz: m.nnz(), max_bandwidth, max_blocks_per_row }
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub stats: SparsityStats,
}

/// Largest eigenvalue of the symmetric part of `m`.
fn max_eigenvalue(m: Matrix2) -> f64 {
    let off = 0.5 * (m[0][1] + m[1][0]);
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    half_tr + half_diff.hypot(off)
}

/// `A` sampled at the projector's points of every element.
fn sample_coefficient(space: &DgSpace, proj: &LocalProjector, a: &CoefficientField, k: usize) -> Vec<Matrix2> {
    proj.quadrature_points(space.geometry(k)).into_iter().map(|x| a.eval(x)).collect()
}

/// `rhs_i = ∫ f φ_i`.
pub fn load_vector(
    space: &DgSpace,
    proj: &LocalProjector,
    f: impl Fn(Point) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    let blocks: Result<Vec<Vec<f64>>> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let g = space.geometry(k);
            let samples = proj.quadrature_points(g).into_iter().map(&f).collect::<Result<Vec<f64>>>()?;
            Ok(proj.moments(g, &samples))
        })
        .collect();
    Ok(blocks?.concat())
}

/// Evaluates `Σ_l c_l φ_l` and `Σ_l c_l ∇φ_l` from tabulated values.
fn combine(values: &[f64], grads: &[[f64; 2]], c: &[f64]) -> (f64, [f64; 2]) {
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for ((phi, dphi), ci) in values.iter().zip(grads).zip(c) {
        v += ci * phi;
        g[0] += ci * dphi[0];
        g[1] += ci * dphi[1];
    }
    (v, g)
}

fn eliminated_row_block(
    space: &DgSpace,
    proj: &LocalProjector,
    a: &CoefficientField,
    cfg: &BilinearFormConfig,
    r: usize,
) -> BlockRow {
    let mesh = space.mesh();
    let nloc = space.n_loc();
    let ctx = space.quad();
    let theta = cfg.flux.theta();
    let phis = proj.project_all_basis_times_matrix(&sample_coefficient(space, proj, a, r));
    let mut row = BlockRow::new(mesh, r, nloc);

    // Volume: ∫ ∇φ_j · div Φ^i, with (div Φ)_m = Σ_n ∂_n Φ_mn.
    let e = space.element_eval(r, ctx);
    for (q, w) in e.weights.iter().enumerate() {
        let vals = e.tables.values_at(q);
        let grads = e.tables.gradients_at(q);
        let mut b = row.block(r);
        for (i, phi) in phis.iter().enumerate() {
            let mut div = [0.0; 2];
            for m in 0..2 {
                for n in 0..2 {
                    div[m] += combine(vals, grads, &phi[m][n]).1[n];
                }
            }
            for j in 0..nloc {
                b.add(i, j, w * (grads[j][0] * div[0] + grads[j][1] * div[1]));
            }
        }
    }

    for &f in &mesh.element_faces(r) {
        let face = &mesh.faces()[f];
        let tr = space.face_trace(f, r, ctx);
        let nr = tr.normal;
        let pen = cfg.penalty(a, face.length, &tr.points);
        let other = face.neighbor_of(r).map(|o| (o, space.face_trace(f, o, ctx)));
        let avg = if other.is_some() { 0.5 } else { 1.0 };
        for (q, w) in tr.weights.iter().enumerate() {
            let vals = tr.values_at(q);
            let grads = tr.gradients_at(q);
            // Per test function i: div Φ^i · n and Φ^i n.
            let mut div_n = vec![0.0; nloc];
            let mut phi_n = vec![[0.0; 2]; nloc];
            for (i, phi) in phis.iter().enumerate() {
                for m in 0..2 {
                    for n in 0..2 {
                        let (v, g) = combine(vals, grads, &phi[m][n]);
                        div_n[i] += g[n] * nr[m];
                        phi_n[i][m] += v * nr[n];
                    }
                }
            }
            {
                let mut b = row.block(r);
                for i in 0..nloc {
                    for j in 0..nloc {
                        let dphi_n = grads[j][0] * phi_n[i][0] + grads[j][1] * phi_n[i][1];
                        let val = -theta * avg * vals[j] * div_n[i] - avg * dphi_n + pen * vals[j] * vals[i];
                        b.add(i, j, w * val);
                    }
                }
            }
            if let Some((o, to)) = &other {
                let ov = to.values_at(q);
                let og = to.gradients_at(q);
                let mut b = row.block(*o);
                for i in 0..nloc {
                    for j in 0..nloc {
                        let dphi_n = og[j][0] * phi_n[i][0] + og[j][1] * phi_n[i][1];
                        let val = theta * 0.5 * ov[j] * div_n[i] - 0.5 * dphi_n - pen * ov[j] * vals[i];
                        b.add(i, j, w * val);
                    }
                }
            }
        }
    }
    row
}

/// Compact system `K u = l` with `K_ij = B(φ_j, φ_i)`, `l_i = ∫ f φ_i`.
pub fn assemble_eliminated(
    space: &DgSpace,
    a: &CoefficientField,
    f: impl Fn(Point) -> Result<f64> + Sync,
    cfg: &BilinearFormConfig,
) -> Result<AssembledSystem> {
    cfg.validate()?;
    let proj = cfg.projector(space)?;
    let ne = space.mesh().n_elements();
    let rows: Vec<BlockRow> = (0..ne).into_par_iter().map(|r| eliminated_row_block(space, &proj, a, cfg, r)).collect();
    let matrix = block_csr(ne, space.n_loc(), rows);
    let rhs = load_vector(space, &proj, f)?;
    let stats = SparsityStats::compute(&matrix, space.n_loc());
    Ok(AssembledSystem { matrix, rhs, stats })
}

/// Penalty rows `σ ∫ h⁻¹ ⟦φ_j⟧·⟦φ_i⟧` over `E ∪ ∂Ω`.
fn penalty_row_block(space: &DgSpace, a: &CoefficientField, cfg: &BilinearFormConfig, r: usize) -> BlockRow {
    let mesh = space.mesh();
    let nloc = space.n_loc();
    let ctx = space.quad();
    let mut row = BlockRow::new(mesh, r, nloc);
    for &f in &mesh.element_faces(r) {
        let face = &mesh.faces()[f];
        let tr = space.face_trace(f, r, ctx);
        let pen = cfg.penalty(a, face.length, &tr.points);
        let other = face.neighbor_of(r).map(|o| (o, space.face_trace(f, o, ctx)));
        for (q, w) in tr.weights.iter().enumerate() {
            let vals = tr.values_at(q);
            let mut b = row.block(r);
            for i in 0..nloc {
                for j in 0..nloc {
                    b.add(i, j, w * pen * vals[i] * vals[j]);
                }
            }
            if let Some((o, to)) = &other {
                let ov = to.values_at(q);
                let mut b = row.block(*o);
                for i in 0..nloc {
                    for j in 0..nloc {
                        b.add(i, j, -w * pen * vals[i] * ov[j]);
                    }
                }
            }
        }
    }
    row
}

/// Mixed system in element-major order `[H00, H01, H10, H11, u]` per element:
///
/// ```text
/// M H_mn − G_mn u          = 0
/// P u − Σ_mn C_mn H_mn     = l
/// ```
///
/// with `M` the mass matrix, `G_mn` the weak Hessian operator, `P` the penalty
/// and `C_mn(i, l) = ∫ A_mn φ_l φ_i`.
#[derive(Debug, Clone)]
pub struct MixedSystem {
    n_elements: usize,
    n_loc: usize,
    mass: Vec<DenseMatrix>,
    hessian: HessianOperator,
    penalty: CsrMatrix,
    /// `C_mn` per element, in component order.
    coupling: Vec<[DenseMatrix; 4]>,
    pub rhs_u: Vec<f64>,
}

impl MixedSystem {
    pub fn n_u(&self) -> usize {
        self.n_elements * self.n_loc
    }

    pub fn n_h(&self) -> usize {
        4 * self.n_u()
    }

    fn stride(&self) -> usize {
        5 * self.n_loc
    }

    pub fn u_index(&self, k: usize, i: usize) -> usize {
        k * self.stride() + 4 * self.n_loc + i
    }

    pub fn h_index(&self, c: usize, k: usize, i: usize) -> usize {
        k * self.stride() + c * self.n_loc + i
    }

    /// The full `5 N × 5 N` matrix and right-hand side.
    pub fn stacked(&self) -> AssembledSystem {
        let (ne, nl) = (self.n_elements, self.n_loc);
        let rows: Vec<(Vec<usize>, Vec<f64>, Vec<usize>)> = (0..ne)
            .into_par_iter()
            .map(|r| {
                let mut col_idx = Vec::new();
                let mut values = Vec::new();
                let mut lens = Vec::with_capacity(5 * nl);
                let stencil: Vec<usize> = {
                    let (cols, _) = self.penalty.row(r * nl);
                    let mut s: Vec<usize> = cols.iter().map(|c| c / nl).collect();
                    s.dedup();
                    s
                };
                for (c, g) in self.hessian.rhs_operators.iter().enumerate() {
                    for i in 0..nl {
                        let start = col_idx.len();
                        let (gc, gv) = g.row(r * nl + i);
                        for &e in &stencil {
                            if e == r {
                                for l in 0..nl {
                                    col_idx.push(self.h_index(c, r, l));
                                    values.push(self.mass[r][(i, l)]);
                                }
                            }
                            for (&j, &v) in gc.iter().zip(gv).filter(|(j, _)| **j / nl == e) {
                                col_idx.push(self.u_index(e, j % nl));
                                values.push(-v);
                            }
                        }
                        lens.push(col_idx.len() - start);
                    }
                }
                for i in 0..nl {
                    let start = col_idx.len();
                    let (pc, pv) = self.penalty.row(r * nl + i);
                    for &e in &stencil {
                        if e == r {
                            for c in 0..4 {
                                for l in 0..nl {
                                    col_idx.push(self.h_index(c, r, l));
                                    values.push(-self.coupling[r][c][(i, l)]);
                                }
                            }
                        }
                        for (&j, &v) in pc.iter().zip(pv).filter(|(j, _)| **j / nl == e) {
                            col_idx.push(self.u_index(e, j % nl));
                            values.push(v);
                        }
                    }
                    lens.push(col_idx.len() - start);
                }
                (col_idx, values, lens)
            })
            .collect();
        let n = ne * self.stride();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (c, v, lens) in rows {
            for l in lens {
                row_ptr.push(row_ptr.last().unwrap() + l);
            }
            col_idx.extend(c);
            values.extend(v);
        }
        let matrix = CsrMatrix::from_raw(n, n, row_ptr, col_idx, values).expect("mixed layout is sorted");
        let mut rhs = vec![0.0; n];
        for k in 0..ne {
            for i in 0..nl {
                rhs[self.u_index(k, i)] = self.rhs_u[k * nl + i];
            }
        }
        let stats = SparsityStats::compute(&matrix, self.stride());
        AssembledSystem { matrix, rhs, stats }
    }

    /// Schur complement `P − Σ C_mn M⁻¹ G_mn`, formed element by element.
    pub fn eliminate(&self) -> Result<AssembledSystem> {
        let (ne, nl) = (self.n_elements, self.n_loc);
        let blocks: Result<Vec<Vec<(usize, usize, f64)>>> = (0..ne)
            .into_par_iter()
            .map(|r| {
                let lu = self.mass[r].lu()?;
                let mut triplets = Vec::new();
                for i in 0..nl {
                    let row = r * nl + i;
                    let (pc, pv) = self.penalty.row(row);
                    triplets.extend(pc.iter().zip(pv).map(|(&j, &v)| (row, j, v)));
                    for (c, g) in self.hessian.rhs_operators.iter().enumerate() {
                        // row i of C M⁻¹ is M⁻¹ (row i of C), M being symmetric
                        let ci: Vec<f64> = (0..nl).map(|l| self.coupling[r][c][(i, l)]).collect();
                        for (l, s) in lu.solve(&ci).iter().enumerate() {
                            let (gc, gv) = g.row(r * nl + l);
                            triplets.extend(gc.iter().zip(gv).map(|(&j, &v)| (row, j, -s * v)));
                        }
                    }
                }
                Ok(triplets)
            })
            .collect();
        let matrix = CsrMatrix::from_triplets(ne * nl, ne * nl, &blocks?.concat());
        let stats = SparsityStats::compute(&matrix, nl);
        Ok(AssembledSystem { matrix, rhs: self.rhs_u.clone(), stats })
    }

    /// `u` part of a stacked solution vector.
    pub fn extract_u(&self, x: &[f64]) -> Vec<f64> {
        let nl = self.n_loc;
        (0..self.n_elements).flat_map(|k| (0..nl).map(move |i| (k, i))).map(|(k, i)| x[self.u_index(k, i)]).collect()
    }

    /// Hessian components of a stacked solution vector.
    pub fn extract_h(&self, x: &[f64]) -> [Vec<f64>; 4] {
        let nl = self.n_loc;
        std::array::from_fn(|c| {
            (0..self.n_elements).flat_map(|k| (0..nl).map(move |i| (k, i))).map(|(k, i)| x[self.h_index(c, k, i)]).collect()
        })
    }
}

pub fn assemble_mixed(
    space: &DgSpace,
    a: &CoefficientField,
    f: impl Fn(Point) -> Result<f64> + Sync,
    cfg: &BilinearFormConfig,
) -> Result<MixedSystem> {
    cfg.validate()?;
    let proj = cfg.projector(space)?;
    let mesh = space.mesh();
    let ne = mesh.n_elements();
    let nl = space.n_loc();
    let hessian = HessianOperator::assemble(space, cfg.flux)?;
    let penalty_rows: Vec<BlockRow> = (0..ne).into_par_iter().map(|r| penalty_row_block(space, a, cfg, r)).collect();
    let penalty = block_csr(ne, nl, penalty_rows);
    let mass: Vec<DenseMatrix> = (0..ne).map(|k| proj.mass_matrix(space.geometry(k))).collect();
    // C_mn(i, l) = ∫ A_mn φ_l φ_i = (M Π(φ_i A_mn))_l
    let coupling: Vec<[DenseMatrix; 4]> = (0..ne)
        .into_par_iter()
        .map(|k| {
            let phis = proj.project_all_basis_times_matrix(&sample_coefficient(space, &proj, a, k));
            let m = &mass[k];
            std::array::from_fn(|c| {
                let (mi, ni) = COMPONENTS[c];
                let mut data = Vec::with_capacity(nl * nl);
                for phi in &phis {
                    data.extend(m.matvec(&phi[mi][ni]));
                }
                DenseMatrix::from_row_major(nl, data)
            })
        })
        .collect();
    let rhs_u = load_vector(space, &proj, f)?;
    Ok(MixedSystem { n_elements: ne, n_loc: nl, mass, hessian, penalty, coupling, rhs_u })
}

/// `B(v, w) = wᵀ K v`.
pub fn bilinear_form(k: &CsrMatrix, v: &[f64], w: &[f64]) -> f64 {
    k.matvec(v).iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `max_i |B(u_h, φ_i) − l(φ_i)|` with `l(φ_i) = −∫ A : D²u φ_i` formed from
/// the exact Hessian. Orthogonality makes this vanish up to solver accuracy
/// whenever `A` is piecewise constant.
pub fn galerkin_orthogonality_residual(
    space: &DgSpace,
    k: &CsrMatrix,
    u_h: &[f64],
    a: &CoefficientField,
    exact_hessian: impl Fn(Point) -> Matrix2 + Sync,
    cfg: &BilinearFormConfig,
) -> Result<f64> {
    if u_h.len() != k.ncols() {
        return Err(Error::DimensionMismatch { expected: k.ncols(), found: u_h.len() });
    }
    let proj = cfg.projector(space)?;
    let l = load_vector(space, &proj, |x| Ok(-frobenius(a.eval(x), exact_hessian(x))))?;
    Ok(k.matvec(u_h).iter().zip(&l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Solves an assembled system with BiCGSTAB.
pub fn solve(system: &AssembledSystem, opts: &SolverOptions) -> Result<(Vec<f64>, SolverReport)> {
    bicgstab(&system.matrix, &system.rhs, opts)
}

/// Assembles with the configured form and returns the `u` coefficients.
pub fn assemble_and_solve(
    space: &DgSpace,
    a: &CoefficientField,
    f: impl Fn(Point) -> Result<f64> + Sync,
    cfg: &BilinearFormConfig,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport, SparsityStats)> {
    match cfg.form {
        FormKind::Eliminated => {
            let sys = assemble_eliminated(space, a, f, cfg)?;
            let (u, rep) = solve(&sys, opts)?;
            Ok((u, rep, sys.stats))
        }
        FormKind::Mixed => {
            let mixed = assemble_mixed(space, a, f, cfg)?;
            let sys = mixed.stacked();
            let (x, rep) = solve(&sys, opts)?;
            Ok((mixed.extract_u(&x), rep, sys.stats))
        }
    }
}
