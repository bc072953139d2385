//! Discrete (finite element) Hessian of a broken polynomial function.
//!
//! For `v` in `V_h` the Hessian `H[v]` in `V_h^{2x2}` is defined by
//!
//! ```text
//! ∫ H[v] Φ = ∫ D²_h v Φ − ∫_E {Φ} (∇v₁⊗n₁ + ∇v₂⊗n₂) + θ ∫_{E∪∂Ω} ⟦v⟧ ⊗ {∇_h Φ}     ∀ Φ ∈ V_h
//! ```
//!
//! with entry `(m, n)` approximating `∂_n ∂_m v`. The production path
//! ([`HessianOperator`]) assembles the right-hand side as a sparse operator
//! and solves one mass system per element. [`two_stage_hessian`] computes the
//! same object from the flux formulation (first a discrete gradient `p`, then
//! `H` from `p`) and serves as an independent check.

use rayon::prelude::*;

use crate::blocks::{block_csr, BlockRow};
use crate::error::{Error, Result};
use crate::femspace::{DgSpace, ElementEval, FaceTrace, Hessian};
use crate::linalg::CsrMatrix;
use crate::mesh::Point;
use crate::projection::{project_matrix_field, LocalProjector};

/// Interior-penalty flux parameter `θ ∈ {-1, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxChoice {
    theta: f64,
}

impl FluxChoice {
    pub fn new(theta: f64) -> Result<Self> {
        if theta == 1.0 || theta == -1.0 {
            Ok(Self { theta })
        } else {
            Err(Error::InvalidTheta(theta))
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Default for FluxChoice {
    fn default() -> Self {
        Self { theta: 1.0 }
    }
}

/// Entry order of the four components.
pub const COMPONENTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHessian {
    /// Coefficient vectors of `H_00, H_01, H_10, H_11`.
    pub components: [Vec<f64>; 4],
}

impl DiscreteHessian {
    pub fn component(&self, m: usize, n: usize) -> &[f64] {
        &self.components[2 * m + n]
    }

    /// Largest coefficient difference over all components.
    pub fn max_abs_diff(&self, other: &DiscreteHessian) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn dot_coeffs(values: &[f64], c: &[f64]) -> f64 {
    values.iter().zip(c).map(|(a, b)| a * b).sum()
}

/// The linear map `v ↦ (∫ H[v] φ_i)_i` for each component, with the element
/// mass solve needed to recover `H[v]`.
#[derive(Debug, Clone)]
pub struct HessianOperator {
    /// `G_mn` in [`COMPONENTS`] order.
    pub rhs_operators: [CsrMatrix; 4],
    projector: LocalProjector,
    flux: FluxChoice,
}

impl HessianOperator {
    pub fn assemble(space: &DgSpace, flux: FluxChoice) -> Result<Self> {
        let mesh = space.mesh();
        let nloc = space.n_loc();
        let rows: Vec<[BlockRow; 4]> =
            (0..mesh.n_elements()).into_par_iter().map(|r| hessian_row_block(space, flux, r)).collect();
        let mut split: [Vec<BlockRow>; 4] = Default::default();
        for group in rows {
            for (s, b) in split.iter_mut().zip(group) {
                s.push(b);
            }
        }
        let ne = mesh.n_elements();
        let [a, b, c, d] = split;
        Ok(Self {
            rhs_operators: [block_csr(ne, nloc, a), block_csr(ne, nloc, b), block_csr(ne, nloc, c), block_csr(ne, nloc, d)],
            projector: LocalProjector::for_space(space)?,
            flux,
        })
    }

    /// `H[v]` with inhomogeneous Dirichlet data: on `∂Ω` the jump is `(v - g) n`.
    pub fn apply_with_boundary_data(
        &self,
        space: &DgSpace,
        v: &[f64],
        g: impl Fn(Point) -> f64 + Sync,
    ) -> Result<DiscreteHessian> {
        let mut h = self.apply(space, v)?;
        let mesh = space.mesh();
        let ctx = space.quad();
        let nloc = space.n_loc();
        let theta = self.flux.theta();
        let lifts: Vec<(usize, [Vec<f64>; 4])> = mesh
            .faces()
            .par_iter()
            .enumerate()
            .filter(|(_, f)| !f.is_interior())
            .map(|(fi, face)| {
                let k = face.elements.0;
                let tr = space.face_trace(fi, k, ctx);
                let mut out: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; nloc]);
                for (q, w) in tr.weights.iter().enumerate() {
                    let gq = g(tr.points[q]);
                    let grad = tr.gradients_at(q);
                    for (c, &(m, n)) in COMPONENTS.iter().enumerate() {
                        for i in 0..nloc {
                            out[c][i] += w * theta * gq * tr.normal[m] * grad[i][n];
                        }
                    }
                }
                for o in out.iter_mut() {
                    self.projector.solve_mass(space.geometry(k), o);
                }
                (k, out)
            })
            .collect();
        for (k, out) in lifts {
            let r = space.dofmap().range(k);
            for (hc, oc) in h.components.iter_mut().zip(out) {
                hc[r.clone()].iter_mut().zip(oc).for_each(|(a, b)| *a -= b);
            }
        }
        Ok(h)
    }

    pub fn flux(&self) -> FluxChoice {
        self.flux
    }

    pub fn apply(&self, space: &DgSpace, v: &[f64]) -> Result<DiscreteHessian> {
        if v.len() != space.n_dofs() {
            return Err(Error::DimensionMismatch { expected: space.n_dofs(), found: v.len() });
        }
        let dm = space.dofmap();
        let components = self.rhs_operators.each_ref().map(|g| {
            let mut r = g.matvec(v);
            r.par_chunks_mut(dm.n_loc).enumerate().for_each(|(k, block)| {
                self.projector.solve_mass(space.geometry(k), block);
            });
            r
        });
        Ok(DiscreteHessian { components })
    }
}

/// Row block of element `r` for the four component operators.
fn hessian_row_block(space: &DgSpace, flux: FluxChoice, r: usize) -> [BlockRow; 4] {
    let mesh = space.mesh();
    let nloc = space.n_loc();
    let ctx = space.quad();
    let theta = flux.theta();
    let mut blocks: [BlockRow; 4] = std::array::from_fn(|_| BlockRow::new(mesh, r, nloc));

    let e = space.element_eval(r, ctx);
    for (q, w) in e.weights.iter().enumerate() {
        let phi = e.tables.values_at(q);
        let hs = e.tables.hessians_at(q);
        for (c, &(m, n)) in COMPONENTS.iter().enumerate() {
            let mut b = blocks[c].block(r);
            for i in 0..nloc {
                for j in 0..nloc {
                    b.add(i, j, w * phi[i] * hs[j][m][n]);
                }
            }
        }
    }

    for &f in &mesh.element_faces(r) {
        let face = &mesh.faces()[f];
        let tr = space.face_trace(f, r, ctx);
        let nr = tr.normal;
        let other = face.neighbor_of(r).map(|o| (o, space.face_trace(f, o, ctx)));
        let avg = if other.is_some() { 0.5 } else { 1.0 };
        for (q, w) in tr.weights.iter().enumerate() {
            let phi_r = tr.values_at(q);
            let grad_r = tr.gradients_at(q);
            for (c, &(m, n)) in COMPONENTS.iter().enumerate() {
                // −∫_E {Φ} (∇v⊗n)-jump  and  θ ∫ ⟦v⟧_m {∂_n Φ}
                {
                    let mut b = blocks[c].block(r);
                    for i in 0..nloc {
                        for j in 0..nloc {
                            let mut val = theta * avg * phi_r[j] * nr[m] * grad_r[i][n];
                            if other.is_some() {
                                val -= 0.5 * phi_r[i] * grad_r[j][m] * nr[n];
                            }
                            b.add(i, j, w * val);
                        }
                    }
                }
                if let Some((o, to)) = &other {
                    let phi_o = to.values_at(q);
                    let grad_o = to.gradients_at(q);
                    let mut b = blocks[c].block(*o);
                    for i in 0..nloc {
                        for j in 0..nloc {
                            let val = 0.5 * phi_r[i] * grad_o[j][m] * nr[n] - theta * 0.5 * phi_o[j] * nr[m] * grad_r[i][n];
                            b.add(i, j, w * val);
                        }
                    }
                }
            }
        }
    }
    blocks
}

/// `H[v]` via the primal form.
pub fn assemble_hessian(space: &DgSpace, v: &[f64], flux: FluxChoice) -> Result<DiscreteHessian> {
    HessianOperator::assemble(space, flux)?.apply(space, v)
}

/// Data entering the flux formulation: the function inside elements and the
/// numerical fluxes `Û_K` (seen from element `K`) and `p̂` on each face.
pub trait FluxData: Sync {
    fn volume_values(&self, k: usize, e: &ElementEval) -> Vec<f64>;
    fn scalar_flux(&self, k: usize, trace: &FaceTrace, other: Option<(usize, &FaceTrace)>) -> Vec<f64>;
    fn gradient_flux(&self, k: usize, trace: &FaceTrace, other: Option<(usize, &FaceTrace)>) -> Vec<[f64; 2]>;
}

/// Interior-penalty fluxes for a discrete function. `Û_K = u_K − θ(u_K − u_other)/2`
/// on interior faces and `(1 − θ) u` on the boundary; for `θ = 1` this is
/// `{u}` and `0`. `p̂ = {∇_h u}` everywhere.
pub struct InteriorPenaltyFluxes<'a> {
    pub v: &'a [f64],
    pub n_loc: usize,
    pub theta: f64,
}

impl InteriorPenaltyFluxes<'_> {
    fn coeffs(&self, k: usize) -> &[f64] {
        &self.v[k * self.n_loc..(k + 1) * self.n_loc]
    }

    fn trace_values(&self, k: usize, t: &FaceTrace) -> Vec<f64> {
        (0..t.weights.len()).map(|q| dot_coeffs(t.values_at(q), self.coeffs(k))).collect()
    }

    fn trace_gradients(&self, k: usize, t: &FaceTrace) -> Vec<[f64; 2]> {
        let c = self.coeffs(k);
        (0..t.weights.len())
            .map(|q| {
                t.gradients_at(q).iter().zip(c).fold([0.0; 2], |a, (g, ci)| [a[0] + ci * g[0], a[1] + ci * g[1]])
            })
            .collect()
    }
}

impl FluxData for InteriorPenaltyFluxes<'_> {
    fn volume_values(&self, k: usize, e: &ElementEval) -> Vec<f64> {
        (0..e.weights.len()).map(|q| dot_coeffs(e.tables.values_at(q), self.coeffs(k))).collect()
    }

    fn scalar_flux(&self, k: usize, trace: &FaceTrace, other: Option<(usize, &FaceTrace)>) -> Vec<f64> {
        let own = self.trace_values(k, trace);
        match other {
            Some((o, to)) => {
                let nb = self.trace_values(o, to);
                own.iter().zip(&nb).map(|(a, b)| a - 0.5 * self.theta * (a - b)).collect()
            }
            None => own.iter().map(|a| (1.0 - self.theta) * a).collect(),
        }
    }

    fn gradient_flux(&self, k: usize, trace: &FaceTrace, other: Option<(usize, &FaceTrace)>) -> Vec<[f64; 2]> {
        let own = self.trace_gradients(k, trace);
        match other {
            Some((o, to)) => {
                let nb = self.trace_gradients(o, to);
                own.iter().zip(&nb).map(|(a, b)| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]).collect()
            }
            None => own,
        }
    }
}

/// Exact traces of a smooth function: `Û = u`, `p̂ = ∇u`.
pub struct ExactFluxes<U, G> {
    pub u: U,
    pub grad: G,
}

impl<U, G> FluxData for ExactFluxes<U, G>
where
    U: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    fn volume_values(&self, _k: usize, e: &ElementEval) -> Vec<f64> {
        e.tables.points.iter().map(|&x| (self.u)(x)).collect()
    }

    fn scalar_flux(&self, _k: usize, trace: &FaceTrace, _other: Option<(usize, &FaceTrace)>) -> Vec<f64> {
        trace.points.iter().map(|&x| (self.u)(x)).collect()
    }

    fn gradient_flux(&self, _k: usize, trace: &FaceTrace, _other: Option<(usize, &FaceTrace)>) -> Vec<[f64; 2]> {
        trace.points.iter().map(|&x| (self.grad)(x)).collect()
    }
}

/// Flux formulation: per element, first solve
/// `∫_K p_m q = −∫_K u ∂_m q + ∫_∂K Û_K n_m q`, then
/// `∫_K H_mn Φ = −∫_K p_m ∂_n Φ + ∫_∂K p̂_m n_n Φ`.
pub fn two_stage_hessian(space: &DgSpace, data: &dyn FluxData) -> Result<DiscreteHessian> {
    let mesh = space.mesh();
    let nloc = space.n_loc();
    let projector = LocalProjector::for_space(space)?;
    let ctx = space.quad();
    let blocks: Vec<[Vec<f64>; 4]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, ctx);
            let uq = data.volume_values(k, &e);
            let mut p = [vec![0.0; nloc], vec![0.0; nloc]];
            let mut h: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; nloc]);
            for (q, w) in e.weights.iter().enumerate() {
                let g = e.tables.gradients_at(q);
                for (m, pm) in p.iter_mut().enumerate() {
                    for i in 0..nloc {
                        pm[i] -= w * uq[q] * g[i][m];
                    }
                }
            }
            let mut faces = Vec::with_capacity(3);
            for &f in &mesh.element_faces(k) {
                let face = &mesh.faces()[f];
                let tk = space.face_trace(f, k, ctx);
                let other = face.neighbor_of(k).map(|o| (o, space.face_trace(f, o, ctx)));
                let other_ref = other.as_ref().map(|(o, t)| (*o, t));
                let u_hat = data.scalar_flux(k, &tk, other_ref);
                let p_hat = data.gradient_flux(k, &tk, other_ref);
                for (q, w) in tk.weights.iter().enumerate() {
                    let phi = tk.values_at(q);
                    for (m, pm) in p.iter_mut().enumerate() {
                        for i in 0..nloc {
                            pm[i] += w * u_hat[q] * tk.normal[m] * phi[i];
                        }
                    }
                }
                faces.push((tk, p_hat));
            }
            for pm in p.iter_mut() {
                projector.solve_mass(space.geometry(k), pm);
            }
            for (q, w) in e.weights.iter().enumerate() {
                let phi = e.tables.values_at(q);
                let g = e.tables.gradients_at(q);
                let pq = [dot_coeffs(phi, &p[0]), dot_coeffs(phi, &p[1])];
                for (c, &(m, n)) in COMPONENTS.iter().enumerate() {
                    for i in 0..nloc {
                        h[c][i] -= w * pq[m] * g[i][n];
                    }
                }
            }
            for (tk, p_hat) in &faces {
                for (q, w) in tk.weights.iter().enumerate() {
                    let phi = tk.values_at(q);
                    for (c, &(m, n)) in COMPONENTS.iter().enumerate() {
                        for i in 0..nloc {
                            h[c][i] += w * p_hat[q][m] * tk.normal[n] * phi[i];
                        }
                    }
                }
            }
            for hc in h.iter_mut() {
                projector.solve_mass(space.geometry(k), hc);
            }
            h
        })
        .collect();
    let mut components: [Vec<f64>; 4] = Default::default();
    for b in blocks {
        for (c, v) in components.iter_mut().zip(b) {
            c.extend(v);
        }
    }
    Ok(DiscreteHessian { components })
}

/// `H[v]` through the flux formulation with interior-penalty fluxes.
pub fn assemble_hessian_two_stage(space: &DgSpace, v: &[f64], flux: FluxChoice) -> Result<DiscreteHessian> {
    if v.len() != space.n_dofs() {
        return Err(Error::DimensionMismatch { expected: space.n_dofs(), found: v.len() });
    }
    two_stage_hessian(space, &InteriorPenaltyFluxes { v, n_loc: space.n_loc(), theta: flux.theta() })
}

/// `‖Σ_c (a_c − b_c) φ‖_{L²}` summed over the four components.
fn l2_distance(space: &DgSpace, a: &DiscreteHessian, b: &DiscreteHessian) -> f64 {
    let dm = space.dofmap();
    let ctx = space.quad();
    let parts: Vec<f64> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, ctx);
            let r = dm.range(k);
            let mut s = 0.0;
            for (q, w) in e.weights.iter().enumerate() {
                let phi = e.tables.values_at(q);
                for c in 0..4 {
                    let d = dot_coeffs(phi, &a.components[c][r.clone()]) - dot_coeffs(phi, &b.components[c][r.clone()]);
                    s += w * d * d;
                }
            }
            s
        })
        .collect();
    parts.iter().sum::<f64>().sqrt()
}

/// `‖H_exact − Π(D²u)‖_{L²}`, where `H_exact` uses exact traces `Û = u`, `p̂ = ∇u`.
pub fn hessian_consistency_residual(
    space: &DgSpace,
    u: impl Fn(Point) -> f64 + Sync,
    grad: impl Fn(Point) -> [f64; 2] + Sync,
    hessian: impl Fn(Point) -> Hessian + Sync,
) -> Result<f64> {
    let h = two_stage_hessian(space, &ExactFluxes { u, grad })?;
    let proj = DiscreteHessian { components: project_matrix_field(space, hessian)? };
    Ok(l2_distance(space, &h, &proj))
}

/// Both sides of the lifting bound:
/// `lhs = ‖D²_h v − H[v]‖²`, `rhs = Σ_E h⁻¹‖⟦∇_h v⟧‖² + Σ_{E∪∂Ω} h⁻³‖⟦v⟧‖²`
/// with `h` the face length and `|⟦∇_h v⟧| = |∇v₁ − ∇v₂|` (tensor jump).
pub fn stability_bound_check(space: &DgSpace, v: &[f64], flux: FluxChoice) -> Result<(f64, f64)> {
    let h = assemble_hessian(space, v, flux)?;
    let dm = space.dofmap();
    let ctx = space.quad();
    let mesh = space.mesh();
    let lhs: Vec<f64> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, ctx);
            let r = dm.range(k);
            let c = &v[r.clone()];
            let mut s = 0.0;
            for (q, w) in e.weights.iter().enumerate() {
                let phi = e.tables.values_at(q);
                let hs = e.tables.hessians_at(q);
                for (ci, &(m, n)) in COMPONENTS.iter().enumerate() {
                    let broken: f64 = hs.iter().zip(c).map(|(hj, cj)| cj * hj[m][n]).sum();
                    let d = broken - dot_coeffs(phi, &h.components[ci][r.clone()]);
                    s += w * d * d;
                }
            }
            s
        })
        .collect();
    let rhs: Vec<f64> = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| {
            let face = &mesh.faces()[f];
            let k = face.elements.0;
            let tk = space.face_trace(f, k, ctx);
            let ck = &v[dm.range(k)];
            let he = face.length;
            let mut s = 0.0;
            let other = face.elements.1.map(|o| (space.face_trace(f, o, ctx), &v[dm.range(o)]));
            for (q, w) in tk.weights.iter().enumerate() {
                let vk = dot_coeffs(tk.values_at(q), ck);
                match &other {
                    Some((to, co)) => {
                        let vo = dot_coeffs(to.values_at(q), co);
                        let gk = tk.gradients_at(q).iter().zip(ck.iter()).fold([0.0; 2], |a, (g, c)| {
                            [a[0] + c * g[0], a[1] + c * g[1]]
                        });
                        let go = to.gradients_at(q).iter().zip(co.iter()).fold([0.0; 2], |a, (g, c)| {
                            [a[0] + c * g[0], a[1] + c * g[1]]
                        });
                        let dg = (gk[0] - go[0]).powi(2) + (gk[1] - go[1]).powi(2);
                        s += w * (dg / he + (vk - vo).powi(2) / he.powi(3));
                    }
                    None => s += w * vk * vk / he.powi(3),
                }
            }
            s
        })
        .collect();
    Ok((lhs.iter().sum(), rhs.iter().sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};

    fn space(n: usize, k: usize) -> DgSpace {
        DgSpace::new(Mesh::build_criss_cross(n).unwrap(), k).unwrap()
    }

    #[test]
    fn theta_is_validated() {
        assert!(FluxChoice::new(0.5).is_err());
        assert_eq!(FluxChoice::new(-1.0).unwrap().theta(), -1.0);
    }

    #[test]
    fn affine_functions_have_zero_hessian() {
        for k in 1..=2 {
            let s = space(3, k);
            let r = hessian_consistency_residual(&s, |x| 0.3 - x[0] + 2.0 * x[1], |_| [-1.0, 2.0], |_| [[0.0; 2]; 2]).unwrap();
            assert!(r < 1e-12, "{r}");
            let h0 = assemble_hessian(&s, &vec![0.0; s.n_dofs()], FluxChoice::default()).unwrap();
            assert_eq!(h0.max_abs(), 0.0);
        }
    }

    #[test]
    fn quadratic_hessian_is_recovered() {
        let s = space(4, 2);
        let r = hessian_consistency_residual(&s, |x| x[0] * x[0] + x[0] * x[1], |x| [2.0 * x[0] + x[1], x[0]], |_| {
            [[2.0, 1.0], [1.0, 0.0]]
        })
        .unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn primal_and_two_stage_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for k in 1..=2 {
            let s = space(3, k);
            for theta in [1.0, -1.0] {
                let flux = FluxChoice::new(theta).unwrap();
                let v: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let a = assemble_hessian(&s, &v, flux).unwrap();
                let b = assemble_hessian_two_stage(&s, &v, flux).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-11 * (1.0 + a.max_abs()), "k={k} θ={theta}");
            }
        }
    }

    #[test]
    fn linearity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let s = space(2, 2);
        let op = HessianOperator::assemble(&s, FluxChoice::default()).unwrap();
        let v: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..s.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let comb: Vec<f64> = v.iter().zip(&w).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let (hv, hw, hc) = (op.apply(&s, &v).unwrap(), op.apply(&s, &w).unwrap(), op.apply(&s, &comb).unwrap());
        for c in 0..4 {
            for i in 0..s.n_dofs() {
                let e = 2.0 * hv.components[c][i] - 3.0 * hw.components[c][i];
                assert!((hc.components[c][i] - e).abs() < 1e-9 * (1.0 + e.abs()));
            }
        }
    }

    #[test]
    fn polynomial_with_matching_boundary_data() {
        let s = space(3, 2);
        let u = |x: Point| x[0] * x[0] + x[0] * x[1];
        let v = s.interpolate(u);
        let op = HessianOperator::assemble(&s, FluxChoice::default()).unwrap();
        let h = op.apply_with_boundary_data(&s, &v, u).unwrap();
        for (c, exact) in [2.0, 1.0, 1.0, 0.0].iter().enumerate() {
            assert!(h.components[c].iter().all(|x| (x - exact).abs() < 1e-10));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = space(1, 1);
        assert!(matches!(
            assemble_hessian(&s, &[1.0], FluxChoice::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn element_indicator_has_finite_ratio() {
        let s = space(2, 1);
        let mut v = vec![0.0; s.n_dofs()];
        for i in s.dofmap().range(3) {
            v[i] = 1.0;
        }
        let (lhs, rhs) = stability_bound_check(&s, &v, FluxChoice::default()).unwrap();
        assert!(lhs > 0.0 && rhs > 0.0 && (lhs / rhs).is_finite());
    }

    #[test]
    fn boundary_only_jumps() {
        // x(1-x) is continuous with continuous gradient; only its traces on y = 0, 1 jump,
        // each contributing h^-3 * ∫ x²(1-x)² dx = n³/30.
        let n = 4;
        let s = space(n, 2);
        let v = s.interpolate(|x| x[0] * (1.0 - x[0]));
        let (lhs, rhs) = stability_bound_check(&s, &v, FluxChoice::default()).unwrap();
        let expected = 2.0 * (n as f64).powi(3) / 30.0;
        assert!((rhs - expected).abs() < 1e-10 * expected, "{rhs} vs {expected}");
        assert!(lhs > 0.0);
    }
}
