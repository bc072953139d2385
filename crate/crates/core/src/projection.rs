//! Elementwise L² projection onto `P_k`.
//!
//! On a broken space the global projection decouples into one small mass
//! solve per element, and for affine elements the element mass matrix is the
//! reference one scaled by `det J`, so a single factorization serves every
//! element.

use rayon::prelude::*;

use crate::error::Result;
use crate::femspace::{BasisTables, DgSpace, ElementGeometry, QuadratureRule, ReferenceBasis};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::mesh::Point;
use crate::problems::CoefficientField;

#[derive(Debug, Clone)]
pub struct LocalProjector {
    basis: ReferenceBasis,
    rule: QuadratureRule,
    tables: BasisTables,
    ref_mass: DenseMatrix,
    ref_mass_lu: LuFactors,
}

/// `Π(φ_j A)`: `coeffs[m][n]` are the coefficients of entry `(m, n)`.
pub type ProjectedMatrix = [[Vec<f64>; 2]; 2];

impl LocalProjector {
    /// Projector onto polynomials of `degree` (0 allowed) using a rule of `quad_degree`.
    pub fn new(degree: usize, quad_degree: usize) -> Result<Self> {
        let basis = ReferenceBasis::new(degree)?;
        let rule = QuadratureRule::triangle(quad_degree.max(2 * degree));
        Self::from_parts(basis, rule)
    }

    /// Projector matching a space's basis and element rule.
    pub fn for_space(space: &DgSpace) -> Result<Self> {
        Self::from_parts(space.basis().clone(), space.quad().elem_rule.clone())
    }

    fn from_parts(basis: ReferenceBasis, rule: QuadratureRule) -> Result<Self> {
        let tables = basis.eval(&rule.points, 0);
        let n = basis.n_loc();
        let mut m = DenseMatrix::zeros(n);
        for (q, w) in rule.weights.iter().enumerate() {
            let v = tables.values_at(q);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let ref_mass_lu = m.lu()?;
        Ok(Self { basis, rule, tables, ref_mass: m, ref_mass_lu })
    }

    pub fn n_loc(&self) -> usize {
        self.basis.n_loc()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// Element mass matrix `M_K = det(J) M_ref`.
    pub fn mass_matrix(&self, geom: &ElementGeometry) -> DenseMatrix {
        self.ref_mass.scaled(geom.det)
    }

    pub fn reference_mass(&self) -> &DenseMatrix {
        &self.ref_mass
    }

    /// Solves `M_K c = b` for a load vector `b` already integrated on the element.
    pub fn solve_mass(&self, geom: &ElementGeometry, b: &mut [f64]) {
        self.ref_mass_lu.solve_in_place(b);
        b.iter_mut().for_each(|v| *v /= geom.det);
    }

    /// Coefficients of the projection from samples of the field at this
    /// projector's quadrature points (element-independent: the `det J` cancels).
    pub fn project_samples(&self, samples: &[f64]) -> Vec<f64> {
        let n = self.n_loc();
        let mut b = vec![0.0; n];
        for (q, (w, s)) in self.rule.weights.iter().zip(samples).enumerate() {
            let v = self.tables.values_at(q);
            for i in 0..n {
                b[i] += w * s * v[i];
            }
        }
        self.ref_mass_lu.solve_in_place(&mut b);
        b
    }

    /// `∫_K s φ_i` from samples at this projector's quadrature points.
    pub fn moments(&self, geom: &ElementGeometry, samples: &[f64]) -> Vec<f64> {
        let n = self.n_loc();
        let mut b = vec![0.0; n];
        for (q, (w, s)) in self.rule.weights.iter().zip(samples).enumerate() {
            let v = self.tables.values_at(q);
            for i in 0..n {
                b[i] += geom.det * w * s * v[i];
            }
        }
        b
    }

    pub fn quadrature_points(&self, geom: &ElementGeometry) -> Vec<Point> {
        self.rule.points.iter().map(|&p| geom.to_physical(p)).collect()
    }

    pub fn project_scalar(&self, geom: &ElementGeometry, field: impl Fn(Point) -> f64) -> Vec<f64> {
        let samples: Vec<f64> = self.quadrature_points(geom).into_iter().map(field).collect();
        self.project_samples(&samples)
    }

    /// `Π(φ_j A)` on one element.
    pub fn project_matrix_times_basis(&self, geom: &ElementGeometry, a: &CoefficientField, j: usize) -> ProjectedMatrix {
        let a_q: Vec<_> = self.quadrature_points(geom).into_iter().map(|x| a.eval(x)).collect();
        self.project_all_basis_times_matrix(&a_q).swap_remove(j)
    }

    /// `Π(φ_j A)` for every local `j`, from `A` sampled at the quadrature points.
    pub fn project_all_basis_times_matrix(&self, a_at_points: &[[[f64; 2]; 2]]) -> Vec<ProjectedMatrix> {
        let n = self.n_loc();
        (0..n)
            .map(|j| {
                let entry = |m: usize, k: usize| {
                    let samples: Vec<f64> = a_at_points
                        .iter()
                        .enumerate()
                        .map(|(q, a)| a[m][k] * self.tables.value(q, j))
                        .collect();
                    self.project_samples(&samples)
                };
                [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
            })
            .collect()
    }
}

/// Elementwise projection of `field` onto the whole space.
pub fn project_global(space: &DgSpace, field: impl Fn(Point) -> f64 + Sync) -> Result<Vec<f64>> {
    let proj = LocalProjector::for_space(space)?;
    let blocks: Vec<Vec<f64>> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| proj.project_scalar(space.geometry(k), &field))
        .collect();
    Ok(blocks.concat())
}

/// Coefficients of `Π(D^2 u)` entry by entry (`[H00, H01, H10, H11]`).
pub fn project_matrix_field(
    space: &DgSpace,
    field: impl Fn(Point) -> [[f64; 2]; 2] + Sync,
) -> Result<[Vec<f64>; 4]> {
    let proj = LocalProjector::for_space(space)?;
    let blocks: Vec<[Vec<f64>; 4]> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let vals: Vec<_> = proj.quadrature_points(space.geometry(k)).into_iter().map(&field).collect();
            let comp = |m: usize, n: usize| proj.project_samples(&vals.iter().map(|v| v[m][n]).collect::<Vec<_>>());
            [comp(0, 0), comp(0, 1), comp(1, 0), comp(1, 1)]
        })
        .collect();
    let mut out: [Vec<f64>; 4] = Default::default();
    for b in blocks {
        for (o, c) in out.iter_mut().zip(b) {
            o.extend(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspace::{QuadratureRule, ReferenceBasis};
    use crate::linalg::dense_solve;
    use crate::mesh::Mesh;
    use crate::problems::test1;

    fn ref_geom() -> ElementGeometry {
        ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap()
    }

    fn eval_poly(basis: &ReferenceBasis, c: &[f64], x: [f64; 2]) -> f64 {
        basis.eval(&[x], 0).values.iter().zip(c).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn constant_is_reproduced() {
        let p = LocalProjector::new(2, 6).unwrap();
        let g = ElementGeometry::new([[0.2, 0.1], [0.7, 0.3], [0.4, 0.9]]).unwrap();
        let c = p.project_scalar(&g, |_| 5.0);
        assert!(c.iter().all(|v| (v - 5.0).abs() < 1e-13));
    }

    #[test]
    fn polynomials_are_reproduced_and_projection_is_idempotent() {
        for k in 1..=2 {
            let p = LocalProjector::new(k, 2 * k + 2).unwrap();
            let g = ElementGeometry::new([[0.2, 0.1], [0.7, 0.3], [0.4, 0.9]]).unwrap();
            let f = |x: Point| 1.0 - 2.0 * x[0] + 0.5 * x[1] + if k == 2 { x[0] * x[1] - x[1] * x[1] } else { 0.0 };
            let c = p.project_scalar(&g, f);
            let interp: Vec<f64> = p.basis().nodes().iter().map(|&n| f(g.to_physical(n))).collect();
            for (a, b) in c.iter().zip(&interp) {
                assert!((a - b).abs() < 1e-12);
            }
            let basis = p.basis().clone();
            let c2 = p.project_scalar(&g, |x| eval_poly(&basis, &c, g.to_reference(x)));
            for (a, b) in c.iter().zip(&c2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residual_of_cubic_is_orthogonal() {
        // brute force: integrate (x^3 - Πx^3) φ_i with a much finer rule
        let p = LocalProjector::new(1, 4).unwrap();
        let c = p.project_scalar(&ref_geom(), |x| x[0].powi(3));
        let fine = QuadratureRule::triangle(12);
        let basis = ReferenceBasis::new(1).unwrap();
        let t = basis.eval(&fine.points, 0);
        for i in 0..3 {
            let r: f64 = fine
                .points
                .iter()
                .enumerate()
                .map(|(q, x)| {
                    let proj: f64 = (0..3).map(|l| c[l] * t.value(q, l)).sum();
                    fine.weights[q] * (x[0].powi(3) - proj) * t.value(q, i)
                })
                .sum();
            assert!(r.abs() < 1e-14, "residual {r}");
        }
    }

    #[test]
    fn identity_times_basis() {
        let p = LocalProjector::new(2, 6).unwrap();
        let g = ElementGeometry::new([[0.0, 0.0], [0.25, 0.0], [0.25, 0.25]]).unwrap();
        for (a, scale) in [
            (CoefficientField::identity(), [1.0, 1.0]),
            (CoefficientField::constant([[1.0, 0.0], [0.0, 2.0]]), [1.0, 2.0]),
        ] {
            for j in 0..p.n_loc() {
                let pm = p.project_matrix_times_basis(&g, &a, j);
                for l in 0..p.n_loc() {
                    let e = if l == j { 1.0 } else { 0.0 };
                    assert!((pm[0][0][l] - scale[0] * e).abs() < 1e-12);
                    assert!((pm[1][1][l] - scale[1] * e).abs() < 1e-12);
                    assert!(pm[0][1][l].abs() < 1e-12 && pm[1][0][l].abs() < 1e-12);
                }
            }
        }
    }

    /// Least-squares oracle: normal equations assembled with a dense fine rule.
    fn normal_equation_oracle(g: &ElementGeometry, field: impl Fn(Point) -> f64, j: usize) -> Vec<f64> {
        let fine = QuadratureRule::triangle(40);
        let basis = ReferenceBasis::new(1).unwrap();
        let t = basis.eval(&fine.points, 0);
        let mut m = crate::linalg::DenseMatrix::zeros(3);
        let mut b = vec![0.0; 3];
        for (q, xh) in fine.points.iter().enumerate() {
            let w = fine.weights[q] * g.det;
            let fx = field(g.to_physical(*xh));
            for i in 0..3 {
                b[i] += w * fx * t.value(q, j) * t.value(q, i);
                for l in 0..3 {
                    m[(i, l)] += w * t.value(q, i) * t.value(q, l);
                }
            }
        }
        dense_solve(&m, &[b]).unwrap().remove(0)
    }

    #[test]
    fn log_coefficient_matches_normal_equations() {
        let a = test1().coefficient;
        let g = ElementGeometry::new([[0.125, 0.25], [0.25, 0.25], [0.25, 0.375]]).unwrap();
        let oracle = normal_equation_oracle(&g, |x| a.eval(x)[1][1], 0);
        let p = LocalProjector::new(1, 30).unwrap();
        let pm = p.project_matrix_times_basis(&g, &a, 0);
        for (x, y) in pm[1][1].iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        // the default rule stays close even on an element touching the peak at x = 1/2
        let g = ElementGeometry::new([[0.375, 0.25], [0.5, 0.25], [0.5, 0.375]]).unwrap();
        let oracle = normal_equation_oracle(&g, |x| a.eval(x)[1][1], 0);
        let pm = LocalProjector::new(1, 4).unwrap().project_matrix_times_basis(&g, &a, 0);
        for (x, y) in pm[1][1].iter().zip(&oracle) {
            assert!((x - y).abs() < 0.05 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn projection_is_local() {
        let space = DgSpace::new(Mesh::build_criss_cross(4).unwrap(), 1).unwrap();
        let target = 5;
        let g5 = *space.geometry(target);
        let inside = move |x: Point| {
            let r = g5.to_reference(x);
            r[0] > -1e-12 && r[1] > -1e-12 && r[0] + r[1] < 1.0 + 1e-12
        };
        let c = project_global(&space, |x| if inside(x) { x[0] * x[1] + 1.0 } else { 0.0 }).unwrap();
        for k in 0..space.mesh().n_elements() {
            let block = &c[space.dofmap().range(k)];
            if k == target {
                assert!(block.iter().any(|v| v.abs() > 0.1));
            } else {
                assert!(block.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn piecewise_constant_projection() {
        let p0 = LocalProjector::new(0, 4).unwrap();
        let g = ElementGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        // mean of x over the reference triangle is 1/3
        let c = p0.project_scalar(&g, |x| x[0]);
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn mass_matrix_is_spd() {
        for k in 0..=3 {
            let p = LocalProjector::new(k, 2 * k + 2).unwrap();
            let m = p.mass_matrix(&ElementGeometry::new([[0.0, 0.0], [0.5, 0.0], [0.5, 0.5]]).unwrap());
            assert!(m.is_symmetric(1e-15));
            let n = m.dim();
            let ones = vec![1.0; n];
            let s: f64 = m.matvec(&ones).iter().sum();
            assert!((s - 0.125).abs() < 1e-14, "sum of entries is the area");
            m.lu().unwrap();
        }
    }
}
