//! Discontinuous piecewise-polynomial space on a [`Mesh`]: reference basis,
//! quadrature, affine element maps and the element-major dof layout.

mod basis;
mod quadrature;

pub use basis::{eval_basis, n_loc, BasisTables, Gradient, Hessian, ReferenceBasis, MAX_DEGREE};
pub use quadrature::{gauss_legendre, QuadratureRule, SegmentRule};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Affine map `x = origin + J x_hat` of one element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub origin: Point,
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Result<Self> {
        let [a, b, c] = vertices;
        let jacobian = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let scale = jacobian.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det > 1e-14 * scale * scale) {
            return Err(Error::DegenerateElement { element: usize::MAX, area: 0.5 * det });
        }
        let inverse = [
            [jacobian[1][1] / det, -jacobian[0][1] / det],
            [-jacobian[1][0] / det, jacobian[0][0] / det],
        ];
        Ok(Self { origin: a, jacobian, inverse, det })
    }

    pub fn to_physical(&self, xh: [f64; 2]) -> Point {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xh[0] + j[0][1] * xh[1],
            self.origin[1] + j[1][0] * xh[0] + j[1][1] * xh[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let g = &self.inverse;
        [g[0][0] * d[0] + g[0][1] * d[1], g[1][0] * d[0] + g[1][1] * d[1]]
    }

    /// `J^{-T} g`
    pub fn push_gradient(&self, g: Gradient) -> Gradient {
        let i = &self.inverse;
        [i[0][0] * g[0] + i[1][0] * g[1], i[0][1] * g[0] + i[1][1] * g[1]]
    }

    /// `J^{-T} H J^{-1}`; exact for affine maps.
    pub fn push_hessian(&self, h: Hessian) -> Hessian {
        let i = &self.inverse;
        let mut out = [[0.0; 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, o) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        s += i[c][a] * h[c][d] * i[d][b];
                    }
                }
                *o = s;
            }
        }
        out
    }
}

/// Physical tables on one element.
#[derive(Debug, Clone)]
pub struct PhysicalTables {
    pub points: Vec<Point>,
    pub n_loc: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<Gradient>,
    pub hessians: Vec<Hessian>,
}

impl PhysicalTables {
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

/// Maps reference tables evaluated at `ref_points` onto the element.
pub fn push_forward(geom: &ElementGeometry, ref_points: &[[f64; 2]], tables: &BasisTables) -> PhysicalTables {
    PhysicalTables {
        points: ref_points.iter().map(|&p| geom.to_physical(p)).collect(),
        n_loc: tables.n_loc,
        values: tables.values.clone(),
        gradients: tables.gradients.iter().map(|&g| geom.push_gradient(g)).collect(),
        hessians: tables.hessians.iter().map(|&h| geom.push_hessian(h)).collect(),
    }
}

/// Element-major dof numbering: `global = element * n_loc + local`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_loc: usize,
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        self.n_elements * self.n_loc
    }

    pub fn global(&self, element: usize, local: usize) -> usize {
        element * self.n_loc + local
    }

    pub fn range(&self, element: usize) -> std::ops::Range<usize> {
        element * self.n_loc..(element + 1) * self.n_loc
    }
}

/// Reference tables for one pair of element/face rules.
#[derive(Debug, Clone)]
pub struct QuadContext {
    pub elem_rule: QuadratureRule,
    pub face_rule: SegmentRule,
    pub elem_tables: BasisTables,
    /// `edge_tables[i][r]`: traces on local edge `i`, traversed forwards (`r = 0`)
    /// or backwards (`r = 1`) with respect to the face rule.
    edge_tables: Vec<[BasisTables; 2]>,
    edge_points: Vec<[Vec<[f64; 2]>; 2]>,
}

impl QuadContext {
    pub fn new(basis: &ReferenceBasis, elem_degree: usize, face_degree: usize) -> Self {
        let elem_rule = QuadratureRule::triangle(elem_degree);
        let face_rule = SegmentRule::with_degree(face_degree);
        let elem_tables = basis.eval(&elem_rule.points, 2);
        let mut edge_tables = Vec::with_capacity(3);
        let mut edge_points = Vec::with_capacity(3);
        for i in 0..3 {
            let (a, b) = (REF_VERTICES[i], REF_VERTICES[(i + 1) % 3]);
            let along = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let fwd: Vec<_> = face_rule.points.iter().map(|&t| along(t)).collect();
            let bwd: Vec<_> = face_rule.points.iter().map(|&t| along(1.0 - t)).collect();
            edge_tables.push([basis.eval(&fwd, 1), basis.eval(&bwd, 1)]);
            edge_points.push([fwd, bwd]);
        }
        Self { elem_rule, face_rule, elem_tables, edge_tables, edge_points }
    }
}

/// Traces of the basis of one element on one face, at the face rule's points.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub points: Vec<Point>,
    /// Physical weights (reference weight times face length).
    pub weights: Vec<f64>,
    pub n_loc: usize,
    pub values: Vec<f64>,
    pub gradients: Vec<Gradient>,
    /// Outward normal of this element on the face.
    pub normal: Point,
}

impl FaceTrace {
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_loc..(q + 1) * self.n_loc]
    }

    pub fn gradients_at(&self, q: usize) -> &[Gradient] {
        &self.gradients[q * self.n_loc..(q + 1) * self.n_loc]
    }
}

/// Physical tables at the element rule, including physical weights.
#[derive(Debug, Clone)]
pub struct ElementEval {
    pub weights: Vec<f64>,
    pub tables: PhysicalTables,
}

/// The broken polynomial space `V_h` of degree `k` on a mesh.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Mesh,
    basis: ReferenceBasis,
    geometry: Vec<ElementGeometry>,
    quad: QuadContext,
}

impl DgSpace {
    /// Space with the default rules of degree `2k + 2` on elements and faces.
    pub fn new(mesh: Mesh, degree: usize) -> Result<Self> {
        Self::with_quadrature(mesh, degree, 2 * degree + 2, 2 * degree + 2)
    }

    pub fn with_quadrature(mesh: Mesh, degree: usize, elem_degree: usize, face_degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::UnsupportedDegree(0));
        }
        let basis = ReferenceBasis::new(degree)?;
        let geometry = (0..mesh.n_elements())
            .map(|k| {
                ElementGeometry::new(mesh.element_vertices(k)).map_err(|_| Error::DegenerateElement {
                    element: k,
                    area: mesh.element_area(k),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let quad = QuadContext::new(&basis, elem_degree, face_degree);
        Ok(Self { mesh, basis, geometry, quad })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_loc(&self) -> usize {
        self.basis.n_loc()
    }

    pub fn dofmap(&self) -> DofMap {
        DofMap { n_elements: self.mesh.n_elements(), n_loc: self.n_loc() }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap().n_dofs()
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    /// Default quadrature context (`2k + 2` unless overridden).
    pub fn quad(&self) -> &QuadContext {
        &self.quad
    }

    pub fn quad_context(&self, elem_degree: usize, face_degree: usize) -> QuadContext {
        QuadContext::new(&self.basis, elem_degree, face_degree)
    }

    pub fn element_eval(&self, k: usize, ctx: &QuadContext) -> ElementEval {
        let g = &self.geometry[k];
        ElementEval {
            weights: ctx.elem_rule.weights.iter().map(|w| w * g.det).collect(),
            tables: push_forward(g, &ctx.elem_rule.points, &ctx.elem_tables),
        }
    }

    /// Traces of element `k`'s basis on face `f`.
    pub fn face_trace(&self, f: usize, k: usize, ctx: &QuadContext) -> FaceTrace {
        let face = &self.mesh.faces()[f];
        let local = self.mesh.element_faces(k).iter().position(|&e| e == f).expect("face not on element");
        let reversed = usize::from(face.elements.0 != k);
        let tables = &ctx.edge_tables[local][reversed];
        let g = &self.geometry[k];
        let (p, q) = (self.mesh.vertices()[face.vertices[0]], self.mesh.vertices()[face.vertices[1]]);
        FaceTrace {
            points: ctx.face_rule.points.iter().map(|&t| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]).collect(),
            weights: ctx.face_rule.weights.iter().map(|w| w * face.length).collect(),
            n_loc: tables.n_loc,
            values: tables.values.clone(),
            gradients: tables.gradients.iter().map(|&d| g.push_gradient(d)).collect(),
            normal: face.normal_from(k),
        }
    }

    /// Reference coordinates of face quadrature points as seen from element `k`.
    pub fn face_reference_points(&self, f: usize, k: usize, ctx: &QuadContext) -> Vec<[f64; 2]> {
        let face = &self.mesh.faces()[f];
        let local = self.mesh.element_faces(k).iter().position(|&e| e == f).expect("face not on element");
        ctx.edge_points[local][usize::from(face.elements.0 != k)].clone()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64 + Sync) -> Vec<f64> {
        let nodes = self.basis.nodes();
        (0..self.mesh.n_elements())
            .flat_map(|k| {
                let g = self.geometry[k];
                nodes.iter().map(move |&n| g.to_physical(n)).collect::<Vec<_>>()
            })
            .map(f)
            .collect()
    }

    /// Value, gradient and Hessian of `v` restricted to element `k` at physical point `x`.
    pub fn evaluate(&self, v: &[f64], k: usize, x: Point) -> (f64, Gradient, Hessian) {
        let g = &self.geometry[k];
        let t = self.basis.eval(&[g.to_reference(x)], 2);
        let c = &v[self.dofmap().range(k)];
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        let mut hess = [[0.0; 2]; 2];
        for i in 0..t.n_loc {
            val += c[i] * t.values[i];
            let gi = g.push_gradient(t.gradients[i]);
            let hi = g.push_hessian(t.hessians[i]);
            for a in 0..2 {
                grad[a] += c[i] * gi[a];
                for b in 0..2 {
                    hess[a][b] += c[i] * hi[a][b];
                }
            }
        }
        (val, grad, hess)
    }
}
