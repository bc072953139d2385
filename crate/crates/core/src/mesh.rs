//! Conforming triangulations of the unit square and their face skeleton.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary,
}

/// An edge of the triangulation.
///
/// `normal` is the outward unit normal of `elements.0`; for interior faces the
/// second element sees `-normal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub vertices: [usize; 2],
    pub elements: (usize, Option<usize>),
    pub normal: Point,
    pub length: f64,
    pub kind: FaceKind,
}

impl Face {
    pub fn is_interior(&self) -> bool {
        self.kind == FaceKind::Interior
    }

    /// The element across the face from `element`, if any.
    pub fn neighbor_of(&self, element: usize) -> Option<usize> {
        match self.elements {
            (a, Some(b)) if a == element => Some(b),
            (a, Some(b)) if b == element => Some(a),
            _ => None,
        }
    }

    /// Outward unit normal as seen from `element` (which must be adjacent).
    pub fn normal_from(&self, element: usize) -> Point {
        if self.elements.0 == element {
            self.normal
        } else {
            debug_assert_eq!(self.elements.1, Some(element));
            [-self.normal[0], -self.normal[1]]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    faces: Vec<Face>,
    /// `element_faces[k][i]` is the face on local edge `(v_i, v_{i+1})`.
    element_faces: Vec<[usize; 3]>,
    element_diameters: Vec<f64>,
    level: usize,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Mesh {
    /// Uniform grid of `n x n` cells, each split along the diagonal from its
    /// lower-left to its upper-right corner: `2 n^2` triangles.
    pub fn build_criss_cross(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMesh);
        }
        let nv = n + 1;
        let h = 1.0 / n as f64;
        let vertices = (0..nv)
            .flat_map(|j| (0..nv).map(move |i| [i as f64 * h, j as f64 * h]))
            .collect();
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * nv + i;
                let (b, c, d) = (a + 1, a + nv + 1, a + nv);
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        Self::from_parts(vertices, elements, 0)
    }

    /// Builds the skeleton and validates orientation and conformity.
    pub fn from_parts(vertices: Vec<Point>, elements: Vec<[usize; 3]>, level: usize) -> Result<Self> {
        for (k, el) in elements.iter().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidConfig(format!("element {k} references a missing vertex")));
            }
            let area = signed_area(vertices[el[0]], vertices[el[1]], vertices[el[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: k, area });
            }
        }
        let faces_and_map = skeleton_of(&vertices, &elements)?;
        let element_diameters = elements
            .iter()
            .map(|el| {
                let p = el.map(|v| vertices[v]);
                dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]))
            })
            .collect();
        Ok(Self {
            vertices,
            elements,
            faces: faces_and_map.0,
            element_faces: faces_and_map.1,
            element_diameters,
            level,
        })
    }

    /// Red refinement: every triangle is split into four through its edge midpoints.
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        for &[v0, v1, v2] in &self.elements {
            let m01 = mid(v0, v1, &mut vertices);
            let m12 = mid(v1, v2, &mut vertices);
            let m20 = mid(v2, v0, &mut vertices);
            elements.push([v0, m01, m20]);
            elements.push([m01, v1, m12]);
            elements.push([m20, m12, v2]);
            elements.push([m01, m12, m20]);
        }
        Self::from_parts(vertices, elements, self.level + 1).expect("refinement preserves conformity")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn element_faces(&self, k: usize) -> [usize; 3] {
        self.element_faces[k]
    }

    pub fn element_diameters(&self) -> &[f64] {
        &self.element_diameters
    }

    /// Global mesh size `max_K h_K`.
    pub fn h_max(&self) -> f64 {
        self.element_diameters.iter().copied().fold(0.0, f64::max)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn element_vertices(&self, k: usize) -> [Point; 3] {
        self.elements[k].map(|v| self.vertices[v])
    }

    pub fn element_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        signed_area(a, b, c)
    }

    pub fn inradius(&self, k: usize) -> f64 {
        let [a, b, c] = self.element_vertices(k);
        2.0 * signed_area(a, b, c) / (dist(a, b) + dist(b, c) + dist(c, a))
    }

    /// Elements sharing a face with `k`, in local-edge order.
    pub fn face_neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_faces[k].iter().filter_map(move |&f| self.faces[f].neighbor_of(k))
    }

    /// Plain-text OFF listing: vertices (z = 0) followed by element triples.
    pub fn write_off<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "OFF")?;
        writeln!(w, "{} {} 0", self.vertices.len(), self.elements.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", v[0], v[1])?;
        }
        for e in &self.elements {
            writeln!(w, "3 {} {} {}", e[0], e[1], e[2])?;
        }
        Ok(())
    }
}

/// Face list of a triangulation with outward normals from each face's first element.
pub fn skeleton(mesh: &Mesh) -> Result<Vec<Face>> {
    skeleton_of(&mesh.vertices, &mesh.elements).map(|(faces, _)| faces)
}

fn skeleton_of(vertices: &[Point], elements: &[[usize; 3]]) -> Result<(Vec<Face>, Vec<[usize; 3]>)> {
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * elements.len() / 2 + 4);
    let mut faces: Vec<Face> = Vec::with_capacity(3 * elements.len() / 2 + 4);
    let mut element_faces = vec![[usize::MAX; 3]; elements.len()];
    for (k, el) in elements.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (el[i], el[(i + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match edge_index.get(&key) {
                None => {
                    let (p, q) = (vertices[a], vertices[b]);
                    let length = dist(p, q);
                    let normal = [(q[1] - p[1]) / length, -(q[0] - p[0]) / length];
                    edge_index.insert(key, faces.len());
                    element_faces[k][i] = faces.len();
                    faces.push(Face {
                        vertices: [a, b],
                        elements: (k, None),
                        normal,
                        length,
                        kind: FaceKind::Boundary,
                    });
                }
                Some(&f) => {
                    let face = &mut faces[f];
                    // a conforming neighbor traverses the shared edge in the opposite direction
                    if face.elements.1.is_some() || face.vertices != [b, a] {
                        return Err(Error::NonConforming(key.0, key.1));
                    }
                    face.elements.1 = Some(k);
                    face.kind = FaceKind::Interior;
                    element_faces[k][i] = f;
                }
            }
        }
    }
    Ok((faces, element_faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_area(m: &Mesh) -> f64 {
        (0..m.n_elements()).map(|k| m.element_area(k)).sum()
    }

    fn counts(m: &Mesh) -> (usize, usize) {
        let interior = m.faces().iter().filter(|f| f.is_interior()).count();
        (interior, m.faces().len() - interior)
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(Mesh::build_criss_cross(0), Err(Error::EmptyMesh)));
    }

    #[test]
    fn single_cell() {
        let m = Mesh::build_criss_cross(1).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert!((total_area(&m) - 1.0).abs() < 1e-15);
        assert_eq!(counts(&m), (1, 4));
    }

    #[test]
    fn element_and_vertex_counts() {
        assert_eq!(Mesh::build_criss_cross(8).unwrap().n_elements(), 128);
        let m = Mesh::build_criss_cross(16).unwrap();
        assert_eq!((m.n_elements(), m.vertices().len()), (512, 289));
        assert_eq!(counts(&Mesh::build_criss_cross(2).unwrap()).0, 8);
    }

    #[test]
    fn refinement_counts_and_sizes() {
        let m1 = Mesh::build_criss_cross(1).unwrap();
        let m2 = m1.refine();
        assert_eq!(m2.n_elements(), 8);
        assert!((m2.h_max() - 0.5 * m1.h_max()).abs() < 1e-15);
        let m = Mesh::build_criss_cross(8).unwrap();
        assert_eq!(m.refine().n_elements(), 512);
        assert_eq!(m.refine().refine().n_elements(), 2048);
    }

    #[test]
    fn refinement_matches_direct_construction() {
        let a = Mesh::build_criss_cross(2).unwrap().refine().refine();
        let b = Mesh::build_criss_cross(8).unwrap();
        assert_eq!(a.vertices().len(), b.vertices().len());
        assert_eq!(counts(&a), counts(&b));
        let mut la: Vec<u64> = a.faces().iter().map(|f| (f.length * 1e12).round() as u64).collect();
        let mut lb: Vec<u64> = b.faces().iter().map(|f| (f.length * 1e12).round() as u64).collect();
        la.sort_unstable();
        lb.sort_unstable();
        assert_eq!(la, lb);
    }

    #[test]
    fn invariants_hold_across_levels() {
        let mut m = Mesh::build_criss_cross(3).unwrap();
        let ratio0 = m.element_diameters()[0] / m.inradius(0);
        for _ in 0..3 {
            assert!((total_area(&m) - 1.0).abs() < 1e-12);
            let adj: usize = m.faces().iter().map(|f| 1 + f.elements.1.is_some() as usize).sum();
            assert_eq!(adj, 3 * m.n_elements());
            for f in m.faces() {
                assert!((f.normal[0].hypot(f.normal[1]) - 1.0).abs() < 1e-14);
                let (k, nb) = f.elements;
                let c = centroid(&m, k);
                let mid = midpoint(&m, f);
                // outward from the first element
                assert!((mid[0] - c[0]) * f.normal[0] + (mid[1] - c[1]) * f.normal[1] > 0.0);
                if let Some(j) = nb {
                    let n2 = f.normal_from(j);
                    assert_eq!([n2[0] + f.normal[0], n2[1] + f.normal[1]], [0.0, 0.0]);
                    let cj = centroid(&m, j);
                    assert!((mid[0] - cj[0]) * n2[0] + (mid[1] - cj[1]) * n2[1] > 0.0);
                } else {
                    let on_boundary = |p: Point| p.iter().any(|&x| x.abs() < 1e-14 || (x - 1.0).abs() < 1e-14);
                    assert!(on_boundary(mid));
                }
            }
            for k in 0..m.n_elements() {
                assert!(m.element_area(k) > 0.0);
                let r = m.element_diameters()[k] / m.inradius(k);
                assert!((r - ratio0).abs() < 1e-9 * ratio0);
            }
            m = m.refine();
        }
    }

    #[test]
    fn nonconforming_input_rejected() {
        // hanging node: the left triangle's long edge is split on the right side
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let elements = vec![[0, 1, 2], [0, 4, 3], [4, 2, 3], [0, 2, 3]];
        assert!(Mesh::from_parts(vertices, elements, 0).is_err());
    }

    #[test]
    fn skeleton_matches_stored_faces() {
        let m = Mesh::build_criss_cross(4).unwrap();
        assert_eq!(skeleton(&m).unwrap(), m.faces());
    }

    #[test]
    fn off_dump_lists_everything() {
        let m = Mesh::build_criss_cross(2).unwrap();
        let mut buf = Vec::new();
        m.write_off(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 2 + 9 + 8);
        assert!(s.starts_with("OFF\n9 8 0\n"));
    }

    fn centroid(m: &Mesh, k: usize) -> Point {
        let [a, b, c] = m.element_vertices(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    fn midpoint(m: &Mesh, f: &Face) -> Point {
        let (p, q) = (m.vertices()[f.vertices[0]], m.vertices()[f.vertices[1]]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }
}
