//! Element-block sparse layout shared by every DG operator: the rows of one
//! element couple to its own dofs and to those of its face neighbours.

use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;

/// Dense row block of one element: `rows x (cols.len() * bs)`.
#[derive(Debug, Clone)]
pub(crate) struct BlockRow {
    pub cols: Vec<usize>,
    pub bs: usize,
    pub data: Vec<f64>,
}

impl BlockRow {
    pub fn new(mesh: &Mesh, element: usize, bs: usize) -> Self {
        let mut cols: Vec<usize> = std::iter::once(element).chain(mesh.face_neighbors(element)).collect();
        cols.sort_unstable();
        let data = vec![0.0; bs * cols.len() * bs];
        Self { cols, bs, data }
    }

    fn offset(&self, col_element: usize) -> usize {
        self.cols.binary_search(&col_element).expect("column element outside the stencil")
    }

    /// Mutable view of block `(self, col_element)` as `bs x bs` row-major closure.
    pub fn block(&mut self, col_element: usize) -> BlockMut<'_> {
        let c = self.offset(col_element);
        let stride = self.cols.len() * self.bs;
        BlockMut { data: &mut self.data, base: c * self.bs, stride }
    }
}

pub(crate) struct BlockMut<'a> {
    data: &'a mut [f64],
    base: usize,
    stride: usize,
}

impl BlockMut<'_> {
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.stride + self.base + j] += v;
    }
}

/// Concatenates per-element row blocks (in element order) into CSR.
pub(crate) fn block_csr(n_elements: usize, bs: usize, rows: Vec<BlockRow>) -> CsrMatrix {
    assert_eq!(rows.len(), n_elements);
    let n = n_elements * bs;
    let nnz: usize = rows.iter().map(|r| r.data.len()).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for r in rows {
        let width = r.cols.len() * bs;
        for i in 0..bs {
            for &c in &r.cols {
                col_idx.extend(c * bs..(c + 1) * bs);
            }
            values.extend_from_slice(&r.data[i * width..(i + 1) * width]);
            row_ptr.push(col_idx.len());
        }
    }
    CsrMatrix::from_raw(n, n, row_ptr, col_idx, values).expect("block layout is sorted")
}
