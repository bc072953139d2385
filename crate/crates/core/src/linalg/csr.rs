use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for t in order {
            let (i, j, v) = triplets[t];
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[i + 1] += 1;
                col_idx.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    /// Builds from raw CSR arrays, checking the structural invariants.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(Error::DimensionMismatch { expected: nrows + 1, found: row_ptr.len() });
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), found: col_idx.len() });
        }
        for i in 0..nrows {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidConfig(format!("row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        });
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(move |(&j, &v)| (j, i, v))
            })
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        (0..self.nrows)
            .flat_map(|i| {
                let (cols, vals) = self.row(i);
                let t = &t;
                cols.iter().zip(vals).map(move |(&j, &v)| (v - t.get(i, j)).abs())
            })
            .chain((0..t.nrows).flat_map(|i| {
                let (cols, vals) = t.row(i);
                cols.iter().zip(vals).map(move |(&j, &v)| (v - self.get(i, j)).abs())
            }))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based indices, 17 significant digits).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mk = |line: usize, msg: &str| Error::MatrixMarket { line: line + 1, msg: msg.to_string() };
        let (_, header) = lines.next().ok_or_else(|| mk(0, "empty input"))?;
        let header = header.map_err(|e| mk(0, &e.to_string()))?;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(mk(0, "expected '%%MatrixMarket matrix coordinate real' header"));
        }
        let symmetric = lower.contains("symmetric");
        let mut size: Option<(usize, usize, usize)> = None;
        let mut triplets = Vec::new();
        for (ln, line) in lines {
            let line = line.map_err(|e| mk(ln, &e.to_string()))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = t.split_whitespace().collect();
            match size {
                None => {
                    if fields.len() != 3 {
                        return Err(mk(ln, "size line needs 3 fields"));
                    }
                    let p = |s: &str| s.parse::<usize>().map_err(|_| mk(ln, "bad integer"));
                    size = Some((p(fields[0])?, p(fields[1])?, p(fields[2])?));
                }
                Some((m, n, _)) => {
                    if fields.len() != 3 {
                        return Err(mk(ln, "entry line needs 3 fields"));
                    }
                    let i: usize = fields[0].parse().map_err(|_| mk(ln, "bad row index"))?;
                    let j: usize = fields[1].parse().map_err(|_| mk(ln, "bad column index"))?;
                    let v: f64 = fields[2].parse().map_err(|_| mk(ln, "bad value"))?;
                    if i == 0 || j == 0 || i > m || j > n {
                        return Err(mk(ln, "index out of range"));
                    }
                    triplets.push((i - 1, j - 1, v));
                    if symmetric && i != j {
                        triplets.push((j - 1, i - 1, v));
                    }
                }
            }
        }
        let (m, n, nnz) = size.ok_or_else(|| mk(0, "missing size line"))?;
        let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
        if stored != nnz {
            return Err(mk(0, &format!("expected {nnz} entries, found {stored}")));
        }
        Ok(Self::from_triplets(m, n, &triplets))
    }
}
