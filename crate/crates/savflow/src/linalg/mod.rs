//! Minimal sparse numerical kernel: CSR matrices, triplet assembly, block
//! systems, a sparse direct LU and a GMRES fallback.
//!
//! Everything is `f64`; the identity checks downstream need full double
//! precision. Matrices are immutable after finalization and safe to share
//! across threads.

mod gmres;
mod lu;

pub use gmres::{solve_gmres, JacobiPreconditioner, Preconditioner};
pub use lu::{solve_sparse_lu, FillOrdering, LuFactorization};

use thiserror::Error;

/// Errors produced by the linear algebra kernel.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is structurally or numerically singular at pivot {index}")]
    SingularPivot { index: usize },
    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("inconsistent block at ({row},{col}): expected {expected_rows}x{expected_cols}, found {found_rows}x{found_cols}")]
    InconsistentBlocks {
        row: usize,
        col: usize,
        expected_rows: usize,
        expected_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
}

/// Compressed sparse row matrix.
///
/// Invariants: `row_offsets` has length `n_rows + 1` and is nondecreasing,
/// column indices are strictly increasing within each row, and
/// `values.len() == row_offsets[n_rows]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structural
    /// invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        let m = Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), LinalgError> {
        if self.row_offsets.len() != self.n_rows + 1 {
            return Err(LinalgError::InvalidCsr(format!(
                "row_offsets length {} != n_rows+1 = {}",
                self.row_offsets.len(),
                self.n_rows + 1
            )));
        }
        if self.row_offsets[0] != 0 {
            return Err(LinalgError::InvalidCsr("row_offsets[0] != 0".into()));
        }
        for r in 0..self.n_rows {
            if self.row_offsets[r] > self.row_offsets[r + 1] {
                return Err(LinalgError::InvalidCsr(format!(
                    "row_offsets decreasing at row {r}"
                )));
            }
            let cols = &self.col_indices[self.row_offsets[r]..self.row_offsets[r + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(LinalgError::InvalidCsr(format!(
                        "columns not strictly increasing in row {r}"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= self.n_cols {
                    return Err(LinalgError::InvalidCsr(format!(
                        "column index {last} out of bounds in row {r}"
                    )));
                }
            }
        }
        let nnz = *self.row_offsets.last().unwrap();
        if self.col_indices.len() != nnz || self.values.len() != nnz {
            return Err(LinalgError::InvalidCsr(format!(
                "index/value arrays ({}, {}) do not match row_offsets nnz {}",
                self.col_indices.len(),
                self.values.len(),
                nnz
            )));
        }
        Ok(())
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Single-column matrix from a dense vector (zeros dropped).
    pub fn from_column(n_rows: usize, column: &[f64]) -> Self {
        assert_eq!(column.len(), n_rows);
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &v in column {
            if v != 0.0 {
                col_indices.push(0);
                values.push(v);
            }
            row_offsets.push(values.len());
        }
        Self {
            n_rows,
            n_cols: 1,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Empty (all-zero) matrix.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to the stored values; the pattern stays fixed.
    /// Used by constraint application while a step system is being finalized.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Iterates over the `(column, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// Matrix-vector product `A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_cols {
            return Err(LinalgError::DimensionMismatch {
                context: "spmv",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let lo = self.row_offsets[r];
            let hi = self.row_offsets[r + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// Transposed matrix-vector product `A^T x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.n_rows {
            return Err(LinalgError::DimensionMismatch {
                context: "spmv_transpose",
                expected: self.n_rows,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n_cols];
        for r in 0..self.n_rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                y[self.col_indices[k]] += self.values[k] * xr;
            }
        }
        Ok(y)
    }

    /// Explicit transpose.
    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts.clone();
        let nnz = self.nnz();
        let mut col_indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = counts;
        for r in 0..self.n_rows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                let dst = next[c];
                col_indices[dst] = r;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Entrywise linear combination `sum_i alpha_i A_i`; patterns are merged.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix, LinalgError> {
        assert!(!terms.is_empty(), "linear_combination of no terms");
        let n_rows = terms[0].1.n_rows;
        let n_cols = terms[0].1.n_cols;
        for &(_, m) in terms {
            if m.n_rows != n_rows || m.n_cols != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    context: "linear_combination",
                    expected: n_rows,
                    found: m.n_rows,
                });
            }
        }
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        row_offsets.push(0usize);
        let cap = terms.iter().map(|&(_, m)| m.nnz()).max().unwrap_or(0);
        let mut col_indices = Vec::with_capacity(cap);
        let mut values = Vec::with_capacity(cap);
        // dense scatter accumulator per row
        let mut acc = vec![0.0f64; n_cols];
        let mut marked = vec![false; n_cols];
        let mut pattern: Vec<usize> = Vec::new();
        for r in 0..n_rows {
            pattern.clear();
            for &(alpha, m) in terms {
                for k in m.row_offsets[r]..m.row_offsets[r + 1] {
                    let c = m.col_indices[k];
                    if !marked[c] {
                        marked[c] = true;
                        acc[c] = 0.0;
                        pattern.push(c);
                    }
                    acc[c] += alpha * m.values[k];
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_indices.push(c);
                values.push(acc[c]);
                marked[c] = false;
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense copy, row-major. Intended for small matrices in tests and the
    /// inf-sup eigensolve.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                d[r][c] = v;
            }
        }
        d
    }

    /// Max-norm of `A x - b`, a convenience for residual checks.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> Result<f64, LinalgError> {
        let ax = self.spmv(x)?;
        Ok(ax
            .iter()
            .zip(b)
            .map(|(a, bb)| (a - bb).abs())
            .fold(0.0, f64::max))
    }
}

/// Triplet accumulator; duplicate `(row, col)` entries are summed on
/// finalization.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n_rows: usize,
    n_cols: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            triplets: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            triplets: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.triplets.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Sums duplicates and produces the CSR matrix.
    pub fn finalize(mut self) -> SparseMatrix {
        self.triplets
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::with_capacity(self.triplets.len());
        let mut values = Vec::with_capacity(self.triplets.len());
        let mut it = self.triplets.iter().peekable();
        while let Some(&(r, c, v)) = it.next() {
            let mut sum = v;
            while let Some(&&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    sum += v2;
                    it.next();
                } else {
                    break;
                }
            }
            col_indices.push(c);
            values.push(sum);
            row_offsets[r + 1] = col_indices.len();
        }
        // rows with no entries inherit the previous offset
        for r in 0..self.n_rows {
            if row_offsets[r + 1] < row_offsets[r] {
                row_offsets[r + 1] = row_offsets[r];
            }
        }
        let mut run = 0usize;
        for off in row_offsets.iter_mut() {
            if *off < run {
                *off = run;
            }
            run = *off;
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }
}

/// A block grid of optional matrix references plus a right-hand side,
/// assembled into one monolithic CSR system.
#[derive(Debug)]
pub struct BlockSystem<'a> {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    blocks: Vec<Option<(f64, &'a SparseMatrix)>>,
    rhs: Vec<f64>,
}

impl<'a> BlockSystem<'a> {
    /// Creates an empty grid with the given block row/column sizes. The RHS
    /// is zero-initialized at the total row dimension.
    pub fn new(row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Self {
        let total_rows: usize = row_sizes.iter().sum();
        let n_blocks = row_sizes.len() * col_sizes.len();
        Self {
            row_sizes,
            col_sizes,
            blocks: vec![None; n_blocks],
            rhs: vec![0.0; total_rows],
        }
    }

    pub fn set_block(&mut self, i: usize, j: usize, m: &'a SparseMatrix) {
        self.set_block_scaled(i, j, 1.0, m);
    }

    /// Places `alpha * m` at grid position `(i, j)`.
    pub fn set_block_scaled(&mut self, i: usize, j: usize, alpha: f64, m: &'a SparseMatrix) {
        let idx = i * self.col_sizes.len() + j;
        self.blocks[idx] = Some((alpha, m));
    }

    /// Copies `values` into the RHS slice of block row `i`.
    pub fn set_rhs(&mut self, i: usize, values: &[f64]) {
        let off: usize = self.row_sizes[..i].iter().sum();
        assert_eq!(values.len(), self.row_sizes[i]);
        self.rhs[off..off + values.len()].copy_from_slice(values);
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Assembles the monolithic matrix and RHS, placing each block at the
    /// cumulative offsets; absent blocks contribute nothing.
    pub fn assemble(&self) -> Result<(SparseMatrix, Vec<f64>), LinalgError> {
        let nb_cols = self.col_sizes.len();
        for (idx, b) in self.blocks.iter().enumerate() {
            if let Some((_, m)) = b {
                let i = idx / nb_cols;
                let j = idx % nb_cols;
                if m.n_rows() != self.row_sizes[i] || m.n_cols() != self.col_sizes[j] {
                    return Err(LinalgError::InconsistentBlocks {
                        row: i,
                        col: j,
                        expected_rows: self.row_sizes[i],
                        expected_cols: self.col_sizes[j],
                        found_rows: m.n_rows(),
                        found_cols: m.n_cols(),
                    });
                }
            }
        }
        let total_rows: usize = self.row_sizes.iter().sum();
        let total_cols: usize = self.col_sizes.iter().sum();
        let mut col_offsets = Vec::with_capacity(nb_cols);
        let mut acc = 0usize;
        for &s in &self.col_sizes {
            col_offsets.push(acc);
            acc += s;
        }
        let nnz: usize = self
            .blocks
            .iter()
            .filter_map(|b| b.map(|(_, m)| m.nnz()))
            .sum();
        let mut row_offsets = Vec::with_capacity(total_rows + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (i, &rows) in self.row_sizes.iter().enumerate() {
            for r in 0..rows {
                for j in 0..nb_cols {
                    if let Some((alpha, m)) = self.blocks[i * nb_cols + j] {
                        let off = col_offsets[j];
                        for (c, v) in m.row(r) {
                            col_indices.push(off + c);
                            values.push(alpha * v);
                        }
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        let matrix = SparseMatrix {
            n_rows: total_rows,
            n_cols: total_cols,
            row_offsets,
            col_indices,
            values,
        };
        Ok((matrix, self.rhs.clone()))
    }
}

/// Convenience: assemble and return the monolithic pair.
pub fn assemble_block(system: &BlockSystem<'_>) -> Result<(SparseMatrix, Vec<f64>), LinalgError> {
    system.assemble()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
