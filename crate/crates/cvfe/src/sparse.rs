//! Compressed-row sparse matrices and a pivoting direct solver.
//!
//! Matrices are built from coordinate triplets (duplicates summed) and stored
//! in CSR layout with sorted, unique column indices per row. The solve path
//! hands a CSC view of the same data to faer's sparse LU with partial
//! pivoting; the symbolic factorization is cached so repeated solves with an
//! unchanged sparsity pattern only pay for the numeric phase.

use faer::linalg::solvers::Solve as _;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("triplet index ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("matrix is structurally singular at pivot {index}")]
    StructurallySingular { index: usize },
    #[error("matrix is numerically singular (solve produced non-finite entries)")]
    NumericallySingular,
    #[error("expected a square matrix, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    RhsLength { expected: usize, got: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
}

/// Square or rectangular sparse matrix in compressed-row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates are summed (in input order); the resulting
    /// layout depends only on the coordinate set, not on triplet order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        for &(row, col, _) in triplets {
            if row >= nrows || col >= ncols {
                return Err(SparseError::IndexOutOfRange {
                    row,
                    col,
                    nrows,
                    ncols,
                });
            }
        }
        // bucket by row, keeping input order within each row (stable)
        let mut counts = vec![0usize; nrows + 1];
        for &(row, _, _) in triplets {
            counts[row + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut slots = counts[..nrows].to_vec();
        let mut row_cols: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
        for &(row, col, val) in triplets {
            row_cols[slots[row]] = (col, val);
            slots[row] += 1;
        }

        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for r in 0..nrows {
            let chunk = &mut row_cols[counts[r]..counts[r + 1]];
            chunk.sort_by_key(|&(col, _)| col);
            let mut i = 0;
            while i < chunk.len() {
                let col = chunk[i].0;
                let mut sum = 0.0;
                while i < chunk.len() && chunk[i].0 == col {
                    sum += chunk[i].1;
                    i += 1;
                }
                col_indices.push(col);
                values.push(sum);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds an all-zero matrix with the sparsity pattern given by `entries`.
    ///
    /// Duplicate coordinates collapse into a single slot. Intended for
    /// assembly workspaces that are refilled with [`SparseMatrix::add_at`].
    pub fn zeros_with_pattern(
        nrows: usize,
        ncols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, SparseError> {
        let triplets: Vec<(usize, usize, f64)> =
            entries.into_iter().map(|(r, c)| (r, c, 0.0)).collect();
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
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

    /// Zeroes all stored values, keeping the pattern.
    pub fn reset(&mut self) {
        self.values.fill(0.0);
    }

    /// Adds `value` to the stored entry at `(row, col)`.
    ///
    /// Panics if the entry is not part of the sparsity pattern; assembly
    /// patterns must cover every coordinate written to.
    #[inline]
    pub fn add_at(&mut self, row: usize, col: usize, value: f64) {
        let lo = self.row_offsets[row];
        let hi = self.row_offsets[row + 1];
        match self.col_indices[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k] += value,
            Err(_) => panic!("entry ({row}, {col}) not in sparsity pattern"),
        }
    }

    /// Returns the stored entry at `(row, col)`, or 0 if outside the pattern.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_offsets[row];
        let hi = self.row_offsets[row + 1];
        match self.col_indices[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// Matrix-vector product `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// Max absolute row sum.
    pub fn infinity_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                self.values[self.row_offsets[r]..self.row_offsets[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum()
            })
            .fold(0.0, f64::max)
    }

    /// Index of the first row with no stored entries, if any.
    fn first_empty_row(&self) -> Option<usize> {
        (0..self.nrows).find(|&r| self.row_offsets[r] == self.row_offsets[r + 1])
    }
}

/// Solves `A x = b` by sparse LU with partial pivoting.
pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SparseError> {
    DirectSolver::new().solve(a, b)
}

/// Reusable direct solver.
///
/// Caches the CSR-to-CSC value permutation and the symbolic LU; repeated
/// solves with the same sparsity pattern skip the analysis phase.
#[derive(Default)]
pub struct DirectSolver {
    cache: Option<SolverCache>,
}

struct SolverCache {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    col_ptrs: Vec<usize>,
    row_indices: Vec<usize>,
    csr_to_csc: Vec<usize>,
    csc_values: Vec<f64>,
    symbolic: SymbolicLu<usize>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self { cache: None }
    }

    pub fn solve(&mut self, a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        if a.nrows != a.ncols {
            return Err(SparseError::NotSquare {
                nrows: a.nrows,
                ncols: a.ncols,
            });
        }
        if b.len() != a.nrows {
            return Err(SparseError::RhsLength {
                expected: a.nrows,
                got: b.len(),
            });
        }
        if let Some(row) = a.first_empty_row() {
            return Err(SparseError::StructurallySingular { index: row });
        }

        let pattern_matches = self.cache.as_ref().is_some_and(|c| {
            c.row_offsets == a.row_offsets && c.col_indices == a.col_indices
        });
        if !pattern_matches {
            self.cache = Some(Self::build_cache(a)?);
        }
        let cache = self.cache.as_mut().expect("cache just built");

        for (k, &dst) in cache.csr_to_csc.iter().enumerate() {
            cache.csc_values[dst] = a.values[k];
        }

        let n = a.nrows;
        let symbolic_view = SymbolicSparseColMatRef::new_checked(
            n,
            n,
            &cache.col_ptrs,
            None,
            &cache.row_indices,
        );
        let mat = SparseColMatRef::new(symbolic_view, &cache.csc_values);
        let lu = Lu::try_new_with_symbolic(cache.symbolic.clone(), mat)
            .map_err(|e| SparseError::Factorization(format!("{e:?}")))?;

        let mut rhs = faer::Mat::from_fn(n, 1, |i, _| b[i]);
        lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SparseError::NumericallySingular);
        }
        Ok(x)
    }

    fn build_cache(a: &SparseMatrix) -> Result<SolverCache, SparseError> {
        let n = a.nrows;
        let nnz = a.nnz();
        // counting transpose: CSR -> CSC
        let mut col_ptrs = vec![0usize; n + 1];
        for &c in &a.col_indices {
            col_ptrs[c + 1] += 1;
        }
        for c in 0..n {
            col_ptrs[c + 1] += col_ptrs[c];
        }
        let mut next = col_ptrs[..n].to_vec();
        let mut row_indices = vec![0usize; nnz];
        let mut csr_to_csc = vec![0usize; nnz];
        for r in 0..n {
            for k in a.row_offsets[r]..a.row_offsets[r + 1] {
                let c = a.col_indices[k];
                row_indices[next[c]] = r;
                csr_to_csc[k] = next[c];
                next[c] += 1;
            }
        }
        let symbolic_view =
            SymbolicSparseColMatRef::new_checked(n, n, &col_ptrs, None, &row_indices);
        let symbolic = SymbolicLu::try_new(symbolic_view).map_err(|e| match e {
            faer::sparse::FaerError::IndexOverflow => {
                SparseError::Factorization("index overflow".into())
            }
            other => SparseError::Factorization(format!("{other:?}")),
        })?;
        Ok(SolverCache {
            row_offsets: a.row_offsets.clone(),
            col_indices: a.col_indices.clone(),
            col_ptrs,
            row_indices,
            csr_to_csc,
            csc_values: vec![0.0; nnz],
            symbolic,
        })
    }
}
