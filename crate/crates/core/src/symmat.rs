//! Compressed sparse row storage for real symmetric matrices.
//!
//! Both triangles are stored. Off-diagonal contributions are always inserted
//! in mirrored pairs and merged in insertion order, so assembled matrices are
//! bitwise symmetric.

use nalgebra::DMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates entries of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymBuilder {
    pub fn new(dim: usize) -> Self {
        SymBuilder { dim, entries: Vec::new() }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        if v != 0.0 {
            self.entries.push((i, i, v));
        }
    }

    /// Adds `v` at `(i, j)` and at `(j, i)`.
    pub fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if i == j {
            self.entries.push((i, i, v));
        } else {
            self.entries.push((i, j, v));
            self.entries.push((j, i, v));
        }
    }

    pub fn build(mut self) -> SymMatrix {
        // Stable: duplicates are merged in insertion order.
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; self.dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            assert!(i < self.dim && j < self.dim, "entry ({i},{j}) outside dimension {}", self.dim);
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymMatrix { dim: self.dim, row_ptr, cols, vals }
    }
}

impl SymMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn identity(dim: usize) -> Self {
        let mut b = SymBuilder::new(dim);
        for i in 0..dim {
            b.add_diag(i, 1.0);
        }
        b.build()
    }

    /// Stores every nonzero of `m`, whether or not `m` is symmetric.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let dim = m.nrows();
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        SymMatrix { dim, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// `P A Pᵀ` where row `i` of the result is row `perm[i]` of `A`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.dim);
        let mut inverse = vec![0; self.dim];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut row_ptr = vec![0; self.dim + 1];
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for (new, &old) in perm.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = self.row(old).map(|(j, v)| (inverse[j], v)).collect();
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr[new + 1] = cols.len();
        }
        SymMatrix { dim: self.dim, row_ptr, cols, vals }
    }

    /// `self - other` entrywise, maximum absolute difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - other.get(i, j)).abs());
            }
            for (j, v) in other.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    /// Submatrix on the given index set, in that order.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let mut position = vec![usize::MAX; self.dim];
        for (p, &i) in idx.iter().enumerate() {
            position[i] = p;
        }
        let mut m = DMatrix::zeros(idx.len(), idx.len());
        for (p, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if position[j] != usize::MAX {
                    m[(p, position[j])] = v;
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_merges_and_mirrors() {
        let mut b = SymBuilder::new(3);
        b.add_diag(0, 1.0);
        b.add_pair(0, 2, 0.1);
        b.add_pair(0, 2, 0.2);
        b.add_pair(1, 1, 4.0);
        b.add_pair(2, 1, 0.0);
        let m = b.build();
        assert_eq!(m.get(0, 2), 0.1 + 0.2);
        assert_eq!(m.get(2, 0), 0.1 + 0.2);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.nnz(), 4);
        assert!(m.is_symmetric());
        assert_eq!(m.bandwidth(), 2);
    }

    #[test]
    fn dense_round_trip_and_permutation() {
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 3.0, 5.0, 0.0, 5.0, 6.0]);
        let m = SymMatrix::from_dense(&d);
        assert_eq!(m.to_dense(), d);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 10.0, 11.0]);
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 0), 6.0);
        assert_eq!(p.get(0, 2), 5.0);
        assert_eq!(p.get(1, 2), 2.0);
        assert!(p.is_symmetric());
        let sub = m.principal_submatrix(&[2, 1]);
        assert_eq!(sub, DMatrix::from_row_slice(2, 2, &[6.0, 5.0, 5.0, 3.0]));
    }

    #[test]
    fn asymmetric_input_detected() {
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 3.0]);
        assert!(!SymMatrix::from_dense(&d).is_symmetric());
    }
}
