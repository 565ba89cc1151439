//! Compressed sparse row storage for the symmetric operators assembled
//! by this crate (stiffness matrices and their diagonal modifications).

/// Square sparse matrix in CSR layout with sorted column indices per row.
///
/// All matrices built here are structurally and numerically symmetric,
/// which the factorization in [`crate::linsolve`] relies on: row `i` of a
/// symmetric CSR matrix doubles as column `i` of the same matrix in CSC.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n` x `n` matrix from (row, col, value) triplets.
    /// Duplicate positions are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_counts = vec![0usize; n];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last = None;
        for &(r, c, v) in &sorted {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of bounds for n = {n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    /// x' A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                acc += x[i] * v * x[j];
            }
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            if let Ok(p) = cols.binary_search(&i) {
                d[i] = vals[p];
            }
        }
        d
    }

    /// `scale * self + diag(extra)`, requiring every diagonal position to
    /// already exist in the pattern (true for the stiffness matrices here).
    pub fn scaled_with_diag_added(&self, scale: f64, extra: &[f64]) -> CsrMatrix {
        assert_eq!(extra.len(), self.n);
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= scale;
        }
        for i in 0..self.n {
            let span = out.row_ptr[i]..out.row_ptr[i + 1];
            let cols = &out.col_idx[span.clone()];
            let p = cols
                .binary_search(&i)
                .unwrap_or_else(|_| panic!("row {i} has no diagonal entry"));
            out.values[span.start + p] += extra[i];
        }
        out
    }

    /// Symmetric permutation: entry (i, j) of the result is entry
    /// (perm[i], perm[j]) of `self`. `perm` maps new index -> old index.
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        assert_eq!(perm.len(), self.n);
        let mut iperm = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.entries() {
            triplets.push((iperm[i], iperm[j], v));
        }
        CsrMatrix::from_triplets(self.n, &triplets)
    }

    /// The matrix with row and column `k` deleted and indices above `k`
    /// shifted down by one.
    pub fn without_row_col(&self, k: usize) -> CsrMatrix {
        assert!(k < self.n);
        let shift = |idx: usize| if idx > k { idx - 1 } else { idx };
        let mut triplets = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.entries() {
            if i != k && j != k {
                triplets.push((shift(i), shift(j), v));
            }
        }
        CsrMatrix::from_triplets(self.n - 1, &triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        CsrMatrix::from_triplets(
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        )
    }

    #[test]
    fn triplets_assemble_sorted_rows() {
        let a = sample();
        assert_eq!(a.n(), 3);
        assert_eq!(a.nnz(), 7);
        let (cols, vals) = a.row(1);
        assert_eq!(cols, &[0, 1, 2]);
        assert_eq!(vals, &[-1.0, 2.0, -1.0]);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 1, 1.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.diagonal(), vec![3.5, 1.0]);
    }

    #[test]
    fn apply_and_quadratic_form_agree() {
        let a = sample();
        let x = [1.0, 2.0, 3.0];
        let y = a.apply(&x);
        assert_eq!(y, vec![0.0, 0.0, 4.0]);
        let direct: f64 = x.iter().zip(&y).map(|(xi, yi)| xi * yi).sum();
        assert_eq!(a.quadratic_form(&x), direct);
    }

    #[test]
    fn scaled_with_diag_added_changes_only_diagonal() {
        let a = sample();
        let m = a.scaled_with_diag_added(0.5, &[1.0, 2.0, 3.0]);
        assert_eq!(m.diagonal(), vec![2.0, 3.0, 4.0]);
        let (cols, vals) = m.row(1);
        assert_eq!(cols, &[0, 1, 2]);
        assert_eq!(vals, &[-0.5, 3.0, -0.5]);
    }

    #[test]
    fn permutation_is_symmetric_relabeling() {
        let a = sample();
        let perm = vec![2, 0, 1];
        let p = a.permuted(&perm);
        for (i, j, v) in p.entries() {
            let x = {
                let (cols, vals) = a.row(perm[i]);
                cols.binary_search(&perm[j]).map(|q| vals[q]).unwrap_or(0.0)
            };
            assert_eq!(v, x);
        }
    }

    #[test]
    fn without_row_col_reindexes() {
        let a = sample();
        let b = a.without_row_col(1);
        assert_eq!(b.n(), 2);
        assert_eq!(b.diagonal(), vec![2.0, 2.0]);
        assert_eq!(b.nnz(), 2);
    }
}
