//! Sparse symmetric positive definite linear solvers.
//!
//! The workhorse is a simplicial LDL' factorization (up-looking, driven by
//! the elimination tree) under a reverse Cuthill-McKee ordering, which keeps
//! fill-in modest on the banded mesh stiffness patterns this crate produces.
//! A Jacobi-preconditioned conjugate gradient covers sizes where the direct
//! factorization would be wasteful. Either way, [`solve_spd`] verifies a
//! relative residual of 1e-12 before returning, so outer-iteration
//! convergence claims are never polluted by the inner solver.

use crate::sparse::CsrMatrix;
use thiserror::Error;

/// Relative residual every returned solution must satisfy.
pub const RESIDUAL_BOUND: f64 = 1e-12;

/// Largest system the direct factorization is used for; above this the
/// preconditioned conjugate gradient takes over.
const DIRECT_LIMIT: usize = 100_000;

#[derive(Debug, Error)]
pub enum LinSolveError {
    #[error("matrix is not positive definite: pivot {pivot_index} has value {pivot_value:e}")]
    NotPositiveDefinite { pivot_index: usize, pivot_value: f64 },
    #[error("linear solve residual {relative_residual:e} exceeds {RESIDUAL_BOUND:e}")]
    ResidualTooLarge { relative_residual: f64 },
    #[error(
        "conjugate gradient stopped after {iterations} iterations at relative residual {relative_residual:e}"
    )]
    Unconverged { iterations: usize, relative_residual: f64 },
    #[error("right-hand side has length {found}, matrix has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Reverse Cuthill-McKee ordering of the matrix graph, returned as a
/// permutation with `perm[new] = old`. Handles disconnected graphs by
/// restarting from the lowest-degree unvisited vertex.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree = |v: usize| a.row(v).0.iter().filter(|&&j| j != v).count();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    // Breadth-first sweep recording visit order; neighbors by ascending degree.
    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut local = Vec::new();
        let mut q = std::collections::VecDeque::new();
        visited[start] = true;
        q.push_back(start);
        while let Some(v) = q.pop_front() {
            local.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().copied().filter(|&j| j != v && !visited[j]).collect();
            nbrs.sort_unstable_by_key(|&j| degree(j));
            for j in nbrs {
                if !visited[j] {
                    visited[j] = true;
                    q.push_back(j);
                }
            }
        }
        out.extend_from_slice(&local);
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| degree(v))
            .expect("unvisited vertex must exist");

        // Two BFS sweeps push the start toward the periphery of the component.
        let mut probe_visited = visited.clone();
        let mut probe = Vec::new();
        bfs(seed, &mut probe_visited, &mut probe);
        let far = *probe.last().unwrap();
        let start = if degree(far) <= degree(seed) { far } else { seed };

        bfs(start, &mut visited, &mut order);
    }
    order.reverse();
    order
}

/// LDL' factorization of a sparse symmetric positive definite matrix under
/// an internal fill-reducing permutation.
pub struct LdltFactor {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl LdltFactor {
    pub fn new(a: &CsrMatrix) -> Result<LdltFactor, LinSolveError> {
        let perm = reverse_cuthill_mckee(a);
        let pa = a.permuted(&perm);
        let n = pa.n();

        // Row k of the symmetric CSR matrix restricted to columns <= k is
        // exactly column k of the upper-triangular part in CSC form.
        let upper_col = |k: usize| {
            let (cols, vals) = pa.row(k);
            let end = cols.partition_point(|&c| c <= k);
            (&cols[..end], &vals[..end])
        };

        // Symbolic pass: elimination tree and per-column counts of L.
        let mut parent = vec![usize::MAX; n];
        let mut counts = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            let (rows, _) = upper_col(k);
            for &i0 in rows {
                let mut i = i0;
                while i != k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    counts[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for i in 0..n {
            col_ptr[i + 1] = col_ptr[i] + counts[i];
        }

        // Numeric pass.
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut diag = vec![0.0f64; n];
        let mut cursor = col_ptr.clone();
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut chain = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let (rows, vals) = upper_col(k);
            for (&i0, &aik) in rows.iter().zip(vals) {
                y[i0] += aik;
                if i0 == k {
                    continue;
                }
                // Collect the path to the root of the elimination tree; the
                // union over all i0 is the nonzero pattern of row k of L,
                // emitted in topological order.
                let mut len = 0;
                let mut i = i0;
                while flag[i] != k {
                    chain[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = chain[len];
                }
            }

            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in col_ptr[i]..cursor[i] {
                    y[row_idx[p]] -= values[p] * yi;
                }
                let lki = yi / diag[i];
                dk -= lki * yi;
                row_idx[cursor[i]] = k;
                values[cursor[i]] = lki;
                cursor[i] += 1;
            }
            if dk <= 0.0 || !dk.is_finite() {
                return Err(LinSolveError::NotPositiveDefinite {
                    pivot_index: perm[k],
                    pivot_value: dk,
                });
            }
            diag[k] = dk;
        }

        Ok(LdltFactor { n, perm, col_ptr, row_idx, values, diag })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut z: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let zj = z[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                z[self.row_idx[p]] -= self.values[p] * zj;
            }
        }
        for j in 0..self.n {
            z[j] /= self.diag[j];
        }
        for j in (0..self.n).rev() {
            let mut acc = z[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc -= self.values[p] * z[self.row_idx[p]];
            }
            z[j] = acc;
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = a.apply(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(&r) / norm2(b)
}

/// Conjugate gradient with diagonal (Jacobi) preconditioning. Returns the
/// solution and the iteration count.
pub fn conjugate_gradient_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, usize), LinSolveError> {
    let n = a.n();
    if b.len() != n {
        return Err(LinSolveError::DimensionMismatch { expected: n, found: b.len() });
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let diag = a.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(LinSolveError::NotPositiveDefinite { pivot_index: i, pivot_value: d });
        }
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];

    for iter in 0..max_iterations {
        if norm2(&r) <= rel_tol * b_norm {
            return Ok((x, iter));
        }
        a.apply_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(LinSolveError::NotPositiveDefinite { pivot_index: iter, pivot_value: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / b_norm;
    if rel <= rel_tol {
        Ok((x, max_iterations))
    } else {
        Err(LinSolveError::Unconverged { iterations: max_iterations, relative_residual: rel })
    }
}

/// Solves `a x = b` for symmetric positive definite `a`, choosing between
/// the direct factorization and conjugate gradient by problem size, and
/// refusing to return a solution whose relative residual exceeds
/// [`RESIDUAL_BOUND`].
pub fn solve_spd(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinSolveError> {
    let n = a.n();
    if b.len() != n {
        return Err(LinSolveError::DimensionMismatch { expected: n, found: b.len() });
    }
    if norm2(b) == 0.0 {
        return Ok(vec![0.0; n]);
    }
    if n <= DIRECT_LIMIT {
        let factor = LdltFactor::new(a)?;
        let mut x = factor.solve(b);
        // One step of iterative refinement mops up roundoff from the
        // factorization; a second is attempted only if still needed.
        for _ in 0..2 {
            if relative_residual(a, &x, b) <= RESIDUAL_BOUND {
                break;
            }
            let mut r = a.apply(&x);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            let dx = factor.solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        let rel = relative_residual(a, &x, b);
        if rel <= RESIDUAL_BOUND {
            Ok(x)
        } else {
            Err(LinSolveError::ResidualTooLarge { relative_residual: rel })
        }
    } else {
        let (x, _) = conjugate_gradient_jacobi(a, b, RESIDUAL_BOUND * 0.1, 200 * n)?;
        let rel = relative_residual(a, &x, b);
        if rel <= RESIDUAL_BOUND {
            Ok(x)
        } else {
            Err(LinSolveError::ResidualTooLarge { relative_residual: rel })
        }
    }
}
