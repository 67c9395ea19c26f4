//! Sparse symmetric positive definite systems.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("conjugate gradients did not reach {tol:e} in {iters} iterations")]
    CgNotConverged { tol: f64, iters: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

/// Linear solver for SPD systems.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LinearSolver {
    /// Sparse Cholesky factorization.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients with relative residual `tol`.
    Cg { tol: f64, max_iter: usize },
}

/// Compressed sparse row matrix with summed duplicates.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.cols[k] == j)
            .map_or(0.0, |k| self.vals[k])
    }

    pub fn solve(&self, rhs: &[f64], solver: LinearSolver) -> Result<Vec<f64>, LinalgError> {
        self.solve_cached(rhs, solver, &mut CholeskyCache::default())
    }

    /// As [`CsrMatrix::solve`], reusing the symbolic Cholesky analysis in
    /// `cache` when the sparsity pattern is unchanged.
    pub fn solve_cached(
        &self,
        rhs: &[f64],
        solver: LinearSolver,
        cache: &mut CholeskyCache,
    ) -> Result<Vec<f64>, LinalgError> {
        match solver {
            LinearSolver::Cholesky => cache.solve(self, rhs),
            LinearSolver::Cg { tol, max_iter } => self.cg_solve(rhs, tol, max_iter),
        }
    }

    fn cg_solve(&self, rhs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        let diag = self.diagonal();
        if diag.iter().any(|&d| d <= 0.0) {
            return Err(LinalgError::NotSpd);
        }
        let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = rhs.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..max_iter {
            let ap = self.mul(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(LinalgError::NotSpd);
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(LinalgError::CgNotConverged {
            tol,
            iters: max_iter,
        })
    }
}

/// Symbolic Cholesky analysis of the last sparsity pattern seen.
#[derive(Default)]
pub struct CholeskyCache {
    pattern: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
}

impl CholeskyCache {
    /// Solves with a symmetric matrix; its CSR arrays are read as CSC and
    /// only the lower triangle is used.
    pub fn solve(&mut self, a: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if a.n == 0 {
            return Ok(Vec::new());
        }
        let symbolic = SymbolicSparseColMatRef::new_checked(a.n, a.n, &a.row_ptr, None, &a.cols);
        let reuse = matches!(&self.pattern, Some((r, c, _)) if *r == a.row_ptr && *c == a.cols);
        if !reuse {
            let sym = SymbolicLlt::try_new(symbolic, Side::Lower)
                .map_err(|e| LinalgError::Factorization(format!("{e:?}")))?;
            self.pattern = Some((a.row_ptr.clone(), a.cols.clone(), sym));
        }
        let sym = self
            .pattern
            .as_ref()
            .map(|p| p.2.clone())
            .expect("pattern stored above");
        let llt =
            Llt::try_new_with_symbolic(sym, SparseColMatRef::new(symbolic, &a.vals), Side::Lower)
                .map_err(|_| LinalgError::NotSpd)?;
        let b = Mat::<f64>::from_fn(a.n, 1, |i, _| rhs[i]);
        let x = llt.solve(&b);
        let out: Vec<f64> = (0..a.n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NotSpd);
        }
        Ok(out)
    }
}
