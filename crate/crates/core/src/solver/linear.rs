//! Sparse storage and the direct solver behind each Picard iteration.

use std::sync::{Arc, OnceLock};

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Col;

use crate::error::{Error, Result};

/// Compressed-column sparsity of a square matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    pub(crate) n: usize,
    pub(crate) col_ptr: Vec<usize>,
    pub(crate) row_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds the pattern from `(row, col)` pairs; duplicates are merged.
    pub fn from_entries(n: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        if entries.iter().any(|&(r, c)| r >= n || c >= n) {
            return Err(Error::invalid("sparse entry outside the matrix"));
        }
        entries.sort_unstable_by_key(|&(r, c)| (c, r));
        entries.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        for &(_, c) in &entries {
            col_ptr[c + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx = entries.into_iter().map(|(r, _)| r).collect();
        Ok(SparsityPattern {
            n,
            col_ptr,
            row_idx,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Storage position of `(row, col)`, if structurally present.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (lo, hi) = (self.col_ptr[col], self.col_ptr[col + 1]);
        self.row_idx[lo..hi]
            .binary_search(&row)
            .ok()
            .map(|k| lo + k)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }
}

/// Assembled system over the free unknowns.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub(crate) pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(pattern: Arc<SparsityPattern>, values: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() || rhs.len() != pattern.dim() {
            return Err(Error::invalid(
                "value or right-hand-side length does not match the pattern",
            ));
        }
        Ok(LinearSystem {
            pattern,
            values,
            rhs,
        })
    }

    /// Dense-style construction from `(row, col, value)` triplets; duplicates add up.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let pattern = Arc::new(SparsityPattern::from_entries(
            n,
            triplets.iter().map(|&(r, c, _)| (r, c)).collect(),
        )?);
        let mut values = vec![0.0; pattern.nnz()];
        for &(r, c, v) in triplets {
            values[pattern.position(r, c).expect("entry in pattern")] += v;
        }
        Self::new(pattern, values, rhs)
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    /// Entry `(row, col)`, zero when not stored.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern
            .position(row, col)
            .map_or(0.0, |k| self.values[k])
    }

    /// `A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let p = &*self.pattern;
        let mut y = vec![0.0; p.n];
        for c in 0..p.n {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                y[p.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// `||A x - b|| / ||b||`, or `||A x||` when `b = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let ax = self.apply(x);
        let r = ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let b = norm(&self.rhs);
        if b > 0.0 {
            r / b
        } else {
            r
        }
    }

    /// Replaces row `row` by the identity row with zero right-hand side.
    pub fn pin_row(&mut self, row: usize) -> Result<()> {
        let diag = self
            .pattern
            .position(row, row)
            .ok_or_else(|| Error::invalid(format!("row {row} has no diagonal entry")))?;
        let p = Arc::clone(&self.pattern);
        for c in 0..p.n {
            if let Some(k) = p.position(row, c) {
                self.values[k] = 0.0;
            }
        }
        self.values[diag] = 1.0;
        self.rhs[row] = 0.0;
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU with the symbolic analysis cached across calls that share a pattern.
#[derive(Debug, Default)]
pub struct LinearSolver {
    symbolic: OnceLock<(Arc<SparsityPattern>, SymbolicLu<usize>)>,
}

const REFINEMENT_STEPS: usize = 3;

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `A x = b` to relative residual `tol`.
    pub fn solve(&self, system: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
        let n = system.dim();
        if norm(&system.rhs) == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let pattern = &system.pattern;
        let cached = self.symbolic.get_or_init(|| {
            let sym = SymbolicLu::try_new(pattern.symbolic()).expect("symbolic LU analysis");
            (Arc::clone(pattern), sym)
        });
        let fresh;
        let symbolic = if Arc::ptr_eq(&cached.0, pattern) || *cached.0 == **pattern {
            &cached.1
        } else {
            fresh =
                SymbolicLu::try_new(pattern.symbolic()).map_err(|_| Error::LinearSolveFailure {
                    residual: f64::INFINITY,
                    tolerance: tol,
                })?;
            &fresh
        };
        let mat = SparseColMatRef::new(pattern.symbolic(), &system.values);
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), mat).map_err(|_| {
            Error::LinearSolveFailure {
                residual: f64::INFINITY,
                tolerance: tol,
            }
        })?;

        let solve = |b: &[f64]| -> Vec<f64> {
            let rhs = Col::from_fn(n, |i| b[i]);
            let x = lu.solve(&rhs);
            (0..n).map(|i| x[i]).collect()
        };
        let mut x = solve(&system.rhs);
        let mut residual = system.relative_residual(&x);
        for _ in 0..REFINEMENT_STEPS {
            if residual <= tol || !residual.is_finite() {
                break;
            }
            let ax = system.apply(&x);
            let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            residual = system.relative_residual(&x);
        }
        if residual <= tol && x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(Error::LinearSolveFailure {
                residual,
                tolerance: tol,
            })
        }
    }
}

/// One-shot solve without symbolic reuse.
pub fn solve_linear(system: &LinearSystem, tol: f64) -> Result<Vec<f64>> {
    LinearSolver::new().solve(system, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let n = 5;
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        let sys = LinearSystem::from_triplets(n, &t, b.clone()).unwrap();
        assert_eq!(solve_linear(&sys, 1e-12).unwrap(), b);
    }

    #[test]
    fn diagonal_two_by_two() {
        let sys =
            LinearSystem::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)], vec![2.0, 8.0]).unwrap();
        let x = solve_linear(&sys, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_reports_failure() {
        let sys = LinearSystem::from_triplets(
            2,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)],
            vec![1.0, 2.0],
        )
        .unwrap();
        assert!(matches!(
            solve_linear(&sys, 1e-10),
            Err(Error::LinearSolveFailure { .. })
        ));
    }

    #[test]
    fn nonsymmetric_with_pivoting() {
        // zero leading diagonal forces row pivoting
        let sys = LinearSystem::from_triplets(
            3,
            &[
                (0, 1, 1.0),
                (1, 0, 2.0),
                (1, 2, 1.0),
                (2, 1, -1.0),
                (2, 2, 3.0),
                (0, 2, 0.5),
            ],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let x = solve_linear(&sys, 1e-12).unwrap();
        assert!(sys.relative_residual(&x) < 1e-14);
    }

    #[test]
    fn pinning_replaces_row() {
        let mut sys = LinearSystem::from_triplets(
            2,
            &[(0, 0, 3.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)],
            vec![4.0, 3.0],
        )
        .unwrap();
        sys.pin_row(1).unwrap();
        assert_eq!((sys.get(1, 0), sys.get(1, 1), sys.rhs[1]), (0.0, 1.0, 0.0));
        let x = solve_linear(&sys, 1e-12).unwrap();
        assert!((x[0] - 4.0 / 3.0).abs() < 1e-14 && x[1] == 0.0);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let sys =
            LinearSystem::from_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)], vec![0.0, 0.0]).unwrap();
        assert_eq!(solve_linear(&sys, 1e-12).unwrap(), vec![0.0, 0.0]);
    }
}
