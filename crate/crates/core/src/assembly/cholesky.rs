//! Supernodal sparse Cholesky with a residual check.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::LltError;
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, Mat, Par, Side};

use super::SymmetricCsc;
use crate::error::{IgaError, Result};

/// Largest accepted `‖b − A x‖ / ‖b‖`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub residual: f64,
    pub refinements: usize,
}

/// Symbolic factorization of a fixed sparsity pattern, reusable for any
/// values on that pattern.
pub struct SparseCholesky {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: SymbolicCholesky<usize>,
}

impl std::fmt::Debug for SparseCholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseCholesky")
            .field("n", &self.n)
            .field("nnz", &self.row_idx.len())
            .field("factor_nnz", &self.symbolic.len_val())
            .finish()
    }
}

impl SparseCholesky {
    /// `ordering[new] = old`; `None` selects approximate minimum degree.
    pub fn analyze(pattern: &SymmetricCsc, ordering: Option<&[usize]>) -> Result<Self> {
        let n = pattern.n();
        let sym =
            SymbolicSparseColMatRef::new_checked(n, n, pattern.col_ptr(), None, pattern.row_idx());
        let symbolic = match ordering {
            None => factorize_symbolic_cholesky(
                sym,
                Side::Lower,
                SymmetricOrdering::Amd,
                Default::default(),
            ),
            Some(fwd) => {
                if fwd.len() != n {
                    return Err(IgaError::DimensionMismatch {
                        what: "fill-reducing ordering",
                        expected: n,
                        found: fwd.len(),
                    });
                }
                let mut inv = vec![usize::MAX; n];
                for (new, &old) in fwd.iter().enumerate() {
                    if old >= n || inv[old] != usize::MAX {
                        return Err(IgaError::invalid("ordering is not a permutation"));
                    }
                    inv[old] = new;
                }
                let perm = PermRef::new_checked(fwd, &inv, n);
                factorize_symbolic_cholesky(
                    sym,
                    Side::Lower,
                    SymmetricOrdering::Custom(perm),
                    Default::default(),
                )
            }
        }
        .map_err(|e| IgaError::Factorization(format!("{e:?}")))?;
        Ok(SparseCholesky {
            n,
            col_ptr: pattern.col_ptr().to_vec(),
            row_idx: pattern.row_idx().to_vec(),
            symbolic,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of the Cholesky factor.
    pub fn factor_nnz(&self) -> usize {
        self.symbolic.len_val()
    }

    /// Factorizes `a` (which must have the analysed pattern) and solves
    /// `a x = b`, refining until the relative residual is within
    /// [`RESIDUAL_TOLERANCE`].
    pub fn solve(&self, a: &SymmetricCsc, b: &[f64]) -> Result<SolveReport> {
        if a.n() != self.n || a.col_ptr() != self.col_ptr || a.row_idx() != self.row_idx {
            return Err(IgaError::invalid(
                "matrix pattern differs from the analysed pattern",
            ));
        }
        if b.len() != self.n {
            return Err(IgaError::DimensionMismatch {
                what: "right-hand side",
                expected: self.n,
                found: b.len(),
            });
        }
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok(SolveReport {
                x: vec![0.0; self.n],
                residual: 0.0,
                refinements: 0,
            });
        }
        let par = Par::Seq;
        let mut mem = MemBuffer::new(
            self.symbolic
                .factorize_numeric_llt_scratch::<f64>(par, Default::default())
                .or(self.symbolic.solve_in_place_scratch::<f64>(1, par)),
        );
        let stack = MemStack::new(&mut mem);
        let sym = SymbolicSparseColMatRef::new_checked(
            self.n,
            self.n,
            &self.col_ptr,
            None,
            &self.row_idx,
        );
        let mut l = vec![0.0; self.symbolic.len_val()];
        let llt = self
            .symbolic
            .factorize_numeric_llt(
                &mut l,
                SparseColMatRef::new(sym, a.values()),
                Side::Lower,
                Default::default(),
                par,
                stack,
                Default::default(),
            )
            .map_err(|e| match e {
                LltError::NonPositivePivot { index } => IgaError::NotPositiveDefinite {
                    free: self.n,
                    total: self.n,
                    detail: format!("non-positive pivot at elimination step {index}"),
                },
            })?;

        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        llt.solve_in_place_with_conj(Conj::No, rhs.as_mut(), par, stack);
        let mut x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        let mut refinements = 0;
        loop {
            let ax = a.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let residual = norm(&r) / b_norm;
            if residual <= RESIDUAL_TOLERANCE {
                return Ok(SolveReport {
                    x,
                    residual,
                    refinements,
                });
            }
            if refinements == MAX_REFINEMENTS || !residual.is_finite() {
                return Err(IgaError::Residual {
                    residual,
                    tolerance: RESIDUAL_TOLERANCE,
                });
            }
            let mut d = Mat::<f64>::from_fn(self.n, 1, |i, _| r[i]);
            llt.solve_in_place_with_conj(Conj::No, d.as_mut(), par, stack);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += d[(i, 0)];
            }
            refinements += 1;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
