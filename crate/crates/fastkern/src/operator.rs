//! Composable linear operators for assembling estimator system matrices.
//!
//! Every estimator solves a system whose operator is a sum of a Toeplitz
//! covariance, scaled diagonals, and diagonal-sandwiched Toeplitz terms.
//! [`OperatorExpr`] expresses exactly that algebra; each Toeplitz node
//! applies in `O(size log size)` and each diagonal node in `O(size)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::toeplitz::ToeplitzOperator;

/// Anything that can act as `y = A x` on complex vectors.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `x` and `y` have length [`dim`](Self::dim).
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Structurally derived flag: the operator is Hermitian and positive
    /// semidefinite by construction.
    fn hermitian_psd(&self) -> bool;
}

/// Expression tree over Toeplitz operators, diagonals, identity, scalar
/// multiples, sums, and the sandwich `diag(a)* T diag(a)`.
pub enum OperatorExpr {
    Identity(usize),
    RealDiagonal(Vec<f64>),
    ComplexDiagonal(Vec<Complex64>),
    Toeplitz(Arc<ToeplitzOperator>),
    Scaled(f64, Box<OperatorExpr>),
    Sum(Vec<OperatorExpr>),
    /// `diag(outer)* inner diag(outer)`.
    Sandwich { outer: Vec<Complex64>, inner: Box<OperatorExpr> },
}

impl OperatorExpr {
    pub fn identity(n: usize) -> Self {
        OperatorExpr::Identity(n)
    }

    pub fn real_diagonal(d: Vec<f64>) -> Self {
        OperatorExpr::RealDiagonal(d)
    }

    pub fn toeplitz(op: Arc<ToeplitzOperator>) -> Self {
        OperatorExpr::Toeplitz(op)
    }

    pub fn scaled(factor: f64, inner: OperatorExpr) -> Self {
        OperatorExpr::Scaled(factor, Box::new(inner))
    }

    /// Sum of terms; dimensions must agree.
    pub fn sum(terms: Vec<OperatorExpr>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("operator sum needs at least one term".into()));
        }
        let dim = terms[0].dim();
        for t in &terms {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.dim() });
            }
        }
        Ok(OperatorExpr::Sum(terms))
    }

    /// `diag(outer)* inner diag(outer)`; `outer` must match `inner`'s dim.
    pub fn sandwich(outer: Vec<Complex64>, inner: OperatorExpr) -> Result<Self> {
        if outer.len() != inner.dim() {
            return Err(Error::DimensionMismatch { expected: inner.dim(), got: outer.len() });
        }
        Ok(OperatorExpr::Sandwich { outer, inner: Box::new(inner) })
    }

    fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        match self {
            OperatorExpr::Identity(_) => y.copy_from_slice(x),
            OperatorExpr::RealDiagonal(d) => {
                for ((o, &xi), &di) in y.iter_mut().zip(x).zip(d) {
                    *o = xi * di;
                }
            }
            OperatorExpr::ComplexDiagonal(d) => {
                for ((o, &xi), &di) in y.iter_mut().zip(x).zip(d) {
                    *o = xi * di;
                }
            }
            OperatorExpr::Toeplitz(t) => {
                t.matvec(x, y).expect("dimension checked at expression build");
            }
            OperatorExpr::Scaled(c, inner) => {
                inner.apply_into(x, y);
                for o in y.iter_mut() {
                    *o *= *c;
                }
            }
            OperatorExpr::Sum(terms) => {
                let mut tmp = vec![Complex64::default(); x.len()];
                y.fill(Complex64::default());
                for t in terms {
                    t.apply_into(x, &mut tmp);
                    for (o, &v) in y.iter_mut().zip(&tmp) {
                        *o += v;
                    }
                }
            }
            OperatorExpr::Sandwich { outer, inner } => {
                let scaled: Vec<Complex64> = x.iter().zip(outer).map(|(&xi, &a)| xi * a).collect();
                inner.apply_into(&scaled, y);
                for (o, &a) in y.iter_mut().zip(outer) {
                    *o *= a.conj();
                }
            }
        }
    }
}

impl LinearOperator for OperatorExpr {
    fn dim(&self) -> usize {
        match self {
            OperatorExpr::Identity(n) => *n,
            OperatorExpr::RealDiagonal(d) => d.len(),
            OperatorExpr::ComplexDiagonal(d) => d.len(),
            OperatorExpr::Toeplitz(t) => t.size(),
            OperatorExpr::Scaled(_, inner) => inner.dim(),
            OperatorExpr::Sum(terms) => terms[0].dim(),
            OperatorExpr::Sandwich { inner, .. } => inner.dim(),
        }
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        self.apply_into(x, y);
    }

    fn hermitian_psd(&self) -> bool {
        match self {
            OperatorExpr::Identity(_) => true,
            OperatorExpr::RealDiagonal(d) => d.iter().all(|&v| v >= 0.0),
            OperatorExpr::ComplexDiagonal(d) => d.iter().all(|v| v.im == 0.0 && v.re >= 0.0),
            // Hermitian Toeplitz pieces of this framework (empirical
            // covariances, box Fourier tensors, collocation Grams) are PSD
            // by construction.
            OperatorExpr::Toeplitz(t) => t.is_hermitian(),
            OperatorExpr::Scaled(c, inner) => *c >= 0.0 && inner.hermitian_psd(),
            OperatorExpr::Sum(terms) => terms.iter().all(|t| t.hermitian_psd()),
            OperatorExpr::Sandwich { inner, .. } => inner.hermitian_psd(),
        }
    }
}
