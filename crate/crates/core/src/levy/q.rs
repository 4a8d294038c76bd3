use crate::error::{Error, Result};
use crate::math::Field;

/// Diagonal covariance `Q` in the grid/component basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QOperator {
    diagonal: Vec<f64>,
    sqrt_diagonal: Vec<f64>,
    trace: f64,
}

impl QOperator {
    pub fn new(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(Error::InvalidInput(
                "Q diagonal entries must be finite and non-negative".into(),
            ));
        }
        let trace = diagonal.iter().sum();
        let sqrt_diagonal = diagonal.iter().map(|q| q.sqrt()).collect();
        Ok(Self {
            diagonal,
            sqrt_diagonal,
            trace,
        })
    }

    /// `trace / dim` on every entry.
    pub fn uniform(dim: usize, trace: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Q needs a positive dimension".into()));
        }
        Self::new(vec![trace / dim as f64; dim])
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(vec![1.0; dim]).expect("unit diagonal is valid")
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }
}

/// `sqrt(Q) x`, entrywise.
pub fn apply_sqrt_q(q: &QOperator, x: &Field) -> Result<Field> {
    if x.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: x.len(),
        });
    }
    let mut out = x.clone();
    for (v, s) in out.values_mut().iter_mut().zip(&q.sqrt_diagonal) {
        *v *= s;
    }
    Ok(out)
}
