//! Second-order summation-by-parts first-derivative operator.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SbpOperator {
    pub n: usize,
    pub h: f64,
    pub d: DMatrix<f64>,
    /// Diagonal of the quadrature matrix.
    pub hw: DVector<f64>,
}

/// Central differences inside, first-order one-sided rows at both ends,
/// trapezoid weights. `Hw D + (Hw D)^T = diag(-1, 0, …, 0, 1)`.
pub fn build_sbp(n: usize, h: f64) -> Result<SbpOperator> {
    if n < 3 {
        return Err(invalid(format!("SBP operator needs at least 3 points, got {n}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("grid spacing must be positive, got {h}")));
    }
    let mut d = DMatrix::zeros(n, n);
    d[(0, 0)] = -1.0 / h;
    d[(0, 1)] = 1.0 / h;
    for i in 1..n - 1 {
        d[(i, i - 1)] = -0.5 / h;
        d[(i, i + 1)] = 0.5 / h;
    }
    d[(n - 1, n - 2)] = -1.0 / h;
    d[(n - 1, n - 1)] = 1.0 / h;
    let mut hw = DVector::from_element(n, h);
    hw[0] = 0.5 * h;
    hw[n - 1] = 0.5 * h;
    Ok(SbpOperator { n, h, d, hw })
}

impl SbpOperator {
    /// `Hw D`.
    pub fn q(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.hw) * &self.d
    }
}
