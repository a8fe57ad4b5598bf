//! Dense eigenvalues of the reduced generator.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simulate::discrete::DiscreteSystem;

pub const DEFAULT_EIGEN_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
}

impl Spectrum {
    /// Largest real part among eigenvalues with `|Im λ| ≤ omega`.
    pub fn abscissa_below(&self, omega: f64) -> Option<f64> {
        self.eigenvalues
            .iter()
            .filter(|l| l.im.abs() <= omega)
            .map(|l| l.re)
            .reduce(f64::max)
    }

    /// `max |Re λ|`.
    pub fn max_abs_real(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.re.abs()))
    }
}

pub fn eigenvalues(a: &DMatrix<f64>, cap: usize) -> Result<Spectrum> {
    let n = a.nrows();
    if n > cap {
        return Err(Error::Resource { dim: n, cap });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("generator has dimension 0".into()));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 100 * n)
        .ok_or_else(|| Error::Solver("Schur iteration did not converge".into()))?;
    let mut eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    let abscissa = eigenvalues[0].re;
    Ok(Spectrum {
        eigenvalues,
        abscissa,
    })
}

pub fn spectral_abscissa(ds: &DiscreteSystem, cap: usize) -> Result<Spectrum> {
    eigenvalues(ds.a_red(), cap)
}
