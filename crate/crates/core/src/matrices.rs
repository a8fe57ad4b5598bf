//! Constant matrices shared by the port-Hamiltonian formulation.
//!
//! `P1` is the symmetric involution acting on the two state components,
//! `Σ_2n` pairs flows with efforts, and `R_ext` maps the stacked co-energy
//! traces `[(Qx)(b); (Qx)(a)]` to the boundary port variables `[f; e]`.

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Result};

pub type Matrix8 = SMatrix<f64, 8, 8>;

/// `P1 = [[0, -1], [-1, 0]]`.
pub fn p1() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, -1.0, 0.0)
}

/// `Σ_2n = [[0, I_n], [I_n, 0]]`.
pub fn sigma(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("sigma requires n >= 1"));
    }
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        s[(i, n + i)] = 1.0;
        s[(n + i, i)] = 1.0;
    }
    Ok(s)
}

/// Block-diagonal `P̂1 = diag(P1, …, P1)` with `blocks` copies.
fn p1_hat(blocks: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * blocks, 2 * blocks);
    for k in 0..blocks {
        m.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&p1());
    }
    m
}

/// `R = (1/√2) [[P̂1, -P̂1], [I, I]]` for `dim ∈ {4, 8}`.
pub fn rext(dim: usize) -> Result<DMatrix<f64>> {
    if dim != 4 && dim != 8 {
        return Err(invalid(format!("rext is defined for dim 4 or 8, got {dim}")));
    }
    let half = dim / 2;
    let p = p1_hat(half / 2);
    let mut r = DMatrix::zeros(dim, dim);
    r.view_mut((0, 0), (half, half)).copy_from(&p);
    r.view_mut((0, half), (half, half)).copy_from(&(-&p));
    r.view_mut((half, 0), (half, half)).fill_with_identity();
    r.view_mut((half, half), (half, half)).fill_with_identity();
    Ok(r * FRAC_1_SQRT_2)
}

pub fn rext4() -> Matrix4<f64> {
    Matrix4::from_iterator(rext(4).expect("dim 4 is supported").iter().copied())
}

pub fn rext8() -> Matrix8 {
    Matrix8::from_iterator(rext(8).expect("dim 8 is supported").iter().copied())
}

pub fn sigma4() -> Matrix4<f64> {
    Matrix4::from_iterator(sigma(2).expect("n = 2").iter().copied())
}

pub fn sigma8() -> Matrix8 {
    Matrix8::from_iterator(sigma(4).expect("n = 4").iter().copied())
}

/// The fixed matrices of the formulation, bundled for callers that want all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstMatrices {
    pub p1: Matrix2<f64>,
    pub rext: Matrix4<f64>,
    pub rext_hat: Matrix8,
}

impl ConstMatrices {
    pub fn new() -> Self {
        Self {
            p1: p1(),
            rext: rext4(),
            rext_hat: rext8(),
        }
    }

    pub fn sigma(&self, n: usize) -> Result<DMatrix<f64>> {
        sigma(n)
    }
}

impl Default for ConstMatrices {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn p1_is_symmetric_involution() {
        let p = p1();
        assert_eq!(p, p.transpose());
        assert_eq!(p * p, Matrix2::identity());
    }

    #[test]
    fn sigma_small_sizes() {
        assert_eq!(sigma(1).unwrap(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let s2 = sigma(2).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
        ]);
        assert_eq!(s2, expected);
        assert_eq!(&s2 * &s2, DMatrix::identity(4, 4));
        assert!(sigma(0).is_err());
    }

    #[test]
    fn sigma_involution_and_symmetric_up_to_four() {
        for n in 1..=4 {
            let s = sigma(n).unwrap();
            assert_eq!(s, s.transpose());
            assert_eq!(&s * &s, DMatrix::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn rext4_first_row() {
        let r = rext(4).unwrap();
        let c = FRAC_1_SQRT_2;
        let row: Vec<f64> = r.row(0).iter().copied().collect();
        assert_eq!(row, vec![0.0, -c, 0.0, c]);
    }

    #[test]
    fn rext_is_orthogonal() {
        for d in [4, 8] {
            let r = rext(d).unwrap();
            let err = (&r * r.transpose() - DMatrix::identity(d, d)).amax();
            assert!(err < 1e-14, "dim {d}: {err}");
        }
        assert!(rext(6).is_err());
    }

    #[test]
    fn rext8_congruence_with_sigma8() {
        let r = rext8();
        let lhs = r.transpose() * sigma8() * r;
        let mut expected = Matrix8::zeros();
        for k in 0..2 {
            expected.fixed_view_mut::<2, 2>(2 * k, 2 * k).copy_from(&p1());
            expected.fixed_view_mut::<2, 2>(4 + 2 * k, 4 + 2 * k).copy_from(&(-p1()));
        }
        assert_abs_diff_eq!(lhs, expected, epsilon = 1e-14);
    }
}
