//! Algebraic certificates for the generator: contraction, isometry and the
//! sufficient condition for exponential stability, all read off the boundary
//! matrix `W_B` and the interface resistances.

use nalgebra::{DMatrix, Matrix2, SMatrix};

use crate::error::{invalid, Result};
use crate::matrices::{p1, rext4, rext8, sigma4, sigma8};
use crate::system::{numerical_rank, Matrix24, SystemSpec};

pub type Matrix48 = SMatrix<f64, 4, 8>;

/// Base tolerance for semidefiniteness and rank decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `W_B = W̃_B R_ext^T`.
pub fn wb_from_tilde(tilde_wb: &Matrix24) -> Matrix24 {
    tilde_wb * rext4().transpose()
}

/// `W_B Σ_4 W_B^T`, symmetrised so the result is exactly symmetric.
pub fn gram(wb: &Matrix24) -> Matrix2<f64> {
    let g = wb * sigma4() * wb.transpose();
    (g + g.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdStatus {
    Zero,
    PositiveSemidefinite,
    PositiveDefinite,
    Indefinite,
}

impl PsdStatus {
    pub fn is_psd(self) -> bool {
        !matches!(self, PsdStatus::Indefinite)
    }

    pub fn label(self) -> &'static str {
        match self {
            PsdStatus::Zero => "zero",
            PsdStatus::PositiveSemidefinite => "positive_semidefinite",
            PsdStatus::PositiveDefinite => "positive_definite",
            PsdStatus::Indefinite => "indefinite",
        }
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Labels a symmetric matrix by the signs of its eigenvalues, with absolute tolerance `tol`.
pub fn psd_status(m: &DMatrix<f64>, tol: f64) -> Result<PsdStatus> {
    Ok(psd_with_eigs(m, tol)?.0)
}

fn psd_with_eigs(m: &DMatrix<f64>, tol: f64) -> Result<(PsdStatus, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    if !m.is_square() {
        return Err(invalid(format!("matrix must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    let asym = (m - m.transpose()).amax();
    if asym > tol {
        return Err(invalid(format!("matrix is not symmetric: max |M - M^T| = {asym:e}")));
    }
    let eigs = sym_eigenvalues(&((m + m.transpose()) * 0.5));
    let status = if eigs.iter().all(|l| l.abs() <= tol) {
        PsdStatus::Zero
    } else if eigs.iter().all(|&l| l >= tol) {
        PsdStatus::PositiveDefinite
    } else if eigs.iter().all(|&l| l >= -tol) {
        PsdStatus::PositiveSemidefinite
    } else {
        PsdStatus::Indefinite
    };
    Ok((status, eigs))
}

fn to_dyn<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub rank_wb: usize,
    pub gram: Matrix2<f64>,
    pub gram_eigs: [f64; 2],
    pub gram_status: PsdStatus,
    /// Per-interface verdict `r_k ≥ -tol`.
    pub r_verdicts: Vec<bool>,
    pub r_ok: bool,
    pub contraction: bool,
    pub isometric: bool,
    pub exp_stable_sufficient: bool,
    /// Effective absolute tolerance: base tolerance times `max(1, ‖gram‖_max)`.
    pub tolerance: f64,
    /// Why `contraction` failed, if it did.
    pub reasons: Vec<String>,
}

/// Classifies the generator defined by port-form `W_B` and resistances `r`.
pub fn classify(wb: &Matrix24, r: &[f64], tol: f64) -> Result<Classification> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let g = gram(wb);
    let eff = tol * g.amax().max(1.0);
    let rank_wb = numerical_rank(&to_dyn(wb), tol);
    let (gram_status, eigs) = psd_with_eigs(&to_dyn(&g), eff)?;
    let r_verdicts: Vec<bool> = r.iter().map(|&rk| rk >= -eff).collect();
    let r_ok = r_verdicts.iter().all(|&v| v);

    let mut reasons = Vec::new();
    if rank_wb < 2 {
        reasons.push(format!("rank: W_B has rank {rank_wb} < 2"));
    }
    if !gram_status.is_psd() {
        reasons.push(format!("gram: indefinite, eigenvalues {eigs:?}"));
    }
    for (k, ok) in r_verdicts.iter().enumerate() {
        if !ok {
            reasons.push(format!("interface {k}: r = {} < 0", r[k]));
        }
    }
    let contraction = reasons.is_empty();
    let isometric = contraction && g.amax() <= eff && r.iter().all(|rk| rk.abs() <= eff);
    let exp_stable_sufficient = contraction && eigs[0] > eff;
    Ok(Classification {
        rank_wb,
        gram: g,
        gram_eigs: [eigs[0], eigs[1]],
        gram_status,
        r_verdicts,
        r_ok,
        contraction,
        isometric,
        exp_stable_sufficient,
        tolerance: eff,
        reasons,
    })
}

pub fn classify_spec(spec: &SystemSpec, tol: f64) -> Result<Classification> {
    classify(&spec.boundary.port_matrix(), &spec.r, tol)
}

/// Boundary matrix of the single-interface system rewritten as a
/// four-component boundary system.
#[derive(Debug, Clone, PartialEq)]
pub struct Wbc {
    /// `W̃_{B,c}` in trace form.
    pub tilde: Matrix48,
    /// `W_{B,c} = W̃_{B,c} R̂_ext^T`.
    pub port: Matrix48,
}

impl Wbc {
    /// `W_{B,c} Σ_8 W_{B,c}^T`, symmetrised.
    pub fn gram(&self) -> SMatrix<f64, 4, 4> {
        let g = self.port * sigma8() * self.port.transpose();
        (g + g.transpose()) * 0.5
    }
}

pub fn build_wbc(tilde_wb: &Matrix24, r: f64) -> Wbc {
    let u1 = Matrix2::new(-r, 1.0, 0.0, 1.0);
    let u2 = Matrix2::new(r, 0.0, 0.0, -1.0);
    let mut tilde = Matrix48::zeros();
    tilde.fixed_view_mut::<2, 2>(0, 0).copy_from(&u1);
    tilde.fixed_view_mut::<2, 2>(0, 6).copy_from(&u2);
    tilde.fixed_view_mut::<2, 4>(2, 2).copy_from(tilde_wb);
    let port = tilde * rext8().transpose();
    Wbc { tilde, port }
}

/// `U_1 P_1 U_1^T - U_2 P_1 U_2^T`, the interface block of the extended Gram.
pub fn interface_block(r: f64) -> Matrix2<f64> {
    let u1 = Matrix2::new(-r, 1.0, 0.0, 1.0);
    let u2 = Matrix2::new(r, 0.0, 0.0, -1.0);
    u1 * p1() * u1.transpose() - u2 * p1() * u2.transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaEvidence {
    pub gram4: Matrix2<f64>,
    pub gram8: SMatrix<f64, 4, 4>,
    pub gram4_status: PsdStatus,
    pub gram8_status: PsdStatus,
    /// `psd(W_B Σ_4 W_B^T) ∧ r ≥ 0`.
    pub direct: bool,
    /// `psd(W_{B,c} Σ_8 W_{B,c}^T)`.
    pub extended: bool,
    pub agree: bool,
    pub tolerance: f64,
}

/// Evaluates both sides of the equivalence between the direct conditions on
/// `(W_B, r)` and semidefiniteness of the extended Gram matrix.
///
/// Both sides use one effective tolerance `tol · max(1, ‖Σ_8 Gram‖_max)`. The
/// interface block has eigenvalue `2r`, so the direct side tests `2r ≥ -tol`.
pub fn lemma_equivalence_check(tilde_wb: &Matrix24, r: f64, tol: f64) -> Result<LemmaEvidence> {
    let gram4 = gram(&wb_from_tilde(tilde_wb));
    let gram8 = build_wbc(tilde_wb, r).gram();
    let eff = tol * gram8.amax().max(1.0);
    let gram4_status = psd_status(&to_dyn(&gram4), eff)?;
    let gram8_status = psd_status(&to_dyn(&gram8), eff)?;
    let direct = gram4_status.is_psd() && 2.0 * r >= -eff;
    let extended = gram8_status.is_psd();
    Ok(LemmaEvidence {
        gram4,
        gram8,
        gram4_status,
        gram8_status,
        direct,
        extended,
        agree: direct == extended,
        tolerance: eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn acoustic_tilde(rb: f64) -> Matrix24 {
        Matrix24::new(0.0, 0.0, 1.0, 0.0, -1.0, rb, 0.0, 0.0)
    }

    #[test]
    fn acoustic_trace_matrix_converts() {
        let rb = 1.7;
        let wb = wb_from_tilde(&acoustic_tilde(rb));
        let c = FRAC_1_SQRT_2;
        let expected = Matrix24::new(0.0, c, c, 0.0, -rb * c, c, -c, rb * c);
        assert_abs_diff_eq!(wb, expected, epsilon = 1e-14);
    }

    #[test]
    fn top_rows_of_rext_map_to_unit_block() {
        let tilde: Matrix24 = rext4().fixed_rows::<2>(0).into();
        let wb = wb_from_tilde(&tilde);
        let expected = Matrix24::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert_abs_diff_eq!(wb, expected, epsilon = 1e-15);
        assert_eq!(wb_from_tilde(&Matrix24::zeros()), Matrix24::zeros());
    }

    #[test]
    fn psd_labels() {
        let m = |a, b, c, d| DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        assert_eq!(psd_status(&m(0.0, 0.0, 0.0, 2.0), 1e-10).unwrap(), PsdStatus::PositiveSemidefinite);
        assert_eq!(psd_status(&m(1.0, 0.0, 0.0, 1.0), 1e-10).unwrap(), PsdStatus::PositiveDefinite);
        assert_eq!(psd_status(&m(1.0, 0.0, 0.0, -1.0), 1e-10).unwrap(), PsdStatus::Indefinite);
        assert_eq!(psd_status(&m(0.0, 0.0, 0.0, 0.0), 1e-10).unwrap(), PsdStatus::Zero);
        assert!(psd_status(&m(1.0, 1.0, 0.0, 1.0), 1e-10).is_err());
        assert!(psd_status(&m(1.0, 0.0, 0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn classify_acoustic() {
        let c = classify(&wb_from_tilde(&acoustic_tilde(1.0)), &[0.5], DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(c.gram, Matrix2::new(0.0, 0.0, 0.0, 2.0), epsilon = 1e-14);
        assert_eq!(c.rank_wb, 2);
        assert!(c.contraction && !c.isometric && !c.exp_stable_sufficient);
    }

    #[test]
    fn classify_zero_flow_is_isometric() {
        let wb = Matrix24::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let c = classify(&wb, &[0.0], DEFAULT_TOL).unwrap();
        assert_eq!(c.gram, Matrix2::zeros());
        assert!(c.contraction && c.isometric);
        assert_eq!(c.gram_status, PsdStatus::Zero);
    }

    #[test]
    fn classify_balanced_ports_is_definite() {
        let s = FRAC_1_SQRT_2;
        let wb = Matrix24::new(s, 0.0, s, 0.0, 0.0, s, 0.0, s);
        let c = classify(&wb, &[1.0], DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(c.gram, Matrix2::identity(), epsilon = 1e-15);
        assert!(c.exp_stable_sufficient);
    }

    #[test]
    fn negative_resistance_and_rank_loss_fail() {
        let c = classify(&wb_from_tilde(&acoustic_tilde(1.0)), &[-1.0], DEFAULT_TOL).unwrap();
        assert!(!c.contraction && !c.r_ok);
        let wb = Matrix24::new(1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0);
        let c = classify(&wb, &[], DEFAULT_TOL).unwrap();
        assert_eq!(c.rank_wb, 1);
        assert!(!c.contraction);
        assert!(c.reasons[0].starts_with("rank"));
    }

    #[test]
    fn wbc_blocks() {
        let w = build_wbc(&acoustic_tilde(1.0), 0.0);
        assert_eq!(w.tilde.fixed_view::<2, 2>(0, 0), Matrix2::new(0.0, 1.0, 0.0, 1.0));
        assert_eq!(w.tilde.fixed_view::<2, 2>(0, 6), Matrix2::new(0.0, 0.0, 0.0, -1.0));
        assert_eq!(interface_block(2.0), Matrix2::new(4.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn wbc_gram_is_block_diagonal() {
        let tilde = Matrix24::new(0.3, -1.2, 0.7, 2.0, 1.1, 0.4, -0.5, 0.9);
        let r = 0.8;
        let g8 = build_wbc(&tilde, r).gram();
        let mut expected = SMatrix::<f64, 4, 4>::zeros();
        expected[(0, 0)] = 2.0 * r;
        expected
            .fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&gram(&wb_from_tilde(&tilde)));
        assert_abs_diff_eq!(g8, expected, epsilon = 1e-13);
    }

    #[test]
    fn lemma_sides_agree_on_examples() {
        let ev = lemma_equivalence_check(&acoustic_tilde(1.0), 0.5, 1e-9).unwrap();
        assert!(ev.agree && ev.direct && ev.extended);
        let zero_flow: Matrix24 = rext4().fixed_rows::<2>(0).into();
        let ev = lemma_equivalence_check(&zero_flow, -0.1, 1e-9).unwrap();
        assert!(ev.agree && !ev.direct && !ev.extended);
        assert_abs_diff_eq!(ev.gram8[(0, 0)], -0.2, epsilon = 1e-15);
    }
}
