//! Ready-made systems: two acoustic waveguides joined by a resistive
//! membrane, an energy-conserving demo and a chain of unit segments.

use nalgebra::{Matrix2, SMatrix};

use crate::error::{invalid, Error, Result};
use crate::system::{BoundarySpec, QField, SegmentQ, SystemSpec};

/// Sample count used when a material field is not constant.
const FIELD_SAMPLES: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// Linear between the segment ends.
    Affine { lo: f64, hi: f64 },
}

impl ScalarField {
    fn at(self, s: f64) -> f64 {
        match self {
            ScalarField::Constant(v) => v,
            ScalarField::Affine { lo, hi } => lo + (hi - lo) * s,
        }
    }

    fn is_positive(self) -> bool {
        match self {
            ScalarField::Constant(v) => v > 0.0,
            ScalarField::Affine { lo, hi } => lo > 0.0 && hi > 0.0,
        }
    }

    fn is_constant(self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }
}

/// Bulk modulus `B`, mass density `ρ` on each side of the interface, the
/// membrane resistance `R_I` and the boundary resistance `R_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticParams {
    pub a: f64,
    pub b: f64,
    pub interface: f64,
    pub bulk_minus: ScalarField,
    pub bulk_plus: ScalarField,
    pub rho_minus: ScalarField,
    pub rho_plus: ScalarField,
    pub r_i: f64,
    pub r_b: f64,
}

impl Default for AcousticParams {
    fn default() -> Self {
        Self {
            a: -1.0,
            b: 1.0,
            interface: 0.0,
            bulk_minus: ScalarField::Constant(1.0),
            bulk_plus: ScalarField::Constant(1.0),
            rho_minus: ScalarField::Constant(1.0),
            rho_plus: ScalarField::Constant(1.0),
            r_i: 2.0,
            r_b: 1.0,
        }
    }
}

/// Pressure-free end at `a`, impedance `p(b) = R_b v(b)` at `b`.
pub fn acoustic_boundary(r_b: f64) -> BoundarySpec {
    BoundarySpec::trace(SMatrix::<f64, 2, 4>::new(
        0.0, 0.0, 1.0, 0.0, //
        -1.0, r_b, 0.0, 0.0,
    ))
}

fn acoustic_segment(lo: f64, hi: f64, bulk: ScalarField, rho: ScalarField) -> SegmentQ {
    let q = |s: f64| Matrix2::new(bulk.at(s), 0.0, 0.0, 1.0 / rho.at(s));
    let field = if bulk.is_constant() && rho.is_constant() {
        QField::Constant(q(0.0))
    } else {
        QField::Sampled(
            (0..FIELD_SAMPLES)
                .map(|i| {
                    let s = i as f64 / (FIELD_SAMPLES - 1) as f64;
                    let z = if i + 1 == FIELD_SAMPLES { hi } else { lo + (hi - lo) * s };
                    (z, q(s))
                })
                .collect(),
        )
    };
    SegmentQ {
        lo,
        hi,
        field,
        smooth: true,
    }
}

/// `Q = diag(B, 1/ρ)` per side, `r = [1/R_I]`.
pub fn acoustic(p: &AcousticParams) -> Result<SystemSpec> {
    let fields = [
        ("bulk_minus", p.bulk_minus),
        ("bulk_plus", p.bulk_plus),
        ("rho_minus", p.rho_minus),
        ("rho_plus", p.rho_plus),
    ];
    if let Some((name, f)) = fields.iter().find(|(_, f)| !f.is_positive()) {
        return Err(invalid(format!("{name} must be positive, got {f:?}")));
    }
    if !(p.r_i > 0.0 && p.r_i.is_finite()) {
        return Err(invalid(format!("R_I must be positive, got {}", p.r_i)));
    }
    if !(p.r_b > 0.0 && p.r_b.is_finite()) {
        return Err(invalid(format!("R_b must be positive, got {}", p.r_b)));
    }
    if !(p.a < p.interface && p.interface < p.b) {
        return Err(Error::Geometry(format!(
            "need a < interface < b, got {} < {} < {}",
            p.a, p.interface, p.b
        )));
    }
    Ok(SystemSpec {
        a: p.a,
        b: p.b,
        interfaces: vec![p.interface],
        segments: vec![
            acoustic_segment(p.a, p.interface, p.bulk_minus, p.rho_minus),
            acoustic_segment(p.interface, p.b, p.bulk_plus, p.rho_plus),
        ],
        r: vec![1.0 / p.r_i],
        boundary: acoustic_boundary(p.r_b),
    })
}

/// Zero boundary flow, `W_B = [I_2 0]` in port form.
pub fn zero_flow_boundary() -> BoundarySpec {
    BoundarySpec::port(SMatrix::<f64, 2, 4>::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0,
    ))
}

/// Unit `Q`, `r = [0]`, zero boundary flow.
pub fn isometric_demo(a: f64, b: f64, l: f64) -> Result<SystemSpec> {
    if !(a < l && l < b) {
        return Err(Error::Geometry(format!("need a < l < b, got {a} < {l} < {b}")));
    }
    Ok(SystemSpec {
        a,
        b,
        interfaces: vec![l],
        segments: vec![SegmentQ::identity(a, l), SegmentQ::identity(l, b)],
        r: vec![0.0],
        boundary: zero_flow_boundary(),
    })
}

/// `n + 1` unit-`Q` segments on `[a, b]` with equispaced interfaces.
pub fn multi_interface_chain(
    n: usize,
    r: &[f64],
    boundary: BoundarySpec,
    a: f64,
    b: f64,
) -> Result<SystemSpec> {
    if n == 0 {
        return Err(invalid("a chain needs at least one interface"));
    }
    if r.len() != n {
        return Err(invalid(format!("{n} interfaces need {n} resistances, got {}", r.len())));
    }
    if !(a < b) {
        return Err(Error::Geometry(format!("need a < b, got [{a}, {b}]")));
    }
    let h = (b - a) / (n + 1) as f64;
    let interfaces: Vec<f64> = (1..=n).map(|k| a + h * k as f64).collect();
    let mut pts = vec![a];
    pts.extend_from_slice(&interfaces);
    pts.push(b);
    Ok(SystemSpec {
        a,
        b,
        interfaces,
        segments: pts.windows(2).map(|w| SegmentQ::identity(w[0], w[1])).collect(),
        r: r.to_vec(),
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{classify_spec, DEFAULT_TOL};
    use crate::system::CoercivityBounds;
    use approx::assert_abs_diff_eq;

    #[test]
    fn acoustic_defaults_are_unit_speed() {
        let spec = acoustic(&AcousticParams::default()).unwrap();
        let v = spec
            .validate(Some(CoercivityBounds { m: 1.0, big_m: 1.0 }))
            .unwrap();
        assert_eq!(v.segments[0].eval(-0.5), Matrix2::identity());
        assert_eq!(spec.r, vec![0.5]);
    }

    #[test]
    fn acoustic_gram_and_contraction() {
        let spec = acoustic(&AcousticParams { r_b: 3.0, ..Default::default() }).unwrap();
        let c = classify_spec(&spec, DEFAULT_TOL).unwrap();
        assert!(c.contraction);
        assert_abs_diff_eq!(c.gram, Matrix2::new(0.0, 0.0, 0.0, 6.0), epsilon = 1e-13);
    }

    #[test]
    fn acoustic_rejects_nonpositive_parameters() {
        let bad = AcousticParams { r_i: 0.0, ..Default::default() };
        assert!(acoustic(&bad).is_err());
        let bad = AcousticParams { rho_plus: ScalarField::Affine { lo: 1.0, hi: -1.0 }, ..Default::default() };
        assert!(acoustic(&bad).is_err());
    }

    #[test]
    fn varying_density_is_sampled() {
        let p = AcousticParams { rho_plus: ScalarField::Affine { lo: 1.0, hi: 2.0 }, ..Default::default() };
        let spec = acoustic(&p).unwrap();
        let v = spec.validate(None).unwrap();
        assert_abs_diff_eq!(v.bounds().m, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.segments[1].eval(1.0)[(1, 1)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn isometric_demo_classifies_isometric() {
        let spec = isometric_demo(-1.0, 1.0, 0.0).unwrap();
        assert!(classify_spec(&spec, DEFAULT_TOL).unwrap().isometric);
        assert!(isometric_demo(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn chain_layout() {
        let one = multi_interface_chain(1, &[0.5], BoundarySpec::closed(), -1.0, 1.0).unwrap();
        assert_eq!(one.interfaces, vec![0.0]);
        assert!(one.validate(None).is_ok());
        let bad = multi_interface_chain(2, &[1.0, -1.0], zero_flow_boundary(), 0.0, 1.0).unwrap();
        assert!(!classify_spec(&bad, DEFAULT_TOL).unwrap().contraction);
        assert!(multi_interface_chain(2, &[1.0], zero_flow_boundary(), 0.0, 1.0).is_err());
    }
}
