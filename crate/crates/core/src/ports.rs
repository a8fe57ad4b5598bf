//! Boundary and interface port variables and the power pairing.
//!
//! Traces are co-energy values `Qx` at a point. Boundary traces are stacked
//! as `(z = b; z = a)`.

use nalgebra::{Vector2, Vector4};

use crate::error::{Error, Result};
use crate::matrices::rext4;

/// Relative continuity tolerance: residuals up to `tol · max(1, |f_I|)` pass.
pub const DEFAULT_CONTINUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPorts {
    pub f: Vector2<f64>,
    pub e: Vector2<f64>,
}

impl BoundaryPorts {
    /// `⟨e_∂, f_∂⟩`.
    pub fn pairing(&self) -> f64 {
        self.e.dot(&self.f)
    }

    pub fn stacked(&self) -> Vector4<f64> {
        Vector4::new(self.f[0], self.f[1], self.e[0], self.e[1])
    }
}

pub fn boundary_ports(trace_b: Vector2<f64>, trace_a: Vector2<f64>) -> BoundaryPorts {
    let t = Vector4::new(trace_b[0], trace_b[1], trace_a[0], trace_a[1]);
    let fe = rext4() * t;
    BoundaryPorts {
        f: Vector2::new(fe[0], fe[1]),
        e: Vector2::new(fe[2], fe[3]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePorts {
    pub f_i: f64,
    pub e_i: f64,
    pub continuity_residual: f64,
}

impl InterfacePorts {
    /// Builds the ports without checking continuity of the second component.
    pub fn unchecked(trace_minus: Vector2<f64>, trace_plus: Vector2<f64>) -> Self {
        Self {
            f_i: trace_plus[1],
            e_i: trace_minus[0] - trace_plus[0],
            continuity_residual: (trace_plus[1] - trace_minus[1]).abs(),
        }
    }

    /// Power drawn by the interface, `e_I f_I`.
    pub fn power(&self) -> f64 {
        self.e_i * self.f_i
    }
}

pub fn interface_ports(
    trace_minus: Vector2<f64>,
    trace_plus: Vector2<f64>,
    tol: f64,
) -> Result<InterfacePorts> {
    let p = InterfacePorts::unchecked(trace_minus, trace_plus);
    let threshold = tol * p.f_i.abs().max(1.0);
    if !(p.continuity_residual <= threshold) {
        return Err(Error::ContinuityViolation {
            residual: p.continuity_residual,
            threshold,
        });
    }
    Ok(p)
}

/// `⟨e_∂, f_∂⟩ - Σ_k e_I[k] f_I[k]`, the rate of change of the energy.
pub fn power_rate(bp: &BoundaryPorts, ips: &[InterfacePorts]) -> f64 {
    bp.pairing() - ips.iter().map(InterfacePorts::power).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    #[test]
    fn equal_traces_have_no_flow() {
        let bp = boundary_ports(Vector2::new(1.0, 1.0), Vector2::new(1.0, 1.0));
        assert_eq!(bp.f, Vector2::zeros());
        assert_abs_diff_eq!(bp.e, Vector2::new(SQRT_2, SQRT_2), epsilon = 1e-15);
    }

    #[test]
    fn hand_evaluated_ports() {
        let bp = boundary_ports(Vector2::new(1.0, 2.0), Vector2::new(3.0, 4.0));
        assert_abs_diff_eq!(bp.f, Vector2::new(SQRT_2, SQRT_2), epsilon = 1e-15);
        assert_abs_diff_eq!(bp.e, Vector2::new(2.0 * SQRT_2, 3.0 * SQRT_2), epsilon = 1e-15);
        let zero = boundary_ports(Vector2::zeros(), Vector2::zeros());
        assert_eq!(zero.stacked(), Vector4::zeros());
    }

    #[test]
    fn interface_jump() {
        let ip = interface_ports(Vector2::new(2.0, 5.0), Vector2::new(1.0, 5.0), 1e-9).unwrap();
        assert_eq!((ip.f_i, ip.e_i, ip.continuity_residual), (5.0, 1.0, 0.0));
        let ip = interface_ports(Vector2::new(0.3, -2.0), Vector2::new(0.3, -2.0), 1e-9).unwrap();
        assert_eq!((ip.e_i, ip.f_i), (0.0, -2.0));
        match interface_ports(Vector2::new(2.0, 5.0), Vector2::new(1.0, 4.0), 1e-9) {
            Err(Error::ContinuityViolation { residual, .. }) => assert_eq!(residual, 1.0),
            other => panic!("expected continuity violation, got {other:?}"),
        }
    }

    #[test]
    fn power_rate_examples() {
        let bp = BoundaryPorts {
            f: Vector2::new(SQRT_2, SQRT_2),
            e: Vector2::new(2.0 * SQRT_2, 3.0 * SQRT_2),
        };
        let ip = InterfacePorts { f_i: 5.0, e_i: 1.0, continuity_residual: 0.0 };
        assert_abs_diff_eq!(power_rate(&bp, &[ip]), 5.0, epsilon = 1e-13);
        let zero = BoundaryPorts { f: Vector2::zeros(), e: Vector2::zeros() };
        assert_eq!(power_rate(&zero, &[]), 0.0);
        let closed = BoundaryPorts { f: Vector2::zeros(), e: Vector2::new(1.0, 2.0) };
        let still = InterfacePorts { f_i: 0.0, e_i: 0.7, continuity_residual: 0.0 };
        assert_eq!(power_rate(&closed, &[still]), 0.0);
    }

    #[test]
    fn boundary_pairing_in_traces() {
        // ⟨e, f⟩ = -e1(b) e2(b) + e1(a) e2(a)
        let (tb, ta) = (Vector2::new(0.7, -1.3), Vector2::new(2.1, 0.4));
        let bp = boundary_ports(tb, ta);
        assert_abs_diff_eq!(bp.pairing(), -tb[0] * tb[1] + ta[0] * ta[1], epsilon = 1e-14);
    }
}
