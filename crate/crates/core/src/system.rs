//! Declarative description of a piecewise system of conservation laws.
//!
//! A [`SystemSpec`] covers `[a, b]` with `n + 1` segments separated by the
//! interfaces `l_1 < … < l_n`. Each segment carries its own energy matrix
//! field `Q(z)`, each interface a resistance `r_k`, and the two outer ends
//! share one 2×4 boundary matrix.

use nalgebra::{DMatrix, Matrix2, SMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::matrices::rext4;

pub type Matrix24 = SMatrix<f64, 2, 4>;

/// Relative slack used when comparing sampled eigenvalues with `[m, M]`.
const BOUND_SLACK: f64 = 1e-12;

/// Energy matrix field on one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum QField {
    Constant(Matrix2<f64>),
    /// Linear interpolation between the values at the two segment ends.
    Affine { lo: Matrix2<f64>, hi: Matrix2<f64> },
    /// Piecewise-linear interpolation of samples `(z, Q(z))`, sorted by `z`,
    /// with the first and last sample on the segment ends.
    Sampled(Vec<(f64, Matrix2<f64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentQ {
    pub lo: f64,
    pub hi: f64,
    pub field: QField,
    /// Whether the field is claimed to be C¹. Recorded, not enforced.
    pub smooth: bool,
}

impl SegmentQ {
    pub fn constant(lo: f64, hi: f64, q: Matrix2<f64>) -> Self {
        Self {
            lo,
            hi,
            field: QField::Constant(q),
            smooth: true,
        }
    }

    pub fn identity(lo: f64, hi: f64) -> Self {
        Self::constant(lo, hi, Matrix2::identity())
    }

    /// Evaluates `Q(z)`; positions outside `[lo, hi]` are clamped.
    pub fn eval(&self, z: f64) -> Matrix2<f64> {
        let z = z.clamp(self.lo, self.hi);
        match &self.field {
            QField::Constant(q) => *q,
            QField::Affine { lo, hi } => {
                let t = (z - self.lo) / (self.hi - self.lo);
                lo * (1.0 - t) + hi * t
            }
            QField::Sampled(samples) => {
                let idx = samples.partition_point(|(s, _)| *s <= z);
                if idx == 0 {
                    return samples[0].1;
                }
                if idx >= samples.len() {
                    return samples[samples.len() - 1].1;
                }
                let (z0, q0) = samples[idx - 1];
                let (z1, q1) = samples[idx];
                let t = (z - z0) / (z1 - z0);
                q0 * (1.0 - t) + q1 * t
            }
        }
    }

    /// Sample points at which coercivity is checked.
    ///
    /// For affine and piecewise-linear fields the extreme eigenvalues over the
    /// segment are attained at these points (λ_min is concave and λ_max convex
    /// along a linear path of symmetric matrices).
    pub fn samples(&self) -> Vec<(f64, Matrix2<f64>)> {
        match &self.field {
            QField::Constant(q) => vec![(self.lo, *q)],
            QField::Affine { lo, hi } => vec![(self.lo, *lo), (self.hi, *hi)],
            QField::Sampled(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryForm {
    /// `W̃_B [(Qx)(b); (Qx)(a)] = 0`.
    Trace,
    /// `W_B [f_∂; e_∂] = 0`.
    Port,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub form: BoundaryForm,
    pub matrix: Matrix24,
    pub rank: usize,
}

impl BoundarySpec {
    pub fn new(form: BoundaryForm, matrix: Matrix24) -> Self {
        let rank = numerical_rank(&DMatrix::from_iterator(2, 4, matrix.iter().copied()), 1e-12);
        Self { form, matrix, rank }
    }

    pub fn trace(matrix: Matrix24) -> Self {
        Self::new(BoundaryForm::Trace, matrix)
    }

    pub fn port(matrix: Matrix24) -> Self {
        Self::new(BoundaryForm::Port, matrix)
    }

    /// Builds from row-major nested rows, checking the 2×4 shape.
    pub fn from_rows(form: BoundaryForm, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 4) {
            let shape: Vec<usize> = rows.iter().map(Vec::len).collect();
            return Err(invalid(format!(
                "boundary matrix must be 2x4, got {} rows with lengths {shape:?}",
                rows.len()
            )));
        }
        let m = Matrix24::from_fn(|i, j| rows[i][j]);
        Ok(Self::new(form, m))
    }

    /// Velocity-free ends: `(Qx)_2(b) = 0` and `(Qx)_2(a) = 0`.
    pub fn closed() -> Self {
        #[rustfmt::skip]
        let m = Matrix24::new(
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        );
        Self::trace(m)
    }

    /// Port-form matrix `W_B`.
    pub fn port_matrix(&self) -> Matrix24 {
        match self.form {
            BoundaryForm::Port => self.matrix,
            BoundaryForm::Trace => self.matrix * rext4().transpose(),
        }
    }

    /// Trace-form matrix `W̃_B = W_B R_ext`.
    pub fn trace_matrix(&self) -> Matrix24 {
        match self.form {
            BoundaryForm::Trace => self.matrix,
            BoundaryForm::Port => self.matrix * rext4(),
        }
    }
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub a: f64,
    pub b: f64,
    pub interfaces: Vec<f64>,
    pub segments: Vec<SegmentQ>,
    pub r: Vec<f64>,
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityBounds {
    pub m: f64,
    pub big_m: f64,
}

/// A spec whose geometry and coercivity have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSystem {
    spec: SystemSpec,
    bounds: CoercivityBounds,
}

impl ValidatedSystem {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn bounds(&self) -> CoercivityBounds {
        self.bounds
    }

    pub fn into_spec(self) -> SystemSpec {
        self.spec
    }

    /// Segments whose field is not claimed to be C¹; the exponential
    /// stability criteria assume continuously differentiable fields.
    pub fn non_smooth_segments(&self) -> Vec<usize> {
        self.spec
            .segments
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.smooth)
            .map(|(k, _)| k)
            .collect()
    }
}

impl std::ops::Deref for ValidatedSystem {
    type Target = SystemSpec;

    fn deref(&self) -> &SystemSpec {
        &self.spec
    }
}

impl SystemSpec {
    pub fn n_interfaces(&self) -> usize {
        self.interfaces.len()
    }

    /// Breakpoints `a, l_1, …, l_n, b`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.interfaces.len() + 2);
        p.push(self.a);
        p.extend_from_slice(&self.interfaces);
        p.push(self.b);
        p
    }

    /// Checks geometry and coercivity. When `bounds` is `None` the extreme
    /// sampled eigenvalues are used.
    pub fn validate(&self, bounds: Option<CoercivityBounds>) -> Result<ValidatedSystem> {
        self.check_geometry()?;
        if let Some(b) = bounds {
            if !(b.m > 0.0 && b.m <= b.big_m && b.big_m.is_finite()) {
                return Err(invalid(format!(
                    "coercivity bounds need 0 < m <= M, got m = {}, M = {}",
                    b.m, b.big_m
                )));
            }
        }

        let mut lo_seen = f64::INFINITY;
        let mut hi_seen = f64::NEG_INFINITY;
        let mut lo_at = (0, self.a);
        for (k, seg) in self.segments.iter().enumerate() {
            for (z, q) in seg.samples() {
                let scale = q.amax().max(1.0);
                if !q.iter().all(|v| v.is_finite()) {
                    return Err(Error::Coercivity {
                        segment: k,
                        position: z,
                        detail: "non-finite entry".into(),
                    });
                }
                if (q[(0, 1)] - q[(1, 0)]).abs() > BOUND_SLACK * scale {
                    return Err(Error::Coercivity {
                        segment: k,
                        position: z,
                        detail: format!("matrix is not symmetric: {q}"),
                    });
                }
                let eig = SymmetricEigen::new(q).eigenvalues;
                let (emin, emax) = (eig.min(), eig.max());
                if let Some(b) = bounds {
                    if emin < b.m - BOUND_SLACK * b.big_m || emax > b.big_m * (1.0 + BOUND_SLACK) {
                        return Err(Error::Coercivity {
                            segment: k,
                            position: z,
                            detail: format!(
                                "eigenvalues [{emin}, {emax}] outside [{}, {}]",
                                b.m, b.big_m
                            ),
                        });
                    }
                }
                if emin < lo_seen {
                    lo_seen = emin;
                    lo_at = (k, z);
                }
                hi_seen = hi_seen.max(emax);
            }
        }
        if lo_seen <= 0.0 {
            return Err(Error::Coercivity {
                segment: lo_at.0,
                position: lo_at.1,
                detail: format!("smallest eigenvalue {lo_seen} is not positive"),
            });
        }
        let bounds = bounds.unwrap_or(CoercivityBounds {
            m: lo_seen,
            big_m: hi_seen,
        });
        Ok(ValidatedSystem {
            spec: self.clone(),
            bounds,
        })
    }

    fn check_geometry(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::Geometry(format!(
                "domain needs finite a < b, got [{}, {}]",
                self.a, self.b
            )));
        }
        let pts = self.breakpoints();
        if pts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Geometry(format!(
                "interfaces must be strictly increasing inside (a, b): {:?}",
                self.interfaces
            )));
        }
        let n = self.interfaces.len();
        if self.segments.len() != n + 1 {
            return Err(Error::Geometry(format!(
                "{n} interfaces need {} segments, got {}",
                n + 1,
                self.segments.len()
            )));
        }
        if self.r.len() != n {
            return Err(invalid(format!(
                "{n} interfaces need {n} resistances, got {}",
                self.r.len()
            )));
        }
        if let Some(bad) = self.r.iter().find(|r| !r.is_finite()) {
            return Err(invalid(format!("interface resistance must be finite, got {bad}")));
        }
        let tol = 1e-12 * (self.b - self.a);
        for (k, seg) in self.segments.iter().enumerate() {
            let (lo, hi) = (pts[k], pts[k + 1]);
            if (seg.lo - lo).abs() > tol || (seg.hi - hi).abs() > tol {
                let kind = if seg.lo > lo + tol || (k > 0 && seg.lo > self.segments[k - 1].hi + tol) {
                    "gap"
                } else {
                    "overlap or mismatch"
                };
                return Err(Error::Geometry(format!(
                    "segment {k} covers [{}, {}] but must cover [{lo}, {hi}] ({kind})",
                    seg.lo, seg.hi
                )));
            }
            if let QField::Sampled(s) = &seg.field {
                if s.is_empty() {
                    return Err(Error::Geometry(format!("segment {k} has no Q samples")));
                }
                if s.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::Geometry(format!(
                        "segment {k}: Q sample positions must be strictly increasing"
                    )));
                }
                let (first, last) = (s[0].0, s[s.len() - 1].0);
                if (first - seg.lo).abs() > tol || (last - seg.hi).abs() > tol {
                    return Err(Error::Geometry(format!(
                        "segment {k}: Q samples span [{first}, {last}] instead of [{}, {}]",
                        seg.lo, seg.hi
                    )));
                }
            }
        }
        Ok(())
    }
}
