//! The map between a single-interface system on `[a, b]` with the interface
//! at `0` and a four-component boundary system on `[0, b]`.
//!
//! The left segment is pulled back through `z = ηζ + a` with `η = -a/b`, so
//! that `[a, 0]` and `[0, b]` share one parameter interval.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::system::{SegmentQ, SystemSpec};

/// Samples of a two-component function on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSamples {
    pub z: Vec<f64>,
    pub v: Vec<Vector2<f64>>,
}

/// A piecewise grid function, one [`SegmentSamples`] per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub segments: Vec<SegmentSamples>,
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + h * i as f64 })
        .collect()
}

impl GridFn {
    /// Samples `f(segment, z)` on `n` uniform points per segment.
    pub fn sample(spec: &SystemSpec, n: usize, f: impl Fn(usize, f64) -> Vector2<f64>) -> Self {
        let pts = spec.breakpoints();
        let segments = (0..pts.len() - 1)
            .map(|k| {
                let z = uniform_grid(pts[k], pts[k + 1], n);
                let v = z.iter().map(|&zi| f(k, zi)).collect();
                SegmentSamples { z, v }
            })
            .collect();
        Self { segments }
    }

    /// `alpha·self + beta·other`; the grids must agree.
    pub fn combine(&self, alpha: f64, other: &GridFn, beta: f64) -> Result<GridFn> {
        check_same_grid(self, other)?;
        let segments = self
            .segments
            .iter()
            .zip(&other.segments)
            .map(|(s, o)| SegmentSamples {
                z: s.z.clone(),
                v: s.v.iter().zip(&o.v).map(|(x, y)| x * alpha + y * beta).collect(),
            })
            .collect();
        Ok(GridFn { segments })
    }
}

fn check_same_grid(x: &GridFn, y: &GridFn) -> Result<()> {
    if x.segments.len() != y.segments.len() {
        return Err(invalid(format!(
            "grid functions have {} and {} segments",
            x.segments.len(),
            y.segments.len()
        )));
    }
    for (k, (s, t)) in x.segments.iter().zip(&y.segments).enumerate() {
        if s.z != t.z || s.v.len() != s.z.len() || t.v.len() != t.z.len() {
            return Err(invalid(format!("grid mismatch on segment {k}")));
        }
    }
    Ok(())
}

/// Composite trapezoid rule for samples `f` on nodes `z`.
pub fn trapezoid(z: &[f64], f: &[f64]) -> f64 {
    z.windows(2)
        .zip(f.windows(2))
        .map(|(zw, fw)| 0.5 * (zw[1] - zw[0]) * (fw[0] + fw[1]))
        .sum()
}

/// `⟨x, y⟩ = (1/2) ∫ yᵀ Q x dz`, trapezoid per segment.
pub fn weighted_inner(spec: &SystemSpec, x: &GridFn, y: &GridFn) -> Result<f64> {
    check_same_grid(x, y)?;
    if x.segments.len() != spec.segments.len() {
        return Err(invalid(format!(
            "grid function has {} segments, system has {}",
            x.segments.len(),
            spec.segments.len()
        )));
    }
    let mut total = 0.0;
    for ((s, t), seg) in x.segments.iter().zip(&y.segments).zip(&spec.segments) {
        let f: Vec<f64> = s
            .z
            .iter()
            .zip(s.v.iter().zip(&t.v))
            .map(|(&z, (xv, yv))| yv.dot(&(seg.eval(z) * xv)))
            .collect();
        total += trapezoid(&s.z, &f);
    }
    Ok(0.5 * total)
}

/// The four-component system on `[0, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFormSystem {
    pub length: f64,
    pub eta: f64,
    pub a: f64,
    left: SegmentQ,
    right: SegmentQ,
}

impl BoundaryFormSystem {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        if spec.interfaces.len() != 1 {
            return Err(invalid(format!(
                "the boundary form needs exactly one interface, got {}",
                spec.interfaces.len()
            )));
        }
        let l = spec.interfaces[0];
        if l.abs() > 1e-12 * (spec.b - spec.a) {
            return Err(invalid(format!(
                "interface must sit at 0, got {l}; shift coordinates first"
            )));
        }
        if !(spec.a < 0.0 && spec.b > 0.0) {
            return Err(Error::Geometry(format!(
                "need a < 0 < b, got [{}, {}]",
                spec.a, spec.b
            )));
        }
        Ok(Self {
            length: spec.b,
            eta: -spec.a / spec.b,
            a: spec.a,
            left: spec.segments[0].clone(),
            right: spec.segments[1].clone(),
        })
    }

    /// `Q⁻` pulled back and scaled: `η⁻¹ Q⁻(ηζ + a)`.
    pub fn h0_left(&self, zeta: f64) -> Matrix2<f64> {
        self.left.eval(self.eta * zeta + self.a) / self.eta
    }

    pub fn h0_right(&self, zeta: f64) -> Matrix2<f64> {
        self.right.eval(zeta)
    }

    /// `H₀(ζ) = diag(η⁻¹ Q⁻(ηζ + a), Q⁺(ζ))`.
    pub fn h0(&self, zeta: f64) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.h0_left(zeta));
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.h0_right(zeta));
        m
    }

    /// `(1/2) ∫₀ᵇ vᵀ H₀ w dζ`, trapezoid on each component's grid.
    pub fn inner(&self, w: &BoundaryFn, v: &BoundaryFn) -> Result<f64> {
        if w.zeta1 != v.zeta1 || w.zeta2 != v.zeta2 {
            return Err(invalid("boundary-form functions live on different grids"));
        }
        let f1: Vec<f64> = (0..w.zeta1.len())
            .map(|i| v.w1[i].dot(&(self.h0_left(w.zeta1[i]) * w.w1[i])))
            .collect();
        let f2: Vec<f64> = (0..w.zeta2.len())
            .map(|i| v.w2[i].dot(&(self.h0_right(w.zeta2[i]) * w.w2[i])))
            .collect();
        Ok(0.5 * (trapezoid(&w.zeta1, &f1) + trapezoid(&w.zeta2, &f2)))
    }
}

/// A four-component function on `[0, b]`. The first pair is sampled on the
/// pullback of the left grid, the second on the right grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFn {
    pub zeta1: Vec<f64>,
    pub w1: Vec<Vector2<f64>>,
    pub zeta2: Vec<f64>,
    pub w2: Vec<Vector2<f64>>,
}

pub fn to_boundary_form(spec: &SystemSpec, x: &GridFn) -> Result<(BoundaryFormSystem, BoundaryFn)> {
    let bfs = BoundaryFormSystem::new(spec)?;
    if x.segments.len() != 2 {
        return Err(invalid(format!(
            "expected a two-segment grid function, got {} segments",
            x.segments.len()
        )));
    }
    let (left, right) = (&x.segments[0], &x.segments[1]);
    let zeta1: Vec<f64> = left.z.iter().map(|&z| (z - bfs.a) / bfs.eta).collect();
    let w1 = left.v.iter().map(|v| v * bfs.eta).collect();
    let w = BoundaryFn {
        zeta1,
        w1,
        zeta2: right.z.clone(),
        w2: right.v.clone(),
    };
    Ok((bfs, w))
}

pub fn from_boundary_form(bfs: &BoundaryFormSystem, w: &BoundaryFn) -> GridFn {
    let left = SegmentSamples {
        z: w.zeta1.iter().map(|&s| bfs.eta * s + bfs.a).collect(),
        v: w.w1.iter().map(|v| v / bfs.eta).collect(),
    };
    let right = SegmentSamples {
        z: w.zeta2.clone(),
        v: w.w2.clone(),
    };
    GridFn {
        segments: vec![left, right],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryReport {
    /// `⟨x, y⟩` on `[a, b]`.
    pub original: f64,
    /// `⟨S⁻¹x, S⁻¹y⟩_{H₀}` on `[0, b]`.
    pub transformed: f64,
    pub abs_mismatch: f64,
    /// Mismatch relative to `max(|original|, ε)`.
    pub rel_mismatch: f64,
    pub ok: bool,
}

pub fn verify_isometry(spec: &SystemSpec, x: &GridFn, y: &GridFn, tol: f64) -> Result<IsometryReport> {
    let original = weighted_inner(spec, x, y)?;
    let (bfs, wx) = to_boundary_form(spec, x)?;
    let (_, wy) = to_boundary_form(spec, y)?;
    let transformed = bfs.inner(&wx, &wy)?;
    let abs_mismatch = (original - transformed).abs();
    let rel_mismatch = abs_mismatch / original.abs().max(f64::MIN_POSITIVE);
    Ok(IsometryReport {
        original,
        transformed,
        abs_mismatch,
        rel_mismatch,
        ok: abs_mismatch <= tol * original.abs().max(1.0),
    })
}

/// Random smooth test function: per segment and component, a constant plus
/// a few sine modes with normal amplitudes and uniform phases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    /// `[segment][component] -> (offset, [(amplitude, wavenumber, phase)])`.
    terms: Vec<[(f64, Vec<(f64, f64, f64)>); 2]>,
    breakpoints: Vec<f64>,
}

impl TrigSeries {
    pub fn random<R: Rng + ?Sized>(spec: &SystemSpec, modes: usize, rng: &mut R) -> Self {
        let breakpoints = spec.breakpoints();
        let component = |rng: &mut R| {
            let offset: f64 = rng.sample(StandardNormal);
            let t = (1..=modes)
                .map(|k| {
                    let amp: f64 = rng.sample(StandardNormal);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    (amp / k as f64, k as f64 * PI, phase)
                })
                .collect();
            (offset, t)
        };
        let terms = (0..breakpoints.len() - 1)
            .map(|_| [component(rng), component(rng)])
            .collect();
        Self { terms, breakpoints }
    }

    pub fn eval(&self, segment: usize, z: f64) -> Vector2<f64> {
        let (lo, hi) = (self.breakpoints[segment], self.breakpoints[segment + 1]);
        let s = (z - lo) / (hi - lo);
        let comp = |c: usize| {
            let (offset, t) = &self.terms[segment][c];
            offset + t.iter().map(|(a, k, p)| a * (k * s + p).sin()).sum::<f64>()
        };
        Vector2::new(comp(0), comp(1))
    }

    pub fn sample(&self, spec: &SystemSpec, n: usize) -> GridFn {
        GridFn::sample(spec, n, |k, z| self.eval(k, z))
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    pub points: Vec<usize>,
    /// `|⟨S⁻¹f, S⁻¹f⟩_{H₀}(n) - ⟨S⁻¹f, S⁻¹f⟩_{H₀}(4n)|` per resolution.
    pub errors: Vec<f64>,
    /// Observed order in the grid spacing.
    pub slope: f64,
}

/// Quadrature error of the transformed norm under refinement, against the
/// same function sampled at four times the resolution.
pub fn isometry_refinement(spec: &SystemSpec, f: &TrigSeries, points: &[usize]) -> Result<RefinementReport> {
    let norm = |n: usize| -> Result<f64> {
        let (bfs, w) = to_boundary_form(spec, &f.sample(spec, n))?;
        bfs.inner(&w, &w)
    };
    let mut errors = Vec::with_capacity(points.len());
    for &n in points {
        let coarse = norm(n)?;
        let fine = norm(4 * (n - 1) + 1)?;
        errors.push((coarse - fine).abs());
    }
    let h: Vec<f64> = points.iter().map(|&n| 1.0 / (n - 1) as f64).collect();
    let slope = loglog_slope(&h, &errors);
    Ok(RefinementReport {
        points: points.to_vec(),
        errors,
        slope,
    })
}
