//! Semi-discrete system: SBP differences per segment, boundary and interface
//! conditions imposed by restricting to the null space of a constraint matrix.
//!
//! Degrees of freedom are node-interleaved, `(x1, x2)` per grid node, segment
//! after segment. Each interface carries two nodes, one per side.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::certify::{classify_spec, Classification, DEFAULT_TOL};
use crate::error::{invalid, Error, Result};
use crate::matrices::p1;
use crate::ports::{boundary_ports, power_rate, BoundaryPorts, InterfacePorts};
use crate::simulate::sbp::{build_sbp, SbpOperator};
use crate::system::SystemSpec;
use crate::transform::{uniform_grid, GridFn, SegmentSamples};

/// Relative singular-value threshold for the constraint rank.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGrid {
    pub z: Vec<f64>,
    pub sbp: SbpOperator,
    /// Index of the segment's first node in the global node list.
    pub first_node: usize,
}

impl SegmentGrid {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn last_node(&self) -> usize {
        self.first_node + self.z.len() - 1
    }
}

/// Co-energy traces `Qx` at the domain ends and on both sides of each interface.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub b: Vector2<f64>,
    pub a: Vector2<f64>,
    /// `(Qx)(l_k⁻), (Qx)(l_k⁺)` per interface.
    pub interfaces: Vec<(Vector2<f64>, Vector2<f64>)>,
}

impl Traces {
    pub fn boundary_ports(&self) -> BoundaryPorts {
        boundary_ports(self.b, self.a)
    }

    pub fn interface_ports(&self) -> Vec<InterfacePorts> {
        self.interfaces
            .iter()
            .map(|(m, p)| InterfacePorts::unchecked(*m, *p))
            .collect()
    }

    /// `⟨e_∂, f_∂⟩ - Σ e_I f_I`.
    pub fn power_rate(&self) -> f64 {
        power_rate(&self.boundary_ports(), &self.interface_ports())
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    spec: SystemSpec,
    grids: Vec<SegmentGrid>,
    q_nodes: Vec<Matrix2<f64>>,
    /// Per-node blocks of the mass matrix `½ Hw ⊗ Q`.
    mw_blocks: Vec<Matrix2<f64>>,
    a_free: DMatrix<f64>,
    c: DMatrix<f64>,
    constraint_rank: usize,
    z: DMatrix<f64>,
    a_red: DMatrix<f64>,
    trace_full: DMatrix<f64>,
    trace_red: DMatrix<f64>,
    classification: Classification,
}

/// Discretizes `spec` with `points[k]` nodes on segment `k`. A single entry
/// applies to every segment.
pub fn assemble(spec: &SystemSpec, points: &[usize]) -> Result<DiscreteSystem> {
    let validated = spec.validate(None)?;
    let spec = validated.spec();
    let nseg = spec.segments.len();
    let points: Vec<usize> = match points.len() {
        1 => vec![points[0]; nseg],
        l if l == nseg => points.to_vec(),
        l => {
            return Err(invalid(format!(
                "expected 1 or {nseg} resolutions, got {l}"
            )))
        }
    };
    let classification = classify_spec(spec, DEFAULT_TOL)?;

    let bp = spec.breakpoints();
    let mut grids = Vec::with_capacity(nseg);
    let mut q_nodes = Vec::new();
    let mut mw_blocks = Vec::new();
    for (k, seg) in spec.segments.iter().enumerate() {
        let n = points[k];
        if n < 3 {
            return Err(invalid(format!("segment {k} needs at least 3 points, got {n}")));
        }
        let z = uniform_grid(bp[k], bp[k + 1], n);
        let sbp = build_sbp(n, (bp[k + 1] - bp[k]) / (n - 1) as f64)?;
        let first_node = q_nodes.len();
        for (i, &zi) in z.iter().enumerate() {
            let q = seg.eval(zi);
            let q = (q + q.transpose()) * 0.5;
            q_nodes.push(q);
            mw_blocks.push(q * (0.5 * sbp.hw[i]));
        }
        grids.push(SegmentGrid { z, sbp, first_node });
    }
    let nodes = q_nodes.len();
    let dofs = 2 * nodes;

    // ẋ = (D ⊗ P1) blockdiag(Q) x per segment.
    let mut a_free = DMatrix::zeros(dofs, dofs);
    for g in &grids {
        for i in 0..g.n() {
            for j in i.saturating_sub(1)..(i + 2).min(g.n()) {
                let dij = g.sbp.d[(i, j)];
                if dij == 0.0 {
                    continue;
                }
                let blk = p1() * q_nodes[g.first_node + j] * dij;
                let (r, c) = (2 * (g.first_node + i), 2 * (g.first_node + j));
                for u in 0..2 {
                    for v in 0..2 {
                        a_free[(r + u, c + v)] += blk[(u, v)];
                    }
                }
            }
        }
    }

    let n_if = spec.interfaces.len();
    let mut trace_nodes = vec![grids[nseg - 1].last_node(), grids[0].first_node];
    for k in 0..n_if {
        trace_nodes.push(grids[k].last_node());
        trace_nodes.push(grids[k + 1].first_node);
    }
    let mut trace_full = DMatrix::zeros(2 * trace_nodes.len(), dofs);
    for (t, &node) in trace_nodes.iter().enumerate() {
        trace_full
            .view_mut((2 * t, 2 * node), (2, 2))
            .copy_from(&q_nodes[node]);
    }

    // Constraints on the traces, then pulled back to the state.
    let mut ct = DMatrix::zeros(2 + 2 * n_if, trace_full.nrows());
    ct.view_mut((0, 0), (2, 4))
        .copy_from(&spec.boundary.trace_matrix());
    for k in 0..n_if {
        let (row, col) = (2 + 2 * k, 4 + 4 * k);
        let r = spec.r[k];
        // (Qx)_2(l⁻) - (Qx)_2(l⁺) = 0
        ct[(row, col + 1)] = 1.0;
        ct[(row, col + 3)] = -1.0;
        // (Qx)_2(l⁺) - r ((Qx)_1(l⁻) - (Qx)_1(l⁺)) = 0
        ct[(row + 1, col + 3)] = 1.0;
        ct[(row + 1, col)] = -r;
        ct[(row + 1, col + 2)] = r;
    }
    let c = &ct * &trace_full;

    // Mw = L Lᵀ blockwise; an orthonormal null basis N of C L⁻ᵀ gives
    // the Mw-orthonormal basis Z = L⁻ᵀ N of null(C).
    let mut linvt = Vec::with_capacity(nodes);
    for (i, m) in mw_blocks.iter().enumerate() {
        let l = m.cholesky().ok_or_else(|| {
            Error::Solver(format!("mass block at node {i} is not positive definite"))
        })?;
        let inv = l.l().transpose().try_inverse().ok_or_else(|| {
            Error::Solver(format!("mass block at node {i} is singular"))
        })?;
        linvt.push(inv);
    }
    let apply_linvt = |m: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = m.clone();
        for (i, inv) in linvt.iter().enumerate() {
            let blk = inv * m.rows(2 * i, 2);
            out.rows_mut(2 * i, 2).copy_from(&blk);
        }
        out
    };
    // (C L⁻ᵀ)ᵀ = L⁻¹ Cᵀ; rows of C L⁻ᵀ are columns of this.
    let mut bt = DMatrix::zeros(dofs, c.nrows());
    for (i, inv) in linvt.iter().enumerate() {
        let blk = inv.transpose() * c.columns(2 * i, 2).transpose();
        bt.rows_mut(2 * i, 2).copy_from(&blk);
    }
    let svd = bt.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    let constraint_rank = keep.len();
    let null = if constraint_rank == 0 {
        DMatrix::identity(dofs, dofs)
    } else {
        let row_space = u.select_columns(keep.iter());
        let qr = row_space.qr();
        let mut qt = DMatrix::identity(dofs, dofs);
        qr.q_tr_mul(&mut qt);
        qt.rows(constraint_rank, dofs - constraint_rank).transpose()
    };
    let z = apply_linvt(&null);

    let mut mw_az = &a_free * &z;
    for (i, m) in mw_blocks.iter().enumerate() {
        let blk = m * mw_az.rows(2 * i, 2);
        mw_az.rows_mut(2 * i, 2).copy_from(&blk);
    }
    let a_red = z.transpose() * mw_az;
    let trace_red = &trace_full * &z;

    Ok(DiscreteSystem {
        spec: spec.clone(),
        grids,
        q_nodes,
        mw_blocks,
        a_free,
        c,
        constraint_rank,
        z,
        a_red,
        trace_full,
        trace_red,
        classification,
    })
}

impl DiscreteSystem {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn grids(&self) -> &[SegmentGrid] {
        &self.grids
    }

    pub fn dofs(&self) -> usize {
        2 * self.q_nodes.len()
    }

    pub fn reduced_dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn constraint_rank(&self) -> usize {
        self.constraint_rank
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    /// False when the algebraic conditions do not certify a contraction;
    /// simulation is still allowed.
    pub fn dissipative_certified(&self) -> bool {
        self.classification.contraction
    }

    /// Unconstrained generator acting on the full state.
    pub fn a_free(&self) -> &DMatrix<f64> {
        &self.a_free
    }

    /// Constraint matrix acting on the full state.
    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Mw-orthonormal basis of the constrained subspace (columns).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Reduced generator `Zᵀ Mw A Z`.
    pub fn a_red(&self) -> &DMatrix<f64> {
        &self.a_red
    }

    /// Dense mass matrix `½ Hw ⊗ Q`, so that the energy is `xᵀ Mw x`.
    pub fn mass(&self) -> DMatrix<f64> {
        let d = self.dofs();
        let mut m = DMatrix::zeros(d, d);
        for (i, b) in self.mw_blocks.iter().enumerate() {
            m.view_mut((2 * i, 2 * i), (2, 2)).copy_from(b);
        }
        m
    }

    fn mass_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        for (i, b) in self.mw_blocks.iter().enumerate() {
            let v = b * Vector2::new(x[2 * i], x[2 * i + 1]);
            out[2 * i] = v[0];
            out[2 * i + 1] = v[1];
        }
        out
    }

    /// Mw-orthogonal projection onto the constrained subspace, in reduced coordinates.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        self.z.tr_mul(&self.mass_apply(x))
    }

    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.z * y
    }

    /// `xᵀ Mw x` of a full state.
    pub fn energy_full(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.mass_apply(x))
    }

    /// Energy of a reduced state; the basis is Mw-orthonormal.
    pub fn energy(&self, y: &DVector<f64>) -> f64 {
        y.norm_squared()
    }

    /// Samples `f(segment, z)` at every node into a full state.
    pub fn sample(&self, f: impl Fn(usize, f64) -> Vector2<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.dofs());
        for (k, g) in self.grids.iter().enumerate() {
            for (i, &z) in g.z.iter().enumerate() {
                let v = f(k, z);
                let node = g.first_node + i;
                x[2 * node] = v[0];
                x[2 * node + 1] = v[1];
            }
        }
        x
    }

    /// Full state as a per-segment grid function.
    pub fn to_grid_fn(&self, x: &DVector<f64>) -> GridFn {
        let segments = self
            .grids
            .iter()
            .map(|g| SegmentSamples {
                z: g.z.clone(),
                v: (0..g.n())
                    .map(|i| {
                        let node = g.first_node + i;
                        Vector2::new(x[2 * node], x[2 * node + 1])
                    })
                    .collect(),
            })
            .collect();
        GridFn { segments }
    }

    /// Co-energy `Qx` at every node of a full state.
    pub fn co_energy(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut e = x.clone();
        for (i, q) in self.q_nodes.iter().enumerate() {
            let v = q * Vector2::new(x[2 * i], x[2 * i + 1]);
            e[2 * i] = v[0];
            e[2 * i + 1] = v[1];
        }
        e
    }

    fn split_traces(&self, t: &DVector<f64>) -> Traces {
        let v = |i: usize| Vector2::new(t[2 * i], t[2 * i + 1]);
        Traces {
            b: v(0),
            a: v(1),
            interfaces: (0..self.spec.interfaces.len())
                .map(|k| (v(2 + 2 * k), v(3 + 2 * k)))
                .collect(),
        }
    }

    pub fn traces(&self, y: &DVector<f64>) -> Traces {
        self.split_traces(&(&self.trace_red * y))
    }

    pub fn traces_full(&self, x: &DVector<f64>) -> Traces {
        self.split_traces(&(&self.trace_full * x))
    }

    /// Rate of change of the energy at reduced state `y`, from its traces.
    pub fn power_rate(&self, y: &DVector<f64>) -> f64 {
        self.traces(y).power_rate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{BoundarySpec, SegmentQ};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn single(q: Matrix2<f64>) -> SystemSpec {
        SystemSpec {
            a: 0.0,
            b: 1.0,
            interfaces: vec![],
            segments: vec![SegmentQ::constant(0.0, 1.0, q)],
            r: vec![],
            boundary: BoundarySpec::closed(),
        }
    }

    #[test]
    fn constraint_counting_without_interfaces() {
        let ds = assemble(&single(Matrix2::identity()), &[12]).unwrap();
        assert_eq!(ds.dofs(), 24);
        assert_eq!(ds.reduced_dim(), 22);
    }

    #[test]
    fn basis_is_mass_orthonormal_and_admissible() {
        let ds = assemble(&single(Matrix2::new(2.0, 0.3, 0.3, 0.5)), &[10]).unwrap();
        let z = ds.basis();
        let gram = z.transpose() * ds.mass() * z;
        let err = (gram - DMatrix::identity(z.ncols(), z.ncols())).amax();
        assert!(err < 1e-12, "{err}");
        assert!((ds.constraints() * z).amax() < 1e-12);
    }

    #[test]
    fn reduced_quadratic_form_is_half_power() {
        let ds = assemble(&single(Matrix2::new(2.0, 0.3, 0.3, 0.5)), &[10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let y = DVector::from_fn(ds.reduced_dim(), |_, _| StandardNormal.sample(&mut rng));
            let q = y.dot(&(ds.a_red() * &y));
            assert!((q - 0.5 * ds.power_rate(&y)).abs() < 1e-12 * y.norm_squared().max(1.0));
        }
    }

    #[test]
    fn projection_and_lift_roundtrip() {
        let ds = assemble(&single(Matrix2::identity()), &[8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = DVector::from_fn(ds.reduced_dim(), |_, _| StandardNormal.sample(&mut rng));
        let back = ds.project(&ds.lift(&y));
        assert!((back - &y).amax() < 1e-12);
        assert!((ds.energy_full(&ds.lift(&y)) - ds.energy(&y)).abs() < 1e-12);
    }

    #[test]
    fn resolution_list_must_match() {
        assert!(assemble(&single(Matrix2::identity()), &[8, 8]).is_err());
        assert!(assemble(&single(Matrix2::identity()), &[2]).is_err());
    }
}
