//! Implicit-midpoint time stepping and energy bookkeeping.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::simulate::discrete::DiscreteSystem;

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// One implicit-midpoint step: `(I - dt/2 A) y⁺ = (I + dt/2 A) y`.
pub fn step(ds: &DiscreteSystem, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    check_dt(dt)?;
    let a = ds.a_red();
    let n = a.nrows();
    let lhs = DMatrix::identity(n, n) - a * (0.5 * dt);
    let rhs = y + a * y * (0.5 * dt);
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver(format!("midpoint system is singular at dt = {dt}")))
}

/// Precomputed midpoint propagator `(I - dt/2 A)⁻¹ (I + dt/2 A)`.
#[derive(Debug, Clone)]
pub struct MidpointStepper {
    dt: f64,
    g: DMatrix<f64>,
}

impl MidpointStepper {
    pub fn new(a: &DMatrix<f64>, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let lhs = &id - a * (0.5 * dt);
        let rhs = &id + a * (0.5 * dt);
        let g = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Solver(format!("midpoint system is singular at dt = {dt}")))?;
        Ok(Self { dt, g })
    }

    pub fn for_system(ds: &DiscreteSystem, dt: f64) -> Result<Self> {
        Self::new(ds.a_red(), dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn advance(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.g * y
    }
}

/// Energy and port powers over a run. Row 0 holds the initial state with
/// zero residuals; row `k ≥ 1` closes the step ending at `times[k]`, with
/// powers evaluated at that step's midpoint state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    /// `⟨e_∂, f_∂⟩`.
    pub boundary_power: Vec<f64>,
    /// `e_I f_I` per interface, one inner vector per row.
    pub interface_power: Vec<Vec<f64>>,
    /// `ΔH/Δt` minus the power rate at the midpoint state.
    pub balance_residual: Vec<f64>,
    /// `ΔH/Δt` minus the average of the power rates at the step end points.
    pub endpoint_residual: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_balance_residual(&self) -> f64 {
        self.balance_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_abs_endpoint_residual(&self) -> f64 {
        self.endpoint_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest single-step increase of `H` (negative if it strictly decreases).
    pub fn max_energy_increase(&self) -> f64 {
        self.h
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_t |H(t) - H(0)| / H(0)`.
    pub fn relative_drift(&self) -> f64 {
        let h0 = self.h[0];
        self.h.iter().fold(0.0_f64, |m, h| m.max((h - h0).abs())) / h0
    }

    fn push(&mut self, t: f64, h: f64, ports: (f64, Vec<f64>), balance: f64, endpoint: f64) {
        self.times.push(t);
        self.h.push(h);
        self.boundary_power.push(ports.0);
        self.interface_power.push(ports.1);
        self.balance_residual.push(balance);
        self.endpoint_residual.push(endpoint);
    }
}

/// Reduced states at the recorded times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Store every `record_every`-th state; 0 stores only the initial and final states.
    pub record_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_every: 1 }
    }
}

/// Number of steps and the step actually used: `dt` is rounded down so that
/// a whole number of steps lands on `t_end`.
pub fn step_plan(dt: f64, t_end: f64) -> Result<(usize, f64)> {
    check_dt(dt)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("final time must be positive, got {t_end}")));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_end / steps as f64))
}

fn ports_at(ds: &DiscreteSystem, y: &DVector<f64>) -> (f64, f64, Vec<f64>) {
    let tr = ds.traces(y);
    let bp = tr.boundary_ports().pairing();
    let ip: Vec<f64> = tr.interface_ports().iter().map(|p| p.power()).collect();
    let rate = bp - ip.iter().sum::<f64>();
    (rate, bp, ip)
}

pub fn run(
    ds: &DiscreteSystem,
    y0: &DVector<f64>,
    dt: f64,
    t_end: f64,
    opts: RunOptions,
) -> Result<(Trajectory, EnergyTrace)> {
    if y0.len() != ds.reduced_dim() {
        return Err(invalid(format!(
            "initial state has length {}, reduced dimension is {}",
            y0.len(),
            ds.reduced_dim()
        )));
    }
    let (steps, dt) = step_plan(dt, t_end)?;
    let stepper = MidpointStepper::for_system(ds, dt)?;

    let mut trace = EnergyTrace::default();
    let mut traj = Trajectory::default();
    let mut y = y0.clone();
    let mut h = ds.energy(&y);
    let (mut rate, bp, ip) = ports_at(ds, &y);
    trace.push(0.0, h, (bp, ip), 0.0, 0.0);
    traj.times.push(0.0);
    traj.states.push(y.clone());

    for k in 1..=steps {
        let next = stepper.advance(&y);
        let mid = (&y + &next) * 0.5;
        let (mid_rate, bp, ip) = ports_at(ds, &mid);
        let (next_rate, _, _) = ports_at(ds, &next);
        let h_next = ds.energy(&next);
        let dh = (h_next - h) / dt;
        let t = k as f64 * dt;
        trace.push(t, h_next, (bp, ip), dh - mid_rate, dh - 0.5 * (rate + next_rate));
        let keep = if opts.record_every == 0 { k == steps } else { k % opts.record_every == 0 || k == steps };
        if keep {
            traj.times.push(t);
            traj.states.push(next.clone());
        }
        y = next;
        h = h_next;
        rate = next_rate;
    }
    Ok((traj, trace))
}
