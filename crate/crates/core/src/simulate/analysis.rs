//! Decay-rate estimation and sampled checks of the dissipation inequality.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::simulate::discrete::DiscreteSystem;
use crate::simulate::integrate::{step_plan, EnergyTrace, MidpointStepper};

/// Trials whose trace norm falls below this are skipped.
const MIN_DENOMINATOR: f64 = 1e-14;

/// `k̂` above this counts as a strict dissipation bound.
pub const DISSIPATION_TOL: f64 = 1e-10;

/// Least-squares slope of `-(1/2) log H` over samples with `t0 ≤ t ≤ t1`.
pub fn decay_rate(trace: &EnergyTrace, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.h)
        .filter(|(t, _)| **t >= t0 - 1e-12 && **t <= t1 + 1e-12)
        .map(|(t, h)| (*t, *h))
        .collect();
    if pts.len() < 2 {
        return Err(invalid(format!(
            "decay window [{t0}, {t1}] holds {} samples, need 2",
            pts.len()
        )));
    }
    if let Some((t, h)) = pts.iter().find(|(_, h)| !(*h > 0.0)) {
        return Err(invalid(format!("energy {h} at t = {t} is not positive")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| -0.5 * p.1.ln()).sum::<f64>() / n;
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (-0.5 * p.1.ln() - my)).sum();
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(sty / stt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationReport {
    /// Smallest observed `-⟨Ax, x⟩ / |trace|²`.
    pub k_hat: f64,
    pub holds: bool,
    pub trials: usize,
    pub skipped: usize,
}

/// Samples standard-normal reduced states and records the smallest ratio of
/// `-⟨Ax, x⟩ = -(1/2)(⟨e_∂, f_∂⟩ - Σ e_I f_I)` to the squared trace norm on `side`.
pub fn dissipation_bound_check(
    ds: &DiscreteSystem,
    side: Side,
    trials: usize,
    seed: u64,
) -> Result<DissipationReport> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k_hat = f64::INFINITY;
    let mut skipped = 0;
    for _ in 0..trials {
        let y = DVector::from_fn(ds.reduced_dim(), |_, _| StandardNormal.sample(&mut rng));
        let tr = ds.traces(&y);
        let denom = match side {
            Side::A => tr.a.norm_squared(),
            Side::B => tr.b.norm_squared(),
            Side::Both => tr.a.norm_squared() + tr.b.norm_squared(),
        };
        if denom < MIN_DENOMINATOR {
            skipped += 1;
            continue;
        }
        k_hat = k_hat.min(-0.5 * tr.power_rate() / denom);
    }
    if skipped == trials {
        return Err(Error::Inconclusive(format!(
            "all {trials} trials had a vanishing trace"
        )));
    }
    Ok(DissipationReport {
        k_hat,
        holds: k_hat > DISSIPATION_TOL,
        trials,
        skipped,
    })
}

/// `‖x(τ)‖² / ∫₀^τ |(Qx)(b, t)|² dt` for one initial reduced state, with the
/// time integral by the trapezoid rule on the midpoint steps.
pub fn boundary_observation_ratio(
    ds: &DiscreteSystem,
    y0: &DVector<f64>,
    tau: f64,
    dt: f64,
) -> Result<f64> {
    let (steps, dt) = step_plan(dt, tau)?;
    let stepper = MidpointStepper::for_system(ds, dt)?;
    let mut y = y0.clone();
    let mut prev = ds.traces(&y).b.norm_squared();
    let mut integral = 0.0;
    for _ in 0..steps {
        y = stepper.advance(&y);
        let cur = ds.traces(&y).b.norm_squared();
        integral += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    if !(integral > 0.0) {
        return Err(Error::Inconclusive("boundary trace vanished over the horizon".into()));
    }
    Ok(ds.energy(&y) / integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> EnergyTrace {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let h = times.iter().map(|&t| f(t)).collect();
        EnergyTrace { times, h, ..Default::default() }
    }

    #[test]
    fn decay_of_exponential_energy() {
        let tr = synthetic(|t| (-2.0 * t).exp());
        assert!((decay_rate(&tr, (2.0, 10.0)).unwrap() - 1.0).abs() < 1e-12);
        let flat = synthetic(|_| 3.0);
        assert!(decay_rate(&flat, (0.0, 10.0)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn nonpositive_energy_is_rejected() {
        let tr = synthetic(|t| 1.0 - t);
        assert!(decay_rate(&tr, (0.0, 10.0)).is_err());
        assert!(decay_rate(&synthetic(|_| 1.0), (20.0, 30.0)).is_err());
    }
}
