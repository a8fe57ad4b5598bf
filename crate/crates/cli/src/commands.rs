use std::path::PathBuf;

use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use phs_core::certify::{classify_spec, lemma_equivalence_check, Classification, LemmaEvidence};
use phs_core::simulate::{
    assemble, decay_rate, run, spectral_abscissa, step_plan, DiscreteSystem, RunOptions,
};
use phs_core::system::SystemSpec;
use phs_core::transform::{isometry_refinement, verify_isometry, TrigSeries};
use phs_core::Error;

use crate::config::{ConfigError, InitialCondition, RunConfig};
use crate::output::{jnum, num, write_json, CsvWriter};

/// Tolerance on single-step energy increases for the monotonicity flag.
const MONOTONE_TOL: f64 = 1e-12;

/// Refinement slopes are computed for at most this many test functions.
const SLOPE_FUNCTIONS: usize = 5;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Resource(String),
    Topology(String),
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Resource(_) => 3,
            Failure::Topology(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Resource(m) | Failure::Topology(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Resource { .. } => Failure::Resource(e.to_string()),
            Error::InvalidArgument(_) | Error::Coercivity { .. } | Error::Geometry(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(format!("i/o error: {e}"))
    }
}

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn out_file(&self, name: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    fn spec(&self) -> Result<SystemSpec, Failure> {
        Ok(self.config.system.build()?)
    }

    fn discrete(&self) -> Result<DiscreteSystem, Failure> {
        let spec = self.spec()?;
        let points = self.config.points()?;
        Ok(assemble(&spec, &points)?)
    }
}

fn classification_json(c: &Classification, r: &[f64]) -> Value {
    json!({
        "rank_wb": c.rank_wb,
        "gram": [[c.gram[(0, 0)], c.gram[(0, 1)]], [c.gram[(1, 0)], c.gram[(1, 1)]]],
        "gram_eigs": c.gram_eigs,
        "gram_status": c.gram_status.label(),
        "r": r,
        "r_verdicts": c.r_verdicts,
        "r_ok": c.r_ok,
        "contraction": c.contraction,
        "isometric": c.isometric,
        "exp_stable_sufficient": c.exp_stable_sufficient,
        "tolerance": c.tolerance,
        "reasons": c.reasons,
    })
}

fn lemma_json(ev: &LemmaEvidence) -> Value {
    let g8: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| ev.gram8[(i, j)]).collect()).collect();
    json!({
        "gram4": [[ev.gram4[(0, 0)], ev.gram4[(0, 1)]], [ev.gram4[(1, 0)], ev.gram4[(1, 1)]]],
        "gram8": g8,
        "gram4_status": ev.gram4_status.label(),
        "gram8_status": ev.gram8_status.label(),
        "direct": ev.direct,
        "extended": ev.extended,
        "agree": ev.agree,
        "tolerance": ev.tolerance,
    })
}

pub fn cmd_check(ctx: &Context) -> Result<(), Failure> {
    let spec = ctx.spec()?;
    let validated = spec.validate(None)?;
    let tol = &ctx.config.tolerances;
    let c = classify_spec(&spec, tol.classify)?;
    let wb = spec.boundary.port_matrix();

    println!("rank(W_B) = {}", c.rank_wb);
    println!(
        "W_B Sigma_4 W_B^T = [[{}, {}], [{}, {}]]",
        c.gram[(0, 0)],
        c.gram[(0, 1)],
        c.gram[(1, 0)],
        c.gram[(1, 1)]
    );
    println!("gram eigenvalues = {:?} ({})", c.gram_eigs, c.gram_status.label());
    for (k, (r, ok)) in spec.r.iter().zip(&c.r_verdicts).enumerate() {
        println!("interface {k}: r = {r} -> {}", if *ok { "ok" } else { "negative" });
    }
    println!("contraction = {}", c.contraction);
    println!("isometric = {}", c.isometric);
    println!("exp_stable_sufficient = {}", c.exp_stable_sufficient);
    for reason in &c.reasons {
        println!("  reason: {reason}");
    }
    let non_smooth = validated.non_smooth_segments();
    if !non_smooth.is_empty() {
        println!("note: segments {non_smooth:?} are not claimed C1; stability criteria assume C1 fields");
    }

    let lemma = if spec.interfaces.len() == 1 {
        let ev = lemma_equivalence_check(&spec.boundary.trace_matrix(), spec.r[0], tol.lemma)?;
        println!(
            "lemma check: direct = {}, extended = {} ({}), agree = {}",
            ev.direct,
            ev.extended,
            ev.gram8_status.label(),
            ev.agree
        );
        lemma_json(&ev)
    } else {
        Value::Null
    };

    let bounds = validated.bounds();
    let report = json!({
        "seed": ctx.seed,
        "w_b": (0..2).map(|i| (0..4).map(|j| wb[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "classification": classification_json(&c, &spec.r),
        "coercivity": {"m": bounds.m, "M": bounds.big_m},
        "non_smooth_segments": non_smooth,
        "lemma": lemma,
    });
    write_json(&ctx.out_file("check.json")?, &report)?;
    Ok(())
}

fn initial_state(ctx: &Context, ds: &DiscreteSystem) -> Result<nalgebra::DVector<f64>, Failure> {
    let x = match &ctx.config.initial {
        InitialCondition::Gaussian { center, width, component } => {
            if !(1..=2).contains(component) {
                return Err(Failure::Config(format!(
                    "initial.component must be 1 or 2, got {component}"
                )));
            }
            if !(*width > 0.0) {
                return Err(Failure::Config(format!("initial.width must be positive, got {width}")));
            }
            let c = *component - 1;
            ds.sample(|_, z| {
                let mut v = Vector2::zeros();
                v[c] = (-((z - center) / width).powi(2)).exp();
                v
            })
        }
        InitialCondition::Random { modes } => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let f = TrigSeries::random(ds.spec(), *modes, &mut rng);
            ds.sample(|k, z| f.eval(k, z))
        }
    };
    Ok(ds.project(&x))
}

pub fn cmd_simulate(ctx: &Context) -> Result<(), Failure> {
    let (dt, t_end) = ctx.config.time_grid()?;
    let ds = ctx.discrete()?;
    if !ds.dissipative_certified() {
        eprintln!("WARNING: the system is not certified as a contraction; energy may grow");
        for reason in &ds.classification().reasons {
            eprintln!("WARNING:   {reason}");
        }
    }
    let y0 = initial_state(ctx, &ds)?;
    let (steps, dt_used) = step_plan(dt, t_end)?;
    let record_every = ctx.config.record_every.unwrap_or((steps / 100).max(1));
    let (traj, trace) = run(&ds, &y0, dt, t_end, RunOptions { record_every })?;

    let mut w = CsvWriter::create(
        &ctx.out_file("trajectory.csv")?,
        ctx.seed,
        &["t", "segment", "z", "x1", "x2"].map(String::from),
    )?;
    for (t, y) in traj.times.iter().zip(&traj.states) {
        let x = ds.to_grid_fn(&ds.lift(y));
        for (k, seg) in x.segments.iter().enumerate() {
            for (z, v) in seg.z.iter().zip(&seg.v) {
                w.row(&[num(*t), k.to_string(), num(*z), num(v[0]), num(v[1])])?;
            }
        }
    }
    w.finish()?;

    let n_if = ds.spec().interfaces.len();
    let mut header: Vec<String> = vec!["t".into(), "H".into(), "boundary_power".into()];
    header.extend((1..=n_if).map(|k| format!("interface_power_{k}")));
    header.push("balance_residual".into());
    header.push("endpoint_residual".into());
    let mut w = CsvWriter::create(&ctx.out_file("energy.csv")?, ctx.seed, &header)?;
    for i in 0..trace.len() {
        let mut row = vec![num(trace.times[i]), num(trace.h[i]), num(trace.boundary_power[i])];
        row.extend(trace.interface_power[i].iter().map(|p| num(*p)));
        row.push(num(trace.balance_residual[i]));
        row.push(num(trace.endpoint_residual[i]));
        w.row(&row)?;
    }
    w.finish()?;

    let window = ctx.config.decay_window.unwrap_or([0.2 * t_end, t_end]);
    let decay = decay_rate(&trace, (window[0], window[1]));
    let rise = trace.max_energy_increase();
    let monotone = rise <= MONOTONE_TOL;
    let summary = json!({
        "seed": ctx.seed,
        "steps": steps,
        "dt": dt_used,
        "t_end": t_end,
        "reduced_dim": ds.reduced_dim(),
        "dissipative_certified": ds.dissipative_certified(),
        "initial_energy": trace.h[0],
        "final_energy": trace.h[trace.len() - 1],
        "relative_drift": jnum(trace.relative_drift()),
        "max_energy_increase": jnum(rise),
        "energy_monotone": monotone,
        "max_balance_residual": trace.max_abs_balance_residual(),
        "max_endpoint_residual": trace.max_abs_endpoint_residual(),
        "decay_window": window,
        "decay_rate": decay.as_ref().map_or(Value::Null, |a| jnum(*a)),
    });
    write_json(&ctx.out_file("summary.json")?, &summary)?;

    println!("steps = {steps}, dt = {dt_used}");
    println!("H(0) = {:e}, H(T) = {:e}", trace.h[0], trace.h[trace.len() - 1]);
    println!("energy monotone = {monotone} (max step increase {rise:e})");
    println!("max balance residual = {:e}", trace.max_abs_balance_residual());
    println!("max endpoint residual = {:e}", trace.max_abs_endpoint_residual());
    match decay {
        Ok(a) => println!("decay rate over [{}, {}] = {a}", window[0], window[1]),
        Err(e) => println!("decay rate unavailable: {e}"),
    }
    Ok(())
}

pub fn cmd_spectrum(ctx: &Context) -> Result<(), Failure> {
    let ds = ctx.discrete()?;
    let sp = spectral_abscissa(&ds, ctx.config.eigen_cap)?;
    let mut w = CsvWriter::create(&ctx.out_file("eigenvalues.csv")?, ctx.seed, &["re", "im"].map(String::from))?;
    for l in &sp.eigenvalues {
        w.row(&[num(l.re), num(l.im)])?;
    }
    w.finish()?;
    let report = json!({
        "seed": ctx.seed,
        "reduced_dim": ds.reduced_dim(),
        "abscissa": sp.abscissa,
        "max_abs_real": sp.max_abs_real(),
        "dissipative_certified": ds.dissipative_certified(),
    });
    write_json(&ctx.out_file("spectrum.json")?, &report)?;
    println!("reduced dimension = {}", ds.reduced_dim());
    println!("spectral abscissa = {:e}", sp.abscissa);
    println!("max |Re lambda| = {:e}", sp.max_abs_real());
    Ok(())
}

pub fn cmd_transform_verify(ctx: &Context) -> Result<(), Failure> {
    let mut spec = ctx.spec()?;
    if spec.interfaces.len() != 1 {
        return Err(Failure::Topology(format!(
            "transform-verify needs exactly one interface, the system has {}",
            spec.interfaces.len()
        )));
    }
    spec.validate(None)?;
    let l = spec.interfaces[0];
    if l != 0.0 {
        println!("notice: shifting coordinates by {} so the interface sits at 0", -l);
        spec.a -= l;
        spec.b -= l;
        spec.interfaces[0] = 0.0;
        for seg in &mut spec.segments {
            seg.lo -= l;
            seg.hi -= l;
            if let phs_core::system::QField::Sampled(s) = &mut seg.field {
                for (z, _) in s.iter_mut() {
                    *z -= l;
                }
            }
        }
    }

    let tc = &ctx.config.transform;
    if tc.functions == 0 || tc.points < 2 || tc.refinement.len() < 2 || tc.refinement.iter().any(|&n| n < 2) {
        return Err(Failure::Config(
            "transform: need functions >= 1, points >= 2 and at least two refinement levels >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst: f64 = 0.0;
    let mut all_ok = true;
    let mut slopes = Vec::new();
    for i in 0..tc.functions {
        let f = TrigSeries::random(&spec, tc.modes, &mut rng);
        let g = TrigSeries::random(&spec, tc.modes, &mut rng);
        let rep = verify_isometry(&spec, &f.sample(&spec, tc.points), &g.sample(&spec, tc.points), ctx.config.tolerances.isometry)?;
        worst = worst.max(rep.rel_mismatch);
        all_ok &= rep.ok;
        if i < SLOPE_FUNCTIONS {
            slopes.push(isometry_refinement(&spec, &f, &tc.refinement)?.slope);
        }
    }
    let eta = -spec.a / spec.b;
    let report = json!({
        "seed": ctx.seed,
        "eta": eta,
        "functions": tc.functions,
        "points": tc.points,
        "worst_relative_mismatch": worst,
        "all_within_tolerance": all_ok,
        "refinement_levels": tc.refinement,
        "refinement_slopes": slopes,
    });
    write_json(&ctx.out_file("transform.json")?, &report)?;
    println!("eta = {eta}");
    println!("worst relative mismatch = {worst:e} over {} function pairs", tc.functions);
    println!("refinement slopes = {slopes:?}");
    Ok(())
}
