//! JSON run configuration.
//!
//! Matrices are row-major nested arrays. Boundary traces are ordered
//! `[(Qx)_1(b), (Qx)_2(b), (Qx)_1(a), (Qx)_2(a)]`; port variables as
//! `[f_1, f_2, e_1, e_2]`.

use std::path::{Path, PathBuf};

use nalgebra::Matrix2;
use serde::Deserialize;

use phs_core::presets::{
    acoustic, acoustic_boundary, isometric_demo, multi_interface_chain, zero_flow_boundary,
    AcousticParams, ScalarField,
};
use phs_core::system::{BoundaryForm, BoundarySpec, QField, SegmentQ, SystemSpec};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default = "default_resolution")]
    pub resolution: Resolution,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub initial: InitialCondition,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eigen_cap")]
    pub eigen_cap: usize,
    /// `[t0, t1]` for the decay-rate fit; defaults to the last 80% of the run.
    pub decay_window: Option<[f64; 2]>,
    /// Keep every k-th state in trajectory.csv; defaults to about 100 snapshots.
    pub record_every: Option<usize>,
    #[serde(default)]
    pub transform: TransformConfig,
}

fn default_resolution() -> Resolution {
    Resolution::Uniform(100)
}

fn default_eigen_cap() -> usize {
    phs_core::simulate::DEFAULT_EIGEN_CAP
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Uniform(usize),
    PerSegment(Vec<usize>),
}

impl Resolution {
    pub fn points(&self) -> Vec<usize> {
        match self {
            Resolution::Uniform(n) => vec![*n],
            Resolution::PerSegment(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub classify: f64,
    pub lemma: f64,
    pub isometry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            classify: phs_core::certify::DEFAULT_TOL,
            lemma: 1e-9,
            isometry: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `exp(-((z - center)/width)²)` in one state component (1 or 2).
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default = "first_component")]
        component: usize,
    },
    /// Seeded random smooth function with `modes` sine modes per segment.
    Random {
        #[serde(default = "default_modes")]
        modes: usize,
    },
}

fn first_component() -> usize {
    1
}

fn default_modes() -> usize {
    4
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Gaussian {
            center: -0.5,
            width: 0.1,
            component: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub functions: usize,
    pub points: usize,
    pub modes: usize,
    pub refinement: Vec<usize>,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            functions: 50,
            points: 400,
            modes: 4,
            refinement: vec![50, 100, 200, 400],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Constant(f64),
    Affine([f64; 2]),
}

impl From<&Scalar> for ScalarField {
    fn from(s: &Scalar) -> Self {
        match s {
            Scalar::Constant(v) => ScalarField::Constant(*v),
            Scalar::Affine([lo, hi]) => ScalarField::Affine { lo: *lo, hi: *hi },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum SystemConfig {
    Acoustic(AcousticConfig),
    Isometric(IsometricConfig),
    Chain(ChainConfig),
    Inline(InlineSystem),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticConfig {
    #[serde(default = "minus_one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default)]
    pub interface: f64,
    #[serde(default = "unit_scalar")]
    pub bulk_minus: Scalar,
    #[serde(default = "unit_scalar")]
    pub bulk_plus: Scalar,
    #[serde(default = "unit_scalar")]
    pub rho_minus: Scalar,
    #[serde(default = "unit_scalar")]
    pub rho_plus: Scalar,
    #[serde(default = "two")]
    pub r_i: f64,
    #[serde(default = "one")]
    pub r_b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometricConfig {
    #[serde(default = "minus_one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default)]
    pub l: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n: usize,
    pub r: Vec<f64>,
    #[serde(default = "minus_one")]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    #[serde(default)]
    pub boundary: Option<BoundaryConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSystem {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub interfaces: Vec<f64>,
    pub segments: Vec<SegmentConfig>,
    #[serde(default)]
    pub r: Vec<f64>,
    pub boundary: BoundaryConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SegmentConfig {
    #[serde(flatten)]
    pub field: FieldConfig,
    #[serde(default = "yes")]
    pub smooth: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldConfig {
    Constant { q: [[f64; 2]; 2] },
    Affine { q_lo: [[f64; 2]; 2], q_hi: [[f64; 2]; 2] },
    Sampled { samples: Vec<SampleConfig> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub z: f64,
    pub q: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// `W̃_B` acting on the stacked traces.
    Trace { matrix: Vec<Vec<f64>> },
    /// `W_B` acting on `[f; e]`.
    Port { matrix: Vec<Vec<f64>> },
    /// Zero velocity at both ends.
    Closed,
    /// Zero boundary flow, `W_B = [I 0]`.
    ZeroFlow,
    /// `p(a) = 0`, `p(b) = r_b v(b)`.
    Impedance { r_b: f64 },
}

fn minus_one() -> f64 {
    -1.0
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn unit_scalar() -> Scalar {
    Scalar::Constant(1.0)
}

fn mat2(m: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

impl BoundaryConfig {
    pub fn build(&self) -> Result<BoundarySpec, ConfigError> {
        let err = |e: phs_core::Error| ConfigError(format!("system.boundary: {e}"));
        Ok(match self {
            BoundaryConfig::Trace { matrix } => BoundarySpec::from_rows(BoundaryForm::Trace, matrix).map_err(err)?,
            BoundaryConfig::Port { matrix } => BoundarySpec::from_rows(BoundaryForm::Port, matrix).map_err(err)?,
            BoundaryConfig::Closed => BoundarySpec::closed(),
            BoundaryConfig::ZeroFlow => zero_flow_boundary(),
            BoundaryConfig::Impedance { r_b } => acoustic_boundary(*r_b),
        })
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec, ConfigError> {
        let err = |e: phs_core::Error| ConfigError(format!("system: {e}"));
        match self {
            SystemConfig::Acoustic(c) => acoustic(&AcousticParams {
                a: c.a,
                b: c.b,
                interface: c.interface,
                bulk_minus: (&c.bulk_minus).into(),
                bulk_plus: (&c.bulk_plus).into(),
                rho_minus: (&c.rho_minus).into(),
                rho_plus: (&c.rho_plus).into(),
                r_i: c.r_i,
                r_b: c.r_b,
            })
            .map_err(err),
            SystemConfig::Isometric(c) => isometric_demo(c.a, c.b, c.l).map_err(err),
            SystemConfig::Chain(c) => {
                let boundary = match &c.boundary {
                    Some(b) => b.build()?,
                    None => BoundarySpec::closed(),
                };
                multi_interface_chain(c.n, &c.r, boundary, c.a, c.b).map_err(err)
            }
            SystemConfig::Inline(s) => s.build(),
        }
    }
}

impl InlineSystem {
    fn build(&self) -> Result<SystemSpec, ConfigError> {
        let mut pts = vec![self.a];
        pts.extend_from_slice(&self.interfaces);
        pts.push(self.b);
        if self.segments.len() + 1 != pts.len() {
            return Err(ConfigError(format!(
                "system.segments: {} interfaces need {} segments, got {}",
                self.interfaces.len(),
                pts.len() - 1,
                self.segments.len()
            )));
        }
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(k, s)| SegmentQ {
                lo: pts[k],
                hi: pts[k + 1],
                field: match &s.field {
                    FieldConfig::Constant { q } => QField::Constant(mat2(q)),
                    FieldConfig::Affine { q_lo, q_hi } => QField::Affine {
                        lo: mat2(q_lo),
                        hi: mat2(q_hi),
                    },
                    FieldConfig::Sampled { samples } => {
                        QField::Sampled(samples.iter().map(|s| (s.z, mat2(&s.q))).collect())
                    }
                },
                smooth: s.smooth,
            })
            .collect();
        Ok(SystemSpec {
            a: self.a,
            b: self.b,
            interfaces: self.interfaces.clone(),
            segments,
            r: self.r.clone(),
            boundary: self.boundary.build()?,
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError(format!("config error at `{path}`: {inner}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn points(&self) -> Result<Vec<usize>, ConfigError> {
        let p = self.resolution.points();
        if p.is_empty() || p.iter().any(|&n| n < 3) {
            return Err(ConfigError(format!(
                "resolution: need at least 3 points per segment, got {p:?}"
            )));
        }
        Ok(p)
    }

    pub fn time_grid(&self) -> Result<(f64, f64), ConfigError> {
        match (self.dt, self.t_end) {
            (Some(dt), Some(t)) if dt > 0.0 && t > 0.0 && dt.is_finite() && t.is_finite() => Ok((dt, t)),
            (Some(dt), Some(t)) => Err(ConfigError(format!(
                "dt and t_end must be positive, got dt = {dt}, t_end = {t}"
            ))),
            _ => Err(ConfigError("simulation needs both `dt` and `t_end`".into())),
        }
    }
}
