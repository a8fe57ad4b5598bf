//! Structure-preserving discretization and the dynamic checks built on it.

pub mod analysis;
pub mod discrete;
pub mod integrate;
pub mod sbp;
pub mod spectrum;

pub use analysis::{boundary_observation_ratio, decay_rate, dissipation_bound_check, DissipationReport, Side};
pub use discrete::{assemble, DiscreteSystem, SegmentGrid, Traces};
pub use integrate::{run, step, step_plan, EnergyTrace, MidpointStepper, RunOptions, Trajectory};
pub use sbp::{build_sbp, SbpOperator};
pub use spectrum::{eigenvalues, spectral_abscissa, Spectrum, DEFAULT_EIGEN_CAP};
