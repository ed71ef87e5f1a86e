//! Finite-dimensional quasilinear systems at non-isolated equilibria:
//! linearization, spectral splitting, normal-stability checks, the graph
//! chart of the equilibrium set and reduced trajectories.

mod chart;
mod integrate;
mod linearize;
pub mod poly;
mod reduce;
mod split;
mod stability;
mod svd;
mod synth;
mod system;

pub use chart::{build_graph_chart, EquilibriumChart};
pub use integrate::{simulate, simulate_with, IntegratorOptions, Trajectory};
pub use linearize::{linearize_at, EQUILIBRIUM_TOL};
pub use poly::PolySystem;
pub use reduce::{limit_point, reduce_trajectory, ReducedTrajectory};
pub use split::{analyze, spectral_split, SpectralSplit, SplitAnalysis};
pub use stability::{
    check_normal_stability, ManifoldParam, NormalStabilityReport, StabilityFailure, StabilityOptions,
};
pub use synth::{random_orthogonal, synthesize_normally_stable, SynthesizedSystem};
pub use system::{fd_step, QuasilinearSystem};
