//! One-dimensional Neumann reaction–diffusion model with gradient source.

mod diagnostic;
mod evolve;
mod exponents;
mod model;

pub use diagnostic::{rd_weighted_diagnostic, WeightedReport, SAMPLE_FLOOR, TAIL_DRIFT_TOL};
pub use evolve::{evolve_rd, evolve_rd_with, CosineTransform, MeanMonotonicity, RdEvolveOptions, RdTrajectory};
pub use exponents::{critical_alpha, rd_exponents, RdExponents};
pub use model::{centered_gradient, diffusion, gradient_source, mean, rd_rhs, Diffusivity, RdConfig};
