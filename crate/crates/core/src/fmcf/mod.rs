//! Fractional mean curvature flow of periodic graphs on the one-torus.

mod config;
mod evolve;
mod operator;
mod symbol;

pub use config::FmcfConfig;
pub use evolve::{
    evolve_fmcf, evolve_with, mean_drift, mean_drift_experiment, FmcfEvolveOptions, FmcfTrajectory,
    MeanDriftReport,
};
pub use operator::{apply_fmcf_a, Application, FmcfOperator};
pub use symbol::{fmcf_numeric_symbol, numeric_symbol_with, NumericSymbol};
