//! Decay fits, limit identification, weighted diagnostics, scenario runs and
//! the acceptance checks.

pub mod acceptance;
mod decay;
mod limit;
mod scenario;
mod svg;
mod weighted;

pub use decay::{default_floor, fit_decay, DecayFit, MIN_SAMPLES, WINDOW_RMS};
pub use limit::{identify_limit, LimitPoint, RESIDUAL_TOL, Y_TOL};
pub use scenario::{
    integration_floor, linearize_scenario, perturbed_start, run_scenario, spectrum_scenario, run_scenario_text, Artifacts, Check, LimitSummary, ModelTag, RunReport, Scenario,
    StabilityFlags, SynthSpec, CSV_FILE, REPORT_FILE, SVG_FILE,
};
pub use svg::decay_plot;
pub use weighted::{weighted_norm_sup, weighted_norm_track};
