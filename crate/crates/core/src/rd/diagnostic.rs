//! Time-weighted convergence statistic for reaction–diffusion trajectories.

use serde::Serialize;

use super::evolve::RdTrajectory;
use super::exponents::RdExponents;
use crate::error::{Error, Result};
use crate::lab::weighted_norm_sup;

/// Largest admissible tail drift of the mean, per unit time.
pub const TAIL_DRIFT_TOL: f64 = 1e-10;
/// Samples whose `α` distance falls below this fraction of the initial one
/// are dropped; there `e^{ωt}` only amplifies rounding.
pub const SAMPLE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedReport {
    pub u_hat: f64,
    pub omega: f64,
    pub mu: f64,
    /// Empirical constant `K`.
    pub k_stat: f64,
    pub argmax_time: f64,
    /// Last sample time that passed the floor.
    pub last_used_time: f64,
    pub samples_used: usize,
    pub tail_drift: f64,
    /// The supremum sits at the end of the usable window, so `K` would keep
    /// growing with `t_end`: `ω` exceeds the observed decay rate.
    pub gap_violation: bool,
}

pub fn rd_weighted_diagnostic(traj: &RdTrajectory, exps: &RdExponents, omega: f64) -> Result<WeightedReport> {
    if traj.len() < 3 {
        return Err(Error::NotConverged("trajectory has fewer than three samples".into()));
    }
    let t_end = *traj.times.last().unwrap();
    let window = 1.0_f64.min(0.25 * t_end);
    let i0 = traj.times.partition_point(|&t| t < t_end - window).min(traj.len() - 2);
    let u_hat = traj.final_mean();
    let tail_drift = (u_hat - traj.means[i0]).abs() / (t_end - traj.times[i0]);
    if !(tail_drift <= TAIL_DRIFT_TOL) {
        return Err(Error::NotConverged(format!(
            "tail mean moves by {tail_drift:e} per unit time (limit {TAIL_DRIFT_TOL:e})"
        )));
    }

    let norm_alpha = traj.distances_to(u_hat, exps.s_c);
    let norm_xi = traj.distances_to(u_hat, exps.s);
    let u0_norm = norm_alpha[0];
    let mut report = WeightedReport {
        u_hat,
        omega,
        mu: exps.mu,
        k_stat: 0.0,
        argmax_time: 0.0,
        last_used_time: 0.0,
        samples_used: 0,
        tail_drift,
        gap_violation: false,
    };
    if u0_norm == 0.0 {
        return Ok(report);
    }
    let cut = norm_alpha.iter().position(|&n| n <= SAMPLE_FLOOR * u0_norm).unwrap_or(traj.len());
    let (k_stat, arg) = weighted_norm_sup(&traj.times[..cut], &norm_alpha[..cut], &norm_xi[..cut], exps.mu, omega, u0_norm);
    if let Some(i) = arg {
        let used = &traj.times[1..cut];
        report.k_stat = k_stat;
        report.argmax_time = traj.times[i];
        report.samples_used = used.len();
        report.last_used_time = traj.times[cut - 1];
        // sup in the final tenth of the usable window
        report.gap_violation = traj.times[i] >= traj.times[cut - 1] - 0.1 * (traj.times[cut - 1] - traj.times[1]);
    }
    Ok(report)
}
