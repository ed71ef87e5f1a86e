//! Semi-implicit time stepping for `u' = A(u)u`.
//!
//! The flat-state symbol is treated implicitly in Fourier space and the
//! remainder `R(u) = A(u)u − A(0)u` explicitly, with second-order
//! backward differencing (first step: implicit–explicit Euler).

use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::config::FmcfConfig;
use super::operator::FmcfOperator;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy)]
pub struct FmcfEvolveOptions {
    pub dt: f64,
    /// Record every `record_every` steps (the final step is always recorded).
    pub record_every: usize,
    /// Order `s` of the `H^s` deviation norm that is recorded.
    pub norm_order: f64,
}

impl Default for FmcfEvolveOptions {
    fn default() -> Self {
        Self {
            dt: 5e-3,
            record_every: 1,
            norm_order: 1.25,
        }
    }
}

/// Recorded evolution.
#[derive(Debug, Clone)]
pub struct FmcfTrajectory {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    /// `‖u(t) − ⟨u(t)⟩‖_{H^s}`.
    pub deviations: Vec<f64>,
    pub states: Vec<SpectralField>,
}

impl FmcfTrajectory {
    pub fn final_state(&self) -> &SpectralField {
        self.states.last().expect("trajectory is never empty")
    }

    /// `‖u(t) − c‖_{H^s}` along the trajectory for a constant `c`.
    pub fn distances_to(&self, c: f64, s: f64) -> Vec<f64> {
        self.states.iter().map(|u| u.add_constant(-c).sobolev_norm(s)).collect()
    }
}

pub fn evolve_fmcf(u0: &SpectralField, cfg: &FmcfConfig, t_end: f64) -> Result<FmcfTrajectory> {
    let op = FmcfOperator::new(*cfg)?;
    evolve_with(&op, u0, t_end, &FmcfEvolveOptions::default())
}

pub fn evolve_with(
    op: &FmcfOperator,
    u0: &SpectralField,
    t_end: f64,
    opts: &FmcfEvolveOptions,
) -> Result<FmcfTrajectory> {
    let grid = op.config().grid;
    if *u0.grid() != grid {
        return Err(Error::InvalidGrid("initial field must live on the operator grid".into()));
    }
    if !(opts.dt > 0.0) || !(t_end >= 0.0) || opts.record_every == 0 {
        return Err(Error::Config(format!(
            "need dt > 0, t_end ≥ 0 and record_every ≥ 1 (dt = {}, t_end = {t_end})",
            opts.dt
        )));
    }
    let n = grid.n_points();
    let steps = (t_end / opts.dt).round().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let symbol: Vec<f64> = (0..n).map(|j| op.flat_symbol(grid.mode_at(j))).collect();

    let mut traj = FmcfTrajectory {
        times: Vec::new(),
        means: Vec::new(),
        deviations: Vec::new(),
        states: Vec::new(),
    };
    let record = |traj: &mut FmcfTrajectory, t: f64, u: &SpectralField| {
        let mean = u.integral_mean();
        traj.times.push(t);
        traj.means.push(mean);
        traj.deviations.push(u.add_constant(-mean).sobolev_norm(opts.norm_order));
        traj.states.push(u.clone());
    };
    record(&mut traj, 0.0, u0);
    let start_dev = u0.max_abs() - u0.integral_mean().abs();

    let remainder = |u: &SpectralField, t: f64| -> Result<Vec<Complex64>> {
        let full = op.apply(u, u).map_err(|e| Error::Breakdown {
            time: t,
            reason: e.to_string(),
            last_state: u.values().to_vec(),
        })?;
        Ok(full
            .coeffs()
            .iter()
            .zip(u.coeffs())
            .zip(&symbol)
            .map(|((a, c), m)| a - c * m)
            .collect())
    };

    let mut prev: Option<(SpectralField, Vec<Complex64>)> = None;
    let mut u = u0.clone();
    for step in 1..=steps {
        let t_old = (step - 1) as f64 * dt;
        let r = remainder(&u, t_old)?;
        let coeffs: Vec<Complex64> = match &prev {
            None => (0..n)
                .map(|j| (u.coeffs()[j] + r[j] * dt) / (1.0 - dt * symbol[j]))
                .collect(),
            Some((u_prev, r_prev)) => (0..n)
                .map(|j| {
                    (u.coeffs()[j] * 4.0 - u_prev.coeffs()[j] + (r[j] * 2.0 - r_prev[j]) * (2.0 * dt))
                        / (3.0 - 2.0 * dt * symbol[j])
                })
                .collect(),
        };
        let next = SpectralField::from_coeffs(grid, coeffs)?;
        let t = step as f64 * dt;
        let dev = next.max_abs() - next.integral_mean().abs();
        if !next.values().iter().all(|v| v.is_finite()) || dev > 1e3 * start_dev.abs().max(1e-3) {
            return Err(Error::Breakdown {
                time: t_old,
                reason: "semi-implicit iteration diverged".into(),
                last_state: u.values().to_vec(),
            });
        }
        prev = Some((u, r));
        u = next;
        if step % opts.record_every == 0 || step == steps {
            record(&mut traj, t, &u);
        }
    }
    Ok(traj)
}

/// Evolution of the integral mean, reported without a verdict.
#[derive(Debug, Clone, Serialize)]
pub struct MeanDriftReport {
    pub times: Vec<f64>,
    /// `⟨u(t)⟩ − ⟨u⁰⟩`.
    pub drift: Vec<f64>,
    pub max_abs_drift: f64,
    /// `|û* − ⟨u⁰⟩|` with `û*` the final mean.
    pub limit_gap: f64,
}

pub fn mean_drift_experiment(u0: &SpectralField, cfg: &FmcfConfig, t_end: f64) -> Result<MeanDriftReport> {
    let op = FmcfOperator::new(*cfg)?;
    let traj = evolve_with(&op, u0, t_end, &FmcfEvolveOptions::default())?;
    Ok(mean_drift(&traj))
}

pub fn mean_drift(traj: &FmcfTrajectory) -> MeanDriftReport {
    let m0 = traj.means[0];
    let drift: Vec<f64> = traj.means.iter().map(|m| m - m0).collect();
    let max_abs_drift = drift.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    MeanDriftReport {
        times: traj.times.clone(),
        limit_gap: drift.last().copied().unwrap_or(0.0).abs(),
        drift,
        max_abs_drift,
    }
}
