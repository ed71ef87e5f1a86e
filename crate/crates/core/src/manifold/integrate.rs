//! Adaptive semi-implicit integration of `u' = A(u)u + f(u)`.
//!
//! The base step is the linearly implicit Euler step with `A` frozen at the
//! current state and `f` explicit:
//!
//! ```text
//! (I − h A(u_n)) u_{n+1} = u_n + h f(u_n)
//! ```
//!
//! Its global error expands in powers of `h`, so Aitken–Neville
//! extrapolation over the harmonic substep sequence `1, 2, …, K+1` raises
//! the order to `K+1`; the difference of the two highest tableau entries
//! drives step-size control.

use nalgebra::{DMatrix, DVector};

use super::system::QuasilinearSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of extrapolation columns beyond the base sweep.
    pub columns: usize,
    pub initial_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            columns: 5,
            initial_step: 1e-2,
        }
    }
}

/// States sampled at the requested output times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory is never empty")
    }
}

fn euler_sweep(
    system: &QuasilinearSystem,
    u0: &DVector<f64>,
    big_h: f64,
    substeps: usize,
) -> Option<DVector<f64>> {
    let d = u0.len();
    let h = big_h / substeps as f64;
    let mut u = u0.clone();
    for _ in 0..substeps {
        let lhs = DMatrix::identity(d, d) - system.a(&u) * h;
        let rhs = &u + system.f(&u) * h;
        u = lhs.lu().solve(&rhs)?;
        if !u.iter().all(|v| v.is_finite()) {
            return None;
        }
    }
    Some(u)
}

/// One extrapolated step; returns the new state and the scaled error.
fn extrapolated_step(
    system: &QuasilinearSystem,
    u: &DVector<f64>,
    h: f64,
    opts: &IntegratorOptions,
) -> Option<(DVector<f64>, f64)> {
    let k = opts.columns;
    let mut table: Vec<Vec<DVector<f64>>> = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let nj = j + 1;
        let mut row = vec![euler_sweep(system, u, h, nj)?];
        for c in 1..=j {
            let ratio = nj as f64 / (nj - c) as f64;
            let prev = &table[j - 1][c - 1];
            let cur = &row[c - 1];
            let next = cur + (cur - prev) / (ratio - 1.0);
            row.push(next);
        }
        table.push(row);
    }
    let best = table[k][k].clone();
    let lower = &table[k][k - 1];
    let d = u.len().max(1) as f64;
    let err = (0..u.len())
        .map(|i| {
            let sc = opts.atol + opts.rtol * u[i].abs().max(best[i].abs());
            ((best[i] - lower[i]) / sc).powi(2)
        })
        .sum::<f64>()
        / d;
    Some((best, err.sqrt()))
}

/// Integrates from `t = 0` to `t_end`, sampling every `dt` (and at `t_end`).
pub fn simulate(
    system: &QuasilinearSystem,
    u0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    simulate_with(system, u0, t_end, dt, &IntegratorOptions::default())
}

pub fn simulate_with(
    system: &QuasilinearSystem,
    u0: &DVector<f64>,
    t_end: f64,
    dt: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Config(format!("need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}")));
    }
    if u0.len() != system.dim() {
        return Err(Error::Config(format!(
            "initial state has dimension {}, system has {}",
            u0.len(),
            system.dim()
        )));
    }
    if !system.in_domain(u0) {
        return Err(Error::Config("initial state lies outside the validity domain".into()));
    }
    if opts.columns == 0 {
        return Err(Error::Config("at least one extrapolation column is required".into()));
    }

    let n_out = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut outputs: Vec<f64> = (1..=n_out)
        .map(|i| {
            let ti = i as f64 * dt;
            if ti >= t_end - 1e-9 * dt { t_end } else { ti }
        })
        .collect();
    outputs.dedup();
    if outputs.last().copied() != Some(t_end) && t_end > 0.0 {
        outputs.push(t_end);
    }

    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut t = 0.0;
    let mut u = u0.clone();
    let mut h = opts.initial_step.min(dt);
    let order = (opts.columns + 1) as f64;

    for &target in &outputs {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            if step < 1e-13 * t.abs().max(1.0) {
                return Err(Error::Breakdown {
                    time: t,
                    reason: format!("step size underflow ({step:e})"),
                    last_state: u.as_slice().to_vec(),
                });
            }
            match extrapolated_step(system, &u, step, opts) {
                Some((next, err)) if err <= 1.0 => {
                    if !system.in_domain(&next) {
                        return Err(Error::Breakdown {
                            time: t,
                            reason: "solution left the validity domain".into(),
                            last_state: u.as_slice().to_vec(),
                        });
                    }
                    t = if last { target } else { t + step };
                    u = next;
                    let factor = if err == 0.0 {
                        4.0
                    } else {
                        (0.9 * err.powf(-1.0 / order)).clamp(0.2, 4.0)
                    };
                    // do not let a short final step shrink the next one
                    h = (step.max(if last { h } else { 0.0 }) * factor).min(dt.max(step));
                }
                Some((_, err)) => {
                    h = step * (0.9 * err.powf(-1.0 / order)).clamp(0.1, 0.9);
                }
                None => {
                    h = step * 0.25;
                }
            }
        }
        times.push(target);
        states.push(u.clone());
    }
    Ok(Trajectory { times, states })
}
