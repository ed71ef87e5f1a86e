//! Lagged-coefficient implicit Euler for the reaction–diffusion model, with
//! cosine-series proxy norms.

use serde::Serialize;

use super::model::{centered_gradient, diffusion, gradient_source, mean, RdConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdEvolveOptions {
    pub dt: f64,
    /// Output spacing in steps.
    pub record_every: usize,
    /// Regularity of the third recorded proxy norm.
    pub proxy_order: f64,
    /// Largest accepted sup-norm change per step, relative to `1 + |u|∞`.
    pub max_change: f64,
}

impl Default for RdEvolveOptions {
    fn default() -> Self {
        RdEvolveOptions {
            dt: 1e-3,
            record_every: 10,
            proxy_order: 16.0 / 15.0,
            max_change: 0.25,
        }
    }
}

/// Neumann cosine transform on cell centers,
/// `b_k = (2/n) Σ u_i cos(πk(i + 1/2)/n)` and `b_0 = mean`.
#[derive(Debug, Clone)]
pub struct CosineTransform {
    n: usize,
    length: f64,
    table: Vec<f64>,
}

impl CosineTransform {
    pub fn new(n: usize, length: f64) -> Self {
        let mut table = Vec::with_capacity(n * n);
        for k in 0..n {
            for i in 0..n {
                table.push((std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos());
            }
        }
        CosineTransform { n, length, table }
    }

    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let scale = 2.0 / self.n as f64;
        let mut b: Vec<f64> = self
            .table
            .chunks_exact(self.n)
            .map(|row| scale * row.iter().zip(u).map(|(c, v)| c * v).sum::<f64>())
            .collect();
        b[0] *= 0.5;
        b
    }

    /// `(b_0² + ½ Σ_{k≥1} (1 + (πk/L)²)^s b_k²)^{1/2}`; equals the
    /// length-normalized L² norm at `s = 0`.
    pub fn norm_of_coefficients(&self, b: &[f64], s: f64) -> f64 {
        let mut acc = b[0] * b[0];
        for (k, bk) in b.iter().enumerate().skip(1) {
            let w = (std::f64::consts::PI * k as f64 / self.length).powi(2);
            acc += 0.5 * (1.0 + w).powf(s) * bk * bk;
        }
        acc.sqrt()
    }

    /// Proxy `H^s` norm of `u − c`.
    pub fn norm(&self, u: &[f64], c: f64, s: f64) -> f64 {
        let shifted: Vec<f64> = u.iter().map(|v| v - c).collect();
        self.norm_of_coefficients(&self.coefficients(&shifted), s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RdTrajectory {
    pub config: RdConfig,
    pub proxy_order: f64,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub l2_dev: Vec<f64>,
    pub h1_dev: Vec<f64>,
    pub proxy_dev: Vec<f64>,
    /// Mean increase `∫ mean |∇u|^κ dt` accumulated over the interval
    /// ending at each sample (zero at the first sample).
    pub production: Vec<f64>,
    pub max_gradient: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<Vec<f64>>,
    pub steps: usize,
    pub rejected_steps: usize,
}

impl RdTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has samples")
    }

    pub fn final_mean(&self) -> f64 {
        *self.means.last().expect("trajectory has samples")
    }

    pub fn transform(&self) -> CosineTransform {
        CosineTransform::new(self.config.n_cells, self.config.length)
    }

    /// Proxy `H^s` distance of every sample to the constant `c`.
    pub fn distances_to(&self, c: f64, s: f64) -> Vec<f64> {
        let ct = self.transform();
        self.states.iter().map(|u| ct.norm(u, c, s)).collect()
    }

    pub fn mean_monotonicity(&self) -> MeanMonotonicity {
        let mut report = MeanMonotonicity {
            decreases: 0,
            stalls: 0,
            resolved_until: self.times.first().copied().unwrap_or(0.0),
            worst_decrease: 0.0,
            bookkeeping_error: 0.0,
        };
        let mut accumulated = self.means.first().copied().unwrap_or(0.0);
        for k in 1..self.len() {
            let (m0, m1) = (self.means[k - 1], self.means[k]);
            // rounding scale of one mean evaluation
            let noise = 64.0 * f64::EPSILON * (m0.abs() + self.max_gradient[k - 1] * self.config.length);
            let step = m1 - m0;
            if step < -noise {
                report.decreases += 1;
            }
            report.worst_decrease = report.worst_decrease.max(-step);
            if self.production[k] > noise {
                if step > 0.0 {
                    report.resolved_until = self.times[k];
                } else {
                    report.stalls += 1;
                }
            }
            accumulated += self.production[k];
            report.bookkeeping_error = report.bookkeeping_error.max((accumulated - m1).abs());
        }
        report
    }
}

/// Mean-monotonicity audit of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanMonotonicity {
    /// Samples where the mean fell by more than rounding.
    pub decreases: usize,
    /// Samples with a resolvable production where the mean did not grow.
    pub stalls: usize,
    /// Last time at which the production still exceeded rounding.
    pub resolved_until: f64,
    pub worst_decrease: f64,
    /// `max |mean(t) − mean(0) − accumulated production|`.
    pub bookkeeping_error: f64,
}

impl MeanMonotonicity {
    pub fn strictly_increasing(&self) -> bool {
        self.decreases == 0 && self.stalls == 0
    }
}

/// Solve the tridiagonal system `(I − dt·D_a) x = rhs` where `D_a` is the
/// zero-flux diffusion matrix with face coefficients `faces`.
fn implicit_diffusion_solve(faces: &[f64], dt: f64, h: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let r = dt / (h * h);
    let lower = |i: usize| if i > 0 { -r * faces[i - 1] } else { 0.0 };
    let upper = |i: usize| if i + 1 < n { -r * faces[i] } else { 0.0 };
    let diag = |i: usize| 1.0 - lower(i) - upper(i);

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag(0);
    c[0] = upper(0) / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag(i) - lower(i) * c[i - 1];
        c[i] = upper(i) / beta;
        d[i] = (rhs[i] - lower(i) * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

pub fn evolve_rd(u0: &[f64], cfg: &RdConfig, t_end: f64) -> Result<RdTrajectory> {
    evolve_rd_with(u0, cfg, t_end, &RdEvolveOptions::default())
}

pub fn evolve_rd_with(u0: &[f64], cfg: &RdConfig, t_end: f64, opts: &RdEvolveOptions) -> Result<RdTrajectory> {
    cfg.validate()?;
    if u0.len() != cfg.n_cells {
        return Err(Error::Config(format!(
            "initial data has {} values for {} cells",
            u0.len(),
            cfg.n_cells
        )));
    }
    if !(opts.dt > 0.0 && opts.record_every >= 1 && opts.max_change > 0.0) {
        return Err(Error::Config("dt, record_every and max_change must be positive".into()));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Config(format!("t_end = {t_end} must be finite and non-negative")));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial data is not finite".into()));
    }
    cfg.check_certificate(&cfg.face_diffusivity(u0))
        .map_err(|msg| Error::Config(format!("initial data outside the diffusivity certificate: {msg}")))?;

    let h = cfg.spacing();
    let ct = CosineTransform::new(cfg.n_cells, cfg.length);
    let mut traj = RdTrajectory {
        config: cfg.clone(),
        proxy_order: opts.proxy_order,
        times: Vec::new(),
        means: Vec::new(),
        l2_dev: Vec::new(),
        h1_dev: Vec::new(),
        proxy_dev: Vec::new(),
        production: Vec::new(),
        max_gradient: Vec::new(),
        states: Vec::new(),
        steps: 0,
        rejected_steps: 0,
    };
    let record = |traj: &mut RdTrajectory, t: f64, u: &[f64], produced: f64| {
        let m = mean(u);
        let dev: Vec<f64> = u.iter().map(|v| v - m).collect();
        let mut b = ct.coefficients(&dev);
        b[0] = 0.0;
        traj.times.push(t);
        traj.means.push(m);
        traj.l2_dev.push(ct.norm_of_coefficients(&b, 0.0));
        traj.h1_dev.push(ct.norm_of_coefficients(&b, 1.0));
        traj.proxy_dev.push(ct.norm_of_coefficients(&b, opts.proxy_order));
        traj.production.push(produced);
        let g = centered_gradient(u, h).into_iter().fold(0.0, |m: f64, g| m.max(g.abs()));
        traj.max_gradient.push(g);
        traj.states.push(u.to_vec());
    };

    let mut u = u0.to_vec();
    let mut t = 0.0;
    record(&mut traj, t, &u, 0.0);

    let interval = opts.dt * opts.record_every as f64;
    let n_out = (t_end / interval).ceil() as usize;
    let mut step = opts.dt;
    for k in 1..=n_out {
        let t_next = (k as f64 * interval).min(t_end);
        let mut produced = 0.0;
        while t < t_next {
            let hstep = step.min(t_next - t);
            let faces = cfg.face_diffusivity(&u);
            let source = gradient_source(&u, cfg);
            // increment form keeps rounding proportional to the update
            let rhs: Vec<f64> = diffusion(&u, cfg).iter().zip(&source).map(|(d, s)| hstep * (d + s)).collect();
            let delta = implicit_diffusion_solve(&faces, hstep, h, &rhs);
            let next: Vec<f64> = u.iter().zip(&delta).map(|(u, d)| u + d).collect();

            let scale = 1.0 + u.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            let change = next.iter().zip(&u).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            let failure = if next.iter().any(|v| !v.is_finite()) {
                Some("non-finite state".to_string())
            } else if change > opts.max_change * scale {
                Some(format!("step changes the state by {change:e}"))
            } else {
                cfg.check_certificate(&cfg.face_diffusivity(&next)).err()
            };
            match failure {
                None => {
                    produced += hstep * mean(&source);
                    u = next;
                    t = if hstep == t_next - t { t_next } else { t + hstep };
                    traj.steps += 1;
                    step = (2.0 * step).min(opts.dt);
                }
                Some(reason) => {
                    traj.rejected_steps += 1;
                    step = 0.5 * hstep;
                    if step < 1e-12 * t.abs().max(1.0) {
                        return Err(Error::Breakdown {
                            time: t,
                            reason: format!("step size underflow ({reason})"),
                            last_state: u,
                        });
                    }
                }
            }
        }
        record(&mut traj, t, &u, produced);
    }
    Ok(traj)
}
