//! Finite-volume discretization of `∂_t u = (a(u) u_x)_x + |u_x|^κ` on
//! `(0, L)` with zero-flux boundaries. Cells are uniform, values sit at
//! cell centers `(i + 1/2) h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diffusivity `a(u) = Σ c_i u^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Diffusivity(pub Vec<f64>);

impl Diffusivity {
    pub fn constant(a: f64) -> Self {
        Diffusivity(vec![a])
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

impl Default for Diffusivity {
    fn default() -> Self {
        Diffusivity(vec![1.0, 0.0, 0.5])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdConfig {
    #[serde(rename = "L")]
    pub length: f64,
    pub n_cells: usize,
    #[serde(rename = "a")]
    pub diffusivity: Diffusivity,
    pub kappa: f64,
    /// Disable to get the pure quasilinear diffusion.
    pub gradient_term: bool,
    /// Lower bound for `a` that every step must respect.
    pub a_min: f64,
}

impl Default for RdConfig {
    fn default() -> Self {
        RdConfig {
            length: 1.0,
            n_cells: 256,
            diffusivity: Diffusivity::default(),
            kappa: 4.0,
            gradient_term: true,
            a_min: 1.0,
        }
    }
}

impl RdConfig {
    pub fn heat(length: f64, n_cells: usize) -> Self {
        RdConfig {
            length,
            n_cells,
            diffusivity: Diffusivity::constant(1.0),
            gradient_term: false,
            ..RdConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Config(format!("length L = {} must be positive", self.length)));
        }
        if self.n_cells < 4 {
            return Err(Error::Config(format!("n_cells = {} is below 4", self.n_cells)));
        }
        if self.diffusivity.0.is_empty() || self.diffusivity.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("diffusivity needs finite polynomial coefficients".into()));
        }
        if !(self.kappa > 3.0) {
            return Err(Error::Config(format!("kappa = {} must exceed 3", self.kappa)));
        }
        if !(self.a_min > 0.0) {
            return Err(Error::Config(format!("a_min = {} must be positive", self.a_min)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_cells).map(|i| (i as f64 + 0.5) * h).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.centers().into_iter().map(f).collect()
    }

    /// Interface diffusivities `a((u_i + u_{i+1})/2)`, `n − 1` entries.
    pub(crate) fn face_diffusivity(&self, u: &[f64]) -> Vec<f64> {
        u.windows(2).map(|w| self.diffusivity.eval(0.5 * (w[0] + w[1]))).collect()
    }

    /// Smallest interface diffusivity, checked against `a_min`.
    pub(crate) fn check_certificate(&self, faces: &[f64]) -> std::result::Result<(), String> {
        let lowest = faces.iter().copied().fold(f64::INFINITY, f64::min);
        if lowest >= self.a_min {
            Ok(())
        } else {
            Err(format!("diffusivity {lowest} dropped below a_min = {}", self.a_min))
        }
    }
}

/// Compensated (Neumaier) mean.
pub fn mean(u: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in u {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    (sum + comp) / u.len() as f64
}

/// Centered gradient with mirrored ghost cells.
pub fn centered_gradient(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let left = u[i.saturating_sub(1)];
            let right = u[(i + 1).min(n - 1)];
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Conservative diffusion part. Sums to zero up to rounding for any `u`.
pub fn diffusion(u: &[f64], cfg: &RdConfig) -> Vec<f64> {
    let h = cfg.spacing();
    let faces = cfg.face_diffusivity(u);
    let flux: Vec<f64> = faces.iter().zip(u.windows(2)).map(|(a, w)| a * (w[1] - w[0]) / h).collect();
    (0..u.len())
        .map(|i| {
            let right = if i + 1 < u.len() { flux[i] } else { 0.0 };
            let left = if i > 0 { flux[i - 1] } else { 0.0 };
            (right - left) / h
        })
        .collect()
}

/// Source `|∇u|^κ`, zero when the gradient term is switched off.
pub fn gradient_source(u: &[f64], cfg: &RdConfig) -> Vec<f64> {
    if !cfg.gradient_term {
        return vec![0.0; u.len()];
    }
    centered_gradient(u, cfg.spacing()).into_iter().map(|g| g.abs().powf(cfg.kappa)).collect()
}

pub fn rd_rhs(u: &[f64], cfg: &RdConfig) -> Vec<f64> {
    diffusion(u, cfg).into_iter().zip(gradient_source(u, cfg)).map(|(d, s)| d + s).collect()
}
