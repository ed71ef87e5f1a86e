use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PeriodicGrid;

/// Discretization of the fractional curvature operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmcfConfig {
    pub sigma: f64,
    pub grid: PeriodicGrid,
    /// Width of the near field `|y| < delta`.
    pub delta: f64,
    /// Periodic images summed explicitly on each side before the asymptotic tail.
    pub far_cells: usize,
    /// Gauss–Legendre points per far-field panel (twice that in the near field).
    pub quad_order: usize,
}

impl FmcfConfig {
    pub fn new(sigma: f64, n_points: usize) -> Result<Self> {
        let grid = PeriodicGrid::standard(n_points)?;
        let cfg = Self {
            sigma,
            grid,
            delta: grid.period() / 64.0,
            far_cells: 32,
            quad_order: 16,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Config(format!("sigma must lie in (0, 1), got {}", self.sigma)));
        }
        let p = self.grid.period();
        if !(self.delta > 0.0 && self.delta < p / 4.0) {
            return Err(Error::Config(format!(
                "near-field width must lie in (0, period/4), got {}",
                self.delta
            )));
        }
        if self.far_cells < 8 {
            return Err(Error::Config(format!("far_cells must be at least 8, got {}", self.far_cells)));
        }
        if !(2..=128).contains(&self.quad_order) {
            return Err(Error::Config(format!(
                "quad_order must lie in [2, 128], got {}",
                self.quad_order
            )));
        }
        Ok(())
    }
}

impl Default for FmcfConfig {
    fn default() -> Self {
        Self::new(0.5, 256).expect("default configuration is valid")
    }
}
