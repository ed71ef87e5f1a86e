use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on a one-dimensional torus of length `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    #[serde(rename = "n")]
    n_points: usize,
    period: f64,
}

impl PeriodicGrid {
    pub fn new(n_points: usize, period: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 8, got {n_points}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        Ok(Self { n_points, period })
    }

    /// Grid on the standard torus of length 2π.
    pub fn standard(n_points: usize) -> Result<Self> {
        Self::new(n_points, 2.0 * PI)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n_points as f64
    }

    /// Node `j`, computed as `j * period / n` so that no spacing error accumulates.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.period / self.n_points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    pub fn nyquist(&self) -> i64 {
        (self.n_points / 2) as i64
    }

    /// Integer mode index stored at FFT slot `j`, in `(-n/2, n/2]`.
    pub fn mode_at(&self, j: usize) -> i64 {
        let n = self.n_points as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    /// FFT slot holding mode `k`, if `k` is represented.
    pub fn slot_of(&self, k: i64) -> Option<usize> {
        let n = self.n_points as i64;
        if k > n / 2 || k <= -n / 2 {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + n) as usize)
        }
    }

    /// Physical wavenumber of mode `k`: `2πk / period`.
    pub fn wavenumber(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.period
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(PeriodicGrid::standard(6).is_err());
        assert!(PeriodicGrid::standard(9).is_err());
        assert!(PeriodicGrid::new(16, 0.0).is_err());
        assert!(PeriodicGrid::new(16, f64::NAN).is_err());
    }

    #[test]
    fn spacing_times_points_is_period() {
        for n in [8, 16, 64, 256, 1024] {
            let g = PeriodicGrid::standard(n).unwrap();
            assert_eq!(g.spacing() * n as f64, g.period());
        }
    }

    #[test]
    fn slots_and_modes_are_inverse() {
        let g = PeriodicGrid::standard(16).unwrap();
        for j in 0..16 {
            assert_eq!(g.slot_of(g.mode_at(j)), Some(j));
        }
        assert_eq!(g.mode_at(8), 8);
        assert_eq!(g.slot_of(-8), None);
        assert_eq!(g.slot_of(9), None);
    }
}
