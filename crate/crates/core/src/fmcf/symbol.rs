use serde::Serialize;

use super::config::FmcfConfig;
use super::operator::FmcfOperator;
use crate::error::{Error, Result};
use crate::regression::linear_fit;
use crate::spectral::{MultiplierSymbol, SpectralField};

/// Symbol of the flat-state operator read off mode by mode.
#[derive(Debug, Clone, Serialize)]
pub struct NumericSymbol {
    /// `m_num(k)` for `k = 0..=k_max`.
    pub values: Vec<f64>,
    /// Prefactor of the fitted power law `m(k) ≈ −ω₀|k|^p`.
    pub omega0: f64,
    pub exponent: f64,
    pub fit_rms: f64,
    /// Largest relative amplitude found outside the probed mode.
    pub max_leakage: f64,
}

impl NumericSymbol {
    pub fn symbol(&self) -> MultiplierSymbol {
        MultiplierSymbol::from_table("fmcf-numeric", self.values.clone())
    }

    /// `−max_{1≤k≤k_max} m_num(k)`: the decay rate of the slowest
    /// non-constant mode.
    pub fn gap(&self) -> f64 {
        -self.values[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn fmcf_numeric_symbol(cfg: &FmcfConfig, k_max: usize) -> Result<NumericSymbol> {
    let op = FmcfOperator::new(*cfg)?;
    numeric_symbol_with(&op, k_max)
}

pub fn numeric_symbol_with(op: &FmcfOperator, k_max: usize) -> Result<NumericSymbol> {
    let grid = op.config().grid;
    if k_max < 2 || k_max > grid.n_points() / 4 {
        return Err(Error::Config(format!(
            "k_max must lie in [2, n_points/4 = {}], got {k_max}",
            grid.n_points() / 4
        )));
    }
    let zero = SpectralField::constant(grid, 0.0);
    let mut values = vec![0.0; k_max + 1];
    let mut max_leakage: f64 = 0.0;
    for k in 0..=k_max as i64 {
        let probe = SpectralField::from_cosine_modes(grid, 0.0, &[(k, 1.0)]);
        let out = op.apply(&zero, &probe)?;
        let m = if k == 0 {
            out.coeffs()[0].re
        } else {
            2.0 * out.coeff(k).expect("k below Nyquist").re
        };
        let residual = out
            .values()
            .iter()
            .zip(probe.values())
            .map(|(o, c)| (o - m * c).abs())
            .fold(0.0, f64::max);
        let leakage = if k == 0 { residual } else { residual / m.abs() };
        if leakage > 1e-6 {
            return Err(Error::QuadratureConsistency { k, leakage });
        }
        max_leakage = max_leakage.max(leakage);
        values[k as usize] = m;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (2..=k_max)
        .map(|k| ((k as f64).ln(), (-values[k]).max(f64::MIN_POSITIVE).ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys).expect("at least two distinct modes");
    Ok(NumericSymbol {
        values,
        omega0: fit.intercept.exp(),
        exponent: fit.slope,
        fit_rms: fit.rms,
        max_leakage,
    })
}
