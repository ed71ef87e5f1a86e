//! Periodic 1-D grids, Fourier transform pairs, multipliers and discrete
//! Sobolev norms shared by the PDE models.

pub mod fft;
mod field;
mod grid;
mod symbol;

pub use field::SpectralField;
pub use grid::PeriodicGrid;
pub use symbol::MultiplierSymbol;

use crate::error::Result;

pub fn apply_multiplier(field: &SpectralField, symbol: &MultiplierSymbol) -> Result<SpectralField> {
    field.apply_multiplier(symbol)
}

pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    field.sobolev_norm(s)
}

pub fn integral_mean(field: &SpectralField) -> f64 {
    field.integral_mean()
}

pub fn project_low_modes(field: &SpectralField, kmax: u64) -> SpectralField {
    field.project_low_modes(kmax)
}
