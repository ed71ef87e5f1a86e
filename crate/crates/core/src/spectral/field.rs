use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::PeriodicGrid;
use super::symbol::MultiplierSymbol;
use crate::error::{Error, Result};

/// Real grid function on a [`PeriodicGrid`] with lazily computed Fourier
/// coefficients.
///
/// Values are immutable after construction; every transformation returns a
/// new field. Coefficients live in FFT slot order, see
/// [`PeriodicGrid::mode_at`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl SpectralField {
    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            coeffs: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self {
            grid,
            values,
            coeffs: OnceLock::new(),
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    /// `mean + Σ amplitude·cos(k x)` over the given `(k, amplitude)` pairs.
    pub fn from_cosine_modes(grid: PeriodicGrid, mean: f64, modes: &[(i64, f64)]) -> Self {
        let period = grid.period();
        Self::from_fn(grid, |x| {
            mean + modes
                .iter()
                .map(|&(k, a)| a * (2.0 * std::f64::consts::PI * k as f64 * x / period).cos())
                .sum::<f64>()
        })
    }

    /// Builds a real field from coefficients in FFT slot order. The
    /// coefficients are symmetrized (`c_{-k} = conj c_k`, real Nyquist) so the
    /// result is real-valued.
    pub fn from_coeffs(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if coeffs.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        let mut sym = coeffs;
        sym[0].im = 0.0;
        sym[n / 2].im = 0.0;
        for j in 1..n / 2 {
            let avg = 0.5 * (sym[j] + sym[n - j].conj());
            sym[j] = avg;
            sym[n - j] = avg.conj();
        }
        let values = fft::inverse_real(&sym);
        let coeffs = OnceLock::new();
        let _ = coeffs.set(sym);
        Ok(Self {
            grid,
            values,
            coeffs,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Fourier coefficients in FFT slot order.
    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| fft::forward(&self.values))
    }

    /// Coefficient of mode `k`, or `None` if `k` is not represented.
    pub fn coeff(&self, k: i64) -> Option<Complex64> {
        self.grid.slot_of(k).map(|j| self.coeffs()[j])
    }

    /// Applies a complex multiplier given per FFT slot and returns the real
    /// part of the result.
    pub(crate) fn map_coeffs(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = self
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, &c)| f(j, c))
            .collect();
        let values = fft::inverse_real(&coeffs);
        Self {
            grid: self.grid,
            values,
            coeffs: OnceLock::new(),
        }
    }

    /// Fourier multiplier: `coeffs[k] ↦ m(k)·coeffs[k]` for every represented
    /// mode.
    pub fn apply_multiplier(&self, symbol: &MultiplierSymbol) -> Result<Self> {
        let n = self.grid.n_points();
        let mut table = Vec::with_capacity(n);
        for j in 0..n {
            table.push(symbol.eval_checked(self.grid.mode_at(j))?);
        }
        let coeffs: Vec<Complex64> = self
            .coeffs()
            .iter()
            .zip(&table)
            .map(|(&c, &m)| c * m)
            .collect();
        Self::from_coeffs(self.grid, coeffs)
    }

    /// Spectral derivative. The Nyquist mode is cosine-only and has zero
    /// derivative at the nodes.
    pub fn derivative(&self) -> Self {
        let grid = self.grid;
        let nyq = grid.nyquist();
        self.map_coeffs(|j, c| {
            let k = grid.mode_at(j);
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, grid.wavenumber(k))
            }
        })
    }

    pub fn second_derivative(&self) -> Self {
        let grid = self.grid;
        self.map_coeffs(|j, c| {
            let w = grid.wavenumber(grid.mode_at(j));
            c * (-w * w)
        })
    }

    /// Discrete `H^s` proxy `(Σ_k (1+ξ_k²)^s |c_k|²)^{1/2}` with physical
    /// wavenumber `ξ_k`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let grid = self.grid;
        self.coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let w = grid.wavenumber(grid.mode_at(j));
                (1.0 + w * w).powf(s) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn integral_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Keeps modes with `|k| ≤ kmax` and zeroes the rest.
    pub fn project_low_modes(&self, kmax: u64) -> Self {
        let grid = self.grid;
        self.map_coeffs(|j, c| {
            if grid.mode_at(j).unsigned_abs() <= kmax {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Pointwise linear combination `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_values(self.grid, values)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
            coeffs: OnceLock::new(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "value"])?;
        for (j, v) in self.values.iter().enumerate() {
            w.write_record([self.grid.node(j).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(grid: PeriodicGrid, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v = rec
                .get(1)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Schema {
                    key: "value".into(),
                    message: format!("unreadable CSV row {:?}", rec),
                })?;
            values.push(v);
        }
        Self::from_values(grid, values)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FieldRecord {
            grid: self.grid,
            values: self.values.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: FieldRecord = serde_json::from_str(s)?;
        let grid = PeriodicGrid::new(rec.grid.n_points(), rec.grid.period())?;
        Self::from_values(grid, rec.values)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRecord {
    grid: PeriodicGrid,
    values: Vec<f64>,
}
