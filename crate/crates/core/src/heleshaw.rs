//! Linearization of the surface-tension Hele-Shaw flow at the unit circle,
//! realized exactly on the Fourier side.
//!
//! Perturbations `v` of the radius `ρ = 1 + v` evolve by the multiplier
//! `m(k) = |k|(1 − k²)`. Its kernel consists of the modes `|k| ≤ 1`
//! (dilation and translations of the circle) and the rest of the spectrum
//! lies below `−6`.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::spectral::{MultiplierSymbol, PeriodicGrid, SpectralField};

pub fn hs_symbol(k: i64) -> f64 {
    let a = k.unsigned_abs() as f64;
    a * (1.0 - a * a)
}

pub fn hs_multiplier() -> MultiplierSymbol {
    MultiplierSymbol::new("hele-shaw", hs_symbol)
}

/// `e^{tA}v₀`, coefficient by coefficient.
pub fn hs_evolve(v0: &SpectralField, t: f64) -> SpectralField {
    let grid = *v0.grid();
    v0.map_coeffs(|j, c| c * (hs_symbol(grid.mode_at(j)) * t).exp())
}

/// Linearized area and center-of-mass functionals
/// `(∫v, ∫v cos, ∫v sin)` over one period.
pub fn hs_conserved(v: &SpectralField) -> (f64, f64, f64) {
    let grid = v.grid();
    let h = grid.spacing();
    let w = grid.wavenumber(1);
    let (mut mass, mut cosm, mut sinm) = (0.0, 0.0, 0.0);
    for (j, &val) in v.values().iter().enumerate() {
        let (s, c) = (w * grid.node(j)).sin_cos();
        mass += val;
        cosm += val * c;
        sinm += val * s;
    }
    (mass * h, cosm * h, sinm * h)
}

/// Spectral gap with the evidence behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCertificate {
    pub gap: f64,
    /// Mode at which `max_{|k|≥2} m(k)` is attained.
    pub attained_at: i64,
    /// Largest `|k|` inspected.
    pub truncation: i64,
    pub kernel_dim: usize,
}

/// Gap over the modes `2 ≤ |k| ≤ kmax` (`kmax ≥ 2`).
pub fn hs_gap_truncated(kmax: i64) -> GapCertificate {
    let kmax = kmax.max(2);
    let (attained_at, best) = (2..=kmax)
        .flat_map(|k| [k, -k])
        .map(|k| (k, hs_symbol(k)))
        .fold((2, f64::NEG_INFINITY), |acc, (k, m)| if m > acc.1 { (k, m) } else { acc });
    let kernel_dim = (-kmax..=kmax).filter(|&k| hs_symbol(k) == 0.0).count();
    GapCertificate {
        gap: -best,
        attained_at,
        truncation: kmax,
        kernel_dim,
    }
}

/// Gap over every mode the grid represents.
pub fn hs_gap(grid: &PeriodicGrid) -> GapCertificate {
    hs_gap_truncated(grid.nyquist())
}

/// Generator restricted to the modes `|k| ≤ kmax` (real diagonal matrix in
/// the order `−kmax, …, kmax`).
pub fn hs_truncated_generator(kmax: i64) -> DMatrix<f64> {
    let size = (2 * kmax + 1) as usize;
    DMatrix::from_fn(size, size, |i, j| if i == j { hs_symbol(i as i64 - kmax) } else { 0.0 })
}

/// `‖Q v‖_{L²}` with `Q = I − project_low_modes(·, 1)`.
pub fn stable_part_norm(v: &SpectralField) -> f64 {
    let low = v.project_low_modes(1);
    v.axpby(1.0, &low, -1.0).expect("same grid").sobolev_norm(0.0)
}

/// Coefficients of a random band-limited perturbation, for tests and demos.
pub fn random_state(grid: PeriodicGrid, rng: &mut impl rand::Rng, kmax: i64) -> SpectralField {
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..=kmax.min(grid.nyquist() - 1) {
        let slot = grid.slot_of(k).expect("represented");
        let c = Complex64::new(rng.random_range(-1.0..1.0), if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) });
        let damp = 1.0 / (1.0 + (k * k) as f64);
        coeffs[slot] = c * damp;
        if k > 0 {
            coeffs[grid.slot_of(-k).expect("represented")] = (c * damp).conj();
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("matching length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::spectral_split;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::standard(64).unwrap()
    }

    #[test]
    fn symbol_values() {
        assert_eq!(hs_symbol(0), 0.0);
        assert_eq!(hs_symbol(1), 0.0);
        assert_eq!(hs_symbol(-1), 0.0);
        assert_eq!(hs_symbol(2), -6.0);
        assert_eq!(hs_symbol(3), -24.0);
        assert_eq!(hs_symbol(-3), -24.0);
    }

    #[test]
    fn second_mode_decays_at_six() {
        let v0 = SpectralField::from_cosine_modes(grid(), 0.0, &[(2, 1.0)]);
        let v = hs_evolve(&v0, 1.0);
        let expected = SpectralField::from_cosine_modes(grid(), 0.0, &[(2, (-6.0f64).exp())]);
        assert!(v.axpby(1.0, &expected, -1.0).unwrap().max_abs() < 1e-15);
        for t in [0.1, 0.5, 2.0] {
            let ratio = hs_evolve(&v0, t).sobolev_norm(0.0) / v0.sobolev_norm(0.0);
            assert!((ratio / (-6.0 * t).exp() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn kernel_modes_are_invariant() {
        let v0 = SpectralField::from_fn(grid(), |x| 1.0 + x.cos() - 0.3 * x.sin());
        for t in [0.0, 1.0, 100.0] {
            assert!(hs_evolve(&v0, t).axpby(1.0, &v0, -1.0).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn long_time_limit_is_low_mode_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v0 = random_state(grid(), &mut rng, 12);
        let limit = v0.project_low_modes(1);
        let v = hs_evolve(&v0, 10.0);
        assert!(v.axpby(1.0, &limit, -1.0).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v0 = random_state(grid(), &mut rng, 10);
        let a = hs_evolve(&hs_evolve(&v0, 0.03), 0.05);
        let b = hs_evolve(&v0, 0.08);
        assert!(a.axpby(1.0, &b, -1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn conserved_functionals() {
        let g = grid();
        let (m, c, s) = hs_conserved(&SpectralField::from_cosine_modes(g, 0.0, &[(2, 1.0)]));
        assert!(m.abs() < 1e-14 && c.abs() < 1e-14 && s.abs() < 1e-14);
        let (m, c, s) = hs_conserved(&SpectralField::from_cosine_modes(g, 0.0, &[(1, 1.0)]));
        assert!(m.abs() < 1e-14 && (c - std::f64::consts::PI).abs() < 1e-14 && s.abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v0 = random_state(g, &mut rng, 20);
        let start = hs_conserved(&v0);
        for t in [0.01, 0.3, 5.0] {
            let now = hs_conserved(&hs_evolve(&v0, t));
            assert!((now.0 - start.0).abs() < 1e-12);
            assert!((now.1 - start.1).abs() < 1e-12);
            assert!((now.2 - start.2).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_certificates() {
        let full = hs_gap(&grid());
        assert_eq!(full.gap, 6.0);
        assert_eq!(full.attained_at.abs(), 2);
        assert_eq!(full.kernel_dim, 3);
        let small = hs_gap_truncated(3);
        assert_eq!(small.gap, 6.0);
        assert_eq!(small.truncation, 3);
    }

    #[test]
    fn stable_part_decays_at_least_at_gap_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v0 = random_state(grid(), &mut rng, 15);
        let q0 = stable_part_norm(&v0);
        for t in [0.05, 0.2, 1.0] {
            assert!(stable_part_norm(&hs_evolve(&v0, t)) <= (-6.0 * t).exp() * q0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn truncated_generator_has_three_dimensional_kernel() {
        for kmax in 1..=8 {
            let split = spectral_split(&hs_truncated_generator(kmax), 1e-9).unwrap();
            assert_eq!(split.kernel_dim, 3);
            if kmax >= 2 {
                assert!((split.gap - 6.0).abs() < 1e-12);
            }
        }
    }
}
