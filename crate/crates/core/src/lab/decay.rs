//! Exponential decay-rate estimation by log-linear least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{linear_fit, LineFit};

/// Samples needed above the noise floor.
pub const MIN_SAMPLES: usize = 10;
/// Largest RMS of the log-linear fit accepted for a window.
pub const WINDOW_RMS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub omega_fit: f64,
    pub k_fit: f64,
    pub window: (f64, f64),
    /// RMS of the fit in log space.
    pub residual: f64,
    pub floor: f64,
    pub samples: usize,
}

/// Floor used when the caller has none: `1e-12` times the first norm.
pub fn default_floor(norms: &[f64]) -> f64 {
    1e-12 * norms.first().copied().unwrap_or(0.0).abs()
}

/// Fits `norm(t) ≈ K·norm(0)·e^{−ωt}` on the longest trailing window of the
/// usable samples whose log-linear RMS stays below [`WINDOW_RMS`]. Usable
/// samples are the leading run above `10·floor`; once a norm reaches the
/// floor, later excursions above it are noise. Without a good window the
/// last [`MIN_SAMPLES`] usable samples are used and the residual reports the
/// poor fit.
pub fn fit_decay(times: &[f64], norms: &[f64], floor: f64) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::Config(format!(
            "{} times but {} norms",
            times.len(),
            norms.len()
        )));
    }
    let cut = 10.0 * floor.max(0.0);
    let (ts, logs): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(norms)
        .take_while(|(_, &n)| n > cut && n.is_finite())
        .map(|(&t, &n)| (t, n.ln()))
        .unzip();
    if ts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientDecayData { found: ts.len() });
    }

    let last = ts.len() - MIN_SAMPLES;
    let fit_from = |i: usize| -> Option<LineFit> { linear_fit(&ts[i..], &logs[i..]) };
    let mut chosen = None;
    for i in 0..=last {
        if let Some(fit) = fit_from(i) {
            if fit.rms <= WINDOW_RMS {
                chosen = Some((i, fit));
                break;
            }
        }
    }
    let (start, fit) = match chosen {
        Some(c) => c,
        None => (
            last,
            fit_from(last).ok_or_else(|| Error::Config("sample times are not distinct".into()))?,
        ),
    };
    Ok(DecayFit {
        omega_fit: -fit.slope,
        k_fit: fit.intercept.exp() / norms[0],
        window: (ts[start], *ts.last().unwrap()),
        residual: fit.rms,
        floor,
        samples: ts.len() - start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(50, 0.1);
        let n: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let fit = fit_decay(&t, &n, default_floor(&n)).unwrap();
        assert!((fit.omega_fit - 3.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!((fit.k_fit - 1.0).abs() < 1e-12);
        assert_eq!(fit.window, (0.0, 4.9));
    }

    #[test]
    fn constant_norms() {
        let t = grid(20, 0.5);
        let fit = fit_decay(&t, &[2.0; 20], 1e-12).unwrap();
        assert!(fit.omega_fit.abs() < 1e-14);
    }

    #[test]
    fn noisy_signal_with_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = grid(200, 0.05);
        let n: Vec<f64> = t
            .iter()
            .map(|t| (-6.0 * t).exp() + 1e-14 * rng.random_range(-1.0..1.0f64))
            .collect();
        let fit = fit_decay(&t, &n, 1e-13).unwrap();
        assert!((fit.omega_fit / 6.0 - 1.0).abs() < 0.01, "{fit:?}");
        assert!(fit.window.1 < 4.7, "{fit:?}");
    }

    #[test]
    fn transient_is_skipped() {
        // fast transient on top of a slow tail
        let t = grid(100, 0.05);
        let n: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp() + 5.0 * (-20.0 * t).exp()).collect();
        let fit = fit_decay(&t, &n, 0.0).unwrap();
        assert!(fit.window.0 > 0.0);
        assert!((fit.omega_fit - 2.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn too_few_samples() {
        let t = grid(30, 1.0);
        let n: Vec<f64> = t.iter().map(|t| (-5.0 * t).exp()).collect();
        match fit_decay(&t, &n, 1e-3).unwrap_err() {
            Error::InsufficientDecayData { found } => assert!(found < 10),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn rate_is_scale_invariant(rate in 0.1f64..10.0, scale in 1e-6f64..1e6, wobble in 0.0f64..0.3) {
            let t = grid(40, 0.1);
            let n: Vec<f64> = t.iter().map(|t| (-rate * t).exp() * (1.0 + wobble * (7.0 * t).sin())).collect();
            let scaled: Vec<f64> = n.iter().map(|v| v * scale).collect();
            let a = fit_decay(&t, &n, 0.0).unwrap();
            let b = fit_decay(&t, &scaled, 0.0).unwrap();
            prop_assert!((a.omega_fit - b.omega_fit).abs() <= 1e-12 * a.omega_fit.abs().max(1.0));
            prop_assert!((a.k_fit - b.k_fit).abs() <= 1e-9 * a.k_fit);
        }
    }
}
