//! Thin wrappers around `rustfft` with per-thread plan caching.
//!
//! Coefficients are normalized so that a constant field `c` has zero mode `c`.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward transform of real samples: `c_k = (1/n) Σ_j u_j e^{-ik x_j}`.
pub fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse transform in place: `u_j = Σ_k c_k e^{ik x_j}` (no scaling).
pub fn inverse_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(buf));
}

/// Inverse transform keeping only the real part.
pub fn inverse_real(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    inverse_in_place(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
