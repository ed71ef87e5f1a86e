//! Quadrature for the fractional curvature operator on periodic graphs,
//!
//! ```text
//! A(u)v(x) = (2/σ)(1 + u_x²)^{1/2} ∫_ℝ [v(x) − v(x−y) − y v'(x−y)]
//!                                   / [y² + (u(x) − u(x−y))²]^{(2+σ)/2} dy.
//! ```
//!
//! The integral is split as `∫_ℝ = Σ_j ∫_{−P/2}^{P/2}` over period cells and
//! symmetrized in `y ↔ −y`. In the central cell the paired integrand behaves
//! like `|y|^{−σ} h(y²)` with `h` smooth; the near field `(0, δ)` is mapped by
//! `y = δ s^{1/(1−σ)}`, whose Jacobian cancels the singularity, and the
//! numerator is evaluated spectrally so that the second-order cancellation
//! costs no precision. The rest of the cell uses Gauss panels short enough to
//! resolve the Nyquist mode.
//!
//! For the images `j ≠ 0` only `y = y₀ + jP` changes, so the kernel is
//! expanded in `(Δu / Y)²` and reduced to lattice sums
//! `Σ_{j≠0} |Y|^{−(2+σ)−2l}` and `Σ_{j≠0} Y|Y|^{−(2+σ)−2l}`, precomputed per
//! node with an Euler–Maclaurin tail beyond `far_cells`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::config::FmcfConfig;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::spectral::{fft, SpectralField};

/// Terms of the `(Δu/Y)²` expansion kept at most.
const MAX_TERMS: usize = 28;
/// Nodes handled per parallel task.
const CHUNK: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    y: f64,
    weight: f64,
    /// `Σ_{j≠0} |y+jP|^{−(2+σ)−2l}`.
    even: [f64; MAX_TERMS],
    /// `Σ_{j≠0} (y+jP)|y+jP|^{−(2+σ)−2l}`.
    odd: [f64; MAX_TERMS],
    /// Per-slot factors `1 − e^{−iξy}(1 + iξy)`, `iξe^{−iξy}` and
    /// `1 − e^{−iξy}` (Nyquist slot: real parts).
    second_diff: Vec<Complex64>,
    shifted_slope: Vec<Complex64>,
    first_diff: Vec<Complex64>,
}

/// Precomputed quadrature for one [`FmcfConfig`].
#[derive(Debug, Clone)]
pub struct FmcfOperator {
    cfg: FmcfConfig,
    nodes: Vec<Node>,
    /// `Σ_nodes w·(|even tail remainder|, |odd tail remainder|)` for `l = 0`.
    tail_remainder: (f64, f64),
    binomial: [f64; MAX_TERMS],
}

/// Result of one operator application.
#[derive(Debug, Clone)]
pub struct Application {
    pub value: SpectralField,
    /// Bound on the neglected part of the image sums.
    pub tail_estimate: f64,
    /// Number of `(Δu/Y)²` terms used.
    pub expansion_terms: usize,
}

/// `1 − e^{−iz}(1 + iz)` without cancellation for small `z`.
fn second_difference_factor(z: f64) -> Complex64 {
    if z.abs() < 0.5 {
        // Σ_{n≥2} (n−1)(−iz)^n / n!
        let w = Complex64::new(0.0, -z);
        let mut pow = w * w / 2.0;
        let mut sum = pow;
        for n in 3..24 {
            pow = pow * w / n as f64;
            sum += pow * (n - 1) as f64;
        }
        sum
    } else {
        let (s, c) = z.sin_cos();
        Complex64::new(1.0 - c - z * s, s - z * c)
    }
}

fn first_difference_factor(z: f64) -> Complex64 {
    let h = (0.5 * z).sin();
    Complex64::new(2.0 * h * h, z.sin())
}

/// `Σ_{t=J+1}^∞ (tP + c)^{−r}` by Euler–Maclaurin, with a bound on the
/// first neglected correction.
fn power_tail(j: usize, period: f64, c: f64, r: f64) -> (f64, f64) {
    let x = j as f64 * period + c;
    let f = x.powf(-r);
    let integral = x * f / ((r - 1.0) * period);
    let d1 = -r * period * f / x;
    let d3 = -r * (r + 1.0) * (r + 2.0) * period.powi(3) * f / x.powi(3);
    let d5 = r * (r + 1.0) * (r + 2.0) * (r + 3.0) * (r + 4.0) * period.powi(5) * f / x.powi(5);
    (integral - 0.5 * f - d1 / 12.0 + d3 / 720.0, d5 / 30240.0)
}

fn lattice_sums(y: f64, cfg: &FmcfConfig) -> ([f64; MAX_TERMS], [f64; MAX_TERMS], (f64, f64)) {
    let p = cfg.grid.period();
    let s0 = 2.0 + cfg.sigma;
    let mut even = [0.0; MAX_TERMS];
    let mut odd = [0.0; MAX_TERMS];
    for j in 1..=cfg.far_cells {
        let plus = j as f64 * p + y;
        let minus = j as f64 * p - y;
        let (mut ap, mut am) = (plus.powf(-s0), minus.powf(-s0));
        let (ip2, im2) = (1.0 / (plus * plus), 1.0 / (minus * minus));
        for l in 0..MAX_TERMS {
            even[l] += ap + am;
            odd[l] += plus * ap - minus * am;
            ap *= ip2;
            am *= im2;
        }
    }
    let mut rem = (0.0, 0.0);
    for l in 0..MAX_TERMS {
        let r = s0 + 2.0 * l as f64;
        let (ep, bp) = power_tail(cfg.far_cells, p, y, r);
        let (em, bm) = power_tail(cfg.far_cells, p, -y, r);
        let (op, bop) = power_tail(cfg.far_cells, p, y, r - 1.0);
        let (om, bom) = power_tail(cfg.far_cells, p, -y, r - 1.0);
        even[l] += ep + em;
        odd[l] += op - om;
        if l == 0 {
            rem = (bp.abs() + bm.abs(), (bop - bom).abs());
        }
    }
    (even, odd, rem)
}

impl FmcfOperator {
    pub fn new(cfg: FmcfConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid;
        let n = grid.n_points();
        let p = grid.period();
        let q = cfg.quad_order;

        let mut raw: Vec<(f64, f64)> = Vec::new();
        // near field: y = δ s^{1/(1−σ)}
        let expo = 1.0 / (1.0 - cfg.sigma);
        let (s, ws) = gauss_legendre_on(2 * q, 0.0, 1.0);
        for (s, w) in s.into_iter().zip(ws) {
            let y = cfg.delta * s.powf(expo);
            let jac = cfg.delta * expo * s.powf(expo - 1.0);
            raw.push((y, w * jac));
        }
        // rest of the cell: panels no longer than their distance from the
        // origin, nor than needed to resolve the Nyquist mode
        let max_len = p * q as f64 / (4.0 * n as f64);
        let mut a = cfg.delta;
        let end = 0.5 * p;
        while a < end * (1.0 - 1e-14) {
            let b = (a + a.min(max_len)).min(end);
            let (ys, ws) = gauss_legendre_on(q, a, b);
            raw.extend(ys.into_iter().zip(ws));
            a = b;
        }

        let nyq_slot = n / 2;
        let build = |&(y, weight): &(f64, f64)| {
            let (even, odd, rem) = lattice_sums(y, &cfg);
            let mut second_diff = Vec::with_capacity(n);
            let mut shifted_slope = Vec::with_capacity(n);
            let mut first_diff = Vec::with_capacity(n);
            for slot in 0..n {
                let xi = grid.wavenumber(grid.mode_at(slot));
                let z = xi * y;
                let (s, c) = z.sin_cos();
                let mut b = second_difference_factor(z);
                let mut sl = Complex64::new(0.0, xi) * Complex64::new(c, -s);
                let mut fd = first_difference_factor(z);
                if slot == nyq_slot {
                    b.im = 0.0;
                    sl.im = 0.0;
                    fd.im = 0.0;
                }
                second_diff.push(b);
                shifted_slope.push(sl);
                first_diff.push(fd);
            }
            (
                Node {
                    y,
                    weight,
                    even,
                    odd,
                    second_diff,
                    shifted_slope,
                    first_diff,
                },
                rem,
            )
        };
        let built: Vec<(Node, (f64, f64))> = raw.par_iter().map(build).collect();
        let mut tail_remainder = (0.0, 0.0);
        let mut nodes = Vec::with_capacity(built.len());
        for (node, rem) in built {
            tail_remainder.0 += node.weight * rem.0;
            tail_remainder.1 += node.weight * rem.1;
            nodes.push(node);
        }

        let e = 0.5 * (2.0 + cfg.sigma);
        let mut binomial = [0.0; MAX_TERMS];
        binomial[0] = 1.0;
        for l in 1..MAX_TERMS {
            binomial[l] = binomial[l - 1] * (-e - (l - 1) as f64) / l as f64;
        }
        Ok(Self {
            cfg,
            nodes,
            tail_remainder,
            binomial,
        })
    }

    pub fn config(&self) -> &FmcfConfig {
        &self.cfg
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `A(u)v`.
    pub fn apply(&self, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
        Ok(self.apply_detailed(u, v)?.value)
    }

    pub fn apply_detailed(&self, u: &SpectralField, v: &SpectralField) -> Result<Application> {
        let grid = self.cfg.grid;
        if *u.grid() != grid || *v.grid() != grid {
            return Err(Error::InvalidGrid("fields must live on the operator grid".into()));
        }
        let n = grid.n_points();
        let p = grid.period();
        let e = 0.5 * (2.0 + self.cfg.sigma);

        let (lo, hi) = u
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let osc = hi - lo;
        if !osc.is_finite() || osc >= 0.25 * p {
            return Err(Error::Resolution(format!(
                "oscillation {osc:e} of u is not below a quarter period; image expansion would not converge"
            )));
        }
        // |Y| ≥ P/2 for every image, so (Δu/Y)² ≤ ratio < 1/4
        let ratio = (osc / (0.5 * p)).powi(2);
        let mut terms = 1;
        while terms < MAX_TERMS && self.binomial[terms].abs() * ratio.powi(terms as i32) / (1.0 - ratio) > 1e-17 {
            terms += 1;
        }
        let series_rem = if terms < MAX_TERMS {
            0.0
        } else {
            self.binomial[MAX_TERMS - 1].abs() * ratio.powi(MAX_TERMS as i32) / (1.0 - ratio)
        };

        let cu = u.coeffs();
        let cv = v.coeffs();
        let slope = u.derivative();
        let v_slope = v.derivative();
        let v_max = v.max_abs();
        let slope_max = slope.max_abs();

        let partials: Vec<Vec<f64>> = self
            .nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; n];
                let mut num = vec![Complex64::new(0.0, 0.0); n];
                let mut bsl = vec![Complex64::new(0.0, 0.0); n];
                let mut del = vec![Complex64::new(0.0, 0.0); n];
                let i = Complex64::new(0.0, 1.0);
                for node in chunk {
                    for slot in 0..n {
                        let b = node.second_diff[slot];
                        let sl = node.shifted_slope[slot];
                        let fd = node.first_diff[slot];
                        // the −y factors are conj(F), except −conj(F) for the
                        // slope; the two real signals are packed as re + i·im
                        num[slot] = cv[slot] * b + i * cv[slot] * b.conj();
                        bsl[slot] = cv[slot] * sl - i * cv[slot] * sl.conj();
                        del[slot] = cu[slot] * fd + i * cu[slot] * fd.conj();
                    }
                    fft::inverse_in_place(&mut num);
                    fft::inverse_in_place(&mut bsl);
                    fft::inverse_in_place(&mut del);
                    let y = node.y;
                    let y2 = y * y;
                    for x in 0..n {
                        let (np, nm) = (num[x].re, num[x].im);
                        let (bp, bm) = (bsl[x].re, bsl[x].im);
                        let (dp, dm) = (del[x].re, del[x].im);
                        let central = np * (y2 + dp * dp).powf(-e) + nm * (y2 + dm * dm).powf(-e);
                        let ap = np + y * bp;
                        let am = nm - y * bm;
                        let (dp2, dm2) = (dp * dp, dm * dm);
                        let mut images = 0.0;
                        let (mut pp, mut pm) = (1.0, 1.0);
                        for l in 0..terms {
                            let c = self.binomial[l];
                            images += c
                                * (pp * (ap * node.even[l] - bp * node.odd[l])
                                    + pm * (am * node.even[l] + bm * node.odd[l]));
                            pp *= dp2;
                            pm *= dm2;
                        }
                        acc[x] += node.weight * (central + images);
                    }
                }
                acc
            })
            .collect();

        let mut integral = vec![0.0; n];
        for part in &partials {
            for (a, b) in integral.iter_mut().zip(part) {
                *a += b;
            }
        }
        let scale = 2.0 / self.cfg.sigma;
        let values: Vec<f64> = integral
            .iter()
            .zip(slope.values())
            .map(|(i, s)| scale * (1.0 + s * s).sqrt() * i)
            .collect();

        let metric = (1.0 + slope_max * slope_max).sqrt();
        let v_slope_max = v_slope.max_abs();
        let total_weight: f64 = self.nodes.iter().map(|nd| nd.weight * nd.even[0]).sum();
        let tail_estimate = scale
            * metric
            * (2.0 * v_max * self.tail_remainder.0
                + v_slope_max * self.tail_remainder.1
                + series_rem * (2.0 * v_max + v_slope_max) * 2.0 * total_weight);
        if tail_estimate > 1e-6 * v_max.max(f64::MIN_POSITIVE) && v_max > 0.0 {
            return Err(Error::Resolution(format!(
                "image tail estimate {tail_estimate:e} exceeds 1e-6·‖v‖; increase far_cells"
            )));
        }
        Ok(Application {
            value: SpectralField::from_values(grid, values)?,
            tail_estimate,
            expansion_terms: terms,
        })
    }

    /// Symbol of `A(0)` at mode `k` evaluated with the same quadrature,
    /// without transforms.
    pub fn flat_symbol(&self, k: i64) -> f64 {
        let grid = self.cfg.grid;
        let xi = grid.wavenumber(k);
        let s0 = 2.0 + self.cfg.sigma;
        let mut sum = 0.0;
        for node in &self.nodes {
            let y = node.y;
            let z = xi * y;
            let b = second_difference_factor(z);
            let fd = first_difference_factor(z);
            let central = 2.0 * b.re * y.powf(-s0);
            let images = 2.0 * fd.re * node.even[0] - 2.0 * xi * z.sin() * node.odd[0];
            sum += node.weight * (central + images);
        }
        2.0 / self.cfg.sigma * sum
    }
}

/// One-shot `A(u)v`; builds the quadrature each call.
pub fn apply_fmcf_a(u: &SpectralField, v: &SpectralField, cfg: &FmcfConfig) -> Result<SpectralField> {
    FmcfOperator::new(*cfg)?.apply(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicGrid;

    fn small_cfg() -> FmcfConfig {
        let mut cfg = FmcfConfig::new(0.5, 64).unwrap();
        cfg.far_cells = 16;
        cfg
    }

    #[test]
    fn small_argument_factors_match_closed_forms() {
        for z in [0.49, 0.3, -0.2, 1e-3] {
            let (s, c) = f64::sin_cos(z);
            let closed = Complex64::new(1.0 - c - z * s, s - z * c);
            assert!((second_difference_factor(z) - closed).norm() < 1e-15);
        }
        // leading behaviour z²/2 survives where the closed form cancels
        let z = 1e-9;
        assert!((second_difference_factor(z).re + 0.5 * z * z).abs() < 1e-30);
    }

    #[test]
    fn euler_maclaurin_tail_matches_direct_sum() {
        let (p, c, r) = (2.0 * std::f64::consts::PI, 1.3, 2.5);
        let direct: f64 = (33..200_000).map(|t| (t as f64 * p + c).powf(-r)).sum::<f64>()
            + (200_000f64 * p + c).powf(1.0 - r) / ((r - 1.0) * p);
        let (tail, bound) = power_tail(32, p, c, r);
        assert!((tail - direct).abs() < 1e-9 * direct, "{tail} vs {direct}");
        assert!((tail - direct).abs() <= 2.0 * bound.abs() + 1e-18);
    }

    #[test]
    fn constant_v_is_annihilated() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let u = SpectralField::from_cosine_modes(cfg.grid, 0.1, &[(1, 0.2), (2, 0.1)]);
        let v = SpectralField::constant(cfg.grid, 3.0);
        assert!(op.apply(&u, &v).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn flat_symbol_agrees_with_application() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let zero = SpectralField::constant(cfg.grid, 0.0);
        for k in [1, 5, 17, 32] {
            let v = SpectralField::from_cosine_modes(cfg.grid, 0.0, &[(k, 1.0)]);
            let out = op.apply(&zero, &v).unwrap();
            let m = op.flat_symbol(k);
            let err = out
                .values()
                .iter()
                .zip(v.values())
                .fold(0.0f64, |e, (o, c)| e.max((o - m * c).abs()));
            assert!(err < 1e-11 * m.abs(), "k = {k}: {err}");
            assert!(m < 0.0);
        }
        assert_eq!(op.flat_symbol(0), 0.0);
    }

    #[test]
    fn linear_in_v() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let g = cfg.grid;
        let u = SpectralField::from_fn(g, |x| 0.2 * x.sin() + 0.1 * (3.0 * x).cos());
        let v1 = SpectralField::from_fn(g, |x| (2.0 * x).cos() + 0.3 * x.sin());
        let v2 = SpectralField::from_fn(g, |x| (5.0 * x).sin() - 0.1);
        let (a, b) = (1.7, -0.6);
        let lhs = op.apply(&u, &v1.axpby(a, &v2, b).unwrap()).unwrap();
        let rhs = op
            .apply(&u, &v1)
            .unwrap()
            .axpby(a, &op.apply(&u, &v2).unwrap(), b)
            .unwrap();
        let scale = lhs.max_abs();
        let diff = lhs.axpby(1.0, &rhs, -1.0).unwrap().max_abs();
        assert!(diff <= 1e-10 * scale, "{diff} vs {scale}");
    }

    #[test]
    fn invariant_under_constant_shift_of_u() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let g = cfg.grid;
        let u = SpectralField::from_fn(g, |x| 0.2 * x.sin() + 0.1 * (3.0 * x).cos());
        let a = op.apply(&u, &u).unwrap();
        let b = op.apply(&u.add_constant(5.0), &u.add_constant(5.0)).unwrap();
        assert!(a.axpby(1.0, &b, -1.0).unwrap().max_abs() < 1e-12 * a.max_abs());
    }

    #[test]
    fn commutes_with_grid_translation() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let g = cfg.grid;
        let h = g.spacing();
        let f = |x: f64| 0.3 * x.cos() + 0.1 * (2.0 * x).sin();
        let u = SpectralField::from_fn(g, f);
        let shifted = SpectralField::from_fn(g, |x| f(x - 3.0 * h));
        let a = op.apply(&u, &u).unwrap();
        let b = op.apply(&shifted, &shifted).unwrap();
        let n = g.n_points();
        for j in 0..n {
            assert!((b.values()[(j + 3) % n] - a.values()[j]).abs() < 1e-11 * a.max_abs());
        }
    }

    #[test]
    fn large_oscillation_is_rejected() {
        let cfg = small_cfg();
        let op = FmcfOperator::new(cfg).unwrap();
        let u = SpectralField::from_cosine_modes(cfg.grid, 0.0, &[(1, 1.0)]);
        assert!(matches!(op.apply(&u, &u), Err(Error::Resolution(_))));
    }

    #[test]
    fn rejects_foreign_grid() {
        let op = FmcfOperator::new(small_cfg()).unwrap();
        let other = PeriodicGrid::standard(32).unwrap();
        let f = SpectralField::constant(other, 1.0);
        assert!(matches!(op.apply(&f, &f), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn invalid_configurations() {
        let mut cfg = small_cfg();
        cfg.sigma = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.delta = 2.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_cfg();
        cfg.far_cells = 4;
        assert!(FmcfOperator::new(cfg).is_err());
    }
}
