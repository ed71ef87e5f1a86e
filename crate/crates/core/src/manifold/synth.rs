//! Generator of normally stable test systems with known equilibrium sets.
//!
//! In canonical coordinates `w = (ξ, η) ∈ ℝ^m × ℝ^{d−m}` the system is
//!
//! ```text
//! ξ' = N(ξ)(η − g(ξ)),   η' = D(η − g(ξ)),
//! ```
//!
//! with `N(ξ)_{a,i} = ξ_a`, `D = diag(stable_eigs)` and
//! `g_i(ξ) = c‖ξ‖²/(1 + i)`. The quasilinear split is
//! `A(w) = [[0, N(ξ)], [0, D]]`, `f(w) = −(N(ξ)g(ξ), Dg(ξ))`. Equilibria are
//! exactly the graph `η = g(ξ)` and the linearization at the origin is
//! `diag(0_m, D)`. The whole system is then rotated by a seeded random
//! orthogonal matrix.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::stability::ManifoldParam;
use super::system::QuasilinearSystem;
use crate::error::{Error, Result};

/// A synthesized system together with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthesizedSystem {
    pub system: QuasilinearSystem,
    pub rotation: DMatrix<f64>,
    pub kernel_dim: usize,
    pub stable_eigs: Vec<f64>,
    pub curvature: f64,
}

fn graph(xi: &[f64], k: usize, curvature: f64) -> Vec<f64> {
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    (0..k).map(|i| curvature * r2 / (1 + i) as f64).collect()
}

impl SynthesizedSystem {
    /// True spectral gap `min |λ|` over the stable eigenvalues.
    pub fn gap(&self) -> f64 {
        self.stable_eigs.iter().fold(f64::INFINITY, |acc, e| acc.min(e.abs()))
    }

    /// Exact spectral projection at the origin (orthogonal here).
    pub fn projection(&self) -> DMatrix<f64> {
        let d = self.rotation.nrows();
        let mut diag = DMatrix::zeros(d, d);
        for i in 0..self.kernel_dim {
            diag[(i, i)] = 1.0;
        }
        &self.rotation * diag * self.rotation.transpose()
    }

    /// Exact parametrization `ξ ↦ R(ξ, g(ξ))` of the equilibrium set.
    pub fn manifold_param(&self) -> ManifoldParam {
        let r = self.rotation.clone();
        let (m, c) = (self.kernel_dim, self.curvature);
        let k = r.nrows() - m;
        ManifoldParam::new(m, move |xi| {
            let mut w = DVector::zeros(m + k);
            w.rows_mut(0, m).copy_from(xi);
            for (i, g) in graph(xi.as_slice(), k, c).into_iter().enumerate() {
                w[m + i] = g;
            }
            &r * w
        })
    }

    /// Exact graph map at the origin, for `x ∈ range(P)`.
    pub fn phi_exact(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.kernel_dim;
        let k = self.rotation.nrows() - m;
        let w = self.rotation.transpose() * x;
        let mut out = DVector::zeros(m + k);
        for (i, g) in graph(&w.as_slice()[..m], k, self.curvature).into_iter().enumerate() {
            out[m + i] = g;
        }
        &self.rotation * out
    }
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix, with the sign convention that makes it unique.
pub fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn synthesize_normally_stable(
    m: usize,
    d: usize,
    stable_eigs: &[f64],
    curvature: f64,
    seed: u64,
) -> Result<SynthesizedSystem> {
    if m == 0 || d <= m {
        return Err(Error::Config(format!("need 1 ≤ m < d, got m = {m}, d = {d}")));
    }
    if stable_eigs.len() != d - m {
        return Err(Error::Config(format!(
            "expected {} stable eigenvalues, got {}",
            d - m,
            stable_eigs.len()
        )));
    }
    if let Some(e) = stable_eigs.iter().find(|e| !(**e < 0.0)) {
        return Err(Error::Config(format!("stable eigenvalue {e} is not negative")));
    }
    if !curvature.is_finite() {
        return Err(Error::Config("curvature must be finite".into()));
    }
    let k = d - m;
    let rot = random_orthogonal(d, seed);
    let eigs = stable_eigs.to_vec();
    let c = curvature;

    let a_canon = {
        let eigs = eigs.clone();
        move |w: &DVector<f64>| {
            let mut a = DMatrix::zeros(d, d);
            for a_ in 0..m {
                for i in 0..k {
                    a[(a_, m + i)] = w[a_];
                }
            }
            for i in 0..k {
                a[(m + i, m + i)] = eigs[i];
            }
            a
        }
    };
    let f_canon = {
        let eigs = eigs.clone();
        move |w: &DVector<f64>| {
            let g = graph(&w.as_slice()[..m], k, c);
            let gsum: f64 = g.iter().sum();
            let mut out = DVector::zeros(d);
            for a_ in 0..m {
                out[a_] = -w[a_] * gsum;
            }
            for i in 0..k {
                out[m + i] = -eigs[i] * g[i];
            }
            out
        }
    };
    let da_canon = move |z: &DVector<f64>| {
        let mut a = DMatrix::zeros(d, d);
        for a_ in 0..m {
            for i in 0..k {
                a[(a_, m + i)] = z[a_];
            }
        }
        a
    };
    let df_canon = {
        let eigs = eigs.clone();
        move |w: &DVector<f64>| {
            let xi = &w.as_slice()[..m];
            let g = graph(xi, k, c);
            let gsum: f64 = g.iter().sum();
            let hsum: f64 = (0..k).map(|i| 2.0 * c / (1 + i) as f64).sum();
            let mut j = DMatrix::zeros(d, d);
            for a_ in 0..m {
                for b in 0..m {
                    let delta = if a_ == b { gsum } else { 0.0 };
                    j[(a_, b)] = -(delta + xi[a_] * xi[b] * hsum);
                }
            }
            for i in 0..k {
                for b in 0..m {
                    j[(m + i, b)] = -eigs[i] * 2.0 * c * xi[b] / (1 + i) as f64;
                }
            }
            j
        }
    };

    let (r1, r2, r3, r4) = (rot.clone(), rot.clone(), rot.clone(), rot.clone());
    let a_c = a_canon;
    let f_c = f_canon;
    let system = QuasilinearSystem::new(
        d,
        move |u| &r1 * a_c(&(r1.transpose() * u)) * r1.transpose(),
        move |u| &r2 * f_c(&(r2.transpose() * u)),
    )
    .with_da(move |_u, z| &r3 * da_canon(&(r3.transpose() * z)) * r3.transpose())
    .with_df(move |u| &r4 * df_canon(&(r4.transpose() * u)) * r4.transpose());

    Ok(SynthesizedSystem {
        system,
        rotation: rot,
        kernel_dim: m,
        stable_eigs: eigs,
        curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{
        build_graph_chart, check_normal_stability, linearize_at, spectral_split, StabilityOptions,
    };
    use nalgebra::dvector;
    use rand::SeedableRng;

    #[test]
    fn rotation_is_orthogonal() {
        let q = random_orthogonal(7, 3);
        assert!((q.transpose() * &q - DMatrix::identity(7, 7)).amax() < 1e-13);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let s = synthesize_normally_stable(2, 5, &[-1.0, -2.0, -5.0], 0.7, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(s.system.derivative_discrepancy(&mut rng, 10) < 1e-5);
    }

    #[test]
    fn flat_case_has_vanishing_graph() {
        let s = synthesize_normally_stable(1, 2, &[-1.0], 0.0, 1).unwrap();
        let u_star = dvector![0.0, 0.0];
        let split = spectral_split(&linearize_at(&s.system, &u_star).unwrap(), 1e-6).unwrap();
        let chart = build_graph_chart(&s.system, &u_star, &split, 0.5, 1e-12).unwrap();
        for t in [-0.4, -0.1, 0.2, 0.45] {
            let x = chart.embed(&dvector![t]);
            assert!(chart.phi(&x).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn curved_case_recovers_parabola_in_frame() {
        let s = synthesize_normally_stable(1, 2, &[-1.0], 1.0, 2).unwrap();
        let u_star = dvector![0.0, 0.0];
        let split = spectral_split(&linearize_at(&s.system, &u_star).unwrap(), 1e-6).unwrap();
        let chart = build_graph_chart(&s.system, &u_star, &split, 0.5, 1e-12).unwrap();
        for t in [-0.3, 0.1, 0.4] {
            let x = chart.embed(&dvector![t]);
            let phi = chart.phi(&x).unwrap();
            assert!((&phi - s.phi_exact(&x)).norm() < 1e-10);
            // in canonical coordinates the graph is η = ξ²
            let w = s.rotation.transpose() * (x + phi);
            assert!((w[1] - w[0] * w[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn five_dimensional_example_is_normally_stable() {
        let s = synthesize_normally_stable(2, 5, &[-1.0, -2.0, -5.0], 1.0, 7).unwrap();
        let u_star = DVector::zeros(5);
        let rep = check_normal_stability(&s.system, &u_star, &s.manifold_param(), &StabilityOptions::default())
            .unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.gap - 1.0).abs() < 1e-10);
        let split = spectral_split(&linearize_at(&s.system, &u_star).unwrap(), 1e-6).unwrap();
        assert!((split.projection - s.projection()).amax() < 1e-10);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(synthesize_normally_stable(0, 2, &[-1.0, -1.0], 0.0, 0).is_err());
        assert!(synthesize_normally_stable(1, 2, &[1.0], 0.0, 0).is_err());
        assert!(synthesize_normally_stable(1, 3, &[-1.0], 0.0, 0).is_err());
    }
}
