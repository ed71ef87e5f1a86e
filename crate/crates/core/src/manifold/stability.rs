use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::linearize::{linearize_at, EQUILIBRIUM_TOL};
use super::split::{analyze, SplitAnalysis};
use super::system::{central_jacobian, random_in_ball, QuasilinearSystem, VectorFn};
use super::svd::{jacobi_svd, leading_left_vectors, norm2, trailing_right_vectors};
use crate::error::{Error, Result};

/// Local parametrization `Ψ: ℝ^m → ℝ^d` of a family of equilibria, with
/// `Ψ(0) = u*`.
#[derive(Clone)]
pub struct ManifoldParam {
    dim: usize,
    map: VectorFn,
    /// Radius of the parameter ball sampled for the equilibrium check.
    pub sample_radius: f64,
}

impl ManifoldParam {
    pub fn new<F>(dim: usize, map: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            map: Arc::new(map),
            sample_radius: 0.1,
        }
    }

    /// The single point `{u*}` (an isolated equilibrium).
    pub fn point(u_star: DVector<f64>) -> Self {
        Self::new(0, move |_| u_star.clone())
    }

    pub fn with_sample_radius(mut self, r: f64) -> Self {
        self.sample_radius = r;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &DVector<f64>) -> DVector<f64> {
        (self.map)(p)
    }
}

impl fmt::Debug for ManifoldParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldParam")
            .field("dim", &self.dim)
            .field("sample_radius", &self.sample_radius)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityFailure {
    ManifoldRank,
    WrongTangent,
    NotSemiSimple,
    SpectralGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalStabilityReport {
    pub manifold_rank_ok: bool,
    pub tangent_matches_kernel: bool,
    pub zero_semisimple: bool,
    pub stable_spectrum_ok: bool,
    pub gap: f64,
    pub manifold_dim: usize,
    pub manifold_rank: usize,
    pub kernel_dim: usize,
    /// Sine of the largest principal angle between `T_{u*}𝓔` and `ker A*(0)`.
    pub max_principal_sine: f64,
    pub worst_sample_residual: f64,
    pub analysis: SplitAnalysis,
}

impl NormalStabilityReport {
    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }

    /// First failed condition, in the order rank, tangent, semi-simplicity,
    /// spectral gap.
    pub fn failure(&self) -> Option<StabilityFailure> {
        if !self.manifold_rank_ok {
            Some(StabilityFailure::ManifoldRank)
        } else if !self.tangent_matches_kernel {
            Some(StabilityFailure::WrongTangent)
        } else if !self.zero_semisimple {
            Some(StabilityFailure::NotSemiSimple)
        } else if !self.stable_spectrum_ok {
            Some(StabilityFailure::SpectralGap)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityOptions {
    pub gap_tol: f64,
    pub angle_tol: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            angle_tol: 1e-6,
            samples: 20,
            seed: 0,
        }
    }
}

/// Orthonormal basis of the column space, using singular values above
/// `rel_tol · σ_max`.
fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let values = jacobi_svd(m).values;
    let rank = values.iter().filter(|&&s| values[0] > 0.0 && s > rel_tol * values[0]).count();
    leading_left_vectors(m, rank)
}

/// Orthonormal basis of `ker m` from the singular values at most `abs_tol`.
fn null_space(m: &DMatrix<f64>, abs_tol: f64) -> DMatrix<f64> {
    let d = m.ncols();
    if d == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (values, v) = trailing_right_vectors(m);
    let k = values.iter().filter(|&&s| s <= abs_tol).count();
    v.columns(0, k).into_owned()
}

/// Verifies the normal-stability conditions at `u*` for the equilibrium
/// family parametrized by `manifold`.
///
/// The tangent check compares `range ∂Ψ(0)` with `ker A*(0)` by principal
/// angles. Sampled points of `Ψ` must be equilibria; when they are not, the
/// call fails with [`Error::InvalidManifold`] unless the tangent check has
/// already disqualified the parametrization, in which case the report
/// carries the wrong-tangent verdict and the offending residual.
pub fn check_normal_stability(
    system: &QuasilinearSystem,
    u_star: &DVector<f64>,
    manifold: &ManifoldParam,
    opts: &StabilityOptions,
) -> Result<NormalStabilityReport> {
    let m = manifold.dim();
    let d = system.dim();
    let origin = DVector::zeros(m);
    let base_gap = (manifold.eval(&origin) - u_star).norm();
    if base_gap > EQUILIBRIUM_TOL {
        return Err(Error::InvalidManifold {
            reason: format!("Ψ(0) differs from u* by {base_gap:e}"),
            worst_residual: system.residual(&manifold.eval(&origin)),
        });
    }

    let lin = linearize_at(system, u_star)?;
    let analysis = analyze(&lin, opts.gap_tol);

    let tangent = if m == 0 {
        DMatrix::zeros(d, 0)
    } else {
        central_jacobian(&origin, |p| manifold.eval(p))
    };
    let tangent_basis = column_space(&tangent, 1e-6);
    let manifold_rank = tangent_basis.ncols();

    let norm = norm2(&lin);
    let kernel = null_space(&lin, opts.gap_tol * norm);
    let max_principal_sine = if kernel.ncols() != tangent_basis.ncols() {
        1.0
    } else if kernel.ncols() == 0 {
        0.0
    } else {
        let outside = &tangent_basis - &kernel * (kernel.transpose() * &tangent_basis);
        norm2(&outside)
    };
    let tangent_ok = manifold_rank == m && kernel.ncols() == m && max_principal_sine <= opts.angle_tol;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let p = random_in_ball(&mut rng, &origin, manifold.sample_radius);
        worst = worst.max(system.residual(&manifold.eval(&p)));
    }
    if !(worst <= 1e-6) && tangent_ok {
        return Err(Error::InvalidManifold {
            reason: "sampled parameters are not equilibria".into(),
            worst_residual: worst,
        });
    }

    Ok(NormalStabilityReport {
        manifold_rank_ok: manifold_rank == m,
        tangent_matches_kernel: tangent_ok,
        zero_semisimple: analysis.semisimple(),
        stable_spectrum_ok: analysis.gap > 0.0,
        gap: analysis.gap,
        manifold_dim: m,
        manifold_rank,
        kernel_dim: kernel.ncols(),
        max_principal_sine,
        worst_sample_residual: worst,
        analysis,
    })
}
