use nalgebra::{DMatrix, DVector};

use super::split::SpectralSplit;
use super::svd::leading_left_vectors;
use super::system::{central_jacobian, QuasilinearSystem};
use crate::error::{Error, Result};

const NEWTON_MAX_ITER: usize = 50;

/// Graph chart `x ↦ u* + x + φ(x)` of the equilibrium set over
/// `range(P) ∩ B(0, r0)`, with `φ(x) ∈ range(Q)`.
#[derive(Debug, Clone)]
pub struct EquilibriumChart {
    system: QuasilinearSystem,
    base: DVector<f64>,
    split: SpectralSplit,
    r0: f64,
    newton_tol: f64,
    /// Orthonormal basis of `range(Q)`, `d × (d−m)`.
    stable_basis: DMatrix<f64>,
    /// `Sᵀ Q`: `Q v = 0` iff `(Sᵀ Q) v = 0`.
    stable_rows: DMatrix<f64>,
}

impl EquilibriumChart {
    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }

    pub fn system(&self) -> &QuasilinearSystem {
        &self.system
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn newton_tol(&self) -> f64 {
        self.newton_tol
    }

    /// `φ(x)` for `x ∈ range(P)`, by damped Newton on
    /// `Q[A(u)u + f(u)] = 0`, `u = u* + x + z`, `z ∈ range(Q)`, from `z = 0`.
    pub fn phi(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let norm = x.norm();
        if norm > self.r0 * (1.0 + 1e-12) {
            return Err(Error::ChartExit {
                time: f64::NAN,
                norm,
                r0: self.r0,
            });
        }
        let s = &self.stable_basis;
        if s.ncols() == 0 {
            return Ok(DVector::zeros(self.base.len()));
        }
        let anchor = &self.base + x;
        let residual = |eta: &DVector<f64>| -> DVector<f64> {
            let u = &anchor + s * eta;
            &self.stable_rows * self.system.vector_field(&u)
        };
        let mut eta = DVector::zeros(s.ncols());
        let mut r = residual(&eta);
        for _ in 0..NEWTON_MAX_ITER {
            let rn = r.norm();
            if rn <= self.newton_tol {
                return Ok(s * eta);
            }
            let u = &anchor + s * &eta;
            let jac = &self.stable_rows * self.system.jacobian(&u) * s;
            let Some(step) = jac.lu().solve(&(-&r)) else {
                break;
            };
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let trial = &eta + &step * alpha;
                let rt = residual(&trial);
                if rt.norm() < (1.0 - 1e-4 * alpha) * rn {
                    eta = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // stagnation at the round-off floor counts as convergence
                if step.norm() <= 1e-14 * (1.0 + eta.norm()) && rn <= 1e3 * self.newton_tol {
                    return Ok(s * eta);
                }
                break;
            }
        }
        if r.norm() <= self.newton_tol {
            return Ok(s * eta);
        }
        Err(Error::ChartRadius { norm, r0: self.r0 })
    }

    /// Point `u* + x + φ(x)` of the equilibrium set.
    pub fn point(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.base + x + self.phi(x)?)
    }

    /// Embeds kernel coordinates `c ∈ ℝ^m` as `x = V c ∈ range(P)`.
    pub fn embed(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.split.kernel_basis * coords
    }

    /// Finite-difference Jacobian of `φ ∘ embed` at the origin (`d × m`).
    pub fn phi_jacobian_at_zero(&self) -> Result<DMatrix<f64>> {
        let m = self.split.kernel_dim;
        let d = self.base.len();
        if m == 0 {
            return Ok(DMatrix::zeros(d, 0));
        }
        let mut failure = None;
        let jac = central_jacobian(&DVector::zeros(m), |c| match self.phi(&self.embed(c)) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                DVector::zeros(d)
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(jac),
        }
    }
}

pub fn build_graph_chart(
    system: &QuasilinearSystem,
    u_star: &DVector<f64>,
    split: &SpectralSplit,
    r0: f64,
    newton_tol: f64,
) -> Result<EquilibriumChart> {
    if !(r0 > 0.0) || !(newton_tol > 0.0) {
        return Err(Error::Config(format!(
            "chart radius and Newton tolerance must be positive (r0 = {r0}, tol = {newton_tol})"
        )));
    }
    let d = system.dim();
    let m = split.kernel_dim;
    let q = &split.complement;
    let stable_basis = leading_left_vectors(q, d - m);
    let stable_rows = stable_basis.transpose() * q;
    let chart = EquilibriumChart {
        system: system.clone(),
        base: u_star.clone(),
        split: split.clone(),
        r0,
        newton_tol,
        stable_basis,
        stable_rows,
    };
    chart.phi(&DVector::zeros(d))?;
    Ok(chart)
}
