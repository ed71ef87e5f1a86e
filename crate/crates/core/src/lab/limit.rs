//! Identification of the limit equilibrium from a reduced trajectory.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{EquilibriumChart, ReducedTrajectory};

/// Largest `|y(t_end)|` at which the limit is read off.
pub const Y_TOL: f64 = 1e-8;
/// Largest vector-field residual accepted at the identified limit.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPoint {
    pub u_hat: Vec<f64>,
    /// Kernel coordinates of `x̂`.
    pub x_hat: Vec<f64>,
    pub residual: f64,
    pub y_final: f64,
}

/// `û = u* + x̂ + φ(x̂)` with `x̂ = x(t_end)`.
pub fn identify_limit(reduced: &ReducedTrajectory, chart: &EquilibriumChart) -> Result<LimitPoint> {
    let y_final = reduced.y.last().map(|y| y.norm()).ok_or_else(|| {
        Error::Config("reduced trajectory is empty".into())
    })?;
    if !(y_final <= Y_TOL) {
        return Err(Error::PrematureLimit(y_final));
    }
    let x = reduced.x_final();
    let u_hat = chart.point(x)?;
    let residual = chart.system().residual(&u_hat);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::NotAnEquilibrium { residual });
    }
    let coords: DVector<f64> = chart.split().coordinates(x);
    Ok(LimitPoint {
        u_hat: u_hat.iter().copied().collect(),
        x_hat: coords.iter().copied().collect(),
        residual,
        y_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_graph_chart, linearize_at, reduce_trajectory, simulate, spectral_split, QuasilinearSystem};
    use nalgebra::{dmatrix, dvector};

    fn chart() -> EquilibriumChart {
        let sys = QuasilinearSystem::new(2, |_| dmatrix![0.0, 0.0; 0.0, -1.0], |u| dvector![0.0, u[0] * u[0]]);
        let u_star = dvector![0.0, 0.0];
        let split = spectral_split(&linearize_at(&sys, &u_star).unwrap(), 1e-6).unwrap();
        build_graph_chart(&sys, &u_star, &split, 0.5, 1e-12).unwrap()
    }

    #[test]
    fn on_manifold_start() {
        let c = chart();
        let u0 = dvector![0.2, 0.04];
        let traj = simulate(c.system(), &u0, 1.0, 0.5).unwrap();
        let red = reduce_trajectory(&traj, &c).unwrap();
        let lim = identify_limit(&red, &c).unwrap();
        assert!((lim.u_hat[0] - 0.2).abs() < 1e-12 && (lim.u_hat[1] - 0.04).abs() < 1e-12);
        assert!(lim.residual <= 10.0 * c.newton_tol());
    }

    #[test]
    fn premature_limit() {
        let c = chart();
        let traj = simulate(c.system(), &dvector![0.1, 0.2], 1.0, 0.5).unwrap();
        let red = reduce_trajectory(&traj, &c).unwrap();
        match identify_limit(&red, &c).unwrap_err() {
            Error::PrematureLimit(y) => assert!(y > 1e-2),
            other => panic!("{other:?}"),
        }
    }
}
