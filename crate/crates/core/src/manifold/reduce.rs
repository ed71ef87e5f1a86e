use nalgebra::DVector;

use super::chart::EquilibriumChart;
use super::integrate::Trajectory;
use crate::error::{Error, Result};

/// Trajectory split into kernel part `x = P(u − u*)` and normal part
/// `y = Q(u − u*) − φ(x)`.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

impl ReducedTrajectory {
    pub fn y_norms(&self) -> Vec<f64> {
        self.y.iter().map(|y| y.norm()).collect()
    }

    pub fn x_final(&self) -> &DVector<f64> {
        self.x.last().expect("reduced trajectory is never empty")
    }

    /// Largest deviation of `u* + x + φ(x) + y` from the original samples.
    pub fn reconstruction_error(&self, traj: &Trajectory, chart: &EquilibriumChart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ((u, x), y) in traj.states.iter().zip(&self.x).zip(&self.y) {
            let rebuilt = chart.point(x)? + y;
            worst = worst.max((rebuilt - u).amax());
        }
        Ok(worst)
    }
}

pub fn reduce_trajectory(traj: &Trajectory, chart: &EquilibriumChart) -> Result<ReducedTrajectory> {
    let split = chart.split();
    let mut xs = Vec::with_capacity(traj.len());
    let mut ys = Vec::with_capacity(traj.len());
    for (&t, u) in traj.times.iter().zip(&traj.states) {
        let v = u - chart.base();
        let x = &split.projection * &v;
        let phi = chart.phi(&x).map_err(|e| match e {
            Error::ChartExit { norm, r0, .. } => Error::ChartExit { time: t, norm, r0 },
            other => other,
        })?;
        let y = &split.complement * &v - phi;
        xs.push(x);
        ys.push(y);
    }
    Ok(ReducedTrajectory {
        times: traj.times.clone(),
        x: xs,
        y: ys,
    })
}

/// Limit `û* = u* + x̂ + φ(x̂)` read off at the final sample.
pub fn limit_point(reduced: &ReducedTrajectory, chart: &EquilibriumChart) -> Result<DVector<f64>> {
    chart.point(reduced.x_final())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_graph_chart, linearize_at, simulate, spectral_split, QuasilinearSystem};
    use nalgebra::{dmatrix, dvector};

    fn oracle_chart() -> EquilibriumChart {
        let sys = QuasilinearSystem::new(2, |u| dmatrix![0.0, u[0]; 0.0, -1.0], |_| dvector![0.0, 0.0]);
        let u_star = dvector![0.0, 0.0];
        let split = spectral_split(&linearize_at(&sys, &u_star).unwrap(), 1e-6).unwrap();
        build_graph_chart(&sys, &u_star, &split, 0.5, 1e-12).unwrap()
    }

    #[test]
    fn constant_trajectory_at_base() {
        let chart = oracle_chart();
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![dvector![0.0, 0.0]; 2],
        };
        let red = reduce_trajectory(&traj, &chart).unwrap();
        assert!(red.x.iter().chain(&red.y).all(|v| v.norm() == 0.0));
    }

    #[test]
    fn on_manifold_point_has_no_normal_part() {
        let chart = oracle_chart();
        let p = chart.point(&dvector![0.3, 0.0]).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![p; 3],
        };
        let red = reduce_trajectory(&traj, &chart).unwrap();
        for (x, y) in red.x.iter().zip(&red.y) {
            assert!((x - dvector![0.3, 0.0]).norm() < 1e-14);
            assert!(y.norm() < 1e-14);
        }
    }

    #[test]
    fn oracle_normal_part_is_exponential() {
        let chart = oracle_chart();
        let (x0, y0) = (0.05, 0.02);
        let traj = simulate(chart.system(), &dvector![x0, y0], 5.0, 0.5).unwrap();
        let red = reduce_trajectory(&traj, &chart).unwrap();
        for (t, y) in red.times.iter().zip(&red.y) {
            assert!((y - dvector![0.0, y0 * (-t).exp()]).norm() < 1e-10);
        }
        assert!(red.reconstruction_error(&traj, &chart).unwrap() < 1e-10);
    }

    #[test]
    fn exit_reports_time() {
        let chart = oracle_chart();
        let traj = Trajectory {
            times: vec![0.0, 0.7],
            states: vec![dvector![0.1, 0.0], dvector![0.9, 0.0]],
        };
        match reduce_trajectory(&traj, &chart).unwrap_err() {
            Error::ChartExit { time, .. } => assert_eq!(time, 0.7),
            other => panic!("unexpected {other:?}"),
        }
    }
}
