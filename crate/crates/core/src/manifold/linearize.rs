use nalgebra::{DMatrix, DVector};

use super::system::QuasilinearSystem;
use crate::error::{Error, Result};

/// Residual bound an equilibrium must meet before it can be linearized.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Linearization `w ↦ A(u*)w + (∂A(u*)[w])u* + ∂f(u*)w` at an equilibrium.
pub fn linearize_at(system: &QuasilinearSystem, u_star: &DVector<f64>) -> Result<DMatrix<f64>> {
    let residual = system.residual(u_star);
    if !(residual <= EQUILIBRIUM_TOL) {
        return Err(Error::NotAnEquilibrium { residual });
    }
    Ok(system.jacobian(u_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / (1.0 + b.norm())
    }

    #[test]
    fn quadratic_forcing_example() {
        let sys = QuasilinearSystem::new(
            2,
            |_| dmatrix![0.0, 0.0; 0.0, -1.0],
            |u| dvector![0.0, u[0] * u[0]],
        );
        let l = linearize_at(&sys, &dvector![0.0, 0.0]).unwrap();
        assert!(rel(&l, &dmatrix![0.0, 0.0; 0.0, -1.0]) < 1e-9);
    }

    #[test]
    fn quasilinear_coupling_example() {
        let sys = QuasilinearSystem::new(2, |u| dmatrix![0.0, u[0]; 0.0, -1.0], |_| dvector![0.0, 0.0]);
        let l = linearize_at(&sys, &dvector![0.0, 0.0]).unwrap();
        assert!(rel(&l, &dmatrix![0.0, 0.0; 0.0, -1.0]) < 1e-9);
        // away from the origin the quasilinear term contributes
        let l = linearize_at(&sys, &dvector![0.5, 0.0]).unwrap();
        assert!(rel(&l, &dmatrix![0.0, 0.5; 0.0, -1.0]) < 1e-9);
    }

    #[test]
    fn constant_operator_linearizes_to_itself() {
        let m = dmatrix![-1.0, 2.0, 0.0; 0.5, -3.0, 1.0; 0.0, 0.0, -0.25];
        let l = linearize_at(&QuasilinearSystem::linear(m.clone()), &DVector::zeros(3)).unwrap();
        assert!(rel(&l, &m) < 1e-12);
    }

    #[test]
    fn rejects_non_equilibria() {
        let sys = QuasilinearSystem::linear(dmatrix![-1.0]);
        let err = linearize_at(&sys, &dvector![1.0]).unwrap_err();
        assert!(matches!(err, Error::NotAnEquilibrium { residual } if (residual - 1.0).abs() < 1e-15));
    }

    /// Random smooth systems `A(u) = A0 + Σ u_k A_k`, `f(u) = B0 u∘u` with an
    /// equilibrium at 0 are linearized analytically and compared with the
    /// finite-difference Jacobian of the full field at a shifted equilibrium.
    #[test]
    fn linearization_matches_full_field_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = rng.random_range(2..6);
            let rand_mat = |rng: &mut ChaCha8Rng| DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
            let a0 = rand_mat(&mut rng);
            let ak: Vec<DMatrix<f64>> = (0..d).map(|_| rand_mat(&mut rng)).collect();
            let b = rand_mat(&mut rng);
            // shift so that u* is an equilibrium: F(u) - F(u*) has a root at u*
            let u_star = DVector::from_fn(d, |_, _| rng.random_range(-0.3..0.3));
            let a_of = {
                let (a0, ak) = (a0.clone(), ak.clone());
                move |u: &DVector<f64>| {
                    let mut m = a0.clone();
                    for (k, ak) in ak.iter().enumerate() {
                        m += ak * u[k];
                    }
                    m
                }
            };
            let raw_f = {
                let b = b.clone();
                move |u: &DVector<f64>| &b * u.component_mul(u)
            };
            let offset = a_of(&u_star) * &u_star + raw_f(&u_star);
            let a_fn = a_of.clone();
            let sys = QuasilinearSystem::new(d, a_fn, move |u| raw_f(u) - &offset)
                .with_da({
                    let ak = ak.clone();
                    move |_, w| {
                        let mut m = DMatrix::zeros(w.len(), w.len());
                        for (k, ak) in ak.iter().enumerate() {
                            m += ak * w[k];
                        }
                        m
                    }
                })
                .with_df(move |u| &b * DMatrix::from_diagonal(&(u * 2.0)));
            let l = linearize_at(&sys, &u_star).unwrap();
            let fd = sys.fd_jacobian(&u_star);
            assert!(rel(&l, &fd) <= 1e-5, "relative error {}", rel(&l, &fd));
            assert!(sys.derivative_discrepancy(&mut rng, 10) <= 1e-5);
        }
    }
}
