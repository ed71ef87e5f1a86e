use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use super::svd::{min_singular_value, norm2, trailing_right_vectors};
use crate::error::{Error, Result};

/// Spectral projection pair for the eigenvalue cluster at zero.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub projection: DMatrix<f64>,
    pub complement: DMatrix<f64>,
    pub kernel_dim: usize,
    /// `d × m`, spans `range(P)`.
    pub kernel_basis: DMatrix<f64>,
    /// `m × d`, coordinates of `P v` in `kernel_basis`.
    pub kernel_coords: DMatrix<f64>,
    pub gap: f64,
    pub stable_eigs: Vec<Complex<f64>>,
}

impl SpectralSplit {
    /// Coordinates of `P v` in the kernel basis.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.kernel_coords * v
    }

    /// Largest deviation among `P² − P`, `PQ`, `QP` and `P + Q − I`.
    pub fn projection_defect(&self) -> f64 {
        let d = self.projection.nrows();
        let p = &self.projection;
        let q = &self.complement;
        let id = DMatrix::<f64>::identity(d, d);
        [
            (p * p - p).amax(),
            (p * q).amax(),
            (q * p).amax(),
            (p + q - id).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Everything [`spectral_split`] computes, without turning failed
/// conditions into errors.
#[derive(Debug, Clone, Serialize)]
pub struct SplitAnalysis {
    pub algebraic: usize,
    pub geometric: usize,
    pub kernel_meets_range: bool,
    pub gap: f64,
    pub max_stable_re: f64,
    #[serde(skip)]
    pub eigenvalues: Vec<Complex<f64>>,
    #[serde(skip)]
    pub split: Option<SpectralSplit>,
}

impl SplitAnalysis {
    pub fn semisimple(&self) -> bool {
        self.algebraic == self.geometric && !self.kernel_meets_range
    }
}

pub fn analyze(m: &DMatrix<f64>, gap_tol: f64) -> SplitAnalysis {
    let d = m.nrows();
    let norm = norm2(m);
    let eigenvalues: Vec<Complex<f64>> = if d == 0 {
        Vec::new()
    } else {
        m.complex_eigenvalues().iter().copied().collect()
    };
    let cluster_tol = gap_tol * (1.0 + norm);
    let (cluster, stable): (Vec<Complex<f64>>, Vec<Complex<f64>>) =
        eigenvalues.iter().copied().partition(|l| l.norm() <= cluster_tol);
    let algebraic = cluster.len();
    let max_stable_re = stable.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let gap = -max_stable_re;

    // singular triplets sorted by increasing singular value
    let (geometric, kernel, cokernel) = if d == 0 {
        (0, DMatrix::zeros(0, 0), DMatrix::zeros(0, 0))
    } else {
        let (values, right) = trailing_right_vectors(m);
        let (_, left) = trailing_right_vectors(&m.transpose());
        let rank_tol = gap_tol * norm;
        let geometric = values.iter().filter(|&&s| s <= rank_tol).count();
        let take = algebraic.min(geometric);
        (geometric, right.columns(0, take).into_owned(), left.columns(0, take).into_owned())
    };

    let mut kernel_meets_range = false;
    let mut split = None;
    if algebraic == geometric {
        let stable_eigs: Vec<Complex<f64>> = stable.clone();
        if algebraic == 0 {
            split = Some(SpectralSplit {
                projection: DMatrix::zeros(d, d),
                complement: DMatrix::identity(d, d),
                kernel_dim: 0,
                kernel_basis: DMatrix::zeros(d, 0),
                kernel_coords: DMatrix::zeros(0, d),
                gap,
                stable_eigs,
            });
        } else {
            // P = V (WᵀV)⁻¹ Wᵀ projects onto ker M along range M = (ker Mᵀ)^⊥.
            let gram = cokernel.transpose() * &kernel;
            let smin = min_singular_value(&gram);
            if smin <= gap_tol.sqrt() {
                kernel_meets_range = true;
            } else if let Some(inv) = gram.try_inverse() {
                let coords = inv * cokernel.transpose();
                let projection = &kernel * &coords;
                let complement = DMatrix::identity(d, d) - &projection;
                split = Some(SpectralSplit {
                    projection,
                    complement,
                    kernel_dim: algebraic,
                    kernel_basis: kernel,
                    kernel_coords: coords,
                    gap,
                    stable_eigs,
                });
            } else {
                kernel_meets_range = true;
            }
        }
    }

    SplitAnalysis {
        algebraic,
        geometric,
        kernel_meets_range,
        gap,
        max_stable_re,
        eigenvalues,
        split,
    }
}

/// Spectral projection onto the eigenvalue cluster `|λ| ≤ gap_tol·(1+‖M‖)`.
///
/// The cluster must be semi-simple (its spectral subspace equals `ker M`) and
/// the remaining spectrum must lie in `Re λ ≤ −gap < 0`.
pub fn spectral_split(m: &DMatrix<f64>, gap_tol: f64) -> Result<SpectralSplit> {
    let analysis = analyze(m, gap_tol);
    if !analysis.semisimple() {
        return Err(Error::NotSemiSimple {
            algebraic: analysis.algebraic,
            geometric: if analysis.kernel_meets_range {
                0
            } else {
                analysis.geometric
            },
        });
    }
    if analysis.gap.is_nan() || analysis.gap <= 0.0 {
        return Err(Error::SpectralCondition {
            gap: analysis.gap,
            max_re: analysis.max_stable_re,
        });
    }
    Ok(analysis.split.expect("semi-simple cluster has a split"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn diagonal_split() {
        let s = spectral_split(&dmatrix![0.0, 0.0; 0.0, -1.0], 1e-8).unwrap();
        assert_eq!(s.kernel_dim, 1);
        assert!((s.gap - 1.0).abs() < 1e-14);
        assert!((&s.projection - dmatrix![1.0, 0.0; 0.0, 0.0]).amax() < 1e-14);
        assert!(s.projection_defect() < 1e-14);
    }

    #[test]
    fn jordan_block_is_not_semisimple() {
        let err = spectral_split(&dmatrix![0.0, 1.0; 0.0, 0.0], 1e-8).unwrap_err();
        assert!(matches!(
            err,
            Error::NotSemiSimple {
                algebraic: 2,
                geometric: 1
            }
        ));
    }

    #[test]
    fn unstable_spectrum_is_rejected() {
        let err = spectral_split(&dmatrix![0.0, 0.0; 0.0, 0.5], 1e-8).unwrap_err();
        assert!(matches!(err, Error::SpectralCondition { .. }));
    }

    #[test]
    fn hele_shaw_truncation() {
        let ks: Vec<i64> = (-5..=5).collect();
        let diag: Vec<f64> = ks
            .iter()
            .map(|&k| {
                let a = k.abs() as f64;
                a * (1.0 - a * a)
            })
            .collect();
        let m = DMatrix::from_diagonal(&DVector::from_vec(diag));
        let s = spectral_split(&m, 1e-10).unwrap();
        assert_eq!(s.kernel_dim, 3);
        assert!((s.gap - 6.0).abs() < 1e-12);
    }

    #[test]
    fn non_normal_split_is_oblique_projection() {
        // eigenvalues 0 and -2 with non-orthogonal eigenvectors
        let m = dmatrix![0.0, 3.0; 0.0, -2.0];
        let s = spectral_split(&m, 1e-8).unwrap();
        assert!(s.projection_defect() < 1e-12);
        assert!((&m * &s.projection).amax() < 1e-12);
        assert!((&s.projection * &m).amax() < 1e-12);
        assert!((s.gap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_equilibrium_has_zero_projection() {
        let s = spectral_split(&dmatrix![-1.0], 1e-8).unwrap();
        assert_eq!(s.kernel_dim, 0);
        assert_eq!(s.projection.amax(), 0.0);
        assert!((s.gap - 1.0).abs() < 1e-14);
    }
}
