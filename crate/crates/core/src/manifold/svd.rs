//! One-sided Jacobi singular value decomposition.
//!
//! nalgebra's bidiagonal SVD occasionally returns factors that do not
//! reproduce the input for rank-deficient matrices such as orthogonal
//! projectors, so the subspace computations here use this instead.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 60;

/// `m V = W` with `V` orthogonal and the columns of `W` mutually orthogonal;
/// column norms of `W` are the singular values. Columns are sorted by
/// decreasing singular value.
#[derive(Debug, Clone)]
pub(crate) struct JacobiSvd {
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

pub(crate) fn jacobi_svd(m: &DMatrix<f64>) -> JacobiSvd {
    let n = m.ncols();
    let mut w = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|i| w.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    JacobiSvd {
        values: order.iter().map(|&i| norms[i]).collect(),
        v: v.select_columns(&order),
        w: w.select_columns(&order),
    }
}

fn rotate(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (a, b) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * a - s * b;
        m[(r, j)] = s * a + c * b;
    }
}

/// Largest singular value.
pub(crate) fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    jacobi_svd(m).values[0]
}

/// Smallest singular value of a square matrix.
pub(crate) fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    jacobi_svd(m).values.last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the span of the left singular vectors with the
/// `count` largest singular values.
pub(crate) fn leading_left_vectors(m: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let count = count.min(m.ncols()).min(m.nrows());
    if count == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = jacobi_svd(m);
    let mut w = svd.w.columns(0, count).into_owned();
    for (k, mut col) in w.column_iter_mut().enumerate() {
        col /= svd.values[k];
    }
    // Householder QR cleans up the orthogonality lost to rounding
    let q = w.clone().qr().q();
    let mut out = q.columns(0, count).into_owned();
    for (k, mut col) in out.column_iter_mut().enumerate() {
        if col.dot(&w.column(k)) < 0.0 {
            col.neg_mut();
        }
    }
    out
}

/// Right singular vectors sorted by increasing singular value, with those
/// values.
pub(crate) fn trailing_right_vectors(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = jacobi_svd(m);
    let n = svd.values.len();
    let order: Vec<usize> = (0..n).rev().collect();
    (order.iter().map(|&i| svd.values[i]).collect(), svd.v.select_columns(&order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::random_orthogonal;
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    fn recompose(m: &DMatrix<f64>) -> f64 {
        let svd = jacobi_svd(m);
        (&svd.w * svd.v.transpose() - m).amax()
    }

    fn projector(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let r = random_orthogonal(d, seed);
        let mut diag = DMatrix::zeros(d, d);
        for i in 0..k {
            diag[(i, i)] = 1.0;
        }
        &r * diag * r.transpose()
    }

    #[test]
    fn diagonal_values_are_sorted_magnitudes() {
        let svd = jacobi_svd(&dmatrix![2.0, 0.0, 0.0; 0.0, -5.0, 0.0; 0.0, 0.0, 0.0]);
        assert_eq!(svd.values, vec![5.0, 2.0, 0.0]);
    }

    #[test]
    fn jordan_block() {
        let (values, v) = trailing_right_vectors(&dmatrix![0.0, 1.0; 0.0, 0.0]);
        assert_eq!(values, vec![0.0, 1.0]);
        assert!((v[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    // projectors on which the library SVD loses the factorization
    #[test]
    fn rank_deficient_projectors() {
        for (d, k, seed) in [(7, 1, 2357), (7, 3, 4379), (7, 3, 17219)] {
            let q = projector(d, k, seed);
            assert!(recompose(&q) < 1e-14);
            let svd = jacobi_svd(&q);
            for (i, s) in svd.values.iter().enumerate() {
                let want = if i < k { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-13, "{i}: {s}");
            }
            let basis = leading_left_vectors(&q, k);
            assert!((&q * &basis - &basis).amax() < 1e-13);
            assert!((basis.transpose() * &basis - DMatrix::identity(k, k)).amax() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn factorization_invariants(d in 1usize..8, k in 0usize..8, seed in 0u64..10_000,
                                    scale in -3.0f64..3.0) {
            let k = k.min(d);
            let r = random_orthogonal(d, seed);
            let g = random_orthogonal(d, seed + 1);
            let mut diag = DMatrix::zeros(d, d);
            for i in 0..k {
                diag[(i, i)] = 10f64.powf(scale) * (i + 1) as f64;
            }
            let m = &r * &diag * g.transpose();
            let svd = jacobi_svd(&m);
            let size = 1.0 + m.amax();
            prop_assert!(recompose(&m) < 1e-13 * size);
            prop_assert!((svd.v.transpose() * &svd.v - DMatrix::identity(d, d)).amax() < 1e-13);
            // Frobenius norm is the root sum of squared singular values
            let fro: f64 = svd.values.iter().map(|s| s * s).sum::<f64>().sqrt();
            prop_assert!((fro - m.norm()).abs() < 1e-13 * size);
            let mut want: Vec<f64> = (0..k).map(|i| diag[(i, i)]).collect();
            want.resize(d, 0.0);
            want.sort_by(|a, b| b.total_cmp(a));
            for (s, w) in svd.values.iter().zip(&want) {
                prop_assert!((s - w).abs() < 1e-13 * size);
            }
        }
    }
}
