//! Time-weighted supremum `sup_t e^{ωt}(n_α(t) + t^μ n_ξ(t)) / n_0`.

/// Supremum over samples with `t > 0`, and the index attaining it.
pub fn weighted_norm_sup(
    times: &[f64],
    norm_alpha: &[f64],
    norm_xi: &[f64],
    mu: f64,
    omega: f64,
    u0_norm: f64,
) -> (f64, Option<usize>) {
    let mut best = (0.0, None);
    for (i, ((&t, &na), &nx)) in times.iter().zip(norm_alpha).zip(norm_xi).enumerate() {
        if t <= 0.0 {
            continue;
        }
        let value = (omega * t).exp() * (na + t.powf(mu) * nx) / u0_norm;
        if best.1.is_none() || value > best.0 {
            best = (value, Some(i));
        }
    }
    best
}

pub fn weighted_norm_track(times: &[f64], norm_alpha: &[f64], norm_xi: &[f64], mu: f64, omega: f64, u0_norm: f64) -> f64 {
    weighted_norm_sup(times, norm_alpha, norm_xi, mu, omega, u0_norm).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_norms_give_zero() {
        let t = [0.0, 0.5, 1.0];
        assert_eq!(weighted_norm_track(&t, &[0.0; 3], &[0.0; 3], 0.2, 1.0, 1.0), 0.0);
    }

    #[test]
    fn saturating_profile_gives_two() {
        let (mu, omega) = (0.3, 2.0);
        let t: Vec<f64> = (1..50).map(|i| i as f64 * 0.1).collect();
        let na: Vec<f64> = t.iter().map(|t| (-omega * t).exp()).collect();
        let nx: Vec<f64> = t.iter().map(|t| t.powf(-mu) * (-omega * t).exp()).collect();
        assert!((weighted_norm_track(&t, &na, &nx, mu, omega, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn initial_sample_is_skipped() {
        let t = [0.0, 1.0];
        assert_eq!(weighted_norm_track(&t, &[5.0, 1.0], &[0.0, 0.0], 0.5, 0.0, 1.0), 1.0);
    }

    proptest! {
        #[test]
        fn monotone_in_omega(
            norms in proptest::collection::vec(0.0f64..1.0, 2..20),
            w1 in 0.0f64..5.0,
            dw in 0.0f64..5.0,
        ) {
            let t: Vec<f64> = (0..norms.len()).map(|i| 0.1 * i as f64).collect();
            let a = weighted_norm_track(&t, &norms, &norms, 0.25, w1, 1.0);
            let b = weighted_norm_track(&t, &norms, &norms, 0.25, w1 + dw, 1.0);
            prop_assert!(b >= a);
        }
    }
}
