//! Exponent bookkeeping for `∂_t u = div(a(u)∇u) + |∇u|^κ` in the critical
//! space `H^{s_c}_p`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RdExponents {
    pub n: u32,
    pub p: f64,
    pub kappa: f64,
    pub tau: f64,
    pub s_bar: f64,
    /// Critical regularity `n/p + (κ−2)/(κ−1)`.
    pub s_c: f64,
    pub s: f64,
    /// Time-weight exponent `1/(2(κ−1)) − n/(2pκ)`.
    pub mu: f64,
    /// Hölder exponent in time, `(κ−2)/(2(κ−1)) − τ`.
    pub theta: f64,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
    pub xi: f64,
    pub alpha_crit: f64,
}

/// `(qξ − 1 − γ)/(q − 1)`, and `−∞` for `q = 1`.
pub fn critical_alpha(q: f64, xi: f64, gamma: f64) -> f64 {
    if q == 1.0 {
        f64::NEG_INFINITY
    } else {
        (q * xi - 1.0 - gamma) / (q - 1.0)
    }
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ExponentConstraint(what()))
    }
}

pub fn rd_exponents(n: u32, p: f64, kappa: f64, tau: f64) -> Result<RdExponents> {
    let nf = n as f64;
    require(n >= 1, || "dimension n must be at least 1".into())?;
    require(kappa > 3.0, || format!("κ = {kappa} must exceed 3"))?;
    let (p_lo, p_hi) = (2.0 * nf, (kappa - 1.0) * nf);
    require(p > p_lo && p < p_hi, || {
        format!("p = {p} must lie in the open interval (2n, (κ−1)n) = ({p_lo}, {p_hi})")
    })?;
    let excluded = (nf - 1.0) * (kappa - 1.0);
    require((p - excluded).abs() > 1e-12, || format!("p = {p} must differ from (n−1)(κ−1) = {excluded}"))?;
    let upper = 1.0 - nf / p;
    require(2.0 * tau > 0.5 && 2.0 * tau < upper, || {
        format!("2τ = {} must lie in (1/2, 1 − n/p) = (0.5, {upper})", 2.0 * tau)
    })?;

    let s_bar = 2.0 * tau + nf / p;
    let s_c = nf / p + (kappa - 2.0) / (kappa - 1.0);
    let s = 1.0 + nf * (kappa - 1.0) / (p * kappa);
    let top = 2.0 - 2.0 * tau;
    require(0.0 < s_bar && s_bar < s_c && s_c < s && s < top, || {
        format!("ordering 0 < s̄ < s_c < s < 2 − 2τ fails: s̄ = {s_bar}, s_c = {s_c}, s = {s}, 2 − 2τ = {top}")
    })?;
    let mu = 1.0 / (2.0 * (kappa - 1.0)) - nf / (2.0 * p * kappa);
    require(mu > 0.0 && mu < 1.0, || format!("μ = {mu} must lie in (0, 1)"))?;
    let theta = (kappa - 2.0) / (2.0 * (kappa - 1.0)) - tau;
    require(theta > 0.0 && theta < 1.0, || format!("ϑ = {theta} must lie in (0, 1)"))?;

    let gamma = tau;
    let beta = tau + s_bar / 2.0;
    let alpha = tau + s_c / 2.0;
    let xi = tau + s / 2.0;
    let alpha_crit = critical_alpha(kappa, xi, gamma);
    require((alpha_crit - alpha).abs() <= 1e-12, || {
        format!("critical weight {alpha_crit} differs from α = {alpha}")
    })?;
    require((mu - (xi - alpha)).abs() <= 1e-12 && (theta - (alpha - beta)).abs() <= 1e-12, || {
        "weights inconsistent with μ = ξ − α and ϑ = α − β".into()
    })?;

    Ok(RdExponents {
        n,
        p,
        kappa,
        tau,
        s_bar,
        s_c,
        s,
        mu,
        theta,
        gamma,
        beta,
        alpha,
        xi,
        alpha_crit,
    })
}
