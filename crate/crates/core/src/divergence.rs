//! Divergence functionals between densities on a common finite space:
//! KL, the rho-divergence, its Rényi counterpart, and squared Hellinger.
//!
//! Values are extended nonnegative reals; `f64::INFINITY` marks an
//! absolute-continuity failure and NaN never escapes. Ratios `(p/q)^ρ`
//! are evaluated as `exp(ρ (ln p − ln q))` so extreme masses cannot
//! overflow; terms with `q(x) = 0` contribute nothing.

use crate::math::snap_nonnegative;
use crate::model::Density;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("rho = {rho} is outside the open interval (0, 1)")]
    RhoOutOfRange { rho: f64 },
}

pub(crate) fn check_rho(rho: f64) -> Result<(), DivergenceError> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(DivergenceError::RhoOutOfRange { rho })
    }
}

/// D_KL(q || p) = Σ q ln(q/p); `inf` when p misses mass that q carries.
pub fn kl(q: &Density, p: &Density) -> f64 {
    assert_eq!(q.len(), p.len(), "densities on different spaces");
    let mut acc = 0.0;
    for (&qx, &px) in q.mass().iter().zip(p.mass()) {
        if qx > 0.0 {
            if px == 0.0 {
                return f64::INFINITY;
            }
            acc += qx * (qx.ln() - px.ln());
        }
    }
    snap_nonnegative(acc)
}

/// Power mean E_q (p/q)^ρ for ρ in (0, 1]. Always in [0, 1] up to input
/// normalization; 0 exactly when the supports are disjoint.
pub fn power_mean(q: &Density, p: &Density, rho: f64) -> f64 {
    assert_eq!(q.len(), p.len(), "densities on different spaces");
    debug_assert!(rho > 0.0 && rho <= 1.0);
    let mut acc = 0.0;
    for (&qx, &px) in q.mass().iter().zip(p.mass()) {
        if qx > 0.0 && px > 0.0 {
            acc += ((1.0 - rho) * qx.ln() + rho * px.ln()).exp();
        }
    }
    acc
}

/// D_ρ(q || p) = (1/(ρ(1−ρ))) E_q [1 − (p/q)^ρ]. Finite, in
/// [0, 1/(ρ(1−ρ))].
pub fn rho_divergence(q: &Density, p: &Density, rho: f64) -> Result<f64, DivergenceError> {
    check_rho(rho)?;
    Ok(rho_from_power_mean(power_mean(q, p, rho), rho))
}

/// Rényi divergence D_ρ^Re(q || p) = −(1/(ρ(1−ρ))) ln E_q (p/q)^ρ;
/// `inf` exactly when the supports are disjoint.
pub fn renyi_divergence(q: &Density, p: &Density, rho: f64) -> Result<f64, DivergenceError> {
    check_rho(rho)?;
    Ok(renyi_from_power_mean(power_mean(q, p, rho), rho))
}

/// Squared-Hellinger-scale divergence: the ρ-divergence at ρ = 1/2.
pub fn hellinger_sq(q: &Density, p: &Density) -> f64 {
    rho_from_power_mean(power_mean(q, p, 0.5), 0.5)
}

pub(crate) fn rho_from_power_mean(g: f64, rho: f64) -> f64 {
    snap_nonnegative((1.0 - g) / (rho * (1.0 - rho)))
}

pub(crate) fn renyi_from_power_mean(g: f64, rho: f64) -> f64 {
    if g == 0.0 {
        f64::INFINITY
    } else {
        snap_nonnegative(-g.ln() / (rho * (1.0 - rho)))
    }
}
