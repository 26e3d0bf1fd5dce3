//! The estimators under study: information-complexity minimization over
//! the full simplex (the tempered/Gibbs posterior) and over point masses
//! (two-part-code model selection), together with the empirical and true
//! risks they minimize and posterior-derived summaries.

use crate::divergence::{self, DivergenceError};
use crate::model::{kl_entropy, log_likelihood, Dataset, Density, ModelFamily, PosteriorWeights};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("every model assigns zero mass to some observed point")]
    AllModelsZeroLikelihood,
    #[error("gamma = {gamma} must be strictly positive")]
    NonPositiveGamma { gamma: f64 },
    #[error("lambda = {lambda} must be strictly positive")]
    NonPositiveLambda { lambda: f64 },
}

/// Feasible set of the complexity minimization: all weight densities, or
/// only point masses. The first yields the tempered posterior, the second
/// penalized model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibleSet {
    FullSimplex,
    PointMasses,
}

/// Which divergence to average under the posterior.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Rho,
    Renyi,
}

/// Tempered Bayesian posterior: μ_j ∝ π_j exp(γ L_j), computed with
/// max-shifted exponentials. Models with zero likelihood get weight zero.
pub fn gibbs_posterior(
    family: &ModelFamily,
    data: &Dataset,
    gamma: f64,
) -> Result<PosteriorWeights, EstimatorError> {
    if !(gamma > 0.0) {
        return Err(EstimatorError::NonPositiveGamma { gamma });
    }
    let scores: Vec<f64> = (0..family.len())
        .map(|j| family.prior()[j].ln() + gamma * log_likelihood(family, j, data))
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(EstimatorError::AllModelsZeroLikelihood);
    }
    let mut mu: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = mu.iter().sum();
    for m in &mut mu {
        *m /= z;
    }
    Ok(PosteriorWeights::from_normalized(mu))
}

/// Penalized description length of model j: Σ_i ln(1/p_j(X_i)) + λ ln(1/π_j).
pub fn mdl_objective(family: &ModelFamily, j: usize, data: &Dataset, lambda: f64) -> f64 {
    -log_likelihood(family, j, data) - lambda * family.prior()[j].ln()
}

/// Two-part-code selection: index minimizing the penalized description
/// length, ties broken by the smallest index.
pub fn mdl_select(
    family: &ModelFamily,
    data: &Dataset,
    lambda: f64,
) -> Result<usize, EstimatorError> {
    if !(lambda > 0.0) {
        return Err(EstimatorError::NonPositiveLambda { lambda });
    }
    let mut best = None;
    let mut best_val = f64::INFINITY;
    for j in 0..family.len() {
        let obj = mdl_objective(family, j, data, lambda);
        if obj < best_val {
            best_val = obj;
            best = Some(j);
        }
    }
    best.ok_or(EstimatorError::AllModelsZeroLikelihood)
}

/// Minimize the regularized empirical risk over the chosen feasible set.
/// Over the full simplex this is the tempered posterior at γ = 1/λ; over
/// point masses it is the point mass at the selected index.
pub fn icm_minimize(
    family: &ModelFamily,
    data: &Dataset,
    lambda: f64,
    feasible: FeasibleSet,
) -> Result<PosteriorWeights, EstimatorError> {
    if !(lambda > 0.0) {
        return Err(EstimatorError::NonPositiveLambda { lambda });
    }
    match feasible {
        FeasibleSet::FullSimplex => gibbs_posterior(family, data, 1.0 / lambda),
        FeasibleSet::PointMasses => {
            let k = mdl_select(family, data, lambda)?;
            Ok(PosteriorWeights::point_mass(family.len(), k))
        }
    }
}

/// Regularized empirical risk of posterior weights against the true
/// density: (1/n) Σ_j μ_j Σ_i ln(q(X_i)/p_j(X_i)) + (λ/n) KL-entropy.
///
/// Returns `inf` when some positively-weighted model assigns zero mass to
/// an observed point. Requires a nonempty dataset.
pub fn empirical_risk(
    family: &ModelFamily,
    data: &Dataset,
    post: &PosteriorWeights,
    q: &Density,
    lambda: f64,
) -> f64 {
    assert!(!data.is_empty(), "empirical risk needs at least one sample");
    assert_eq!(post.len(), family.len());
    let n = data.len() as f64;
    let mut acc = 0.0;
    for (j, &mu) in post.mu().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        let model = family.model(j);
        let mut log_ratio = 0.0;
        for &x in data.samples() {
            let px = model.at(x);
            if px == 0.0 {
                return f64::INFINITY;
            }
            log_ratio += q.at(x).ln() - px.ln();
        }
        acc += mu * log_ratio;
    }
    acc / n + lambda / n * kl_entropy(post, family)
}

/// True risk: Σ_j μ_j D_KL(q || p_j) + (λ/n) KL-entropy. Nonnegative;
/// `inf` when a positively-weighted model is not absolutely continuous
/// w.r.t. q.
pub fn true_risk(
    family: &ModelFamily,
    post: &PosteriorWeights,
    q: &Density,
    lambda: f64,
    n: usize,
) -> f64 {
    assert!(n >= 1);
    assert_eq!(post.len(), family.len());
    let mut acc = 0.0;
    for (j, &mu) in post.mu().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        let d = divergence::kl(q, family.model(j));
        if d == f64::INFINITY {
            return f64::INFINITY;
        }
        acc += mu * d;
    }
    let total = acc + lambda / n as f64 * kl_entropy(post, family);
    debug_assert!(total >= 0.0);
    total
}

/// Posterior mixture density Σ_j μ_j p_j.
pub fn posterior_mean_density(family: &ModelFamily, post: &PosteriorWeights) -> Density {
    assert_eq!(post.len(), family.len());
    let m = family.space().size();
    let mut mass = vec![0.0; m];
    for (j, &mu) in post.mu().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        for (x, &px) in family.model(j).mass().iter().enumerate() {
            mass[x] += mu * px;
        }
    }
    Density::new(mass).expect("mixture of densities is a density")
}

/// Posterior-averaged divergence to the truth: Σ_j μ_j D(q || p_j).
/// Infinite divergences of positively-weighted models propagate.
pub fn posterior_expected_divergence(
    family: &ModelFamily,
    post: &PosteriorWeights,
    q: &Density,
    rho: f64,
    kind: DivergenceKind,
) -> Result<f64, DivergenceError> {
    crate::divergence::check_rho(rho)?;
    assert_eq!(post.len(), family.len());
    let mut acc = 0.0;
    for (j, &mu) in post.mu().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        let g = divergence::power_mean(q, family.model(j), rho);
        let d = match kind {
            DivergenceKind::Rho => divergence::rho_from_power_mean(g, rho),
            DivergenceKind::Renyi => divergence::renyi_from_power_mean(g, rho),
        };
        if d == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        acc += mu * d;
    }
    Ok(acc)
}

/// Posterior mass on models whose Rényi divergence from the truth is at
/// least `eps`: Σ { μ_j : D_ρ^Re(q || p_j) ≥ eps }.
pub fn posterior_tail_mass(
    family: &ModelFamily,
    post: &PosteriorWeights,
    q: &Density,
    rho: f64,
    eps: f64,
) -> Result<f64, DivergenceError> {
    crate::divergence::check_rho(rho)?;
    assert!(eps >= 0.0);
    assert_eq!(post.len(), family.len());
    let mut acc = 0.0;
    for (j, &mu) in post.mu().iter().enumerate() {
        if mu == 0.0 {
            continue;
        }
        let d =
            divergence::renyi_from_power_mean(divergence::power_mean(q, family.model(j), rho), rho);
        if d >= eps {
            acc += mu;
        }
    }
    Ok(acc)
}
