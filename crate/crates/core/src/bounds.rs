//! Right-hand-side calculators for the finite-sample bounds and the
//! verification engine that estimates left-hand sides — exactly by full
//! dataset enumeration at tiny scale, by seeded Monte Carlo otherwise —
//! and renders a verdict per bound.
//!
//! Bounds are inequalities, so only violations beyond noise count as
//! failures: in Monte Carlo mode a report is `violated` only when the
//! slack falls below −3 standard errors; in exact mode below −1e−9.

use crate::complexity::{
    self, c_n_general, c_rho_n_alpha, critical_prior_mass_radius, ComplexityError, FamilyCover,
};
use crate::divergence::{self, DivergenceError};
use crate::estimator::{
    empirical_risk, icm_minimize, posterior_mean_density, EstimatorError, FeasibleSet,
};
use crate::hull::{self, HullError};
use crate::math::{log_sum_exp, mean_and_se};
use crate::model::{Dataset, Density, ModelFamily};
use crate::rng::{CounterRng, RngSpec};
use thiserror::Error;

/// Exact dataset enumeration is attempted only up to this many outcomes.
pub const EXACT_DATASET_CAP: f64 = 1e5;

const WEAK_FN_TAG: u64 = 0x77ea_4bf1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("parameter domain violation: {0}")]
    ParameterDomain(String),
    #[error("exact mode needs at most {cap:e} datasets, got {size:e}")]
    ProductSpaceTooLarge { size: f64, cap: f64 },
    #[error("this bound needs a partition, but the cover has overlapping blocks")]
    NotAPartition,
    #[error("unknown bound id `{0}`")]
    UnknownBound(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Hull(#[from] HullError),
}

fn domain(msg: impl Into<String>) -> BoundError {
    BoundError::ParameterDomain(msg.into())
}

/// The verifiable bound statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundId {
    /// High-probability form of the master inequality.
    Thm21Prob,
    /// Expectation form of the master inequality.
    Thm21Exp,
    /// General posterior-divergence bound with correction terms.
    Thm31,
    /// Simplified form at ρ = 1/λ.
    Cor31,
    /// Global-resolvability bound for λ > 1 (model-selection and
    /// tempered-posterior instances).
    Cor32,
    /// Localized-entropy refinement at ρ = 1/λ.
    Thm42,
    /// λ = 1 bound with a cover complexity term.
    Thm43,
    /// Weak-convergence bound on posterior means of bounded functions.
    Thm32,
    /// Posterior tail-mass concentration at the critical prior radius.
    Cor51,
    /// Partitioned hull bound.
    Thm53,
    /// Expected empirical risk is bounded below, λ' ≥ 1.
    LemmaA1,
    /// Cover form of the risk lower bound, λ' in [0, 1].
    LemmaA2,
}

impl BoundId {
    pub fn canonical_token(&self) -> &'static str {
        match self {
            BoundId::Thm21Prob => "thm2.1-prob",
            BoundId::Thm21Exp => "thm2.1-exp",
            BoundId::Thm31 => "thm3.1",
            BoundId::Cor31 => "cor3.1",
            BoundId::Cor32 => "cor3.2",
            BoundId::Thm42 => "thm4.2",
            BoundId::Thm43 => "thm4.3",
            BoundId::Thm32 => "thm3.2",
            BoundId::Cor51 => "cor5.1",
            BoundId::Thm53 => "thm5.3",
            BoundId::LemmaA1 => "lemmaA.1",
            BoundId::LemmaA2 => "lemmaA.2",
        }
    }
}

/// Map a bound token to its id; aliases pin the estimator.
pub fn parse_bound_token(token: &str) -> Result<(BoundId, Option<FeasibleSet>), BoundError> {
    Ok(match token {
        "thm2.1-prob" => (BoundId::Thm21Prob, None),
        "thm2.1-exp" => (BoundId::Thm21Exp, None),
        "thm3.1" => (BoundId::Thm31, None),
        "cor3.1" => (BoundId::Cor31, None),
        "cor3.2" => (BoundId::Cor32, None),
        "thm4.1" => (BoundId::Cor32, Some(FeasibleSet::PointMasses)),
        "thm5.1" => (BoundId::Cor32, Some(FeasibleSet::FullSimplex)),
        "thm4.2" => (BoundId::Thm42, Some(FeasibleSet::PointMasses)),
        "thm4.3" => (BoundId::Thm43, Some(FeasibleSet::PointMasses)),
        "cor3.3" => (BoundId::Thm43, None),
        "thm5.2" => (BoundId::Thm43, Some(FeasibleSet::FullSimplex)),
        "thm3.2" => (BoundId::Thm32, None),
        "thm4.4" => (BoundId::Thm32, Some(FeasibleSet::PointMasses)),
        "cor5.1" => (BoundId::Cor51, Some(FeasibleSet::FullSimplex)),
        "thm5.3" => (BoundId::Thm53, Some(FeasibleSet::FullSimplex)),
        "lemmaA.1" => (BoundId::LemmaA1, None),
        "lemmaA.2" => (BoundId::LemmaA2, None),
        other => return Err(BoundError::UnknownBound(other.to_string())),
    })
}

/// A bound instance to verify: the statement, the estimator it talks
/// about, and every parameter the statement quantifies over.
///
/// For the appendix lemmas `lambda` carries λ'.
#[derive(Debug, Clone)]
pub struct BoundSpec {
    pub id: BoundId,
    /// Token echoed in reports; defaults to the canonical one.
    pub label: String,
    pub feasible: FeasibleSet,
    pub n: usize,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub t: Option<f64>,
    pub delta: Option<f64>,
    pub shrink: f64,
    pub cover: Option<FamilyCover>,
    /// Random bounded functions drawn for the weak-convergence bound, on
    /// top of the ±1 extreme vectors.
    pub weak_fn_draws: usize,
    /// Caller-supplied bounded functions (entries in [-1, 1]) for the
    /// weak-convergence bound; when present they replace the generated
    /// batch.
    pub weak_fns: Option<Vec<Vec<f64>>>,
}

impl BoundSpec {
    pub fn from_token(token: &str, n: usize) -> Result<Self, BoundError> {
        let (id, pinned) = parse_bound_token(token)?;
        Ok(BoundSpec {
            id,
            label: token.to_string(),
            feasible: pinned.unwrap_or(FeasibleSet::FullSimplex),
            n,
            lambda: None,
            rho: None,
            gamma: None,
            alpha: None,
            beta: None,
            t: None,
            delta: None,
            shrink: 0.5,
            cover: None,
            weak_fn_draws: 50,
            weak_fns: None,
        })
    }

    pub fn new(id: BoundId, feasible: FeasibleSet, n: usize) -> Self {
        BoundSpec {
            id,
            label: id.canonical_token().to_string(),
            feasible,
            n,
            lambda: None,
            rho: None,
            gamma: None,
            alpha: None,
            beta: None,
            t: None,
            delta: None,
            shrink: 0.5,
            cover: None,
            weak_fn_draws: 50,
            weak_fns: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exact,
    MonteCarlo,
}

impl VerifyMode {
    pub fn token(&self) -> &'static str {
        match self {
            VerifyMode::Exact => "exact",
            VerifyMode::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    HoldsWithinNoise,
    Violated,
}

impl Verdict {
    pub fn token(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::HoldsWithinNoise => "holds-within-noise",
            Verdict::Violated => "violated",
        }
    }
}

/// One verified inequality: the estimated left side, the computed right
/// side, and the verdict. `lhs_se` is the standard error governing the
/// verdict (of the paired slack when the right side is data-dependent).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bound_id: String,
    pub mode: VerifyMode,
    pub n: usize,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub t: Option<f64>,
    pub delta: Option<f64>,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub slack: f64,
    pub replicates: usize,
    pub verdict: Verdict,
}

/// inf over the feasible set of the true risk: the resolvability matched
/// to the estimator.
pub fn resolvability_for(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    n: usize,
    feasible: FeasibleSet,
) -> Result<f64, BoundError> {
    match feasible {
        FeasibleSet::PointMasses => Ok(complexity::index_of_resolvability(family, q, lambda, n)),
        FeasibleSet::FullSimplex => Ok(complexity::bayesian_resolvability(family, q, lambda, n)?.0),
    }
}

/// Global-resolvability right-hand side: resolvability / (ρ(λ−1)).
pub fn rhs_global(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    rho: f64,
    n: usize,
    feasible: FeasibleSet,
) -> Result<f64, BoundError> {
    if !(lambda > 1.0) {
        return Err(domain(format!("lambda = {lambda} must exceed 1")));
    }
    if !(rho > 0.0 && rho <= 1.0 / lambda + 1e-12) {
        return Err(domain(format!(
            "rho = {rho} must lie in (0, 1/lambda] with lambda = {lambda}"
        )));
    }
    Ok(resolvability_for(family, q, lambda, n, feasible)? / (rho * (lambda - 1.0)))
}

/// Localized-entropy right-hand side at ρ = 1/λ:
/// (2/(1−ρ)) inf_k [D_KL(q||p_k) + (λ/n)(localized entropy of k)].
pub fn rhs_localized(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    n: usize,
    shrink: f64,
) -> Result<f64, BoundError> {
    if !(lambda > 1.0) {
        return Err(domain(format!("lambda = {lambda} must exceed 1")));
    }
    let rho = 1.0 / lambda;
    let log_sum = complexity::localized_log_sum(family, q, rho, n, shrink)?;
    let mut best = f64::INFINITY;
    for k in 0..family.len() {
        let d = divergence::kl(q, family.model(k));
        if d == f64::INFINITY {
            continue;
        }
        let obj = d + lambda / n as f64 * (log_sum - family.prior()[k].ln());
        if obj < best {
            best = obj;
        }
    }
    Ok(2.0 / (1.0 - rho) * best)
}

/// λ = 1 right-hand side: γ·resolvability/(ρ(1−ρ)) plus the cover
/// complexity term with exponent s = (γ−1)/(γ−ρ).
pub fn rhs_lambda_one(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    gamma: f64,
    n: usize,
    cover: &FamilyCover,
    feasible: FeasibleSet,
) -> Result<f64, BoundError> {
    divergence::check_rho(rho)?;
    if !(gamma >= 1.0) {
        return Err(domain(format!("gamma = {gamma} must be at least 1")));
    }
    let s = (gamma - 1.0) / (gamma - rho);
    let resolv = resolvability_for(family, q, 1.0, n, feasible)?;
    let scale = rho * (1.0 - rho);
    let second = (gamma - rho) / (scale * n as f64)
        * complexity::cover_complexity_term(family, cover, s, n)?;
    Ok(gamma * resolv / scale + second)
}

/// Weak-convergence right-hand side 2A_n + sqrt(2A_n) with
/// A_n = resolvability(λ=1) + ln2/n.
pub fn rhs_weak(
    family: &ModelFamily,
    q: &Density,
    n: usize,
    feasible: FeasibleSet,
) -> Result<f64, BoundError> {
    let a = resolvability_for(family, q, 1.0, n, feasible)? + 2f64.ln() / n as f64;
    Ok(2.0 * a + (2.0 * a).sqrt())
}

/// Concentration radius and tail bound: the ball radius
/// (4ε + 2t)/(ρ(λ−1)δ) at the critical prior-mass radius ε, and the
/// posterior mass bound 1/(1 + e^{nt/λ}).
pub fn rhs_tail(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    rho: f64,
    n: usize,
    t: f64,
    delta: f64,
) -> Result<(f64, f64), BoundError> {
    if !(lambda > 1.0) {
        return Err(domain(format!("lambda = {lambda} must exceed 1")));
    }
    if !(rho > 0.0 && rho <= 1.0 / lambda + 1e-12) {
        return Err(domain(format!("rho = {rho} must lie in (0, 1/lambda]")));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("t = {t} must be nonnegative")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let eps = critical_prior_mass_radius(family, q, lambda, n)?.value;
    let radius = (4.0 * eps + 2.0 * t) / (rho * (lambda - 1.0) * delta);
    let tail_bound = 1.0 / (1.0 + (n as f64 * t / lambda).exp());
    Ok((radius, tail_bound))
}

/// Partitioned hull right-hand side:
/// [(γ−ρ) ln Σ_j π(Γ_j)^s − γ ln Σ_j π(Γ_j) e^{−n sup_co KL}] / (ρ(1−ρ)n).
pub fn rhs_partition(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    gamma: f64,
    n: usize,
    partition: &FamilyCover,
) -> Result<f64, BoundError> {
    divergence::check_rho(rho)?;
    if !(gamma >= 1.0) {
        return Err(domain(format!("gamma = {gamma} must be at least 1")));
    }
    if !partition.is_partition() {
        return Err(BoundError::NotAPartition);
    }
    let s = (gamma - 1.0) / (gamma - rho);
    let mut mass_terms = Vec::new();
    let mut kl_terms = Vec::new();
    for (b, block) in partition.blocks().iter().enumerate() {
        let mass = partition.prior_mass(family, b);
        mass_terms.push(s * mass.ln());
        let sup = hull::sup_kl_over_hull(q, &family.gather(block))?;
        kl_terms.push(if sup == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            mass.ln() - n as f64 * sup
        });
    }
    let first = (gamma - rho) * log_sum_exp(&mass_terms);
    let second_lse = log_sum_exp(&kl_terms);
    let second = if second_lse == f64::NEG_INFINITY {
        // Every block is infinitely far in KL: the bound is vacuous.
        return Ok(f64::INFINITY);
    } else {
        gamma * second_lse
    };
    Ok((first - second) / (rho * (1.0 - rho) * n as f64))
}

#[derive(Debug, Clone, Copy, Default)]
struct ParamEcho {
    lambda: Option<f64>,
    rho: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    t: Option<f64>,
    delta: Option<f64>,
}

enum Kind {
    /// lhs = posterior-averaged Rényi divergence, constant rhs.
    PosteriorDivergence { d_renyi: Vec<f64>, rhs: f64 },
    /// lhs = master statistic (expectation form), rhs = n c_n.
    MasterExp {
        loss: Vec<Vec<f64>>,
        b_theta: Vec<f64>,
        alpha: f64,
        rhs: f64,
    },
    /// lhs = frequency of master statistic exceedances, rhs = e^{-t}.
    MasterProb {
        loss: Vec<Vec<f64>>,
        b_theta: Vec<f64>,
        alpha: f64,
        threshold: f64,
        rhs: f64,
    },
    /// Paired form with a data-dependent second term.
    General31 {
        d_renyi: Vec<f64>,
        rhs_const: f64,
        coef: f64,
        lambda_prime: f64,
    },
    /// Weak convergence over a batch of bounded functions.
    Weak { fns: Vec<Vec<f64>>, rhs: f64 },
    /// Posterior tail-mass exceedance frequency vs delta.
    Tail {
        d_renyi: Vec<f64>,
        radius: f64,
        threshold: f64,
        rhs: f64,
    },
    /// Partitioned hull statistic.
    Partition {
        blocks: Vec<Vec<usize>>,
        infs: Vec<f64>,
        rhs: f64,
    },
    /// Risk lower bound: lhs = deterministic lower bound, rhs estimated.
    LemmaLower { lambda_prime: f64, lower: f64 },
}

struct Machinery {
    fit_lambda: f64,
    feasible: FeasibleSet,
    echo: ParamEcho,
    kind: Kind,
}

impl Machinery {
    fn stat_count(&self) -> usize {
        match &self.kind {
            Kind::General31 { .. } => 3,
            Kind::Weak { fns, .. } => fns.len(),
            _ => 1,
        }
    }

    fn stats(
        &self,
        family: &ModelFamily,
        q: &Density,
        data: &Dataset,
        out: &mut [f64],
    ) -> Result<(), BoundError> {
        let post = icm_minimize(family, data, self.fit_lambda, self.feasible)?;
        let mu = post.mu();
        match &self.kind {
            Kind::PosteriorDivergence { d_renyi, .. } => {
                out[0] = weighted_divergence(mu, d_renyi);
            }
            Kind::MasterExp {
                loss,
                b_theta,
                alpha,
                ..
            } => {
                out[0] = master_statistic(family, data, mu, loss, b_theta, *alpha);
            }
            Kind::MasterProb {
                loss,
                b_theta,
                alpha,
                threshold,
                ..
            } => {
                let stat = master_statistic(family, data, mu, loss, b_theta, *alpha);
                out[0] = if stat > *threshold { 1.0 } else { 0.0 };
            }
            Kind::General31 {
                d_renyi,
                rhs_const,
                coef,
                lambda_prime,
            } => {
                let lhs = weighted_divergence(mu, d_renyi);
                let rhat = empirical_risk(family, data, &post, q, *lambda_prime);
                let rhs = rhs_const - coef * rhat;
                out[0] = lhs;
                out[1] = rhs;
                out[2] = rhs - lhs;
            }
            Kind::Weak { fns, .. } => {
                let mix = posterior_mean_density(family, &post);
                let inv_n = 1.0 / data.len() as f64;
                for (slot, f) in out.iter_mut().zip(fns) {
                    let model_mean: f64 = mix.mass().iter().zip(f).map(|(&m, &fx)| m * fx).sum();
                    let empirical: f64 = data.samples().iter().map(|&x| f[x]).sum::<f64>() * inv_n;
                    *slot = (model_mean - empirical).abs();
                }
            }
            Kind::Tail {
                d_renyi,
                radius,
                threshold,
                ..
            } => {
                let tail: f64 = mu
                    .iter()
                    .zip(d_renyi)
                    .filter(|(&m, &d)| m > 0.0 && d >= *radius)
                    .map(|(&m, _)| m)
                    .sum();
                out[0] = if tail > *threshold { 1.0 } else { 0.0 };
            }
            Kind::Partition { blocks, infs, .. } => {
                let mut acc = 0.0;
                for (block, &inf) in blocks.iter().zip(infs) {
                    let mass: f64 = block.iter().map(|&j| mu[j]).sum();
                    if mass > 0.0 {
                        acc += mass * inf;
                    }
                }
                out[0] = acc;
            }
            Kind::LemmaLower { lambda_prime, .. } => {
                out[0] = empirical_risk(family, data, &post, q, *lambda_prime);
            }
        }
        Ok(())
    }
}

fn weighted_divergence(mu: &[f64], d: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&m, &dj) in mu.iter().zip(d) {
        if m > 0.0 {
            if dj == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += m * dj;
        }
    }
    acc
}

/// Posterior-averaged master statistic
/// E_w[L_X(θ) − nα ln E_q e^{−βℓ_θ}] − KL-entropy.
fn master_statistic(
    family: &ModelFamily,
    data: &Dataset,
    mu: &[f64],
    loss: &[Vec<f64>],
    b_theta: &[f64],
    alpha: f64,
) -> f64 {
    let n = data.len() as f64;
    let mut acc = 0.0;
    for (j, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let mut l_x = 0.0;
        for &x in data.samples() {
            let l = loss[j][x];
            if l == f64::INFINITY {
                return f64::NEG_INFINITY;
            }
            l_x -= l;
        }
        acc += m * (l_x - n * alpha * b_theta[j]);
    }
    let mut entropy = 0.0;
    for (&m, &pi) in mu.iter().zip(family.prior()) {
        if m > 0.0 {
            entropy += m * (m.ln() - pi.ln());
        }
    }
    acc - entropy
}

fn renyi_vector(family: &ModelFamily, q: &Density, rho: f64) -> Vec<f64> {
    (0..family.len())
        .map(|j| {
            divergence::renyi_from_power_mean(divergence::power_mean(q, family.model(j), rho), rho)
        })
        .collect()
}

fn loss_matrix(family: &ModelFamily, q: &Density, rho: f64) -> Vec<Vec<f64>> {
    (0..family.len())
        .map(|j| {
            (0..family.space().size())
                .map(|x| {
                    let qx = q.at(x);
                    if qx == 0.0 {
                        0.0
                    } else {
                        let px = family.model(j).at(x);
                        if px == 0.0 {
                            f64::INFINITY
                        } else {
                            rho * (qx.ln() - px.ln())
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn log_loss_transform(q: &Density, loss: &[Vec<f64>], beta: f64) -> Vec<f64> {
    loss.iter()
        .map(|row| {
            let terms: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|(x, _)| q.at(*x) > 0.0)
                .map(|(x, &l)| q.at(x).ln() - beta * l)
                .collect();
            log_sum_exp(&terms)
        })
        .collect()
}

fn require(spec_value: Option<f64>, name: &str, id: BoundId) -> Result<f64, BoundError> {
    spec_value.ok_or_else(|| {
        domain(format!(
            "{} requires parameter {name}",
            id.canonical_token()
        ))
    })
}

fn check_rho_open(rho: f64) -> Result<(), BoundError> {
    divergence::check_rho(rho).map_err(BoundError::from)
}

fn rho_defaulting_to_inverse_lambda(
    spec: &BoundSpec,
    lambda: f64,
    enforce_equal: bool,
) -> Result<f64, BoundError> {
    let target = 1.0 / lambda;
    match spec.rho {
        None => Ok(target),
        Some(r) => {
            if enforce_equal && (r - target).abs() > 1e-12 {
                Err(domain(format!(
                    "{} fixes rho = 1/lambda, got rho = {r}",
                    spec.id.canonical_token()
                )))
            } else {
                Ok(r)
            }
        }
    }
}

fn prepare(
    spec: &BoundSpec,
    family: &ModelFamily,
    q: &Density,
    rng: RngSpec,
) -> Result<Machinery, BoundError> {
    let n = spec.n;
    let mut echo = ParamEcho::default();
    match spec.id {
        BoundId::Thm21Exp | BoundId::Thm21Prob => {
            let rho = spec.rho.unwrap_or(0.5);
            check_rho_open(rho)?;
            let alpha = spec.alpha.unwrap_or(1.0);
            let beta = spec.beta.unwrap_or(1.0);
            let fit_lambda = spec.lambda.unwrap_or(1.0);
            if !(fit_lambda > 0.0) {
                return Err(domain("estimator lambda must be positive"));
            }
            let loss = loss_matrix(family, q, rho);
            let b_theta = log_loss_transform(q, &loss, beta);
            let c = c_n_general(family, q, &loss, n, alpha, beta);
            echo.lambda = Some(fit_lambda);
            echo.rho = Some(rho);
            echo.alpha = Some(alpha);
            let kind = if spec.id == BoundId::Thm21Exp {
                Kind::MasterExp {
                    loss,
                    b_theta,
                    alpha,
                    rhs: n as f64 * c,
                }
            } else {
                let t = require(spec.t, "t", spec.id)?;
                if !(t >= 0.0) {
                    return Err(domain("t must be nonnegative"));
                }
                echo.t = Some(t);
                Kind::MasterProb {
                    loss,
                    b_theta,
                    alpha,
                    threshold: t + n as f64 * c,
                    rhs: (-t).exp(),
                }
            };
            Ok(Machinery {
                fit_lambda,
                feasible: spec.feasible,
                echo,
                kind,
            })
        }
        BoundId::Thm31 => {
            let lambda = require(spec.lambda, "lambda", spec.id)?;
            if !(lambda > 0.0) {
                return Err(domain("lambda must be positive"));
            }
            let rho = require(spec.rho, "rho", spec.id)?;
            check_rho_open(rho)?;
            let gamma = require(spec.gamma, "gamma", spec.id)?;
            let alpha = spec.alpha.unwrap_or(1.0);
            if !(alpha > 0.0) {
                return Err(domain("alpha must be positive"));
            }
            if gamma < rho {
                return Err(domain(format!(
                    "gamma = {gamma} must be at least rho = {rho}"
                )));
            }
            let lambda_prime = if gamma == rho {
                if (lambda * gamma - 1.0).abs() > 1e-9 {
                    return Err(domain("gamma = rho requires lambda * gamma = 1"));
                }
                0.0
            } else {
                let lp = (lambda * gamma - 1.0) / (gamma - rho);
                if lp < 0.0 {
                    return Err(domain(format!(
                        "lambda' = {lp} must be nonnegative; raise gamma or lambda"
                    )));
                }
                lp
            };
            let resolv = resolvability_for(family, q, lambda, n, spec.feasible)?;
            let c = c_rho_n_alpha(family, q, rho, n, alpha)?;
            let denom = alpha * rho * (1.0 - rho);
            echo.lambda = Some(lambda);
            echo.rho = Some(rho);
            echo.gamma = Some(gamma);
            echo.alpha = Some(alpha);
            Ok(Machinery {
                fit_lambda: lambda,
                feasible: spec.feasible,
                echo,
                kind: Kind::General31 {
                    d_renyi: renyi_vector(family, q, rho),
                    rhs_const: (gamma * resolv + c) / denom,
                    coef: (gamma - rho) / denom,
                    lambda_prime,
                },
            })
        }
        BoundId::Cor31 => {
            let lambda = require(spec.lambda, "lambda", spec.id)?;
            if !(lambda > 1.0) {
                return Err(domain("lambda must exceed 1"));
            }
            let rho = rho_defaulting_to_inverse_lambda(spec, lambda, true)?;
            let resolv = resolvability_for(family, q, lambda, n, spec.feasible)?;
            echo.lambda = Some(lambda);
            echo.rho = Some(rho);
            Ok(Machinery {
                fit_lambda: lambda,
                feasible: spec.feasible,
                echo,
                kind: Kind::PosteriorDivergence {
                    d_renyi: renyi_vector(family, q, rho),
                    rhs: resolv / (1.0 - rho),
                },
            })
        }
        BoundId::Cor32 => {
            let lambda = require(spec.lambda, "lambda", spec.id)?;
            if !(lambda > 1.0) {
                return Err(domain(format!("lambda = {lambda} must exceed 1")));
            }
            let rho = rho_defaulting_to_inverse_lambda(spec, lambda, false)?;
            check_rho_open(rho)?;
            let rhs = rhs_global(family, q, lambda, rho, n, spec.feasible)?;
            echo.lambda = Some(lambda);
            echo.rho = Some(rho);
            Ok(Machinery {
                fit_lambda: lambda,
                feasible: spec.feasible,
                echo,
                kind: Kind::PosteriorDivergence {
                    d_renyi: renyi_vector(family, q, rho),
                    rhs,
                },
            })
        }
        BoundId::Thm42 => {
            if spec.feasible != FeasibleSet::PointMasses {
                return Err(domain(
                    "thm4.2 is a model-selection bound; use the mdl estimator",
                ));
            }
            let lambda = require(spec.lambda, "lambda", spec.id)?;
            if !(lambda > 1.0) {
                return Err(domain("lambda must exceed 1"));
            }
            let rho = rho_defaulting_to_inverse_lambda(spec, lambda, true)?;
            let rhs = rhs_localized(family, q, lambda, n, spec.shrink)?;
            echo.lambda = Some(lambda);
            echo.rho = Some(rho);
            Ok(Machinery {
                fit_lambda: lambda,
                feasible: spec.feasible,
                echo,
                kind: Kind::PosteriorDivergence {
                    d_renyi: renyi_vector(family, q, rho),
                    rhs,
                },
            })
        }
        BoundId::Thm43 => {
            let lambda = spec.lambda.unwrap_or(1.0);
            if (lambda - 1.0).abs() > 1e-12 {
                return Err(domain("this bound fixes lambda = 1"));
            }
            let rho = spec.rho.unwrap_or(0.5);
            let gamma = spec.gamma.unwrap_or(1.0);
            let singleton;
            let cover = match &spec.cover {
                Some(c) => c,
                None => {
                    singleton = FamilyCover::singletons(family.len());
                    &singleton
                }
            };
            let rhs = rhs_lambda_one(family, q, rho, gamma, n, cover, spec.feasible)?;
            echo.lambda = Some(1.0);
            echo.rho = Some(rho);
            echo.gamma = Some(gamma);
            Ok(Machinery {
                fit_lambda: 1.0,
                feasible: spec.feasible,
                echo,
                kind: Kind::PosteriorDivergence {
                    d_renyi: renyi_vector(family, q, rho),
                    rhs,
                },
            })
        }
        BoundId::Thm32 => {
            let lambda = spec.lambda.unwrap_or(1.0);
            if (lambda - 1.0).abs() > 1e-12 {
                return Err(domain("the weak-convergence bound fixes lambda = 1"));
            }
            let rhs = rhs_weak(family, q, n, spec.feasible)?;
            let m = family.space().size();
            let fns = match &spec.weak_fns {
                Some(supplied) => {
                    for f in supplied {
                        if f.len() != m {
                            return Err(domain(format!(
                                "supplied function has {} entries, space has {m}",
                                f.len()
                            )));
                        }
                        if f.iter().any(|&v| !(-1.0..=1.0).contains(&v)) {
                            return Err(domain("supplied functions must map into [-1, 1]"));
                        }
                    }
                    supplied.clone()
                }
                None => {
                    // Extreme points of the sup-norm ball first: all sign
                    // vectors when the space is small, the two constant
                    // ones otherwise; then the seeded random draws.
                    let mut fns: Vec<Vec<f64>> = Vec::new();
                    if m <= 10 {
                        for mask in 0..(1u32 << m) {
                            fns.push(
                                (0..m)
                                    .map(|x| if mask >> x & 1 == 1 { 1.0 } else { -1.0 })
                                    .collect(),
                            );
                        }
                    } else {
                        fns.push(vec![1.0; m]);
                        fns.push(vec![-1.0; m]);
                    }
                    let mut rng = CounterRng::new(rng.substream(WEAK_FN_TAG));
                    for _ in 0..spec.weak_fn_draws {
                        fns.push((0..m).map(|_| rng.uniform(-1.0, 1.0)).collect());
                    }
                    fns
                }
            };
            if fns.is_empty() {
                return Err(domain(
                    "the weak-convergence bound needs at least one function",
                ));
            }
            echo.lambda = Some(1.0);
            Ok(Machinery {
                fit_lambda: 1.0,
                feasible: spec.feasible,
                echo,
                kind: Kind::Weak { fns, rhs },
            })
        }
        BoundId::Cor51 => {
            if spec.feasible != FeasibleSet::FullSimplex {
                return Err(domain(
                    "cor5.1 concerns the tempered posterior; use the gibbs estimator",
                ));
            }
            let lambda = require(spec.lambda, "lambda", spec.id)?;
            if !(lambda > 1.0) {
                return Err(domain(format!("lambda = {lambda} must exceed 1")));
            }
            let rho = rho_defaulting_to_inverse_lambda(spec, lambda, false)?;
            let t = require(spec.t, "t", spec.id)?;
            let delta = require(spec.delta, "delta", spec.id)?;
            let (radius, threshold) = rhs_tail(family, q, lambda, rho, n, t, delta)?;
            echo.lambda = Some(lambda);
            echo.rho = Some(rho);
            echo.t = Some(t);
            echo.delta = Some(delta);
            Ok(Machinery {
                fit_lambda: lambda,
                feasible: spec.feasible,
                echo,
                kind: Kind::Tail {
                    d_renyi: renyi_vector(family, q, rho),
                    radius,
                    threshold,
                    rhs: delta,
                },
            })
        }
        BoundId::Thm53 => {
            if spec.feasible != FeasibleSet::FullSimplex {
                return Err(domain(
                    "thm5.3 concerns the standard Bayesian posterior; use the gibbs estimator",
                ));
            }
            let rho = spec.rho.unwrap_or(0.5);
            let gamma = spec.gamma.unwrap_or(1.0);
            let cover = spec
                .cover
                .as_ref()
                .ok_or_else(|| domain("thm5.3 requires a partition cover"))?;
            let rhs = rhs_partition(family, q, rho, gamma, n, cover)?;
            let blocks: Vec<Vec<usize>> = cover.blocks().to_vec();
            let infs = blocks
                .iter()
                .map(|block| hull::inf_renyi_over_hull(q, &family.gather(block), rho))
                .collect::<Result<Vec<_>, _>>()?;
            echo.lambda = Some(1.0);
            echo.rho = Some(rho);
            echo.gamma = Some(gamma);
            Ok(Machinery {
                fit_lambda: 1.0,
                feasible: spec.feasible,
                echo,
                kind: Kind::Partition { blocks, infs, rhs },
            })
        }
        BoundId::LemmaA1 => {
            let lambda_prime = require(spec.lambda, "lambda (as lambda')", spec.id)?;
            if !(lambda_prime >= 1.0) {
                return Err(domain("lambda' must be at least 1"));
            }
            // −(λ'/n) ln Σ_j π_j (E_q (p_j/q)^{1/λ'})^n.
            let inv = 1.0 / lambda_prime;
            let terms: Vec<f64> = (0..family.len())
                .map(|j| {
                    let g = divergence::power_mean(q, family.model(j), inv);
                    if g == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        family.prior()[j].ln() + spec.n as f64 * g.ln()
                    }
                })
                .collect();
            let lower = -lambda_prime / spec.n as f64 * log_sum_exp(&terms);
            echo.lambda = Some(lambda_prime);
            Ok(Machinery {
                fit_lambda: lambda_prime,
                feasible: spec.feasible,
                echo,
                kind: Kind::LemmaLower {
                    lambda_prime,
                    lower,
                },
            })
        }
        BoundId::LemmaA2 => {
            let lambda_prime = require(spec.lambda, "lambda (as lambda')", spec.id)?;
            if !(0.0..=1.0).contains(&lambda_prime) {
                return Err(domain("lambda' must lie in [0, 1]"));
            }
            let singleton;
            let cover = match &spec.cover {
                Some(c) => c,
                None => {
                    singleton = FamilyCover::singletons(family.len());
                    &singleton
                }
            };
            let lower = -complexity::cover_complexity_term(family, cover, lambda_prime, spec.n)?
                / spec.n as f64;
            echo.lambda = Some(lambda_prime);
            Ok(Machinery {
                // The lemma holds for any posterior; evaluate it on the
                // plain λ = 1 estimator.
                fit_lambda: 1.0,
                feasible: spec.feasible,
                echo,
                kind: Kind::LemmaLower {
                    lambda_prime,
                    lower,
                },
            })
        }
    }
}

fn dataset_space_size(family: &ModelFamily, n: usize) -> f64 {
    (family.space().size() as f64).powi(n as i32)
}

fn run_exact(
    machinery: &Machinery,
    family: &ModelFamily,
    q: &Density,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize), BoundError> {
    let k = machinery.stat_count();
    let support: Vec<usize> = (0..q.len()).filter(|&x| q.at(x) > 0.0).collect();
    let mut means = vec![0.0; k];
    let mut buf = vec![0.0; k];
    let mut idx = vec![0usize; n];
    let mut count = 0usize;
    loop {
        let symbols: Vec<usize> = idx.iter().map(|&i| support[i]).collect();
        let weight: f64 = symbols.iter().map(|&x| q.at(x)).product();
        let data = Dataset::from_raw(symbols);
        machinery.stats(family, q, &data, &mut buf)?;
        for (m, &b) in means.iter_mut().zip(&buf) {
            *m += weight * b;
        }
        count += 1;
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok((means, vec![0.0; k], count));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < support.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn run_monte_carlo(
    machinery: &Machinery,
    family: &ModelFamily,
    q: &Density,
    n: usize,
    replicates: usize,
    rng: RngSpec,
) -> Result<(Vec<f64>, Vec<f64>, usize), BoundError> {
    let k = machinery.stat_count();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); k];
    let mut buf = vec![0.0; k];
    for r in 0..replicates {
        let data = crate::model::sample_dataset(q, n, rng.replicate(r as u64));
        machinery.stats(family, q, &data, &mut buf)?;
        for (col, &b) in samples.iter_mut().zip(&buf) {
            col.push(b);
        }
    }
    let mut means = vec![0.0; k];
    let mut ses = vec![0.0; k];
    for (i, col) in samples.iter().enumerate() {
        let (m, se) = mean_and_se(col);
        means[i] = m;
        ses[i] = se;
    }
    Ok((means, ses, replicates))
}

fn guarded_slack(lhs: f64, rhs: f64) -> f64 {
    if lhs == f64::INFINITY && rhs == f64::INFINITY {
        f64::INFINITY
    } else {
        rhs - lhs
    }
}

fn render_verdict(mode: VerifyMode, slack: f64, se: f64, exact_side_violated: bool) -> Verdict {
    if exact_side_violated {
        return Verdict::Violated;
    }
    let tolerance = match mode {
        VerifyMode::Exact => 1e-9,
        VerifyMode::MonteCarlo => 3.0 * se,
    };
    if slack < -tolerance {
        Verdict::Violated
    } else if slack < 0.0 {
        Verdict::HoldsWithinNoise
    } else {
        Verdict::Holds
    }
}

/// Verify one bound: exact dataset enumeration when the product space is
/// small enough (or `force` demands it), seeded Monte Carlo otherwise.
pub fn verify(
    spec: &BoundSpec,
    family: &ModelFamily,
    q: &Density,
    replicates: usize,
    rng: RngSpec,
    force: Option<VerifyMode>,
) -> Result<BoundReport, BoundError> {
    assert_eq!(q.len(), family.space().size(), "truth on a different space");
    if spec.n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let machinery = prepare(spec, family, q, rng)?;
    let size = dataset_space_size(family, spec.n);
    let mode = match force {
        Some(VerifyMode::Exact) => {
            if size > EXACT_DATASET_CAP {
                return Err(BoundError::ProductSpaceTooLarge {
                    size,
                    cap: EXACT_DATASET_CAP,
                });
            }
            VerifyMode::Exact
        }
        Some(VerifyMode::MonteCarlo) => VerifyMode::MonteCarlo,
        None => {
            if size <= EXACT_DATASET_CAP {
                VerifyMode::Exact
            } else {
                VerifyMode::MonteCarlo
            }
        }
    };
    let (means, ses, count) = match mode {
        VerifyMode::Exact => run_exact(&machinery, family, q, spec.n)?,
        VerifyMode::MonteCarlo => run_monte_carlo(&machinery, family, q, spec.n, replicates, rng)?,
    };

    let (lhs, lhs_se, rhs, slack, exact_side_violated) = match &machinery.kind {
        Kind::PosteriorDivergence { rhs, .. }
        | Kind::MasterExp { rhs, .. }
        | Kind::MasterProb { rhs, .. }
        | Kind::Tail { rhs, .. }
        | Kind::Partition { rhs, .. } => {
            let lhs = means[0];
            (lhs, ses[0], *rhs, guarded_slack(lhs, *rhs), false)
        }
        Kind::General31 { .. } => (means[0], ses[2], means[1], means[2], false),
        Kind::Weak { rhs, .. } => {
            let mut worst = 0usize;
            let mut worst_margin = f64::NEG_INFINITY;
            for (i, &m) in means.iter().enumerate() {
                let margin = m - *rhs;
                if margin > worst_margin {
                    worst_margin = margin;
                    worst = i;
                }
            }
            let lhs = means[worst];
            (lhs, ses[worst], *rhs, guarded_slack(lhs, *rhs), false)
        }
        Kind::LemmaLower { lower, .. } => {
            // Second inequality of the lemma: the lower bound itself is
            // nonnegative; a genuinely negative value is a violation even
            // if the estimator side clears it.
            let rhs_estimate = means[0];
            (
                *lower,
                ses[0],
                rhs_estimate,
                guarded_slack(*lower, rhs_estimate),
                *lower < -1e-9,
            )
        }
    };

    let verdict = render_verdict(mode, slack, lhs_se, exact_side_violated);
    Ok(BoundReport {
        bound_id: spec.label.clone(),
        mode,
        n: spec.n,
        lambda: machinery.echo.lambda,
        rho: machinery.echo.rho,
        gamma: machinery.echo.gamma,
        alpha: machinery.echo.alpha,
        t: machinery.echo.t,
        delta: machinery.echo.delta,
        lhs,
        lhs_se,
        rhs,
        slack,
        replicates: count,
        verdict,
    })
}

/// Risk lower bound of the appendix, as a standalone entry point:
/// E_X R̂_{λ'}(ŵ_X) ≥ −(λ'/n) ln E_π E_q^n (p/q)^{1/λ'} ≥ 0.
#[allow(clippy::too_many_arguments)]
pub fn verify_lemma_a1(
    family: &ModelFamily,
    q: &Density,
    lambda_prime: f64,
    n: usize,
    feasible: FeasibleSet,
    replicates: usize,
    rng: RngSpec,
    force: Option<VerifyMode>,
) -> Result<BoundReport, BoundError> {
    let mut spec = BoundSpec::new(BoundId::LemmaA1, feasible, n);
    spec.lambda = Some(lambda_prime);
    verify(&spec, family, q, replicates, rng, force)
}

/// Exact moment form of the master inequality: E_X e^{L̂(X)} ≤ e^{n c_n}.
/// Exact enumeration only.
#[allow(clippy::too_many_arguments)]
pub fn verify_moment_bound(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    fit_lambda: f64,
    feasible: FeasibleSet,
    n: usize,
    alpha: f64,
    beta: f64,
) -> Result<BoundReport, BoundError> {
    check_rho_open(rho)?;
    if !(fit_lambda > 0.0) {
        return Err(domain("estimator lambda must be positive"));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let size = dataset_space_size(family, n);
    if size > EXACT_DATASET_CAP {
        return Err(BoundError::ProductSpaceTooLarge {
            size,
            cap: EXACT_DATASET_CAP,
        });
    }
    let loss = loss_matrix(family, q, rho);
    let b_theta = log_loss_transform(q, &loss, beta);
    let c = c_n_general(family, q, &loss, n, alpha, beta);
    let machinery = Machinery {
        fit_lambda,
        feasible,
        echo: ParamEcho {
            lambda: Some(fit_lambda),
            rho: Some(rho),
            alpha: Some(alpha),
            ..ParamEcho::default()
        },
        kind: Kind::MasterExp {
            loss,
            b_theta,
            alpha,
            rhs: n as f64 * c,
        },
    };
    // E_X e^{L̂}: re-run the enumeration on the exponentiated statistic.
    let support: Vec<usize> = (0..q.len()).filter(|&x| q.at(x) > 0.0).collect();
    let mut mean = 0.0;
    let mut idx = vec![0usize; n];
    let mut buf = [0.0];
    let mut count = 0usize;
    'outer: loop {
        let symbols: Vec<usize> = idx.iter().map(|&i| support[i]).collect();
        let weight: f64 = symbols.iter().map(|&x| q.at(x)).product();
        let data = Dataset::from_raw(symbols);
        machinery.stats(family, q, &data, &mut buf)?;
        mean += weight * buf[0].exp();
        count += 1;
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < support.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    let rhs = (n as f64 * c).exp();
    let slack = guarded_slack(mean, rhs);
    Ok(BoundReport {
        bound_id: "thm2.1-moment".to_string(),
        mode: VerifyMode::Exact,
        n,
        lambda: Some(fit_lambda),
        rho: Some(rho),
        gamma: None,
        alpha: Some(alpha),
        t: None,
        delta: None,
        lhs: mean,
        lhs_se: 0.0,
        rhs,
        slack,
        replicates: count,
        verdict: render_verdict(VerifyMode::Exact, slack, 0.0, false),
    })
}
