//! Complexity functionals: indexes of resolvability, the soft-min
//! (posterior-averaged) resolvability, prior-mass bounds and critical
//! radii, upper-bracketing radii and numbers, cover complexity terms,
//! localized entropies, and the correction terms of the master
//! inequalities.
//!
//! Every infimum over a radius is computed exactly at the finite-family
//! breakpoints (the sorted distinct divergence values): the prior mass of
//! a divergence ball is a step function, so the optimum sits at a
//! breakpoint and no grid search is needed.

use crate::divergence::{self, DivergenceError};
use crate::math::log_sum_exp;
use crate::model::{Density, ModelFamily, PosteriorWeights};
use thiserror::Error;

/// Feasibility slack when comparing envelope excess mass against a target
/// radius; absorbs the admitted normalization error of input densities.
const RADIUS_SLACK: f64 = 1e-9;

/// Exhaustive minimal-cover search is exponential in the family size;
/// beyond this many models a greedy merge gives an upper bound only.
pub const EXACT_COVER_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexityError {
    #[error("every model is infinitely far from the truth in KL")]
    AllInfiniteKl,
    #[error("a cover block must be nonempty")]
    EmptyBlock,
    #[error("block index {index} out of range for {len} models")]
    BlockIndexOutOfRange { index: usize, len: usize },
    #[error("cover blocks must jointly contain every model index")]
    IncompleteCover,
}

/// Best single-model tradeoff: min_k [D_KL(q||p_k) + (λ/n) ln(1/π_k)].
pub fn index_of_resolvability(family: &ModelFamily, q: &Density, lambda: f64, n: usize) -> f64 {
    assert!(n >= 1 && lambda > 0.0);
    let mut best = f64::INFINITY;
    for j in 0..family.len() {
        let d = divergence::kl(q, family.model(j));
        if d == f64::INFINITY {
            continue;
        }
        let obj = d - lambda / n as f64 * family.prior()[j].ln();
        if obj < best {
            best = obj;
        }
    }
    best
}

/// Soft-min resolvability −(λ/n) ln E_π e^{−(n/λ) D_KL(q||p)} and the
/// weights attaining it, w ∝ π e^{−(n/λ) D_KL}. Models with infinite KL
/// receive weight zero.
pub fn bayesian_resolvability(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    n: usize,
) -> Result<(f64, PosteriorWeights), ComplexityError> {
    assert!(n >= 1 && lambda > 0.0);
    let scale = n as f64 / lambda;
    let scores: Vec<f64> = (0..family.len())
        .map(|j| {
            let d = divergence::kl(q, family.model(j));
            if d == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                family.prior()[j].ln() - scale * d
            }
        })
        .collect();
    let lse = log_sum_exp(&scores);
    if lse == f64::NEG_INFINITY {
        return Err(ComplexityError::AllInfiniteKl);
    }
    let mut mu: Vec<f64> = scores.iter().map(|s| (s - lse).exp()).collect();
    let z: f64 = mu.iter().sum();
    for m in &mut mu {
        *m /= z;
    }
    Ok((
        crate::math::snap_nonnegative(-lse / scale),
        PosteriorWeights::from_normalized(mu),
    ))
}

/// Sorted distinct finite KL values with cumulative prior mass of the
/// corresponding KL balls.
fn kl_breakpoints(
    family: &ModelFamily,
    q: &Density,
) -> Result<(Vec<f64>, Vec<f64>), ComplexityError> {
    let mut pairs: Vec<(f64, f64)> = (0..family.len())
        .filter_map(|j| {
            let d = divergence::kl(q, family.model(j));
            (d < f64::INFINITY).then_some((d, family.prior()[j]))
        })
        .collect();
    if pairs.is_empty() {
        return Err(ComplexityError::AllInfiniteKl);
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut values = Vec::new();
    let mut masses = Vec::new();
    let mut acc = 0.0;
    for (d, pi) in pairs {
        acc += pi;
        if values.last().is_some_and(|&last: &f64| last == d) {
            *masses.last_mut().unwrap() = acc;
        } else {
            values.push(d);
            masses.push(acc);
        }
    }
    Ok((values, masses))
}

/// Prior-mass bound on the soft-min resolvability:
/// inf_ε [ε − (λ/n) ln π({D_KL ≤ ε})], exact over the breakpoint set.
pub fn prior_mass_resolvability_bound(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    n: usize,
) -> Result<f64, ComplexityError> {
    assert!(n >= 1 && lambda > 0.0);
    let (values, masses) = kl_breakpoints(family, q)?;
    let mut best = f64::INFINITY;
    for (&eps, &mass) in values.iter().zip(&masses) {
        let obj = eps - lambda / n as f64 * mass.ln();
        if obj < best {
            best = obj;
        }
    }
    Ok(best)
}

/// Critical radius with the KL value whose ball realizes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRadius {
    pub value: f64,
    pub achieved_at: f64,
}

/// Critical prior-mass radius: the smallest ε with
/// ε ≥ −(λ/n) ln π({D_KL(q||p) ≤ ε}).
///
/// Between consecutive breakpoints the right-hand side is constant and the
/// feasible set is an up-closed interval, so scanning breakpoints is
/// exact.
pub fn critical_prior_mass_radius(
    family: &ModelFamily,
    q: &Density,
    lambda: f64,
    n: usize,
) -> Result<CriticalRadius, ComplexityError> {
    assert!(n >= 1 && lambda > 0.0);
    let (values, masses) = kl_breakpoints(family, q)?;
    let mut best: Option<CriticalRadius> = None;
    for (i, (&d, &mass)) in values.iter().zip(&masses).enumerate() {
        let rhs = -lambda / n as f64 * mass.ln();
        let candidate = d.max(rhs);
        let next = values.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if candidate < next {
            let cr = CriticalRadius {
                value: candidate,
                achieved_at: d,
            };
            if best.is_none_or(|b| cr.value < b.value) {
                best = Some(cr);
            }
        }
    }
    Ok(best.expect("last interval always admits a feasible point"))
}

/// Excess mass of the pointwise envelope of a block of models:
/// Σ_x max_{j ∈ block} p_j(x) − 1. Zero for singletons.
pub fn upper_bracketing_radius(
    family: &ModelFamily,
    block: &[usize],
) -> Result<f64, ComplexityError> {
    if block.is_empty() {
        return Err(ComplexityError::EmptyBlock);
    }
    for &j in block {
        if j >= family.len() {
            return Err(ComplexityError::BlockIndexOutOfRange {
                index: j,
                len: family.len(),
            });
        }
    }
    let mut total = 0.0;
    for x in 0..family.space().size() {
        let env = block
            .iter()
            .map(|&j| family.model(j).at(x))
            .fold(0.0, f64::max);
        total += env;
    }
    Ok(crate::math::snap_nonnegative(total - 1.0))
}

fn subset_radius(family: &ModelFamily, mask: u32) -> f64 {
    let mut total = 0.0;
    for x in 0..family.space().size() {
        let mut env = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let p = family.model(j).at(x);
            if p > env {
                env = p;
            }
        }
        total += env;
    }
    total - 1.0
}

/// Count of envelopes needed to dominate the family at excess mass `eps`,
/// with a flag recording whether the count is the exact minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketingCount {
    pub count: usize,
    /// False when the family was too large for exhaustive search and the
    /// count is a greedy upper bound only.
    pub exact: bool,
}

/// Minimal number of pointwise-max envelopes with excess mass ≤ eps that
/// jointly dominate every model. Exact subset-cover search up to
/// [`EXACT_COVER_LIMIT`] models, greedy merge beyond that.
pub fn upper_bracketing_number(family: &ModelFamily, eps: f64) -> BracketingCount {
    assert!(eps >= 0.0);
    let n = family.len();
    if n > EXACT_COVER_LIMIT {
        return BracketingCount {
            count: greedy_cover_count(family, eps),
            exact: false,
        };
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let feasible: Vec<bool> = (0..=full)
        .map(|mask| mask != 0 && subset_radius(family, mask) <= eps + RADIUS_SLACK)
        .collect();
    // dp over index sets: fewest feasible blocks covering the set exactly.
    let mut dp = vec![u32::MAX; (full as usize) + 1];
    dp[0] = 0;
    for mask in 1..=full {
        let low_bit = mask & mask.wrapping_neg();
        // Enumerate submasks of `mask` containing its lowest set bit.
        let rest = mask ^ low_bit;
        let mut sub = rest;
        loop {
            let block = sub | low_bit;
            if feasible[block as usize] && dp[(mask ^ block) as usize] != u32::MAX {
                let cand = dp[(mask ^ block) as usize] + 1;
                if cand < dp[mask as usize] {
                    dp[mask as usize] = cand;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    BracketingCount {
        count: dp[full as usize] as usize,
        exact: true,
    }
}

fn greedy_cover_count(family: &ModelFamily, eps: f64) -> usize {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    'models: for j in 0..family.len() {
        for block in &mut blocks {
            block.push(j);
            let r = upper_bracketing_radius(family, block).expect("nonempty block");
            if r <= eps + RADIUS_SLACK {
                continue 'models;
            }
            block.pop();
        }
        blocks.push(vec![j]);
    }
    blocks.len()
}

/// A covering of the family by index blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCover {
    blocks: Vec<Vec<usize>>,
    is_partition: bool,
}

impl FamilyCover {
    /// Blocks must be nonempty, in range, and jointly cover all indices.
    pub fn new(blocks: Vec<Vec<usize>>, n_models: usize) -> Result<Self, ComplexityError> {
        let mut seen = vec![0usize; n_models];
        if blocks.is_empty() {
            return Err(ComplexityError::IncompleteCover);
        }
        for block in &blocks {
            if block.is_empty() {
                return Err(ComplexityError::EmptyBlock);
            }
            for &j in block {
                if j >= n_models {
                    return Err(ComplexityError::BlockIndexOutOfRange {
                        index: j,
                        len: n_models,
                    });
                }
                seen[j] += 1;
            }
        }
        if seen.contains(&0) {
            return Err(ComplexityError::IncompleteCover);
        }
        let is_partition = seen.iter().all(|&c| c == 1);
        Ok(FamilyCover {
            blocks,
            is_partition,
        })
    }

    /// One singleton block per model.
    pub fn singletons(n_models: usize) -> Self {
        FamilyCover {
            blocks: (0..n_models).map(|j| vec![j]).collect(),
            is_partition: true,
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn is_partition(&self) -> bool {
        self.is_partition
    }

    pub fn prior_mass(&self, family: &ModelFamily, block_idx: usize) -> f64 {
        self.blocks[block_idx]
            .iter()
            .map(|&j| family.prior()[j])
            .sum()
    }
}

/// Critical upper-bracketing radius with coefficient s, evaluated over a
/// supplied set of covers: min over them of
/// (1/n) ln Σ_j π(Γ_j)^s (1 + r_ub(Γ_j))^n. The space of all covers is
/// unbounded, so candidates are the caller's responsibility.
pub fn critical_upper_radius_over_covers(
    family: &ModelFamily,
    covers: &[FamilyCover],
    s: f64,
    n: usize,
) -> Result<f64, ComplexityError> {
    let mut best = f64::INFINITY;
    for cover in covers {
        let value = cover_complexity_term(family, cover, s, n)? / n as f64;
        if value < best {
            best = value;
        }
    }
    Ok(best)
}

/// ln Σ_j π(Γ_j)^s (1 + r_ub(Γ_j))^n, computed in log space.
pub fn cover_complexity_term(
    family: &ModelFamily,
    cover: &FamilyCover,
    s: f64,
    n: usize,
) -> Result<f64, ComplexityError> {
    assert!((0.0..=1.0).contains(&s));
    let mut terms = Vec::with_capacity(cover.blocks().len());
    for (b, block) in cover.blocks().iter().enumerate() {
        let r = upper_bracketing_radius(family, block)?;
        let mass = cover.prior_mass(family, b);
        terms.push(s * mass.ln() + n as f64 * r.ln_1p());
    }
    Ok(log_sum_exp(&terms))
}

/// Localized entropy of model k: ln Σ_j π_j e^{−shrink ρ(1−ρ) n D_ρ^Re(q||p_j)} − ln π_k.
/// Never exceeds the global entropy ln(1/π_k).
pub fn localized_entropy_term(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    n: usize,
    k: usize,
    shrink: f64,
) -> Result<f64, DivergenceError> {
    divergence::check_rho(rho)?;
    assert!(shrink > 0.0 && shrink <= 1.0);
    assert!(k < family.len());
    Ok(localized_log_sum(family, q, rho, n, shrink)? - family.prior()[k].ln())
}

/// ln Σ_j π_j e^{−shrink ρ(1−ρ) n D_ρ^Re(q||p_j)}; shared by the localized
/// entropy and its k-optimized bound.
pub(crate) fn localized_log_sum(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    n: usize,
    shrink: f64,
) -> Result<f64, DivergenceError> {
    divergence::check_rho(rho)?;
    let coeff = shrink * rho * (1.0 - rho) * n as f64;
    let terms: Vec<f64> = (0..family.len())
        .map(|j| {
            let d = divergence::renyi_from_power_mean(
                divergence::power_mean(q, family.model(j), rho),
                rho,
            );
            if d == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                family.prior()[j].ln() - coeff * d
            }
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

/// Correction term of the divergence-form master bound:
/// (1/n) ln E_π e^{−ρ(1−ρ)(1−α) n D_ρ^Re(q||p)}.
///
/// Nonpositive for α ≤ 1 and identically zero at α = 1 (the exponent
/// vanishes and the prior sums to one).
pub fn c_rho_n_alpha(
    family: &ModelFamily,
    q: &Density,
    rho: f64,
    n: usize,
    alpha: f64,
) -> Result<f64, DivergenceError> {
    divergence::check_rho(rho)?;
    assert!(n >= 1);
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let coeff = rho * (1.0 - rho) * (1.0 - alpha) * n as f64;
    let terms: Vec<f64> = (0..family.len())
        .map(|j| {
            let d = divergence::renyi_from_power_mean(
                divergence::power_mean(q, family.model(j), rho),
                rho,
            );
            if d == f64::INFINITY {
                if coeff > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            } else {
                family.prior()[j].ln() - coeff * d
            }
        })
        .collect();
    Ok(log_sum_exp(&terms) / n as f64)
}

/// Correction term of the general master bound for an arbitrary loss
/// matrix ℓ[model][point] (entries finite or +inf):
/// (1/n) ln E_π (E_q e^{−ℓ} / E_q^α e^{−βℓ})^n.
///
/// Identically zero at α = β = 1.
pub fn c_n_general(
    family: &ModelFamily,
    q: &Density,
    loss: &[Vec<f64>],
    n: usize,
    alpha: f64,
    beta: f64,
) -> f64 {
    assert_eq!(loss.len(), family.len());
    assert!(n >= 1);
    if alpha == 1.0 && beta == 1.0 {
        return 0.0;
    }
    let m = family.space().size();
    let terms: Vec<f64> = loss
        .iter()
        .enumerate()
        .map(|(j, row)| {
            assert_eq!(row.len(), m);
            let mut num = Vec::with_capacity(m);
            let mut den = Vec::with_capacity(m);
            for (x, &l) in row.iter().enumerate() {
                let qx = q.at(x);
                if qx > 0.0 {
                    num.push(qx.ln() - l);
                    den.push(qx.ln() - beta * l);
                }
            }
            let a = log_sum_exp(&num);
            let b = log_sum_exp(&den);
            if a == f64::NEG_INFINITY {
                // E_q e^{-l} integrates to zero; the model contributes
                // nothing to the mixture.
                return f64::NEG_INFINITY;
            }
            family.prior()[j].ln() + n as f64 * (a - alpha * b)
        })
        .collect();
    log_sum_exp(&terms) / n as f64
}
